// Hash router and DOM wiring. Views come from render.ts as strings; this
// module owns navigation, API calls, and form handlers.

import { ApiClient, ApiError, provisionKey } from "./api.js";
import {
  renderError,
  renderHomePage,
  renderLoading,
  renderPaperDetail,
  renderSubmitForm,
} from "./render.js";
import { uploadPdf } from "./upload.js";

const KEY_STORAGE = "airaxiv.apiKey";

export class App {
  private readonly root: HTMLElement;
  private client!: ApiClient;
  private retriedAuth = false;

  constructor(root: HTMLElement) {
    this.root = root;
  }

  async start(): Promise<void> {
    this.client = new ApiClient(window.location.origin, await this.ensureKey());
    window.addEventListener("hashchange", () => void this.route());
    await this.route();
  }

  private async ensureKey(): Promise<string> {
    const stored = window.localStorage.getItem(KEY_STORAGE);
    if (stored) return stored;
    // Open-mode servers mint keys on demand; static-mode ones will reject,
    // in which case the operator pastes a key when prompted.
    try {
      const key = await provisionKey(window.location.origin, "web-ui");
      window.localStorage.setItem(KEY_STORAGE, key);
      return key;
    } catch {
      const pasted = window.prompt("This server needs an API key:") ?? "";
      if (pasted) window.localStorage.setItem(KEY_STORAGE, pasted);
      return pasted;
    }
  }

  async route(): Promise<void> {
    const hash = window.location.hash || "#/";
    try {
      const detail = hash.match(/^#\/papers\/([^/]+)$/);
      if (detail && detail[1]) {
        await this.showDetail(decodeURIComponent(detail[1]));
      } else if (hash === "#/submit") {
        this.showSubmit();
      } else {
        await this.showHome();
      }
      this.retriedAuth = false;
    } catch (err) {
      if (err instanceof ApiError && err.status === 401 && !this.retriedAuth) {
        // Stored key no longer valid (fresh server, wiped state): mint a new
        // one and retry the same view once.
        this.retriedAuth = true;
        window.localStorage.removeItem(KEY_STORAGE);
        this.client = new ApiClient(window.location.origin, await this.ensureKey());
        await this.route();
        return;
      }
      this.root.innerHTML = renderError(err instanceof Error ? err.message : String(err));
    }
  }

  private async showHome(): Promise<void> {
    this.root.innerHTML = renderLoading("papers");
    const list = await this.client.listPapers("public", 50, 0);
    this.root.innerHTML = renderHomePage(list);
  }

  private async showDetail(paperId: string): Promise<void> {
    this.root.innerHTML = renderLoading("paper");
    const [info, reviews, related, comments] = await Promise.all([
      this.client.getPaper(paperId, true),
      this.client.getReviews(paperId),
      this.client.getRelated(paperId, 5),
      this.client.getComments(paperId),
    ]);
    this.root.innerHTML = renderPaperDetail(info, reviews, related, comments);
    this.wireDetail(paperId);
  }

  private wireDetail(paperId: string): void {
    const form = this.root.querySelector<HTMLFormElement>('form[data-form="comment"]');
    form?.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.postComment(paperId, form);
    });
    const download = this.root.querySelector<HTMLButtonElement>('[data-action="download-pdf"]');
    download?.addEventListener("click", () => {
      void this.client.getPdfUrl(paperId).then((signed) => {
        window.open(signed.url, "_blank");
      });
    });
  }

  private async postComment(paperId: string, form: HTMLFormElement): Promise<void> {
    const field = form.elements.namedItem("content") as HTMLTextAreaElement | null;
    const content = field?.value.trim() ?? "";
    if (!content) return;
    await this.client.postComment(paperId, content);
    await this.showDetail(paperId);
  }

  private showSubmit(): void {
    this.root.innerHTML = renderSubmitForm();
    const form = this.root.querySelector<HTMLFormElement>('form[data-form="submit-paper"]');
    form?.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitPaper(form);
    });
  }

  private async submitPaper(form: HTMLFormElement): Promise<void> {
    const status = form.querySelector<HTMLElement>('[data-role="status"]');
    const say = (text: string) => {
      if (status) status.textContent = text;
    };
    const title = (form.elements.namedItem("title") as HTMLInputElement).value.trim();
    const abstract = (form.elements.namedItem("abstract") as HTMLTextAreaElement).value.trim();
    const fileInput = form.elements.namedItem("pdf") as HTMLInputElement;
    const file = fileInput.files?.[0];
    if (!title || !file) {
      say("Title and PDF are required.");
      return;
    }
    try {
      const bytes = new Uint8Array(await file.arrayBuffer());
      const uploaded = await uploadPdf(this.client, bytes, file.name, (stage) => {
        say(`Upload: ${stage}`);
      });
      say("Submitting paper...");
      const result = await this.client.submitPaper({
        title,
        abstract,
        pdf_file_id: uploaded.pdfFileId,
      });
      window.location.hash = `#/papers/${result.paper_id}`;
    } catch (err) {
      say(err instanceof Error ? err.message : String(err));
    }
  }
}
