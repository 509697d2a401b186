// Full round trip against a real server process: mint a key, push a PDF
// through the two-stage upload, submit it, wait for the review, comment,
// and render the detail view from live responses.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { renderHomePage, renderPaperDetail } from "../src/render.js";
import { sha256Hex, uploadPdf } from "../src/upload.js";

const LAUNCHER = "import sys; from airaxiv.cli import main; sys.exit(main(sys.argv[1:]))";

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address && typeof address === "object") {
        const { port } = address;
        probe.close(() => resolve(port));
      } else {
        probe.close(() => reject(new Error("could not pick a port")));
      }
    });
  });
}

async function waitUntilUp(baseUrl: string, deadlineMs = 30_000): Promise<void> {
  const end = Date.now() + deadlineMs;
  while (Date.now() < end) {
    try {
      const response = await fetch(`${baseUrl}/healthz`);
      if (response.ok) return;
    } catch {
      // still booting
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error(`server at ${baseUrl} never became healthy`);
}

function makePdf(dir: string): Uint8Array {
  const path = join(dir, "routing.pdf");
  const result = spawnSync("python3", [
    "-c", LAUNCHER, "make-pdf",
    "--out", path,
    "--title", "Incremental Routing Tables Under Churn",
    "--line", "We maintain shortest path trees while edges appear and disappear.",
    "--line", "Updates touch only the affected subtree instead of recomputing.",
    "--line", "Throughput stays flat up to ten percent edge churn per minute.",
  ]);
  if (result.status !== 0) {
    throw new Error(`make-pdf failed: ${result.stderr?.toString() ?? "?"}`);
  }
  return new Uint8Array(readFileSync(path));
}

let server: ChildProcess | undefined;
let baseUrl = "";
let workDir = "";

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "airaxiv-ui-e2e-"));
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  // Run from the repo root so the server finds frontend/dist once built.
  const repoRoot = fileURLToPath(new URL("../..", import.meta.url));
  server = spawn("python3", [
    "-c", LAUNCHER, "serve", "--port", String(port), "--mock-providers",
  ], { stdio: ["ignore", "pipe", "pipe"], cwd: repoRoot });
  await waitUntilUp(baseUrl);
}, 60_000);

afterAll(() => {
  server?.kill();
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("submit flow against a live server", () => {
  it("uploads, submits, gets reviewed, and renders", async () => {
    // Open-mode servers accept any presented key, so no provisioning step.
    const client = new ApiClient(baseUrl, "webui-e2e");
    const bytes = makePdf(workDir);
    const digest = await sha256Hex(bytes);

    const uploaded = await uploadPdf(client, bytes, "routing.pdf");
    expect(uploaded.sha256).toBe(digest);
    expect(uploaded.size).toBe(bytes.length);

    const submitted = await client.submitPaper({
      title: "Incremental Routing Tables Under Churn",
      abstract: "We maintain shortest path trees while edges appear and disappear.",
      pdf_file_id: uploaded.pdfFileId,
    });
    expect(submitted.version).toBe(1);
    const paperId = submitted.paper_id;

    // The upload token is single use: a second submit with it must fail.
    const reuse = await client
      .submitPaper({ title: "Copy", pdf_file_id: uploaded.pdfFileId })
      .catch((e: unknown) => e);
    expect(reuse).toBeInstanceOf(ApiError);

    // The background worker reviews each submission; wait for it.
    const deadline = Date.now() + 30_000;
    let reviews = await client.getReviews(paperId);
    while (reviews.reviews.length === 0 && Date.now() < deadline) {
      await new Promise((r) => setTimeout(r, 300));
      reviews = await client.getReviews(paperId);
    }
    expect(reviews.reviews.length).toBeGreaterThan(0);
    const review = reviews.reviews[0]!;
    expect(Object.keys(review.dimension_scores)).toHaveLength(7);

    await client.postComment(paperId, "Does this hold under correlated churn?");

    const [info, relatedRows, thread] = await Promise.all([
      client.getPaper(paperId, true),
      client.getRelated(paperId, 5),
      client.getComments(paperId),
    ]);
    expect(info.latest_version).toBe(1);
    expect(info.insights.length).toBeGreaterThan(0);
    expect(info.insights.length).toBeLessThanOrEqual(3);
    expect(thread.comments).toHaveLength(1);

    const detail = renderPaperDetail(info, reviews, relatedRows, thread);
    expect(detail).toContain("Incremental Routing Tables Under Churn");
    expect(detail).toContain("Aggregate");
    expect(detail).toContain(review.aggregate.toFixed(2));
    expect(detail).toContain("Does this hold under correlated churn?");

    const list = await client.listPapers("public", 50, 0);
    const home = renderHomePage(list);
    expect(home).toContain(`#/papers/${paperId}`);
  }, 90_000);

  it("serves the built UI bundle when present", async () => {
    const built = existsSync(
      fileURLToPath(new URL("../dist/index.html", import.meta.url)),
    );
    const response = await fetch(`${baseUrl}/`);
    if (built) {
      expect(response.status).toBe(200);
      const text = await response.text();
      expect(text).toContain("airaxiv");
      expect(text).toContain("assets/main.js");
      const asset = await fetch(`${baseUrl}/assets/main.js`);
      expect(asset.status).toBe(200);
    } else {
      // Fresh checkout without a build: the root route has nothing to serve.
      expect(response.status).toBe(404);
    }
  });
});
