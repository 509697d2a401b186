// Thin fetch client for the /v1 REST API. Every error response shares one
// envelope shape, surfaced here as ApiError.

import type {
  CommentNode,
  CommentsResponse,
  ErrorEnvelope,
  KeyInfo,
  PaperInfo,
  PaperList,
  PdfUrlResponse,
  RelatedResponse,
  ReviewsResponse,
  SubmitResponse,
  UploadSession,
} from "./types.js";

export class ApiError extends Error {
  code: string;
  fieldPath?: string;
  status: number;

  constructor(status: number, envelope: ErrorEnvelope) {
    super(envelope.message);
    this.name = "ApiError";
    this.status = status;
    this.code = envelope.code;
    this.fieldPath = envelope.field_path;
  }
}

export interface SubmitPaperBody {
  title: string;
  abstract?: string;
  pdf_file_id?: string;
  pdf_url?: string;
  author_list?: unknown[];
  paper_type?: string;
  research_category?: string;
}

export class ApiClient {
  readonly baseUrl: string;
  readonly apiKey: string;

  constructor(baseUrl: string, apiKey: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.apiKey = apiKey;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "x-api-key": this.apiKey };
    let payload: BodyInit | undefined;
    if (body !== undefined) {
      headers["content-type"] = "application/json";
      payload = JSON.stringify(body);
    }
    const response = await fetch(this.baseUrl + path, { method, headers, body: payload });
    return handleJson<T>(response);
  }

  listPapers(scope = "public", limit = 30, offset = 0): Promise<PaperList> {
    const params = new URLSearchParams({
      scope,
      limit: String(limit),
      offset: String(offset),
    });
    return this.request("GET", `/v1/papers?${params}`);
  }

  getPaper(paperId: string, includeVersions = true): Promise<PaperInfo> {
    const suffix = includeVersions ? "?include_versions=true" : "";
    return this.request("GET", `/v1/papers/${encodeURIComponent(paperId)}${suffix}`);
  }

  getReviews(paperId: string): Promise<ReviewsResponse> {
    return this.request("GET", `/v1/papers/${encodeURIComponent(paperId)}/reviews`);
  }

  getRelated(paperId: string, topK = 5): Promise<RelatedResponse> {
    return this.request(
      "GET",
      `/v1/papers/${encodeURIComponent(paperId)}/related?top_k=${topK}`,
    );
  }

  getComments(paperId: string): Promise<CommentsResponse> {
    return this.request("GET", `/v1/papers/${encodeURIComponent(paperId)}/comments`);
  }

  postComment(paperId: string, content: string, parentCommentId?: string): Promise<CommentNode> {
    const body: Record<string, string> = { content };
    if (parentCommentId) body.parent_comment_id = parentCommentId;
    return this.request("POST", `/v1/papers/${encodeURIComponent(paperId)}/comments`, body);
  }

  createUpload(filename: string, sha256?: string): Promise<UploadSession> {
    const body: Record<string, string> = { filename };
    if (sha256) body.sha256 = sha256;
    return this.request("POST", "/v1/uploads", body);
  }

  async putUploadBytes(uploadUrl: string, bytes: Uint8Array): Promise<{ size: number; sha256: string }> {
    const url = uploadUrl.startsWith("http") ? uploadUrl : this.baseUrl + uploadUrl;
    const response = await fetch(url, {
      method: "PUT",
      headers: {
        "x-api-key": this.apiKey,
        "content-type": "application/pdf",
      },
      body: bytes as unknown as BodyInit,
    });
    return handleJson(response);
  }

  completeUpload(uploadId: string, sha256?: string): Promise<UploadSession> {
    const body: Record<string, string> = {};
    if (sha256) body.sha256 = sha256;
    return this.request(
      "POST",
      `/v1/uploads/${encodeURIComponent(uploadId)}/complete`,
      body,
    );
  }

  submitPaper(body: SubmitPaperBody): Promise<SubmitResponse> {
    return this.request("POST", "/v1/papers", body);
  }

  updatePaper(paperId: string, body: Record<string, unknown>): Promise<SubmitResponse> {
    return this.request("PATCH", `/v1/papers/${encodeURIComponent(paperId)}`, body);
  }

  keyInfo(): Promise<KeyInfo> {
    return this.request("GET", "/v1/keys/me");
  }

  getPdfUrl(paperId: string): Promise<PdfUrlResponse> {
    return this.request("GET", `/v1/papers/${encodeURIComponent(paperId)}/pdf-url`);
  }
}

// Open-mode instances mint keys without auth; used for first-visit bootstrap.
export async function provisionKey(baseUrl: string, name: string): Promise<string> {
  const response = await fetch(baseUrl.replace(/\/+$/, "") + "/v1/keys", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ name }),
  });
  const data = await handleJson<{ api_key: string }>(response);
  return data.api_key;
}

async function handleJson<T>(response: Response): Promise<T> {
  let data: unknown;
  try {
    data = await response.json();
  } catch {
    throw new ApiError(response.status, {
      code: "bad_response",
      message: `server returned non-JSON (HTTP ${response.status})`,
    });
  }
  if (!response.ok) {
    const envelope = data as Partial<ErrorEnvelope>;
    throw new ApiError(response.status, {
      code: envelope.code ?? "unknown_error",
      message: envelope.message ?? `HTTP ${response.status}`,
      field_path: envelope.field_path,
    });
  }
  return data as T;
}
