// Two-stage upload driver: digest declaration, byte delivery, and the
// corruption check between stages.

import { afterEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { sha256Hex, uploadPdf } from "../src/upload.js";

const realFetch = globalThis.fetch;

afterEach(() => {
  globalThis.fetch = realFetch;
});

interface RecordedCall {
  url: string;
  init: RequestInit | undefined;
}

function stubFetch(respond: (call: RecordedCall, index: number) => Response): RecordedCall[] {
  const calls: RecordedCall[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const call = { url: String(input), init };
    calls.push(call);
    return respond(call, calls.length - 1);
  }) as typeof fetch;
  return calls;
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

const client = new ApiClient("http://srv", "key");
const bytes = new TextEncoder().encode("abc");
// Known SHA-256 of "abc".
const ABC_DIGEST = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";

describe("sha256Hex", () => {
  it("matches the published test vector", async () => {
    expect(await sha256Hex(bytes)).toBe(ABC_DIGEST);
  });

  it("hashes the empty input", async () => {
    expect(await sha256Hex(new Uint8Array())).toBe(
      "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855",
    );
  });
});

describe("uploadPdf", () => {
  it("declares the digest, sends the bytes, and completes", async () => {
    const calls = stubFetch((call, index) => {
      if (index === 0) {
        expect(call.url).toBe("http://srv/v1/uploads");
        expect(JSON.parse(String(call.init?.body))).toEqual({
          filename: "paper.pdf",
          sha256: ABC_DIGEST,
        });
        return json(200, {
          upload_id: "up_1",
          upload_url: "/v1/uploads/up_1",
          state: "pending",
          filename: "paper.pdf",
          expires_at: "2026-03-01T13:00:00+00:00",
        });
      }
      if (index === 1) {
        expect(call.url).toBe("http://srv/v1/uploads/up_1");
        expect(call.init?.method).toBe("PUT");
        return json(200, { size: 3, sha256: ABC_DIGEST });
      }
      expect(call.url).toBe("http://srv/v1/uploads/up_1/complete");
      return json(200, {
        upload_id: "up_1",
        upload_url: "/v1/uploads/up_1",
        state: "completed",
        filename: "paper.pdf",
        expires_at: "2026-03-01T13:00:00+00:00",
        size: 3,
        sha256: ABC_DIGEST,
        pdf_file_id: "pdf_42",
      });
    });

    const stages: string[] = [];
    const result = await uploadPdf(client, bytes, "paper.pdf", (s) => stages.push(s));

    expect(result).toEqual({ pdfFileId: "pdf_42", sha256: ABC_DIGEST, size: 3 });
    expect(calls).toHaveLength(3);
    expect(stages).toEqual(["hashing", "creating", "sending", "completing"]);
  });

  it("refuses to complete when the server saw different bytes", async () => {
    stubFetch((_, index) => {
      if (index === 0) {
        return json(200, {
          upload_id: "up_1",
          upload_url: "/v1/uploads/up_1",
          state: "pending",
          filename: "paper.pdf",
          expires_at: "2026-03-01T13:00:00+00:00",
        });
      }
      return json(200, { size: 3, sha256: "0".repeat(64) });
    });

    await expect(uploadPdf(client, bytes, "paper.pdf")).rejects.toThrow(
      /corrupted in transit/,
    );
  });

  it("fails loudly when no pdf_file_id comes back", async () => {
    stubFetch((_, index) => {
      if (index === 0) {
        return json(200, {
          upload_id: "up_1",
          upload_url: "/v1/uploads/up_1",
          state: "pending",
          filename: "paper.pdf",
          expires_at: "2026-03-01T13:00:00+00:00",
        });
      }
      if (index === 1) return json(200, { size: 3, sha256: ABC_DIGEST });
      return json(200, {
        upload_id: "up_1",
        upload_url: "/v1/uploads/up_1",
        state: "completed",
        filename: "paper.pdf",
        expires_at: "2026-03-01T13:00:00+00:00",
      });
    });

    await expect(uploadPdf(client, bytes, "paper.pdf")).rejects.toThrow(
      /no pdf_file_id/,
    );
  });

  it("propagates server-side digest rejections", async () => {
    stubFetch((_, index) => {
      if (index === 0) {
        return json(200, {
          upload_id: "up_1",
          upload_url: "/v1/uploads/up_1",
          state: "pending",
          filename: "paper.pdf",
          expires_at: "2026-03-01T13:00:00+00:00",
        });
      }
      return json(409, {
        code: "upload_digest_mismatch",
        message: "declared sha256 does not match the received bytes",
      });
    });

    await expect(uploadPdf(client, bytes, "paper.pdf")).rejects.toMatchObject({
      code: "upload_digest_mismatch",
    });
  });
});
