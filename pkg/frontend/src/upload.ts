// Two-stage upload driver: open a session with the local digest, PUT the
// bytes, then complete. The server re-hashes everything, so a flipped bit
// anywhere fails loudly instead of producing a corrupt paper.

import { ApiClient } from "./api.js";

export interface UploadResult {
  pdfFileId: string;
  sha256: string;
  size: number;
}

export async function sha256Hex(bytes: Uint8Array): Promise<string> {
  const digest = await crypto.subtle.digest("SHA-256", bytes.slice().buffer);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

export async function uploadPdf(
  client: ApiClient,
  bytes: Uint8Array,
  filename: string,
  onProgress?: (stage: "hashing" | "creating" | "sending" | "completing") => void,
): Promise<UploadResult> {
  onProgress?.("hashing");
  const digest = await sha256Hex(bytes);

  onProgress?.("creating");
  const session = await client.createUpload(filename, digest);

  onProgress?.("sending");
  const received = await client.putUploadBytes(session.upload_url, bytes);
  if (received.sha256 !== digest) {
    throw new Error(
      `upload corrupted in transit: sent ${digest}, server saw ${received.sha256}`,
    );
  }

  onProgress?.("completing");
  const completed = await client.completeUpload(session.upload_id);
  if (!completed.pdf_file_id) {
    throw new Error("upload completed but no pdf_file_id was issued");
  }
  return {
    pdfFileId: completed.pdf_file_id,
    sha256: digest,
    size: received.size,
  };
}
