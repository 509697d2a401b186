// REST payload shapes for the /v1 API. Field names mirror the wire format.

export interface Author {
  name: string;
  kind: "human" | "ai";
}

export interface PaperSummary {
  paper_id: string;
  title: string;
  authors: Author[];
  paper_type: string;
  research_category: string;
  created_at: string;
  updated_at: string;
  latest_version: number;
  insights: string[];
  score: number | null;
  score_version: number | null;
  reviews_count: number;
  visibility?: string;
}

export interface PaperList {
  items: PaperSummary[];
  total: number;
  limit: number;
  offset: number;
}

export interface KeywordNode {
  label: string;
  children: KeywordNode[];
}

export interface VersionEntry {
  version: number;
  version_notes: string;
  submitted_at: string;
  pdf_sha256: string;
}

export interface PaperInfo extends PaperSummary {
  abstract: string;
  keywords: KeywordNode[];
  keyword_leaves: string[];
  versions?: VersionEntry[];
}

export interface StructuredReview {
  review_id: string;
  paper_id: string;
  version: number;
  reviewer_name: string;
  dimension_scores: Record<string, number>;
  aggregate: number;
  strengths: string[];
  weaknesses: string[];
  revision_suggestions: string[];
  related_work_used: string[];
  completed_at: string;
}

export interface ReviewJob {
  job_id: string;
  kind: string;
  version: number;
  reviewer_name?: string;
  state: string;
  stage?: string;
  error?: string;
  enqueued_at: string;
  started_at?: string;
  finished_at?: string;
}

export interface ReviewsResponse {
  paper_id: string;
  reviews: StructuredReview[];
  jobs: ReviewJob[];
}

export interface RelatedRow {
  paper_id: string;
  score: number;
  title?: string;
}

export interface RelatedResponse {
  results: RelatedRow[];
}

export interface CommentNode {
  comment_id: string;
  paper_id: string;
  content: string;
  author_display: string;
  created_at: string;
  parent_comment_id?: string;
  replies: CommentNode[];
}

export interface CommentsResponse {
  paper_id: string;
  comments: CommentNode[];
}

export interface UploadSession {
  upload_id: string;
  upload_url: string;
  state: string;
  filename: string;
  expires_at: string;
  size?: number;
  sha256?: string;
  pdf_file_id?: string;
}

export interface SubmitResponse {
  paper_id: string;
  version: number;
  title: string;
  visibility: string;
  conference_id?: string;
  conference_warning?: string;
}

export interface PdfUrlResponse {
  paper_id: string;
  version: number;
  url: string;
  expires_at: string;
}

export interface KeyInfo {
  name: string;
  usage_count: number;
  paper_count: number;
  owner: string;
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  field_path?: string;
}

// The seven review dimensions, in display order.
export const REVIEW_DIMENSIONS = [
  "originality",
  "soundness",
  "claims_well_supported",
  "importance",
  "community_value",
  "clarity",
  "prior_work_context",
] as const;
