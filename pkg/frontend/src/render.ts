// HTML renderers. Every function returns a markup string; the router owns
// the DOM. All user-controlled text passes through escapeHtml.

import {
  CommentNode,
  CommentsResponse,
  PaperInfo,
  PaperList,
  PaperSummary,
  REVIEW_DIMENSIONS,
  RelatedResponse,
  ReviewJob,
  ReviewsResponse,
  StructuredReview,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function dimensionLabel(key: string): string {
  const label = key.replace(/_/g, " ");
  return label.charAt(0).toUpperCase() + label.slice(1);
}

export function formatScore(score: number | null): string {
  return score === null ? "unreviewed" : score.toFixed(2);
}

function formatDate(iso: string): string {
  return iso.slice(0, 10);
}

function scorePill(score: number | null): string {
  if (score === null) {
    return '<span class="pill pill-muted">unreviewed</span>';
  }
  const tone = score >= 4 ? "pill-good" : score >= 3 ? "pill-mid" : "pill-low";
  return `<span class="pill ${tone}">${score.toFixed(2)}</span>`;
}

// ---------------------------------------------------------------------------
// home page

export function renderPaperCard(paper: PaperSummary): string {
  const insights = paper.insights
    .slice(0, 3)
    .map((line) => `<li>${escapeHtml(line)}</li>`)
    .join("");
  return `
  <article class="paper-card" data-paper-id="${escapeHtml(paper.paper_id)}">
    <h3><a href="#/papers/${escapeHtml(paper.paper_id)}">${escapeHtml(paper.title)}</a></h3>
    <div class="card-meta">
      ${scorePill(paper.score)}
      <span>v${paper.latest_version}</span>
      <span>${paper.reviews_count} review${paper.reviews_count === 1 ? "" : "s"}</span>
      <span>${formatDate(paper.updated_at)}</span>
    </div>
    <ul class="insights">${insights}</ul>
  </article>`;
}

export function renderHomePage(list: PaperList): string {
  if (list.items.length === 0) {
    return `
  <section class="home">
    <h2>Papers</h2>
    <p class="empty">Nothing published yet. <a href="#/submit">Submit the first paper.</a></p>
  </section>`;
  }
  const cards = list.items.map(renderPaperCard).join("\n");
  return `
  <section class="home">
    <h2>Papers <span class="count">${list.total}</span></h2>
    ${cards}
  </section>`;
}

// ---------------------------------------------------------------------------
// paper detail

export function renderInsights(insights: string[]): string {
  if (insights.length === 0) return "";
  const items = insights
    .slice(0, 3)
    .map((line) => `<li>${escapeHtml(line)}</li>`)
    .join("");
  return `
  <section class="detail-insights">
    <h4>Key insights</h4>
    <ul class="insights">${items}</ul>
  </section>`;
}

export function renderReviewTable(review: StructuredReview): string {
  const rows = REVIEW_DIMENSIONS.map((dimension) => {
    const value = review.dimension_scores[dimension];
    const display = value === undefined ? "-" : value.toFixed(1);
    return `
      <tr>
        <td>${escapeHtml(dimensionLabel(dimension))}</td>
        <td class="score-cell">${display}</td>
      </tr>`;
  }).join("");
  return `
  <table class="review-table">
    <thead><tr><th>Dimension</th><th>Score</th></tr></thead>
    <tbody>${rows}</tbody>
    <tfoot>
      <tr><td>Aggregate</td><td class="score-cell">${review.aggregate.toFixed(2)}</td></tr>
    </tfoot>
  </table>`;
}

function renderBulletBlock(heading: string, lines: string[]): string {
  if (lines.length === 0) return "";
  const items = lines.map((line) => `<li>${escapeHtml(line)}</li>`).join("");
  return `<h5>${escapeHtml(heading)}</h5><ul>${items}</ul>`;
}

export function renderReview(review: StructuredReview): string {
  return `
  <article class="review" data-review-id="${escapeHtml(review.review_id)}">
    <h4>Review of v${review.version} <span class="reviewer">by ${escapeHtml(review.reviewer_name)}</span></h4>
    ${renderReviewTable(review)}
    ${renderBulletBlock("Strengths", review.strengths)}
    ${renderBulletBlock("Weaknesses", review.weaknesses)}
    ${renderBulletBlock("Suggested revisions", review.revision_suggestions)}
  </article>`;
}

function renderPendingJobs(jobs: ReviewJob[]): string {
  const active = jobs.filter((job) => job.state === "queued" || job.state === "running");
  if (active.length === 0) return "";
  const rows = active
    .map((job) => `<li>${escapeHtml(job.kind)} for v${job.version}: ${escapeHtml(job.state)}</li>`)
    .join("");
  return `<div class="jobs-pending"><h5>In progress</h5><ul>${rows}</ul></div>`;
}

export function renderRelated(related: RelatedResponse): string {
  if (related.results.length === 0) {
    return '<p class="empty">No related papers indexed yet.</p>';
  }
  const rows = related.results
    .map((row) => {
      const title = row.title ?? row.paper_id;
      return `
      <li>
        <a href="#/papers/${escapeHtml(row.paper_id)}">${escapeHtml(title)}</a>
        <span class="similarity">${row.score.toFixed(3)}</span>
      </li>`;
    })
    .join("");
  return `<ul class="related-list">${rows}</ul>`;
}

export function renderComment(comment: CommentNode): string {
  const replies = comment.replies.map(renderComment).join("");
  return `
  <li class="comment" data-comment-id="${escapeHtml(comment.comment_id)}">
    <div class="comment-head">
      <span class="comment-author">${escapeHtml(comment.author_display)}</span>
      <span class="comment-date">${formatDate(comment.created_at)}</span>
    </div>
    <p>${escapeHtml(comment.content)}</p>
    ${replies ? `<ul class="comment-replies">${replies}</ul>` : ""}
  </li>`;
}

export function renderCommentThread(comments: CommentsResponse): string {
  if (comments.comments.length === 0) {
    return '<p class="empty">No comments yet.</p>';
  }
  return `<ul class="comment-thread">${comments.comments.map(renderComment).join("")}</ul>`;
}

export function renderPaperDetail(
  info: PaperInfo,
  reviews: ReviewsResponse,
  related: RelatedResponse,
  comments: CommentsResponse,
): string {
  const reviewBlocks =
    reviews.reviews.length > 0
      ? reviews.reviews.map(renderReview).join("")
      : '<p class="empty">No reviews completed yet.</p>';
  const versions = (info.versions ?? [])
    .map(
      (v) => `
      <li>v${v.version} &middot; ${formatDate(v.submitted_at)}${
        v.version_notes ? ` &middot; ${escapeHtml(v.version_notes)}` : ""
      }</li>`,
    )
    .join("");
  return `
  <section class="detail" data-paper-id="${escapeHtml(info.paper_id)}">
    <a class="back-link" href="#/">&larr; All papers</a>
    <h2>${escapeHtml(info.title)}</h2>
    <div class="card-meta">
      ${scorePill(info.score)}
      <span>v${info.latest_version}</span>
      <span>${escapeHtml(info.paper_type)}</span>
      <button class="linkish" data-action="download-pdf">Download PDF</button>
    </div>
    <p class="abstract">${escapeHtml(info.abstract)}</p>
    ${renderInsights(info.insights)}
    <section class="detail-reviews">
      <h3>Reviews</h3>
      ${renderPendingJobs(reviews.jobs)}
      ${reviewBlocks}
    </section>
    <section class="detail-related">
      <h3>Related papers</h3>
      ${renderRelated(related)}
    </section>
    <section class="detail-comments">
      <h3>Comments</h3>
      ${renderCommentThread(comments)}
      <form class="comment-form" data-form="comment">
        <textarea name="content" rows="3" placeholder="Add a comment" required></textarea>
        <button type="submit">Post comment</button>
      </form>
    </section>
    ${versions ? `<section class="detail-versions"><h3>Versions</h3><ul>${versions}</ul></section>` : ""}
  </section>`;
}

// ---------------------------------------------------------------------------
// submit page and chrome

export function renderSubmitForm(): string {
  return `
  <section class="submit">
    <a class="back-link" href="#/">&larr; All papers</a>
    <h2>Submit a paper</h2>
    <form data-form="submit-paper">
      <label>Title
        <input name="title" type="text" required maxlength="300">
      </label>
      <label>Abstract
        <textarea name="abstract" rows="4"></textarea>
      </label>
      <label>PDF
        <input name="pdf" type="file" accept="application/pdf" required>
      </label>
      <button type="submit">Upload and submit</button>
      <p class="submit-status" data-role="status"></p>
    </form>
  </section>`;
}

export function renderError(message: string): string {
  return `<div class="error-box">${escapeHtml(message)}</div>`;
}

export function renderLoading(what: string): string {
  return `<p class="loading">Loading ${escapeHtml(what)}&hellip;</p>`;
}
