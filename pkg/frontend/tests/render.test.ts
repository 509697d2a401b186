// Renderer checks against captured wire payloads: the home page and the
// paper detail view must surface every piece of the fixture data.

import { describe, expect, it } from "vitest";

import {
  dimensionLabel,
  escapeHtml,
  renderCommentThread,
  renderHomePage,
  renderInsights,
  renderPaperCard,
  renderPaperDetail,
  renderRelated,
  renderReviewTable,
  renderSubmitForm,
} from "../src/render.js";
import { REVIEW_DIMENSIONS } from "../src/types.js";
import { comments, paperInfo, paperList, related, reviews } from "./fixtures.js";

function count(haystack: string, needle: RegExp): number {
  return (haystack.match(new RegExp(needle.source, "g")) ?? []).length;
}

describe("escapeHtml", () => {
  it("neutralises markup in user text", () => {
    expect(escapeHtml('<script>alert("x")</script>')).toBe(
      "&lt;script&gt;alert(&quot;x&quot;)&lt;/script&gt;",
    );
  });
});

describe("home page", () => {
  const html = renderHomePage(paperList);

  it("renders one card per paper with a detail link", () => {
    expect(count(html, /class="paper-card"/)).toBe(4);
    for (const paper of paperList.items) {
      expect(html).toContain(`#/papers/${paper.paper_id}`);
      expect(html).toContain(escapeHtml(paper.title));
    }
  });

  it("shows the total and each score to two decimals", () => {
    expect(html).toContain('<span class="count">4</span>');
    expect(html).toContain("3.50");
    expect(html).toContain("2.86");
  });

  it("lists at most three insights per card", () => {
    const card = renderPaperCard(paperList.items[0]!);
    expect(count(card, /<li>/)).toBe(3);
  });

  it("falls back to an empty state", () => {
    const empty = renderHomePage({ items: [], total: 0, limit: 10, offset: 0 });
    expect(empty).toContain("Nothing published yet");
  });

  it("escapes hostile titles", () => {
    const hostile = { ...paperList.items[0]!, title: '<img src=x onerror="1">' };
    const card = renderPaperCard(hostile);
    expect(card).not.toContain("<img");
    expect(card).toContain("&lt;img");
  });
});

describe("review table", () => {
  const html = renderReviewTable(reviews.reviews[0]!);

  it("has one row per dimension plus the aggregate", () => {
    expect(count(html, /<tr>/)).toBe(9); // header + 7 dimensions + aggregate
    for (const dimension of REVIEW_DIMENSIONS) {
      expect(html).toContain(dimensionLabel(dimension));
    }
  });

  it("shows each score on the half point grid and the exact mean", () => {
    const scores = reviews.reviews[0]!.dimension_scores;
    for (const dimension of REVIEW_DIMENSIONS) {
      expect(html).toContain(`>${scores[dimension]!.toFixed(1)}<`);
    }
    expect(html).toContain("2.86"); // 2.857142... to two decimals
  });

  it("spells out the dimension labels", () => {
    expect(dimensionLabel("claims_well_supported")).toBe("Claims well supported");
    expect(dimensionLabel("prior_work_context")).toBe("Prior work context");
  });
});

describe("paper detail", () => {
  const html = renderPaperDetail(paperInfo, reviews, related, comments);

  it("shows title, abstract and exactly three insights", () => {
    expect(html).toContain(escapeHtml(paperInfo.title));
    expect(html).toContain(escapeHtml(paperInfo.abstract));
    const block = renderInsights(paperInfo.insights);
    expect(count(block, /<li>/)).toBe(3);
    for (const insight of paperInfo.insights) {
      expect(html).toContain(escapeHtml(insight));
    }
  });

  it("embeds the full review with strengths and suggestions", () => {
    expect(html).toContain(reviews.reviews[0]!.review_id);
    for (const line of reviews.reviews[0]!.strengths) {
      expect(html).toContain(escapeHtml(line));
    }
    for (const line of reviews.reviews[0]!.revision_suggestions) {
      expect(html).toContain(escapeHtml(line));
    }
  });

  it("lists the three related papers with similarity scores", () => {
    const block = renderRelated(related);
    expect(count(block, /<li>/)).toBe(3);
    for (const row of related.results) {
      expect(block).toContain(`#/papers/${row.paper_id}`);
      expect(block).toContain(row.title ?? row.paper_id);
      expect(block).toContain(row.score.toFixed(3));
    }
  });

  it("renders the three comments with the reply nested", () => {
    const thread = renderCommentThread(comments);
    expect(count(thread, /class="comment"/)).toBe(3);
    const reply = comments.comments[0]!.replies[0]!;
    const replyStart = thread.indexOf(reply.comment_id);
    const repliesStart = thread.indexOf('<ul class="comment-replies">');
    expect(repliesStart).toBeGreaterThan(-1);
    expect(replyStart).toBeGreaterThan(repliesStart);
    expect(thread).toContain("fixture-author");
    expect(thread).toContain("fixture-commenter");
  });

  it("includes the version history", () => {
    expect(html).toContain("v1 &middot; 2026-03-01");
  });
});

describe("submit form", () => {
  it("asks for title, abstract and a pdf file", () => {
    const html = renderSubmitForm();
    expect(html).toContain('name="title"');
    expect(html).toContain('name="abstract"');
    expect(html).toContain('type="file"');
    expect(html).toContain('accept="application/pdf"');
  });
});
