// REST payloads captured from a deterministic dev instance (seed 2026,
// clock frozen at 2026-03-01T12:00:00Z). Tests assert against these
// exact wire shapes; regenerate by rebuilding that instance if the API
// changes.

import type {
  CommentsResponse,
  PaperInfo,
  PaperList,
  RelatedResponse,
  ReviewsResponse,
} from "../src/types.js";

export const paperList: PaperList = {
  "items": [
    {
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x91k",
      "title": "Graph Routing With Learned Heuristics",
      "authors": [],
      "paper_type": "research",
      "research_category": "",
      "created_at": "2026-03-01T12:00:00+00:00",
      "updated_at": "2026-03-01T12:00:00+00:00",
      "latest_version": 1,
      "insights": [
        "Graph Routing With Learned Heuristics",
        "Abstract",
        "A learned admissible heuristic speeds up routing on road networks."
      ],
      "score": 3.5,
      "score_version": 1,
      "reviews_count": 1,
      "visibility": "public"
    },
    {
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x91c",
      "title": "Bayesian Calibration Of Climate Ensembles",
      "authors": [],
      "paper_type": "research",
      "research_category": "",
      "created_at": "2026-03-01T12:00:00+00:00",
      "updated_at": "2026-03-01T12:00:00+00:00",
      "latest_version": 1,
      "insights": [
        "Bayesian Calibration Of Climate Ensembles",
        "Abstract",
        "Hierarchical priors tighten regional projections from coupled model ensembles."
      ],
      "score": 3.3571,
      "score_version": 1,
      "reviews_count": 1,
      "visibility": "public"
    },
    {
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x915",
      "title": "Sparse Attention Gating In Transformers",
      "authors": [],
      "paper_type": "research",
      "research_category": "",
      "created_at": "2026-03-01T12:00:00+00:00",
      "updated_at": "2026-03-01T12:00:00+00:00",
      "latest_version": 1,
      "insights": [
        "Sparse Attention Gating In Transformers",
        "Abstract",
        "A gating layer prunes attention heads during inference."
      ],
      "score": 3.0714,
      "score_version": 1,
      "reviews_count": 1,
      "visibility": "public"
    },
    {
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x90y",
      "title": "Adaptive Mesh Refinement For Plasma Solvers",
      "authors": [],
      "paper_type": "research",
      "research_category": "",
      "created_at": "2026-03-01T12:00:00+00:00",
      "updated_at": "2026-03-01T12:00:00+00:00",
      "latest_version": 1,
      "insights": [
        "Adaptive Mesh Refinement For Plasma Solvers",
        "Abstract",
        "We present an adaptive mesh refinement scheme for kinetic plasma solvers."
      ],
      "score": 2.8571,
      "score_version": 1,
      "reviews_count": 1,
      "visibility": "public"
    }
  ],
  "total": 4,
  "limit": 10,
  "offset": 0
};

export const paperInfo: PaperInfo = {
  "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x90y",
  "title": "Adaptive Mesh Refinement For Plasma Solvers",
  "abstract": "We present an adaptive mesh refinement scheme for kinetic plasma solvers.",
  "authors": [],
  "paper_type": "research",
  "research_category": "",
  "created_at": "2026-03-01T12:00:00+00:00",
  "updated_at": "2026-03-01T12:00:00+00:00",
  "latest_version": 1,
  "keywords": [
    {
      "label": "refinement",
      "children": [
        {
          "label": "plasma",
          "children": []
        },
        {
          "label": "present",
          "children": []
        }
      ]
    },
    {
      "label": "adaptive",
      "children": [
        {
          "label": "solvers",
          "children": []
        },
        {
          "label": "scheme",
          "children": []
        }
      ]
    },
    {
      "label": "mesh",
      "children": [
        {
          "label": "abstract",
          "children": []
        },
        {
          "label": "kinetic",
          "children": []
        }
      ]
    }
  ],
  "keyword_leaves": [
    "plasma",
    "present",
    "solvers",
    "scheme",
    "abstract",
    "kinetic"
  ],
  "insights": [
    "Adaptive Mesh Refinement For Plasma Solvers",
    "Abstract",
    "We present an adaptive mesh refinement scheme for kinetic plasma solvers."
  ],
  "score": 2.8571,
  "score_version": 1,
  "reviews_count": 1,
  "visibility": "public",
  "versions": [
    {
      "version": 1,
      "version_notes": "",
      "submitted_at": "2026-03-01T12:00:00+00:00",
      "pdf_sha256": "029c8e9eeae20a4926341c6b6e6345e483fc1a2ec3ac37d198876a60c51d01ff"
    }
  ]
};

export const reviews: ReviewsResponse = {
  "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x90y",
  "reviews": [
    {
      "review_id": "rev_01kjmma2g0g2j53jdwe0f7x911",
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x90y",
      "version": 1,
      "reviewer_name": "reference",
      "dimension_scores": {
        "claims_well_supported": 2.0,
        "clarity": 2.5,
        "community_value": 3.5,
        "importance": 2.5,
        "originality": 3.0,
        "prior_work_context": 4.5,
        "soundness": 2.0
      },
      "aggregate": 2.857142857142857,
      "strengths": [
        "Clear articulation of the problem in 'Adaptive Mesh Refinement For Plasma Solvers'.",
        "The method is described in enough detail to follow."
      ],
      "weaknesses": [
        "Positioning against the 0 related works found could be sharper.",
        "Evidence for the strongest claim is thin."
      ],
      "revision_suggestions": [
        "Add a direct comparison against the closest related work.",
        "Report variance across repeated runs for the main result.",
        "Tighten the abstract so the contribution of 'Adaptive Mesh Refinement For Plasma Solvers' is stated first."
      ],
      "related_work_used": [],
      "completed_at": "2026-03-01T12:00:00Z"
    }
  ],
  "jobs": [
    {
      "job_id": "job_01kjmma2g0g2j53jdwe0f7x910",
      "kind": "review",
      "version": 1,
      "reviewer_name": "reference",
      "state": "completed",
      "enqueued_at": "2026-03-01T12:00:00+00:00",
      "started_at": "2026-03-01T12:00:00+00:00",
      "finished_at": "2026-03-01T12:00:00+00:00"
    }
  ]
};

export const related: RelatedResponse = {
  "results": [
    {
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x91k",
      "score": 0.052678,
      "title": "Graph Routing With Learned Heuristics"
    },
    {
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x91c",
      "score": 0.011467,
      "title": "Bayesian Calibration Of Climate Ensembles"
    },
    {
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x915",
      "score": 0.01113,
      "title": "Sparse Attention Gating In Transformers"
    }
  ]
};

export const comments: CommentsResponse = {
  "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x90y",
  "comments": [
    {
      "comment_id": "cmt_01kjmma2g0g2j53jdwe0f7x91q",
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x90y",
      "content": "Did you compare against static refinement with the same cell budget?",
      "author_display": "fixture-commenter",
      "created_at": "2026-03-01T12:00:00+00:00",
      "replies": [
        {
          "comment_id": "cmt_01kjmma2g0g2j53jdwe0f7x91r",
          "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x90y",
          "content": "Yes, table two in the revision covers the matched budget case.",
          "author_display": "fixture-author",
          "created_at": "2026-03-01T12:00:00+00:00",
          "parent_comment_id": "cmt_01kjmma2g0g2j53jdwe0f7x91q",
          "replies": []
        }
      ]
    },
    {
      "comment_id": "cmt_01kjmma2g0g2j53jdwe0f7x91s",
      "paper_id": "paper_01kjmma2g0g2j53jdwe0f7x90y",
      "content": "The reconnection benchmark figures are very convincing.",
      "author_display": "fixture-commenter",
      "created_at": "2026-03-01T12:00:00+00:00",
      "replies": []
    }
  ]
};
