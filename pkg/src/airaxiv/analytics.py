"""Evaluation analytics over one instance's review data.

Gives deployers the standard questions: how well AI scores align with human
accept/reject decisions (Pearson r, AUC), whether resubmitted versions score
higher, and how fast reviews turn around. Decision labels arrive as imported
CSV; the platform does not manage a human review workflow.
"""

from __future__ import annotations

import csv
import io
import math
from statistics import median
from typing import Optional, Sequence

from .domain import DecisionLabel, Job, Paper
from .errors import UndefinedCorrelation, UndefinedMetric, ValidationFailed
from .store import Store


def pearson_r(scores: Sequence[float], labels: Sequence[float]) -> float:
    """Product-moment correlation; undefined for constant inputs."""
    if len(scores) != len(labels):
        raise ValidationFailed(
            f"paired inputs must have equal length, got {len(scores)} and {len(labels)}")
    n = len(scores)
    if n < 3:
        raise ValidationFailed(f"correlation needs at least 3 pairs, got {n}")
    mean_x = sum(scores) / n
    mean_y = sum(labels) / n
    cov = sxx = syy = 0.0
    for x, y in zip(scores, labels):
        dx, dy = x - mean_x, y - mean_y
        cov += dx * dy
        sxx += dx * dx
        syy += dy * dy
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation(
            "correlation is undefined when either input is constant")
    return cov / math.sqrt(sxx * syy)


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """P(score_pos > score_neg) + half credit for ties, computed exactly."""
    if len(scores) != len(labels):
        raise ValidationFailed(
            f"paired inputs must have equal length, got {len(scores)} and {len(labels)}")
    positives = sum(1 for label in labels if label == 1)
    negatives = sum(1 for label in labels if label == 0)
    if positives + negatives != len(labels):
        raise ValidationFailed("labels must be 0 or 1")
    if positives == 0 or negatives == 0:
        raise UndefinedMetric(
            "AUC needs both classes present in the labels")

    # Midrank assignment: tied scores share the average of their ranks.
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        averaged = (i + j + 2) / 2  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = averaged
        i = j + 1
    rank_sum_pos = sum(rank for rank, label in zip(ranks, labels) if label == 1)
    u_statistic = rank_sum_pos - positives * (positives + 1) / 2
    return u_statistic / (positives * negatives)


class AnalyticsService:
    def __init__(self, store: Store):
        self._store = store

    # ------------------------------------------------------------------
    # building blocks

    def _aggregates_by_version(self, paper_id: str) -> dict[int, list[float]]:
        out: dict[int, list[float]] = {}
        for job in self._store.list_all(Job, lambda j: (
                j.kind == "review" and j.paper_id == paper_id
                and j.state == "completed" and j.result is not None)):
            out.setdefault(job.result.version, []).append(job.result.aggregate)
        return out

    def paper_score(self, paper_id: str) -> Optional[float]:
        """Mean aggregate across completed reviews of the latest reviewed version."""
        by_version = self._aggregates_by_version(paper_id)
        if not by_version:
            return None
        latest = max(by_version)
        values = by_version[latest]
        return sum(values) / len(values)

    # ------------------------------------------------------------------
    # decision labels

    def import_decisions(self, csv_text: str, decided_by: str = "import") -> dict:
        """CSV ``paper_id,decision`` with an optional header row."""
        reader = csv.reader(io.StringIO(csv_text))
        imported = 0
        for row_number, row in enumerate(reader, start=1):
            cells = [cell.strip() for cell in row if cell.strip()]
            if not cells:
                continue
            if row_number == 1 and [c.lower() for c in cells[:2]] == ["paper_id", "decision"]:
                continue
            if len(cells) < 2:
                raise ValidationFailed(
                    f"row {row_number}: expected paper_id,decision, got {row!r}")
            paper_id, decision = cells[0], cells[1].lower()
            if decision not in ("accept", "reject"):
                raise ValidationFailed(
                    f"row {row_number}: decision must be accept or reject, "
                    f"got {cells[1]!r}")
            if self._store.get(Paper, paper_id) is None:
                raise ValidationFailed(
                    f"row {row_number}: unknown paper {paper_id!r}")
            self._store.replace(DecisionLabel(
                paper_id=paper_id, decision=decision, decided_by=decided_by))
            imported += 1
        return {"imported": imported}

    # ------------------------------------------------------------------
    # reports

    def alignment(self) -> dict:
        scores: list[float] = []
        labels: list[int] = []
        for label in self._store.list_all(DecisionLabel):
            score = self.paper_score(label.paper_id)
            if score is None:
                continue  # unreviewed papers cannot enter the comparison
            scores.append(score)
            labels.append(1 if label.decision == "accept" else 0)
        report: dict = {"n": len(scores)}
        try:
            report["pearson_r"] = round(pearson_r(scores, labels), 6)
        except (UndefinedCorrelation, ValidationFailed) as exc:
            report["pearson_r"] = None
            report["pearson_error"] = str(exc)
        try:
            report["auc"] = round(auc(scores, labels), 6)
        except (UndefinedMetric, ValidationFailed) as exc:
            report["auc"] = None
            report["auc_error"] = str(exc)
        return report

    def resubmission_deltas(self) -> dict:
        papers = self._store.list_all(Paper)
        deltas = []
        for paper in sorted(papers, key=lambda p: p.paper_id):
            by_version = self._aggregates_by_version(paper.paper_id)
            if len(by_version) < 2:
                continue
            earliest, latest = min(by_version), max(by_version)
            baseline = sum(by_version[earliest]) / len(by_version[earliest])
            final = sum(by_version[latest]) / len(by_version[latest])
            deltas.append({
                "paper_id": paper.paper_id,
                "baseline_version": earliest,
                "latest_version": latest,
                "delta": round(final - baseline, 6),
            })
        resubmitted = sum(1 for p in papers if len(p.versions) >= 2)
        fraction = resubmitted / len(papers) if papers else 0.0
        return {
            "deltas": deltas,
            "papers_total": len(papers),
            "papers_resubmitted": resubmitted,
            "resubmission_fraction": round(fraction, 6),
        }

    def turnaround_stats(self, kind: str = "review") -> dict:
        per_job = []
        for job in self._store.list_all(Job, lambda j: (
                j.kind == kind and j.state == "completed"
                and j.finished_at is not None)):
            hours = (job.finished_at - job.enqueued_at).total_seconds() / 3600.0
            per_job.append({
                "job_id": job.job_id,
                "paper_id": job.paper_id,
                "version": job.version,
                "hours": round(hours, 6),
            })
        per_job.sort(key=lambda item: item["job_id"])
        if not per_job:
            return {"count": 0, "mean_hours": None, "median_hours": None,
                    "per_job": []}
        hours = [item["hours"] for item in per_job]
        return {
            "count": len(per_job),
            "mean_hours": round(sum(hours) / len(hours), 6),
            "median_hours": round(median(hours), 6),
            "per_job": per_job,
        }
