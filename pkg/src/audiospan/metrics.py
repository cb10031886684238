"""Task metrics for dense captioning (DAC), grounding (TAG), and targeted
captioning (TAC), plus corpus-level aggregation.

DAC scoring matches every ground-truth segment to its best-IoU prediction
(one prediction may serve several ground truths; ties break to the earliest
prediction index), gates the caption similarity on IoU thresholds
{0.3, 0.5, 0.7}, averages over ground-truth segments, and finally averages
the three per-threshold values. Corpus aggregates use the Table-style column
names (mIoU, Recall@t, Avg_score, Score@t, semantic).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .annotations import TaskKind
from .errors import ScorerError
from .scoring import SemanticScorer
from .timeline import Interval, iou

THRESHOLDS = (0.3, 0.5, 0.7)


def _map_samples(fn: Callable, items: Sequence, workers: int) -> list:
    """Apply fn to every item, catching ScorerError per item; order preserved.

    Per-sample scoring is pure, so it may fan out over threads (useful when
    the scorer is a remote service)."""

    def guarded(item):
        try:
            return fn(item)
        except ScorerError as exc:
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(guarded, items))
    return [guarded(item) for item in items]


@dataclass(frozen=True)
class DacMatch:
    """Best prediction for one ground-truth segment."""

    gt_index: int
    pred_index: int | None
    iou: float


@dataclass(frozen=True)
class DacScore:
    per_threshold: dict[float, float]
    average: float


@dataclass
class CorpusReport:
    """Per-sample scores plus aggregates for one task over one corpus."""

    task_kind: TaskKind
    n_samples: int
    per_sample: list[dict[str, Any]]
    aggregates: dict[str, float]
    unscored: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task_kind.value,
            "n_samples": self.n_samples,
            "aggregates": self.aggregates,
            "per_sample": self.per_sample,
            "unscored": self.unscored,
        }


def match_dac(
    gt: Sequence[Interval], pred: Sequence[Interval]
) -> list[DacMatch]:
    """Match each ground-truth interval to its argmax-IoU prediction."""
    if not gt:
        raise ValueError("match_dac requires at least one ground-truth interval")
    matches: list[DacMatch] = []
    for i, g in enumerate(gt):
        if not pred:
            matches.append(DacMatch(i, None, 0.0))
            continue
        best_j, best_iou = 0, -1.0
        for j, p in enumerate(pred):
            score = iou(g, p)
            if score > best_iou:
                best_j, best_iou = j, score
        matches.append(DacMatch(i, best_j, best_iou))
    return matches


def dac_score(
    gt: Sequence[tuple[Interval, str]],
    pred: Sequence[tuple[Interval, str]],
    scorer: SemanticScorer,
    thresholds: Sequence[float] = THRESHOLDS,
) -> DacScore:
    """Sample-level DAC score.

    Per threshold t, a ground-truth segment contributes its caption
    similarity when its best match has IoU >= t and 0 otherwise; the
    per-threshold value is the mean over ground-truth segments. Scorer
    failures propagate (a failed sample is never silently scored 0).
    """
    if not gt:
        raise ValueError("dac_score requires at least one ground-truth segment")
    matches = match_dac([g for g, _ in gt], [p for p, _ in pred])
    min_threshold = min(thresholds)
    semantic: dict[int, float] = {}
    for m in matches:
        if m.pred_index is not None and m.iou >= min_threshold:
            semantic[m.gt_index] = scorer.score(gt[m.gt_index][1], pred[m.pred_index][1])

    per_threshold: dict[float, float] = {}
    for t in thresholds:
        total = sum(
            semantic.get(m.gt_index, 0.0) for m in matches if m.iou >= t
        )
        per_threshold[t] = total / len(gt)
    average = sum(per_threshold.values()) / len(per_threshold)
    return DacScore(per_threshold=per_threshold, average=average)


def tac_score(gt_caption: str, pred_caption: str, scorer: SemanticScorer) -> float:
    """Semantic quality of a caption for a specified temporal region."""
    if not gt_caption.strip():
        raise ValueError("tac_score requires a non-empty reference caption")
    return scorer.score(gt_caption, pred_caption)


def tag_corpus(
    samples: Sequence[tuple[Interval, Interval | None]],
    ids: Sequence[str] | None = None,
    thresholds: Sequence[float] = THRESHOLDS,
) -> CorpusReport:
    """TAG corpus metrics: mean IoU and recall at each threshold.

    A missing prediction contributes IoU 0 (format failures are penalized,
    not dropped).
    """
    if not samples:
        raise ValueError("tag_corpus requires at least one sample")
    ids = list(ids) if ids is not None else [str(i) for i in range(len(samples))]
    per_sample = []
    ious = []
    for sample_id, (gt, pred) in zip(ids, samples):
        value = iou(gt, pred) if pred is not None else 0.0
        ious.append(value)
        per_sample.append({"id": sample_id, "iou": value})
    aggregates = {"mIoU": sum(ious) / len(ious)}
    for t in thresholds:
        aggregates[f"Recall@{t}"] = sum(1 for v in ious if v >= t) / len(ious)
    return CorpusReport(TaskKind.TAG, len(samples), per_sample, aggregates)


def dac_corpus(
    samples: Sequence[tuple[Sequence[tuple[Interval, str]], Sequence[tuple[Interval, str]]]],
    scorer: SemanticScorer,
    ids: Sequence[str] | None = None,
    thresholds: Sequence[float] = THRESHOLDS,
    workers: int = 1,
) -> CorpusReport:
    """DAC corpus metrics: unweighted mean over samples of the sample score.

    Averaging thresholds within each sample and then averaging samples gives
    the same Avg_score as aggregating per threshold first (both are linear
    means), so either reading of the corpus average is satisfied. Samples
    whose scorer call fails are recorded as unscored and excluded from the
    aggregates while still counted in n_samples.
    """
    if not samples:
        raise ValueError("dac_corpus requires at least one sample")
    ids = list(ids) if ids is not None else [str(i) for i in range(len(samples))]
    outcomes = _map_samples(
        lambda sample: dac_score(sample[0], sample[1], scorer, thresholds),
        samples,
        workers,
    )
    per_sample = []
    scored: list[DacScore] = []
    unscored: list[str] = []
    for sample_id, score in zip(ids, outcomes):
        if isinstance(score, ScorerError):
            unscored.append(sample_id)
            per_sample.append({"id": sample_id, "error": str(score)})
            continue
        scored.append(score)
        per_sample.append(
            {
                "id": sample_id,
                "average": score.average,
                **{f"Score@{t}": v for t, v in score.per_threshold.items()},
            }
        )
    aggregates: dict[str, float] = {}
    if scored:
        aggregates["Avg_score"] = sum(s.average for s in scored) / len(scored)
        for t in thresholds:
            aggregates[f"Score@{t}"] = sum(s.per_threshold[t] for s in scored) / len(
                scored
            )
    return CorpusReport(TaskKind.DAC, len(samples), per_sample, aggregates, unscored)


def tac_corpus(
    samples: Sequence[tuple[str, str | None]],
    scorer: SemanticScorer,
    ids: Sequence[str] | None = None,
    workers: int = 1,
) -> CorpusReport:
    """TAC corpus metrics: mean semantic score; missing predictions score 0."""
    if not samples:
        raise ValueError("tac_corpus requires at least one sample")
    ids = list(ids) if ids is not None else [str(i) for i in range(len(samples))]
    outcomes = _map_samples(
        lambda sample: 0.0 if sample[1] is None else tac_score(sample[0], sample[1], scorer),
        samples,
        workers,
    )
    per_sample = []
    scores: list[float] = []
    unscored: list[str] = []
    for sample_id, value in zip(ids, outcomes):
        if isinstance(value, ScorerError):
            unscored.append(sample_id)
            per_sample.append({"id": sample_id, "error": str(value)})
            continue
        scores.append(value)
        per_sample.append({"id": sample_id, "semantic": value})
    aggregates = {"semantic": sum(scores) / len(scores)} if scores else {}
    return CorpusReport(TaskKind.TAC, len(samples), per_sample, aggregates, unscored)
