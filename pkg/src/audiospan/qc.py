"""Dataset quality-control statistics.

Covers the measurements used to audit temporal annotations: the rate of
non-speech entries leaking outside the audio duration (temporal
hallucination), endpoint deviation between aligned interval lists,
inter-annotator agreement for intervals and captions, event density, and
the start/middle/end position distribution of target intervals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Sequence

from .annotations import EVENT_TRACKS, AnnotationSet, TaskInstance, TaskKind
from .scoring import SemanticScorer
from .timeline import Interval, PositionThird, TimePoint, classify_third, iou

AGREEMENT_THRESHOLD_DEFAULT = 0.5


@dataclass
class QcReport:
    """Quality statistics with per-statistic provenance notes."""

    n_annotations: int = 0
    hallucination_rate: float | None = None
    mean_timestamp_deviation_ms: float | None = None
    avg_events_per_sample: float | None = None
    avg_event_duration_s: float | None = None
    position_distribution: dict[str, float] | None = None
    agreement: dict[str, float] | None = None
    per_language: dict[str, dict[str, Any]] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_annotations": self.n_annotations,
            "hallucination_rate": self.hallucination_rate,
            "mean_timestamp_deviation_ms": self.mean_timestamp_deviation_ms,
            "avg_events_per_sample": self.avg_events_per_sample,
            "avg_event_duration_s": self.avg_event_duration_s,
            "position_distribution": self.position_distribution,
            "agreement": self.agreement,
            "per_language": self.per_language,
            "provenance": self.provenance,
        }


def hallucination_rate(
    sets: Sequence[tuple[AnnotationSet, TimePoint]],
) -> float:
    """Fraction of non-speech entries with any part outside [0, duration]."""
    if not sets:
        raise ValueError("hallucination_rate requires at least one annotation set")
    total = 0
    outside = 0
    for annotation, duration in sets:
        for track_name in EVENT_TRACKS:
            for event in annotation.track(track_name):
                total += 1
                iv = event.interval
                if max(iv.start.millis, iv.end.millis) > duration.millis:
                    outside += 1
    if total == 0:
        return 0.0
    return outside / total


def timestamp_deviation(
    reference: Sequence[Interval], hypothesis: Sequence[Interval]
) -> float:
    """Mean absolute endpoint deviation in milliseconds between two lists
    aligned by index."""
    if len(reference) != len(hypothesis):
        raise ValueError(
            f"reference has {len(reference)} intervals, hypothesis {len(hypothesis)}"
        )
    if not reference:
        raise ValueError("timestamp_deviation requires at least one interval")
    total = 0
    for ref, hyp in zip(reference, hypothesis):
        total += abs(ref.start.millis - hyp.start.millis)
        total += abs(ref.end.millis - hyp.end.millis)
    return total / (2 * len(reference))


def pairwise_iou_agreement(
    per_annotator: Sequence[Sequence[Interval]],
    order: str = "pairs-then-samples",
) -> float:
    """Mean pairwise IoU across annotators.

    ``pairs-then-samples`` averages annotator pairs within each sample and
    then averages samples; ``samples-then-pairs`` averages each pair across
    samples first. With every annotator covering every sample the two
    orderings coincide.
    """
    if len(per_annotator) < 2:
        raise ValueError("agreement requires at least two annotators")
    n_samples = len(per_annotator[0])
    if n_samples == 0 or any(len(lst) != n_samples for lst in per_annotator):
        raise ValueError("annotator lists must be non-empty and sample-aligned")
    pairs = list(itertools.combinations(range(len(per_annotator)), 2))
    if order == "pairs-then-samples":
        sample_means = []
        for s in range(n_samples):
            values = [iou(per_annotator[a][s], per_annotator[b][s]) for a, b in pairs]
            sample_means.append(sum(values) / len(values))
        return sum(sample_means) / len(sample_means)
    if order == "samples-then-pairs":
        pair_means = []
        for a, b in pairs:
            values = [iou(per_annotator[a][s], per_annotator[b][s]) for s in range(n_samples)]
            pair_means.append(sum(values) / len(values))
        return sum(pair_means) / len(pair_means)
    raise ValueError(f"unknown order {order!r}")


def caption_agreement_rate(
    per_annotator: Sequence[Sequence[str]],
    scorer: SemanticScorer,
    threshold: float = AGREEMENT_THRESHOLD_DEFAULT,
) -> float:
    """Fraction of samples whose every annotator pair scores >= threshold."""
    if len(per_annotator) < 2:
        raise ValueError("agreement requires at least two annotators")
    n_samples = len(per_annotator[0])
    if n_samples == 0 or any(len(lst) != n_samples for lst in per_annotator):
        raise ValueError("annotator lists must be non-empty and sample-aligned")
    pairs = list(itertools.combinations(range(len(per_annotator)), 2))
    agreeing = 0
    for s in range(n_samples):
        if all(
            scorer.score(per_annotator[a][s], per_annotator[b][s]) >= threshold
            for a, b in pairs
        ):
            agreeing += 1
    return agreeing / n_samples


def density_stats(instances: Sequence[TaskInstance]) -> tuple[float, float]:
    """(average events per sample, average event duration in seconds) over
    dense-caption instances."""
    if not instances:
        raise ValueError("density_stats requires at least one instance")
    durations_ms: list[int] = []
    for instance in instances:
        if instance.task_kind is not TaskKind.DAC:
            raise ValueError(
                f"density_stats expects DAC instances, got {instance.task_kind.value}"
            )
        durations_ms.extend(iv.duration_millis for iv, _ in instance.ground_truth)
    avg_events = len(durations_ms) / len(instances)
    avg_duration_s = (sum(durations_ms) / len(durations_ms)) / 1000.0 if durations_ms else 0.0
    return avg_events, avg_duration_s


def position_distribution(
    instances: Sequence[TaskInstance],
) -> dict[PositionThird, float]:
    """Start/middle/end distribution of target intervals over grounding and
    targeted-caption instances."""
    if not instances:
        raise ValueError("position_distribution requires at least one instance")
    counts = {third: 0 for third in PositionThird}
    for instance in instances:
        if instance.task_kind is TaskKind.TAG:
            interval = instance.ground_truth
        elif instance.task_kind is TaskKind.TAC:
            interval = instance.target_interval
        else:
            raise ValueError("position_distribution expects TAG or TAC instances")
        counts[classify_third(interval, instance.duration)] += 1
    total = sum(counts.values())
    return {third: counts[third] / total for third in PositionThird}


def annotation_language(annotation: AnnotationSet) -> str:
    """Crude language split: any CJK ideograph marks the annotation as zh."""
    from .scoring import _is_cjk

    texts = [annotation.summary]
    texts.extend(s.transcription for s in annotation.speech)
    for track_name in EVENT_TRACKS:
        texts.extend(e.description for e in annotation.track(track_name))
    return "zh" if any(_is_cjk(ch) for text in texts for ch in text) else "en"


def qc_report(
    sets: Sequence[tuple[AnnotationSet, TimePoint]],
    instances: Sequence[TaskInstance] = (),
    reference_intervals: Sequence[Interval] | None = None,
    hypothesis_intervals: Sequence[Interval] | None = None,
) -> QcReport:
    """Assemble the full QC report from whatever inputs are available.

    Event density comes from dense-caption instances when supplied (the
    benchmark-table definition) and otherwise from the annotations'
    non-speech tracks.
    """
    report = QcReport(n_annotations=len(sets))
    if sets:
        report.hallucination_rate = hallucination_rate(sets)
        report.provenance["hallucination_rate"] = (
            "non-speech entries outside [0, duration], pooled over all files"
        )
        event_counts = []
        durations_ms = []
        for annotation, _ in sets:
            events = [
                e
                for name in EVENT_TRACKS
                for e in annotation.track(name)
            ]
            event_counts.append(len(events))
            durations_ms.extend(
                e.interval.duration_millis for e in events if e.interval.is_valid
            )
        report.avg_events_per_sample = sum(event_counts) / len(event_counts)
        report.avg_event_duration_s = (
            (sum(durations_ms) / len(durations_ms)) / 1000.0 if durations_ms else 0.0
        )
        report.provenance["avg_events_per_sample"] = "non-speech entries per file"
        report.provenance["avg_event_duration_s"] = "mean non-speech entry length"

        by_language: dict[str, list[tuple[AnnotationSet, TimePoint]]] = {}
        for annotation, duration in sets:
            by_language.setdefault(annotation_language(annotation), []).append(
                (annotation, duration)
            )
        if len(by_language) > 1:
            for language, subset in sorted(by_language.items()):
                report.per_language[language] = {
                    "n_annotations": len(subset),
                    "hallucination_rate": hallucination_rate(subset),
                }
    dense = [i for i in instances if i.task_kind is TaskKind.DAC]
    if dense:
        avg_events, avg_duration = density_stats(dense)
        report.avg_events_per_sample = avg_events
        report.avg_event_duration_s = avg_duration
        report.provenance["avg_events_per_sample"] = "ground-truth captions per instance"
        report.provenance["avg_event_duration_s"] = "mean ground-truth caption length"
    grounding = [
        i for i in instances if i.task_kind in (TaskKind.TAG, TaskKind.TAC)
    ]
    if grounding:
        distribution = position_distribution(grounding)
        report.position_distribution = {
            third.value: share for third, share in distribution.items()
        }
        report.provenance["position_distribution"] = (
            "target interval midpoint vs duration thirds"
        )
    if reference_intervals is not None and hypothesis_intervals is not None:
        report.mean_timestamp_deviation_ms = timestamp_deviation(
            reference_intervals, hypothesis_intervals
        )
        report.provenance["mean_timestamp_deviation_ms"] = (
            "mean absolute endpoint offset, index-aligned"
        )
    return report


def render_qc_markdown(report: QcReport) -> str:
    """Human-readable table mirroring the dataset-statistics layout."""
    lines = ["| Statistic | Value |", "| --- | --- |"]

    def row(label: str, value) -> None:
        rendered = "n/a" if value is None else (
            f"{value:.4f}" if isinstance(value, float) else str(value)
        )
        lines.append(f"| {label} | {rendered} |")

    row("Files", report.n_annotations)
    row("Hallucination rate", report.hallucination_rate)
    row("Mean timestamp deviation (ms)", report.mean_timestamp_deviation_ms)
    row("Avg. Evt.", report.avg_events_per_sample)
    row("Avg. Evt. Dur (s)", report.avg_event_duration_s)
    if report.position_distribution:
        for third in ("start", "middle", "end"):
            row(third.capitalize(), report.position_distribution.get(third, 0.0))
    if report.agreement:
        for key, value in sorted(report.agreement.items()):
            row(f"Agreement ({key})", value)
    for language, stats in sorted(report.per_language.items()):
        row(f"{language} files", stats["n_annotations"])
        row(f"{language} hallucination rate", stats["hallucination_rate"])
    return "\n".join(lines) + "\n"
