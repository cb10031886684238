"""Rollout rewards, group-relative advantages, and training-data selection.

The total reward for a rollout is the binary format reward plus a task
reward. The grounding task reward is the answer IoU plus a convergence
bonus: the fraction of tool-call steps whose crop midpoint moved strictly
closer to the ground-truth midpoint than the previous step (the step-0
anchor is the full-audio midpoint). Dense and targeted captioning reuse
their evaluation scores directly, so those task rewards live in [0, 1] while
grounding lives in [0, 2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .annotations import TaskInstance, TaskKind
from .metrics import dac_score
from .scoring import SemanticScorer
from .timeline import Interval, TimePoint, iou
from .trajectory import (
    MAX_STEPS_DEFAULT,
    ToolCallTurn,
    Trajectory,
    extract_answer,
    validate_format,
)

GROUP_SIZE_DEFAULT = 8
CORRECTNESS_THRESHOLD_DEFAULT = 0.5


@dataclass(frozen=True)
class RewardBreakdown:
    """Reward components for one rollout.

    task_metric is the raw task-quality measure used for correctness
    splits (grounding: answer IoU; captioning tasks: the score itself).
    convergence records the per-step midpoint-approach indicators.
    """

    format_reward: int
    task_reward: float
    task_metric: float = 0.0
    convergence: tuple[bool, ...] = ()

    @property
    def total(self) -> float:
        return self.format_reward + self.task_reward


@dataclass(frozen=True)
class Rollout:
    trajectory: Trajectory
    breakdown: RewardBreakdown


@dataclass
class RolloutGroup:
    instance_id: str
    rollouts: list[Rollout] = field(default_factory=list)

    @property
    def group_size(self) -> int:
        return len(self.rollouts)

    @property
    def totals(self) -> list[float]:
        return [r.breakdown.total for r in self.rollouts]


def format_reward(t: Trajectory, task_kind: TaskKind | None = None,
                  max_steps: int = MAX_STEPS_DEFAULT) -> int:
    """1 iff the trajectory conforms to the session schema."""
    ok, _ = validate_format(t, task_kind, max_steps=max_steps)
    return 1 if ok else 0


def _try_answer(t: Trajectory, task_kind: TaskKind):
    try:
        return extract_answer(t, task_kind)
    except ValueError:
        return None


def tag_convergence(
    t: Trajectory, gt: Interval, duration: TimePoint
) -> tuple[bool, ...]:
    """Per-step indicators of the crop midpoint approaching the target."""
    target = (gt.start.millis + gt.end.millis) / 2.0
    previous = duration.millis / 2.0
    indicators: list[bool] = []
    for turn in t.turns:
        if not isinstance(turn, ToolCallTurn):
            continue
        current = (turn.start_sec + turn.end_sec) * 1000.0 / 2.0
        indicators.append(abs(current - target) < abs(previous - target))
        previous = current
    return tuple(indicators)


def tag_task_reward(t: Trajectory, gt: Interval, duration: TimePoint) -> float:
    """Grounding task reward in [0, 2]: answer IoU plus convergence fraction."""
    return tag_reward_breakdown(t, gt, duration).task_reward


def tag_reward_breakdown(
    t: Trajectory, gt: Interval, duration: TimePoint,
    max_steps: int = MAX_STEPS_DEFAULT,
) -> RewardBreakdown:
    fmt = format_reward(t, TaskKind.TAG, max_steps)
    answer = _try_answer(t, TaskKind.TAG)
    if answer is None:
        return RewardBreakdown(format_reward=fmt, task_reward=0.0)
    iou_term = iou(answer, gt)
    indicators = tag_convergence(t, gt, duration)
    convergence_term = (
        sum(indicators) / len(indicators) if indicators else 0.0
    )
    return RewardBreakdown(
        format_reward=fmt,
        task_reward=iou_term + convergence_term,
        task_metric=iou_term,
        convergence=indicators,
    )


def dac_task_reward(
    t: Trajectory, gt: Sequence[tuple[Interval, str]], scorer: SemanticScorer
) -> float:
    """Dense-captioning task reward: the threshold-averaged evaluation score."""
    return dac_reward_breakdown(t, gt, scorer).task_reward


def dac_reward_breakdown(
    t: Trajectory, gt: Sequence[tuple[Interval, str]], scorer: SemanticScorer,
    max_steps: int = MAX_STEPS_DEFAULT,
) -> RewardBreakdown:
    fmt = format_reward(t, TaskKind.DAC, max_steps)
    answer = _try_answer(t, TaskKind.DAC)
    if answer is None:
        return RewardBreakdown(format_reward=fmt, task_reward=0.0)
    score = dac_score(gt, answer, scorer).average
    return RewardBreakdown(format_reward=fmt, task_reward=score, task_metric=score)


def tac_task_reward(t: Trajectory, gt_caption: str, scorer: SemanticScorer) -> float:
    """Targeted-captioning task reward: caption quality under the scorer."""
    return tac_reward_breakdown(t, gt_caption, scorer).task_reward


def tac_reward_breakdown(
    t: Trajectory, gt_caption: str, scorer: SemanticScorer,
    max_steps: int = MAX_STEPS_DEFAULT,
) -> RewardBreakdown:
    fmt = format_reward(t, TaskKind.TAC, max_steps)
    answer = _try_answer(t, TaskKind.TAC)
    if answer is None:
        return RewardBreakdown(format_reward=fmt, task_reward=0.0)
    score = scorer.score(gt_caption, answer)
    return RewardBreakdown(format_reward=fmt, task_reward=score, task_metric=score)


def reward_trajectory(
    t: Trajectory, instance: TaskInstance, scorer: SemanticScorer,
    max_steps: int = MAX_STEPS_DEFAULT,
) -> RewardBreakdown:
    """Dispatch to the task-specific reward for a benchmark instance."""
    if instance.task_kind is TaskKind.TAG:
        return tag_reward_breakdown(t, instance.ground_truth, instance.duration, max_steps)
    if instance.task_kind is TaskKind.DAC:
        return dac_reward_breakdown(t, instance.ground_truth, scorer, max_steps)
    return tac_reward_breakdown(t, instance.ground_truth, scorer, max_steps)


def group_advantages(group: RolloutGroup) -> list[float]:
    """Group-relative advantages: (total - mean) / population std.

    A zero-variance group yields all-zero advantages instead of dividing
    by zero.
    """
    totals = group.totals
    n = len(totals)
    if n < 2:
        raise ValueError(f"advantage normalization requires >= 2 rollouts, got {n}")
    mean = sum(totals) / n
    variance = sum((x - mean) ** 2 for x in totals) / n
    std = math.sqrt(variance)
    if std == 0.0:
        return [0.0] * n
    return [(x - mean) / std for x in totals]


def is_correct(
    rollout: Rollout, threshold: float = CORRECTNESS_THRESHOLD_DEFAULT
) -> bool:
    """A rollout counts as correct only when it both conforms to the schema
    and clears the task-metric threshold."""
    return rollout.breakdown.format_reward == 1 and rollout.breakdown.task_metric >= threshold


def select_rl_data(
    groups: Sequence[RolloutGroup],
    correctness_threshold: float | dict[TaskKind, float] = CORRECTNESS_THRESHOLD_DEFAULT,
    group_size: int = GROUP_SIZE_DEFAULT,
) -> list[tuple[str, Trajectory]]:
    """Select training pairs from rollout groups.

    An instance is kept only when its group contains both a correct and an
    incorrect rollout; the kept instance emits the highest-total correct
    trajectory and the lowest-total incorrect one, in input order.
    """
    selected: list[tuple[str, Trajectory]] = []
    for group in groups:
        if group.group_size != group_size:
            raise ValueError(
                f"group {group.instance_id} has {group.group_size} rollouts, "
                f"expected {group_size}"
            )
        if isinstance(correctness_threshold, dict):
            task = group.rollouts[0].trajectory.task_kind
            threshold = correctness_threshold.get(task, CORRECTNESS_THRESHOLD_DEFAULT)
        else:
            threshold = correctness_threshold
        correct = [r for r in group.rollouts if is_correct(r, threshold)]
        incorrect = [r for r in group.rollouts if not is_correct(r, threshold)]
        if not correct or not incorrect:
            continue
        best = max(correct, key=lambda r: r.breakdown.total)
        worst = min(incorrect, key=lambda r: r.breakdown.total)
        selected.append((group.instance_id, best.trajectory))
        selected.append((group.instance_id, worst.trajectory))
    return selected
