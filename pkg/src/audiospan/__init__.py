"""Toolkit for temporal understanding of long-form audio: evaluation
metrics, reward functions, annotation and trajectory formats, a tool-use
session orchestrator with a real audio-cropping tool, sliding-window
baselines, and dataset quality-control statistics."""

__version__ = "0.1.0"

from .annotations import (  # noqa: F401
    AnnotationSet,
    SpeechSegment,
    TaskInstance,
    TaskKind,
    TrackEvent,
    ValidationViolation,
    merge_chunks,
    parse_annotation,
    parse_predictions,
    parse_task_instances,
    serialize_annotation,
    validate_annotation,
)
from .audio import AudioBuffer, crop_audio, decimate, load_wav, save_wav  # noqa: F401
from .metrics import (  # noqa: F401
    CorpusReport,
    DacMatch,
    DacScore,
    dac_corpus,
    dac_score,
    match_dac,
    tac_corpus,
    tac_score,
    tag_corpus,
)
from .orchestrator import (  # noqa: F401
    BackendRequest,
    ModelBackend,
    SessionConfig,
    SessionResult,
    Termination,
    oracle_backend,
    replay_backend,
    run_dac_session,
    run_session,
    run_tac_session,
)
from .qc import (  # noqa: F401
    QcReport,
    caption_agreement_rate,
    density_stats,
    hallucination_rate,
    pairwise_iou_agreement,
    position_distribution,
    timestamp_deviation,
)
from .rewards import (  # noqa: F401
    RewardBreakdown,
    Rollout,
    RolloutGroup,
    dac_task_reward,
    format_reward,
    group_advantages,
    select_rl_data,
    tac_task_reward,
    tag_task_reward,
)
from .scoring import SemanticScorer, TokenF1Scorer, token_f1_score  # noqa: F401
from .sliding_window import Chunk, chunk_audio, sw_dac, sw_tac, sw_tag  # noqa: F401
from .timeline import (  # noqa: F401
    Interval,
    PositionThird,
    TimePoint,
    classify_third,
    format_interval,
    format_timestamp,
    iou,
    midpoint,
    parse_interval_text,
    parse_timestamp,
)
from .trajectory import (  # noqa: F401
    GlobalTimeline,
    Trajectory,
    extract_answer,
    parse_trajectory,
    serialize_trajectory,
    validate_format,
)
