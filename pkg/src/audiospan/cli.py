"""Command-line surface: validate, eval, reward, run, chunk-eval, qc, report.

Exit status contract: 0 success, 1 validation or metric failure, 2
environment/IO failure. Reports are deterministic; see reporting.py.
All thresholds carry the benchmark defaults and every subcommand accepts
``--config FILE`` whose JSON entries override the parsed flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .annotations import (
    TaskInstance,
    TaskKind,
    parse_annotation,
    parse_predictions,
    parse_task_instances,
    validate_annotation,
)
from .audio import load_wav
from .errors import AudiospanError, BackendError, ParseError, RangeError, SchemaError
from .metrics import dac_corpus, tac_corpus, tag_corpus
from .orchestrator import (
    SessionConfig,
    Termination,
    connect_backend,
    oracle_backend,
    replay_backend,
    run_session,
)
from .qc import qc_report, render_qc_markdown
from .reporting import (
    RunManifest,
    render_report_markdown,
    report_bytes,
    write_report,
)
from .rewards import (
    Rollout,
    RolloutGroup,
    group_advantages,
    reward_trajectory,
    select_rl_data,
)
from .scoring import resolve_scorer
from .sliding_window import ChunkOracleBackend, sw_dac, sw_tac, sw_tag
from .timeline import Interval, parse_timestamp
from .trajectory import (
    parse_trajectory,
    serialize_trajectory,
    validate_format,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_ENVIRONMENT = 2


def _manifest(args: argparse.Namespace, command: str, config: dict) -> RunManifest:
    timestamp = getattr(args, "timestamp", None) or os.environ.get("AUDIOSPAN_TIMESTAMP")
    return RunManifest(
        command=command,
        config=config,
        version=__version__,
        timestamp=timestamp or None,
    )


def _read(path: str) -> str:
    try:
        return Path(path).read_text("utf-8")
    except OSError as exc:
        raise FileNotFoundError(f"{path}: {exc}") from exc


def _load_instances(path: str, task: TaskKind | None = None) -> list[TaskInstance]:
    instances = parse_task_instances(_read(path))
    if task is not None:
        instances = [i for i in instances if i.task_kind is task]
    return instances


def _emit(args, manifest: RunManifest, results: dict) -> None:
    payload = report_bytes(manifest, results)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode("utf-8"))
    if getattr(args, "markdown", False):
        document = {"manifest": manifest.to_dict(), "results": results}
        markdown = render_report_markdown(document)
        if out:
            Path(out).with_suffix(".md").write_text(markdown, "utf-8")
        else:
            sys.stdout.write(markdown)


# --------------------------------------------------------------------------
# validate


def _sniff_and_validate(path: str) -> list[str]:
    text = _read(path)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        return [f"{path}: not valid JSON: {exc}"]
    findings: list[str] = []

    def check_trajectory(doc, label: str) -> None:
        task = TaskKind(str(doc["task"]).lower()) if "task" in doc else None
        trajectory = parse_trajectory(doc, task)
        _, violations = validate_format(trajectory)
        findings.extend(f"{label}: {v}" for v in violations if v.severity == "error")

    try:
        if isinstance(document, dict) and "tracks" in document:
            annotation = parse_annotation(document)
            findings.extend(
                f"{path}: {violation}" for violation in validate_annotation(annotation)
            )
        elif isinstance(document, dict) and "messages" in document:
            check_trajectory(document, path)
        elif isinstance(document, dict) and "trajectories" in document:
            for i, entry in enumerate(document["trajectories"]):
                check_trajectory(entry, f"{path}[{i}]")
        elif isinstance(document, (dict, list)):
            parse_task_instances(document)
        else:
            findings.append(f"{path}: unrecognized document shape")
    except (ParseError, SchemaError, RangeError) as exc:
        findings.append(f"{path}: {exc}")
    return findings


def cmd_validate(args: argparse.Namespace) -> int:
    findings: list[str] = []
    for path in sorted(args.paths):
        if not Path(path).exists():
            sys.stderr.write(f"{path}: no such file\n")
            return EXIT_ENVIRONMENT
        try:
            findings.extend(_sniff_and_validate(path))
        except FileNotFoundError as exc:
            sys.stderr.write(f"{exc}\n")
            return EXIT_ENVIRONMENT
    for finding in findings:
        sys.stdout.write(finding + "\n")
    return EXIT_FAILURE if findings else EXIT_OK


# --------------------------------------------------------------------------
# eval


def _corpus_for(
    task: TaskKind,
    instances: list[TaskInstance],
    predictions: dict,
    scorer,
    workers: int = 1,
):
    ids = [i.instance_id for i in instances]
    if task is TaskKind.TAG:
        samples = [(i.ground_truth, predictions.get(i.instance_id)) for i in instances]
        return tag_corpus(samples, ids)
    if task is TaskKind.TAC:
        samples = [(i.ground_truth, predictions.get(i.instance_id)) for i in instances]
        return tac_corpus(samples, scorer, ids, workers=workers)
    samples = [
        (i.ground_truth, predictions.get(i.instance_id) or []) for i in instances
    ]
    return dac_corpus(samples, scorer, ids, workers=workers)


def cmd_eval(args: argparse.Namespace) -> int:
    task = TaskKind(args.task)
    try:
        instances = _load_instances(args.gt, task)
        predictions = parse_predictions(_read(args.pred), task)
    except FileNotFoundError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT
    if not instances:
        sys.stderr.write(f"no {task.value} instances in {args.gt}\n")
        return EXIT_FAILURE
    scorer = resolve_scorer(args.scorer)
    gt_ids = {i.instance_id for i in instances}
    missing = sorted(gt_ids - set(predictions))
    extra = sorted(set(predictions) - gt_ids)
    corpus = _corpus_for(task, instances, predictions, scorer, args.workers)
    manifest = _manifest(
        args,
        "eval",
        {
            "task": task.value,
            "scorer": args.scorer,
            "thresholds": [0.3, 0.5, 0.7],
            "workers": args.workers,
        },
    )
    manifest.add_input(args.gt)
    manifest.add_input(args.pred)
    results = corpus.to_dict()
    results["missing_prediction_ids"] = missing
    results["unmatched_prediction_ids"] = extra
    _emit(args, manifest, results)
    if (missing or extra) and not args.allow_id_mismatch:
        sys.stderr.write(
            f"id mismatch: {len(missing)} missing, {len(extra)} unmatched "
            f"(pass --allow-id-mismatch to score anyway)\n"
        )
        return EXIT_FAILURE
    return EXIT_OK


# --------------------------------------------------------------------------
# reward


def _load_trajectory_bundle(path: str) -> list[dict]:
    document = json.loads(_read(path))
    if isinstance(document, dict) and "trajectories" in document:
        entries = document["trajectories"]
    elif isinstance(document, dict) and "messages" in document:
        entries = [document]
    else:
        raise SchemaError(f"{path}: expected a trajectory bundle or a messages document")
    if not isinstance(entries, list):
        raise SchemaError(f"{path}: 'trajectories' must be a list")
    return entries


def cmd_reward(args: argparse.Namespace) -> int:
    try:
        instances = {i.instance_id: i for i in _load_instances(args.gt)}
        entries = _load_trajectory_bundle(args.trajectories)
    except FileNotFoundError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT
    scorer = resolve_scorer(args.scorer)

    records = []
    rollouts_by_id: dict[str, list[Rollout]] = {}
    for i, entry in enumerate(entries):
        instance_id = str(entry.get("id", i))
        instance = instances.get(instance_id)
        if instance is None:
            sys.stderr.write(f"trajectory {instance_id}: no matching instance\n")
            return EXIT_FAILURE
        trajectory = parse_trajectory(entry, instance.task_kind)
        breakdown = reward_trajectory(trajectory, instance, scorer, args.max_steps)
        rollouts_by_id.setdefault(instance_id, []).append(Rollout(trajectory, breakdown))
        records.append(
            {
                "id": instance_id,
                "rollout": len(rollouts_by_id[instance_id]) - 1,
                "task": instance.task_kind.value,
                "format_reward": breakdown.format_reward,
                "task_reward": breakdown.task_reward,
                "task_metric": breakdown.task_metric,
                "total": breakdown.total,
                "convergence": list(breakdown.convergence),
            }
        )

    results: dict = {"rewards": records}
    if args.grouped:
        groups = [
            RolloutGroup(instance_id, rollouts)
            for instance_id, rollouts in rollouts_by_id.items()
        ]
        incomplete = [g.instance_id for g in groups if g.group_size != args.group_size]
        if incomplete:
            sys.stderr.write(
                f"incomplete groups (expected {args.group_size} rollouts): "
                f"{', '.join(incomplete)}\n"
            )
            return EXIT_FAILURE
        advantage_records = []
        for group in groups:
            for rollout_index, advantage in enumerate(group_advantages(group)):
                advantage_records.append(
                    {"id": group.instance_id, "rollout": rollout_index, "advantage": advantage}
                )
        results["advantages"] = advantage_records
        selected = select_rl_data(groups, args.correct_threshold, args.group_size)
        results["selected_count"] = len(selected)
        if args.select_out:
            labels = ["correct", "incorrect"]
            bundle = {
                "trajectories": [
                    {
                        "id": instance_id,
                        "label": labels[k % 2],
                        **json.loads(serialize_trajectory(trajectory)),
                    }
                    for k, (instance_id, trajectory) in enumerate(selected)
                ]
            }
            Path(args.select_out).write_text(
                json.dumps(bundle, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                "utf-8",
            )

    manifest = _manifest(
        args,
        "reward",
        {
            "scorer": args.scorer,
            "max_steps": args.max_steps,
            "group_size": args.group_size,
            "correct_threshold": args.correct_threshold,
            "grouped": bool(args.grouped),
        },
    )
    manifest.add_input(args.gt)
    manifest.add_input(args.trajectories)
    _emit(args, manifest, results)
    return EXIT_OK


# --------------------------------------------------------------------------
# run (orchestrated sessions) and chunk-eval (sliding window)


def _session_backend_factory(args):
    spec = args.backend
    if spec == "oracle":
        return lambda instance: oracle_backend(instance), True
    if spec.startswith("replay:"):
        bundle_path = spec[len("replay:"):]
        fixtures = {}
        for entry in _load_trajectory_bundle(bundle_path):
            fixtures[str(entry.get("id"))] = entry
        def factory(instance):
            entry = fixtures.get(instance.instance_id)
            if entry is None:
                raise BackendError(f"no recorded trajectory for {instance.instance_id}")
            return replay_backend(parse_trajectory(entry, instance.task_kind))
        return factory, True
    if spec.startswith("external:"):
        shared = connect_backend(spec[len("external:"):])
        return lambda instance: shared, False
    raise BackendError(
        f"unknown backend {spec!r} (use oracle, replay:PATH, or external:HOST:PORT)"
    )


def _score_sessions(instances, answers, scorer):
    """Build one corpus dict per task present, from session answers."""
    corpora = []
    for task in (TaskKind.TAG, TaskKind.DAC, TaskKind.TAC):
        subset = [i for i in instances if i.task_kind is task]
        if not subset:
            continue
        ids = [i.instance_id for i in subset]
        if task is TaskKind.TAG:
            corpus = tag_corpus(
                [(i.ground_truth, answers.get(i.instance_id)) for i in subset], ids
            )
        elif task is TaskKind.DAC:
            corpus = dac_corpus(
                [(i.ground_truth, answers.get(i.instance_id) or []) for i in subset],
                scorer,
                ids,
            )
        else:
            corpus = tac_corpus(
                [(i.ground_truth, answers.get(i.instance_id)) for i in subset],
                scorer,
                ids,
            )
        corpora.append(corpus.to_dict())
    return corpora


def cmd_run(args: argparse.Namespace) -> int:
    try:
        instances = _load_instances(args.instances)
        backend_factory, parallel_ok = _session_backend_factory(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT
    except (BackendError, AudiospanError) as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT
    scorer = resolve_scorer(args.scorer)
    cfg = SessionConfig(
        max_steps=args.max_steps,
        timeline_downsample_factor=args.timeline_downsample,
        local_crop_downsample=args.crop_downsample,
    )
    audio_dir = Path(args.audio_dir)

    def run_one(instance: TaskInstance):
        audio = load_wav(str(audio_dir / instance.audio_ref))
        return run_session(instance, audio, backend_factory(instance), cfg)

    workers = max(1, args.workers) if parallel_ok else 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sessions = list(pool.map(run_one, instances))
    else:
        sessions = [run_one(instance) for instance in instances]

    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    session_records = []
    answers = {}
    for instance, result in zip(instances, sessions):
        answers[instance.instance_id] = (
            result.answer if result.termination is Termination.ANSWER_PRODUCED else None
        )
        document = serialize_trajectory(result.trajectory)
        if out_dir:
            (out_dir / f"{instance.instance_id}.json").write_text(document, "utf-8")
        ok, _ = validate_format(result.trajectory, instance.task_kind, args.max_steps)
        record = {
            "id": instance.instance_id,
            "task": instance.task_kind.value,
            "termination": result.termination.value,
            "detail": result.detail,
            "format_reward": 1 if ok else 0,
            "steps": result.trajectory.step_count,
        }
        if instance.task_kind is TaskKind.DAC:
            record["answer_shape"] = result.trajectory.dac_answer_shape
        session_records.append(record)

    results = {
        "sessions": session_records,
        "corpora": _score_sessions(instances, answers, scorer),
    }
    manifest = _manifest(
        args,
        "run",
        {
            "backend": args.backend,
            "scorer": args.scorer,
            "max_steps": args.max_steps,
            "timeline_downsample": args.timeline_downsample,
            "crop_downsample": args.crop_downsample,
            "workers": args.workers,
        },
    )
    manifest.add_input(args.instances)
    _emit(args, manifest, results)
    if out_dir:
        write_report(out_dir / "run_report.json", manifest, results)
    return EXIT_OK


def _chunk_backend_factory(args):
    spec = args.backend
    if spec == "oracle":
        return lambda instance: ChunkOracleBackend(instance)
    if spec.startswith("external:"):
        shared = connect_backend(spec[len("external:"):])
        return lambda instance: shared
    raise BackendError(
        f"unknown backend {spec!r} (use oracle or external:HOST:PORT)"
    )


def cmd_chunk_eval(args: argparse.Namespace) -> int:
    try:
        instances = _load_instances(args.instances)
        backend_factory = _chunk_backend_factory(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT
    except (BackendError, AudiospanError) as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT
    scorer = resolve_scorer(args.scorer)
    audio_dir = Path(args.audio_dir)

    answers = {}
    flag_records = []
    for instance in instances:
        audio = load_wav(str(audio_dir / instance.audio_ref))
        backend = backend_factory(instance)
        if instance.task_kind is TaskKind.TAG:
            answer, flags = sw_tag(audio, instance.query, backend)
        elif instance.task_kind is TaskKind.DAC:
            answer, flags = sw_dac(audio, backend)
        else:
            answer, flags = sw_tac(audio, instance.target_interval, backend), []
        answers[instance.instance_id] = answer
        for flag in flags:
            flag_records.append({"id": instance.instance_id, "flag": flag})

    results = {
        "corpora": _score_sessions(instances, answers, scorer),
        "flags": flag_records,
    }
    manifest = _manifest(
        args,
        "chunk-eval",
        {"backend": args.backend, "scorer": args.scorer, "chunk_seconds": 60},
    )
    manifest.add_input(args.instances)
    _emit(args, manifest, results)
    return EXIT_OK


# --------------------------------------------------------------------------
# qc


def _load_interval_list(path: str) -> list[Interval]:
    entries = json.loads(_read(path))
    return [
        Interval(parse_timestamp(str(e["start"])), parse_timestamp(str(e["end"])))
        for e in entries
    ]


def cmd_qc(args: argparse.Namespace) -> int:
    directory = Path(args.annotations)
    if not directory.is_dir():
        sys.stderr.write(f"{directory}: not a directory\n")
        return EXIT_ENVIRONMENT
    sets = []
    skipped = []
    for path in sorted(directory.glob("*.json")):
        try:
            annotation = parse_annotation(path.read_text("utf-8"))
        except (ParseError, SchemaError, RangeError) as exc:
            skipped.append(f"{path}: {exc}")
            continue
        sets.append((annotation, annotation.duration))
    if not sets:
        sys.stderr.write("no parseable annotation files\n")
        return EXIT_FAILURE

    instances = []
    if args.instances:
        try:
            instances = _load_instances(args.instances)
        except FileNotFoundError as exc:
            sys.stderr.write(f"{exc}\n")
            return EXIT_ENVIRONMENT
    reference = hypothesis = None
    if args.deviation_ref and args.deviation_hyp:
        reference = _load_interval_list(args.deviation_ref)
        hypothesis = _load_interval_list(args.deviation_hyp)

    report = qc_report(sets, instances, reference, hypothesis)
    if args.agreement_intervals:
        document = json.loads(_read(args.agreement_intervals))
        per_annotator = [
            [
                Interval(parse_timestamp(str(e["start"])), parse_timestamp(str(e["end"])))
                for e in annotator
            ]
            for annotator in document["annotators"]
        ]
        from .qc import pairwise_iou_agreement

        report.agreement = report.agreement or {}
        report.agreement["interval_iou"] = pairwise_iou_agreement(per_annotator)
        report.provenance["agreement.interval_iou"] = "mean pairwise IoU, pairs then samples"
    if args.agreement_captions:
        document = json.loads(_read(args.agreement_captions))
        from .qc import caption_agreement_rate

        scorer = resolve_scorer(args.scorer)
        report.agreement = report.agreement or {}
        report.agreement["caption_rate"] = caption_agreement_rate(
            document["annotators"], scorer, args.agreement_threshold
        )
        report.provenance["agreement.caption_rate"] = (
            f"all-pairs scorer >= {args.agreement_threshold}"
        )

    manifest = _manifest(
        args,
        "qc",
        {
            "annotations": str(directory),
            "agreement_threshold": args.agreement_threshold,
            "scorer": args.scorer,
        },
    )
    results = report.to_dict()
    results["skipped"] = skipped
    markdown_requested = args.markdown
    args.markdown = False  # the generic table renderer does not fit QC reports
    _emit(args, manifest, results)
    if markdown_requested:
        rendered = render_qc_markdown(report)
        if args.out:
            Path(args.out).with_suffix(".md").write_text(rendered, "utf-8")
        else:
            sys.stdout.write(rendered)
    return EXIT_OK


# --------------------------------------------------------------------------
# report


def cmd_report(args: argparse.Namespace) -> int:
    try:
        document = json.loads(_read(args.input))
    except FileNotFoundError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT
    markdown = render_report_markdown(document)
    if args.out:
        Path(args.out).write_text(markdown, "utf-8")
    else:
        sys.stdout.write(markdown)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser assembly


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file whose entries override flags")
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    parser.add_argument("--markdown", action="store_true", help="also render markdown")
    parser.add_argument("--timestamp", help="manifest timestamp (default: omitted)")
    parser.add_argument(
        "--scorer", default="token-f1", help="token-f1 or external:HOST:PORT"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audiospan",
        description="Temporal-audio benchmark toolkit: metrics, rewards, sessions, QC.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate annotation/trajectory/instance files")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--task", required=True, choices=[t.value for t in TaskKind])
    p.add_argument("--gt", required=True, help="task instances file")
    p.add_argument("--pred", required=True, help="predictions file")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-id-mismatch", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reward", help="score trajectories with format/task rewards")
    p.add_argument("--trajectories", required=True, help="trajectory bundle file")
    p.add_argument("--gt", required=True, help="task instances file")
    p.add_argument("--max-steps", type=int, default=4)
    p.add_argument("--grouped", action="store_true", help="compute group advantages")
    p.add_argument("--group-size", type=int, default=8)
    p.add_argument("--correct-threshold", type=float, default=0.5)
    p.add_argument("--select-out", help="write selected training trajectories here")
    _add_common(p)
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("run", help="drive sessions over a corpus")
    p.add_argument("--instances", required=True)
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--backend", required=True, help="oracle | replay:PATH | external:HOST:PORT")
    p.add_argument("--max-steps", type=int, default=4)
    p.add_argument("--timeline-downsample", type=int, default=2)
    p.add_argument("--crop-downsample", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", help="write per-instance trajectory documents here")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("chunk-eval", help="sliding-window baseline drivers")
    p.add_argument("--instances", required=True)
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--backend", required=True, help="oracle | external:HOST:PORT")
    _add_common(p)
    p.set_defaults(func=cmd_chunk_eval)

    p = sub.add_parser("qc", help="dataset quality-control statistics")
    p.add_argument("--annotations", required=True, help="directory of annotation files")
    p.add_argument("--instances", help="task instances for position stats")
    p.add_argument("--deviation-ref", help="reference interval list (JSON)")
    p.add_argument("--deviation-hyp", help="hypothesis interval list (JSON)")
    p.add_argument("--agreement-intervals", help="per-annotator interval lists (JSON)")
    p.add_argument("--agreement-captions", help="per-annotator caption lists (JSON)")
    p.add_argument("--agreement-threshold", type=float, default=0.5)
    _add_common(p)
    p.set_defaults(func=cmd_qc)

    p = sub.add_parser("report", help="render a JSON report as markdown")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    config_path = getattr(args, "config", None)
    if not config_path:
        return
    overrides = json.loads(Path(config_path).read_text("utf-8"))
    for key, value in overrides.items():
        setattr(args, key.replace("-", "_"), value)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"config: {exc}\n")
        return EXIT_ENVIRONMENT
    try:
        return args.func(args)
    except (ParseError, SchemaError, RangeError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_FAILURE
    except FileNotFoundError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT
    except AudiospanError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_ENVIRONMENT


if __name__ == "__main__":
    sys.exit(main())
