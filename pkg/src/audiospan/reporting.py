"""Run manifests and deterministic report emission.

Every CLI run embeds a manifest (command, configuration snapshot, input
digests, tool version) in its report. Reports are canonical JSON with sorted
keys so that two runs with equal manifests produce byte-identical output;
the manifest timestamp is only included when explicitly supplied (flag or
AUDIOSPAN_TIMESTAMP), keeping unattended runs reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


@dataclass
class RunManifest:
    command: str
    config: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    version: str = ""
    timestamp: str | None = None

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "version": self.version,
        }
        if self.timestamp is not None:
            data["timestamp"] = self.timestamp
        return data


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def report_bytes(manifest: RunManifest, results: dict[str, Any]) -> bytes:
    document = {"manifest": manifest.to_dict(), "results": results}
    return (
        json.dumps(document, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    ).encode("utf-8")


def write_report(path: str | Path, manifest: RunManifest, results: dict[str, Any]) -> None:
    Path(path).write_bytes(report_bytes(manifest, results))


# Canonical column orders mirroring the benchmark result tables.
_COLUMNS = {
    "tag": ("mIoU", "Recall@0.3", "Recall@0.5", "Recall@0.7"),
    "dac": ("Avg_score", "Score@0.3", "Score@0.5", "Score@0.7"),
    "tac": ("semantic",),
}


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def render_corpus_markdown(corpus: dict[str, Any]) -> str:
    """One markdown table row per task corpus dict (task, aggregates...)."""
    task = corpus.get("task", "")
    columns = _COLUMNS.get(task, tuple(sorted(corpus.get("aggregates", {}))))
    aggregates = corpus.get("aggregates", {})
    header = "| Task | n | " + " | ".join(columns) + " |"
    rule = "| --- | --- | " + " | ".join("---" for _ in columns) + " |"
    row = (
        f"| {task} | {corpus.get('n_samples', 0)} | "
        + " | ".join(_format_value(aggregates.get(c, "n/a")) for c in columns)
        + " |"
    )
    return "\n".join([header, rule, row]) + "\n"


def render_report_markdown(document: dict[str, Any]) -> str:
    """Render a report document (manifest + results) as markdown."""
    parts: list[str] = []
    results = document.get("results", {})
    corpora = results.get("corpora")
    if isinstance(corpora, list):
        for corpus in corpora:
            parts.append(render_corpus_markdown(corpus))
    elif "aggregates" in results:
        parts.append(render_corpus_markdown(results))
    manifest = document.get("manifest", {})
    if manifest:
        parts.append(
            f"Manifest: command={manifest.get('command')} "
            f"version={manifest.get('version')}\n"
        )
    return "\n".join(parts)
