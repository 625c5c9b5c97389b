"""Run manifest: configs, paths, and per-stage record counts for one run.

Counts are recorded at every stage boundary so that raw and post-filter
numbers are never conflated when a run is reported.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

__all__ = ["StageRecord", "RunManifest"]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class StageRecord:
    stage: str
    status: str  # completed | resumed | failed
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    error: str | None = None
    started_at: str = ""
    finished_at: str = ""


@dataclass
class RunManifest:
    tool_version: str
    seed: int
    config: dict
    created_at: str = field(default_factory=_now)
    stages: list[StageRecord] = field(default_factory=list)

    def begin_stage(self, stage: str, inputs: dict[str, str], outputs: dict[str, str]) -> StageRecord:
        record = StageRecord(
            stage=stage,
            status="running",
            inputs=inputs,
            outputs=outputs,
            started_at=_now(),
        )
        self.stages.append(record)
        return record

    def counts(self) -> dict[str, int]:
        """Union of all stage counts (later stages win on key collisions)."""
        merged: dict[str, int] = {}
        for record in self.stages:
            merged.update(record.counts)
        return merged

    def count_violations(self) -> list[str]:
        """Check the count chain:
        unique questions <= post-filter questions <= generations <= spans * questions_per_span.
        """
        merged = self.counts()
        questions_per_span = int(
            self.config.get("generation", {}).get("questions_per_span", 1)
        )
        chain = [
            ("unique_questions", "questions_kept"),
            ("questions_kept", "generations"),
        ]
        violations = []
        for smaller, larger in chain:
            if smaller in merged and larger in merged and merged[smaller] > merged[larger]:
                violations.append(f"{smaller} ({merged[smaller]}) > {larger} ({merged[larger]})")
        if "generations" in merged and "spans" in merged:
            limit = merged["spans"] * questions_per_span
            if merged["generations"] > limit:
                violations.append(
                    f"generations ({merged['generations']}) > spans * questions_per_span ({limit})"
                )
        return violations

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(asdict(self), handle, ensure_ascii=False, sort_keys=True, indent=2)
            handle.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
        manifest = cls(
            tool_version=obj["tool_version"],
            seed=int(obj["seed"]),
            config=obj["config"],
            created_at=obj["created_at"],
        )
        for stage_obj in obj["stages"]:
            manifest.stages.append(StageRecord(**stage_obj))
        return manifest

    def describe(self) -> str:
        lines = [
            f"tool_version: {self.tool_version}",
            f"created_at:   {self.created_at}",
            f"seed:         {self.seed}",
            "stages:",
        ]
        for record in self.stages:
            counts = ", ".join(f"{k}={v}" for k, v in sorted(record.counts.items()))
            line = f"  {record.stage:<12} {record.status:<10} {counts}"
            if record.error:
                line += f"  error: {record.error}"
            lines.append(line)
        violations = self.count_violations()
        if violations:
            lines.append("count violations:")
            lines.extend(f"  {v}" for v in violations)
        return "\n".join(lines)
