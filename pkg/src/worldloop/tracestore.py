"""Append-only per-playthrough recording of observed transitions.

Layout of a run directory:

    <run>/manifest                 one canonical object line
    <run>/trace_level_<L>.jsonl    one record per line, append order
    <run>/artifacts/mismatch_<n>   prediction-divergence artifacts
    <run>/model.rules              latest saved model (written elsewhere)
    <run>/report.json              final run report (written elsewhere)

A run directory is created fresh per playthrough and never shared.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import ChainViolation, CorruptRecord, IoFailure, OutOfOrder, SchemaViolation
from .frames import Action, Frame, GameStatus, action_from_obj, frame_from_obj
from .wire import canonical_line


@dataclass(frozen=True)
class TransitionRecord:
    """One observed transition: the atom the verifiers replay."""

    game_id: str
    level_index: int
    attempt_number: int
    step_index: int
    frame_before: Frame
    action: Action
    frame_after: Frame
    status_after: GameStatus

    def locator(self) -> tuple[int, int, int]:
        return (self.level_index, self.attempt_number, self.step_index)

    def to_obj(self) -> dict:
        return {
            "game": self.game_id,
            "level": self.level_index,
            "attempt": self.attempt_number,
            "step": self.step_index,
            "before": self.frame_before.to_obj(),
            "action": self.action.to_obj(),
            "after": self.frame_after.to_obj(),
            "status": self.status_after.value,
        }


def record_from_obj(obj: object) -> TransitionRecord:
    if not isinstance(obj, dict):
        raise SchemaViolation("record must be an object")
    required = {"game", "level", "attempt", "step", "before", "action", "after", "status"}
    if set(obj) != required:
        raise SchemaViolation(f"bad record fields: {sorted(obj)}")
    return TransitionRecord(
        game_id=obj["game"],
        level_index=obj["level"],
        attempt_number=obj["attempt"],
        step_index=obj["step"],
        frame_before=frame_from_obj(obj["before"]),
        action=action_from_obj(obj["action"]),
        frame_after=frame_from_obj(obj["after"]),
        status_after=GameStatus(obj["status"]),
    )


@dataclass(frozen=True)
class RunDirectory:
    root: Path

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest"

    def trace_path(self, level: int) -> Path:
        return self.root / f"trace_level_{level}.jsonl"

    @property
    def artifacts_dir(self) -> Path:
        return self.root / "artifacts"

    @property
    def model_path(self) -> Path:
        return self.root / "model.rules"

    @property
    def report_path(self) -> Path:
        return self.root / "report.json"

    def manifest(self) -> dict:
        try:
            return json.loads(self.manifest_path.read_text())
        except OSError as exc:
            raise IoFailure(str(exc)) from exc


def config_digest(config_obj: dict) -> str:
    return hashlib.sha256(canonical_line(config_obj).encode()).hexdigest()


def create_run(root: str | Path, game_id: str, config_obj: dict | None = None) -> RunDirectory:
    """Create a fresh run directory; refuses to reuse a non-empty one."""
    root = Path(root)
    if root.exists() and any(root.iterdir()):
        raise IoFailure(f"run directory not fresh: {root}")
    try:
        root.mkdir(parents=True, exist_ok=True)
        run = RunDirectory(root)
        run.artifacts_dir.mkdir()
        manifest = {
            "game_id": game_id,
            "started_at": int(time.time()),
            "config_digest": config_digest(config_obj or {}),
        }
        run.manifest_path.write_text(canonical_line(manifest))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return run


class TraceWriter:
    """Single writer for one run; enforces per-(level, attempt) step order."""

    def __init__(self, run: RunDirectory):
        self.run = run
        self.records: list[TransitionRecord] = []
        self._next_step: dict[tuple[int, int], int] = {}
        self._files: dict[int, object] = {}

    def next_index(self, level: int, attempt: int) -> int:
        return self._next_step.get((level, attempt), 0)

    def append(self, rec: TransitionRecord):
        key = (rec.level_index, rec.attempt_number)
        expected = self._next_step.get(key, 0)
        if rec.step_index != expected:
            raise OutOfOrder(
                f"level {rec.level_index} attempt {rec.attempt_number}: "
                f"expected step {expected}, got {rec.step_index}"
            )
        fh = self._files.get(rec.level_index)
        if fh is None:
            try:
                fh = open(self.run.trace_path(rec.level_index), "a", encoding="utf-8")
            except OSError as exc:
                raise IoFailure(str(exc)) from exc
            self._files[rec.level_index] = fh
        try:
            fh.write(canonical_line(rec.to_obj()))
            fh.flush()
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        self._next_step[key] = expected + 1
        self.records.append(rec)

    def close(self):
        for fh in self._files.values():
            fh.close()
        self._files.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _check_chain(records: list[TransitionRecord]):
    """Within each (level, attempt), steps count up and frames chain."""
    for prev, cur in zip(records, records[1:]):
        same = (prev.level_index, prev.attempt_number) == (
            cur.level_index,
            cur.attempt_number,
        )
        if same:
            if cur.step_index != prev.step_index + 1:
                raise ChainViolation(
                    f"step gap at level {cur.level_index} attempt "
                    f"{cur.attempt_number} step {cur.step_index}"
                )
            if cur.frame_before != prev.frame_after:
                raise ChainViolation(
                    f"frame chain broken at level {cur.level_index} attempt "
                    f"{cur.attempt_number} step {cur.step_index}"
                )
        elif cur.step_index != 0:
            raise ChainViolation(
                f"attempt {cur.attempt_number} of level {cur.level_index} "
                f"does not start at step 0"
            )


def load_records(run: RunDirectory, level: int | None = None) -> list[TransitionRecord]:
    """All records in append order, optionally filtered to one level."""
    if not run.root.exists():
        raise IoFailure(f"no run directory: {run.root}")
    levels = sorted(
        int(p.stem.rsplit("_", 1)[1]) for p in run.root.glob("trace_level_*.jsonl")
    )
    records: list[TransitionRecord] = []
    for lvl in levels:
        if level is not None and lvl != level:
            continue
        path = run.trace_path(lvl)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        for n, line in enumerate(lines, start=1):
            try:
                records.append(record_from_obj(json.loads(line)))
            except (json.JSONDecodeError, SchemaViolation, ValueError) as exc:
                raise CorruptRecord(f"{path.name}:{n}: {exc}", line_number=n) from exc
    _check_chain(records)
    return records


def write_mismatch_artifact(
    run: RunDirectory,
    header: dict,
    predicted_ascii: str,
    observed_ascii: str,
) -> Path:
    """Artifact file: one header line, predicted block, '---', observed block."""
    run.artifacts_dir.mkdir(exist_ok=True)
    n = len(list(run.artifacts_dir.glob("mismatch_*")))
    path = run.artifacts_dir / f"mismatch_{n}"
    body = canonical_line(header) + predicted_ascii + "\n---\n" + observed_ascii + "\n"
    try:
        path.write_text(body, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return path
