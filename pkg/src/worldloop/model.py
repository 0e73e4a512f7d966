"""Executable transition models built from local rewrite rules.

A rule model predicts one step of dynamics cell by cell: for every grid
cell, the highest-priority rule whose windowed pattern matches writes its
symbol; unmatched cells copy unchanged when default dynamics are on,
otherwise the whole prediction is Unknown.  Goal and hazard patterns
evaluated on the resulting grid decide the predicted status.

Models serialize to ``.rules`` files: a header line with flags and
predicates, then one canonical object line per rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ModelFormatError
from .frames import (
    AGENT,
    AGENT_KEYED,
    AGENT_ON_TARGET,
    Action,
    Frame,
    GameStatus,
    action_from_obj,
    render_cells,
)

WINDOW_SIZES = (1, 3, 5)

AGENT_SYMBOLS = (AGENT, AGENT_KEYED, AGENT_ON_TARGET)


@dataclass(frozen=True)
class Pattern:
    """k x k window of literal symbols and wildcards, with an anchor cell."""

    k: int
    anchor: tuple[int, int]
    cells: tuple[int | None, ...]  # row-major; None is a wildcard

    def __post_init__(self):
        if self.k not in WINDOW_SIZES:
            raise ValueError(f"window size must be one of {WINDOW_SIZES}")
        if len(self.cells) != self.k * self.k:
            raise ValueError("pattern cell count does not match window")
        ar, ac = self.anchor
        if not (0 <= ar < self.k and 0 <= ac < self.k):
            raise ValueError("anchor outside window")
        # literal offsets are the matching hot path; freeze them once
        object.__setattr__(
            self,
            "_offsets",
            tuple(
                (i // self.k - ar, i % self.k - ac, v)
                for i, v in enumerate(self.cells)
                if v is not None
            ),
        )

    @property
    def literals(self) -> int:
        return len(self._offsets)

    @property
    def anchor_literal(self) -> int | None:
        ar, ac = self.anchor
        return self.cells[ar * self.k + ac]

    def offsets(self) -> tuple[tuple[int, int, int], ...]:
        """(d_row, d_col, symbol) for every literal, relative to the anchor."""
        return self._offsets

    def matches_at(self, width: int, height: int, cells, row: int, col: int) -> bool:
        for dr, dc, v in self._offsets:
            r = row + dr
            c = col + dc
            if r < 0 or r >= height or c < 0 or c >= width:
                return False
            if cells[r * width + c] != v:
                return False
        return True

    def matches_anywhere(self, width: int, height: int, cells) -> bool:
        anchor = self.anchor_literal
        if anchor is not None:
            spots = [i for i, c in enumerate(cells) if c == anchor]
        else:
            spots = range(len(cells))
        return any(
            self.matches_at(width, height, cells, i // width, i % width)
            for i in spots
        )

    def to_obj(self) -> dict:
        return {
            "k": self.k,
            "anchor": list(self.anchor),
            "cells": list(self.cells),
        }


def pattern_from_obj(obj: object) -> Pattern:
    if not isinstance(obj, dict) or set(obj) != {"k", "anchor", "cells"}:
        raise ModelFormatError(f"bad pattern object: {obj!r}")
    return Pattern(obj["k"], tuple(obj["anchor"]), tuple(obj["cells"]))


@dataclass(frozen=True)
class RewriteRule:
    """Writes one symbol at its anchor wherever its pattern matches."""

    actions: frozenset[Action]
    pattern: Pattern
    write: int
    priority: int

    def __post_init__(self):
        if self.pattern.literals < 1:
            raise ValueError("pattern needs at least one literal cell")
        if not self.actions:
            raise ValueError("rule must select at least one action")

    def to_obj(self) -> dict:
        return {
            "priority": self.priority,
            "actions": [a.to_obj() for a in sorted(self.actions)],
            "pattern": self.pattern.to_obj(),
            "write": self.write,
        }


def rule_from_obj(obj: object) -> RewriteRule:
    if not isinstance(obj, dict) or set(obj) != {"priority", "actions", "pattern", "write"}:
        raise ModelFormatError(f"bad rule object: {obj!r}")
    return RewriteRule(
        actions=frozenset(action_from_obj(a) for a in obj["actions"]),
        pattern=pattern_from_obj(obj["pattern"]),
        write=obj["write"],
        priority=obj["priority"],
    )


@dataclass(frozen=True)
class RuleModel:
    rules: tuple[RewriteRule, ...] = ()
    default_dynamics: bool = True
    goal: Pattern | None = None
    hazard: Pattern | None = None

    def __post_init__(self):
        priorities = [r.priority for r in self.rules]
        if len(set(priorities)) != len(priorities):
            raise ValueError("rule priorities must be unique")


@dataclass(frozen=True)
class ModelState:
    """Canonical grid plus level; annotations are derived and optional."""

    width: int
    height: int
    cells: tuple[int, ...]
    level_index: int
    annotations: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class Next:
    state: ModelState
    status: GameStatus


@dataclass(frozen=True)
class Unknown:
    reason: str


Prediction = Next | Unknown


def reconstruct(frame: Frame) -> ModelState:
    """Identity reconstruction; annotates the agent cell when unambiguous."""
    state = getattr(frame, "_mstate", None)
    if state is not None:
        return state
    annotations = {}
    agents = [i for i, c in enumerate(frame.cells) if c in AGENT_SYMBOLS]
    if len(agents) == 1:
        annotations["agent"] = divmod(agents[0], frame.width)
    state = ModelState(frame.width, frame.height, frame.cells, frame.level_index,
                       annotations)
    object.__setattr__(frame, "_mstate", state)
    return state


def render(state: ModelState) -> str:
    text = getattr(state, "_ascii", None)
    if text is None:
        text = render_cells(state.width, state.height, state.cells)
        object.__setattr__(state, "_ascii", text)
    return text


def _rule_index(model: RuleModel):
    """Per-action buckets: {action: ({anchor_symbol: [rules]}, [wildcard-anchor rules])};
    built once per model instance and stashed on it."""
    cached = getattr(model, "_index", None)
    if cached is not None:
        return cached
    index: dict[Action, tuple[dict, list]] = {}
    for rule in sorted(model.rules, key=lambda r: r.priority):
        for action in rule.actions:
            by_symbol, wild = index.setdefault(action, ({}, []))
            lit = rule.pattern.anchor_literal
            if lit is None:
                wild.append(rule)
            else:
                by_symbol.setdefault(lit, []).append(rule)
    object.__setattr__(model, "_index", index)
    return index


def status_of_cells(model: RuleModel, width: int, height: int, cells) -> GameStatus:
    if model.goal is not None and model.goal.matches_anywhere(width, height, cells):
        return GameStatus.LEVEL_COMPLETED
    if model.hazard is not None and model.hazard.matches_anywhere(width, height, cells):
        return GameStatus.GAME_OVER
    return GameStatus.RUNNING


def predict(model: RuleModel, state: ModelState, action: Action) -> Prediction:
    """Pure one-step prediction; RESET is environment-level and not modeled."""
    if action.is_reset:
        raise ValueError("reset is not modeled")
    w, h = state.width, state.height
    by_symbol, wild = _rule_index(model).get(action, ({}, []))
    out = list(state.cells)
    for i, sym in enumerate(state.cells):
        row, col = divmod(i, w)
        best: RewriteRule | None = None
        for rule in by_symbol.get(sym, ()):
            if best is not None and rule.priority > best.priority:
                break  # bucket is priority-sorted
            if rule.pattern.matches_at(w, h, state.cells, row, col):
                best = rule
                break
        for rule in wild:
            if best is not None and rule.priority > best.priority:
                break
            if rule.pattern.matches_at(w, h, state.cells, row, col):
                best = rule
                break
        if best is not None:
            out[i] = best.write
        elif not model.default_dynamics:
            return Unknown(f"no rule for cell ({row},{col})")
    cells = tuple(out)
    status = status_of_cells(model, w, h, cells)
    return Next(ModelState(w, h, cells, state.level_index), status)


def description_length(model: RuleModel) -> int:
    """Sum over rules of literal pattern cells plus one for the write."""
    return sum(r.pattern.literals + 1 for r in model.rules)


# ---------------------------------------------------------------------------
# .rules files
# ---------------------------------------------------------------------------


def save_rules(model: RuleModel, path: str | Path):
    from .wire import canonical_line

    header = {
        "format": "rules",
        "default_dynamics": model.default_dynamics,
        "goal": model.goal.to_obj() if model.goal else None,
        "hazard": model.hazard.to_obj() if model.hazard else None,
    }
    lines = [canonical_line(header)]
    for rule in sorted(model.rules, key=lambda r: r.priority):
        lines.append(canonical_line(rule.to_obj()))
    Path(path).write_text("".join(lines), encoding="utf-8")


def load_rules(path: str | Path) -> RuleModel:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ModelFormatError(str(exc)) from exc
    if not lines:
        raise ModelFormatError("empty rules file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"bad header: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != "rules":
        raise ModelFormatError("missing rules header")
    rules = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rules.append(rule_from_obj(json.loads(line)))
        except (json.JSONDecodeError, ValueError) as exc:
            raise ModelFormatError(f"line {n}: {exc}") from exc
    goal = pattern_from_obj(header["goal"]) if header.get("goal") else None
    hazard = pattern_from_obj(header["hazard"]) if header.get("hazard") else None
    return RuleModel(
        rules=tuple(rules),
        default_dynamics=bool(header.get("default_dynamics", True)),
        goal=goal,
        hazard=hazard,
    )
