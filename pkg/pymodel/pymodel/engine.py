"""Transition engine: rules file loading and one-step prediction.

A rules file is one header line plus one rule per line:

    {"format":"rules","default_dynamics":true,"goal":P|null,"hazard":P|null}
    {"priority":0,"actions":[...],"pattern":P,"write":2}

where P is {"k":K,"anchor":[r,c],"cells":[sym|null x K*K]}.  Prediction is
cell-parallel: at each grid cell the matching rule with the smallest
priority number writes its symbol; unmatched cells copy unchanged when
default dynamics are on, otherwise the prediction is unknown.  Rule
patterns never match across the grid border.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .state_io import GridState, action_key

RUNNING = "RUNNING"
LEVEL_COMPLETED = "LEVEL_COMPLETED"
GAME_OVER = "GAME_OVER"


class BadRulesFile(ValueError):
    pass


@dataclass(frozen=True)
class Window:
    k: int
    anchor: tuple[int, int]
    cells: tuple[int | None, ...]

    def offsets(self) -> tuple[tuple[int, int, int], ...]:
        ar, ac = self.anchor
        return tuple(
            (i // self.k - ar, i % self.k - ac, v)
            for i, v in enumerate(self.cells)
            if v is not None
        )


@dataclass(frozen=True)
class Rule:
    actions: frozenset[tuple]
    window: Window
    write: int
    priority: int


@dataclass(frozen=True)
class Model:
    rules: tuple[Rule, ...]
    default_dynamics: bool
    goal: Window | None
    hazard: Window | None


def _window_from_obj(obj) -> Window:
    if not isinstance(obj, dict) or set(obj) != {"k", "anchor", "cells"}:
        raise BadRulesFile(f"bad pattern: {obj!r}")
    return Window(obj["k"], tuple(obj["anchor"]), tuple(obj["cells"]))


def load_model(path: str | Path) -> Model:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise BadRulesFile("empty rules file")
    header = json.loads(lines[0])
    if not isinstance(header, dict) or header.get("format") != "rules":
        raise BadRulesFile("missing rules header")
    rules = []
    for line in lines[1:]:
        if not line.strip():
            continue
        obj = json.loads(line)
        rules.append(
            Rule(
                actions=frozenset(action_key(a) for a in obj["actions"]),
                window=_window_from_obj(obj["pattern"]),
                write=obj["write"],
                priority=obj["priority"],
            )
        )
    rules.sort(key=lambda r: r.priority)
    return Model(
        tuple(rules),
        bool(header.get("default_dynamics", True)),
        _window_from_obj(header["goal"]) if header.get("goal") else None,
        _window_from_obj(header["hazard"]) if header.get("hazard") else None,
    )


def _matches(window: Window, state: GridState, row: int, col: int) -> bool:
    for dr, dc, v in window.offsets():
        r, c = row + dr, col + dc
        if r < 0 or r >= state.height or c < 0 or c >= state.width:
            return False
        if state.cells[r * state.width + c] != v:
            return False
    return True


def _matches_anywhere(window: Window, state: GridState) -> bool:
    return any(
        _matches(window, state, r, c)
        for r in range(state.height)
        for c in range(state.width)
    )


def status_of(model: Model, state: GridState) -> str:
    if model.goal is not None and _matches_anywhere(model.goal, state):
        return LEVEL_COMPLETED
    if model.hazard is not None and _matches_anywhere(model.hazard, state):
        return GAME_OVER
    return RUNNING


def predict(model: Model, state: GridState, action: tuple):
    """Returns (next_state, status) or an unknown-reason string."""
    candidates = [r for r in model.rules if action in r.actions]
    out = list(state.cells)
    for i in range(len(state.cells)):
        row, col = divmod(i, state.width)
        winner = None
        for rule in candidates:
            if _matches(rule.window, state, row, col):
                winner = rule
                break
        if winner is not None:
            out[i] = winner.write
        elif not model.default_dynamics:
            return f"no rule for cell ({row},{col})"
    nxt = GridState(state.width, state.height, tuple(out), state.level)
    return nxt, status_of(model, nxt)


def size(model: Model) -> int:
    return sum(len(r.window.offsets()) + 1 for r in model.rules)
