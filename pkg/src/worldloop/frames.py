"""Grid observations, actions, statuses, and the canonical ASCII rendering.

A frame is a rectangular row-major grid of symbol ids (0..15) plus the
0-based level number it was observed in.  The symbol-to-character table
below is normative: frame equality everywhere in the harness is defined
as equality of the rendered ASCII text.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import SchemaViolation

PALETTE_SIZE = 16

# Index == symbol id.  The first 14 entries are used by the built-in games:
# floor, wall, agent, goal, hazard, key, door, block, target, goal-reached,
# hazard-hit, agent-with-key, block-on-target, agent-on-target.
SYMBOL_CHARS = ".#AGXKDBT!%a*+O~"

FLOOR = 0
WALL = 1
AGENT = 2
GOAL = 3
HAZARD = 4
KEY = 5
DOOR = 6
BLOCK = 7
TARGET = 8
GOAL_REACHED = 9
HAZARD_HIT = 10
AGENT_KEYED = 11
BLOCK_ON_TARGET = 12
AGENT_ON_TARGET = 13

CHAR_TO_SYMBOL = {ch: i for i, ch in enumerate(SYMBOL_CHARS)}

MAX_SIDE = 64


class GameStatus(str, enum.Enum):
    RUNNING = "RUNNING"
    LEVEL_COMPLETED = "LEVEL_COMPLETED"
    GAME_OVER = "GAME_OVER"
    GAME_COMPLETED = "GAME_COMPLETED"


@dataclass(frozen=True, order=True)
class Action:
    """One environment action: SIMPLE(1..6), POINT(x, y), or RESET."""

    kind: str  # "simple" | "point" | "reset"
    k: int = 0
    x: int = 0
    y: int = 0

    def __post_init__(self):
        if self.kind == "simple":
            if not 1 <= self.k <= 6:
                raise ValueError(f"simple action index out of range: {self.k}")
        elif self.kind == "point":
            if self.x < 0 or self.y < 0:
                raise ValueError("point coordinates must be non-negative")
        elif self.kind != "reset":
            raise ValueError(f"unknown action kind: {self.kind}")

    @property
    def is_reset(self) -> bool:
        return self.kind == "reset"

    def to_obj(self) -> dict:
        if self.kind == "simple":
            return {"kind": "simple", "k": self.k}
        if self.kind == "point":
            return {"kind": "point", "x": self.x, "y": self.y}
        return {"kind": "reset"}

    def __str__(self) -> str:
        if self.kind == "simple":
            return f"SIMPLE({self.k})"
        if self.kind == "point":
            return f"POINT({self.x},{self.y})"
        return "RESET"


def simple(k: int) -> Action:
    return Action("simple", k=k)


def point(x: int, y: int) -> Action:
    return Action("point", x=x, y=y)


RESET = Action("reset")


def action_from_obj(obj: object) -> Action:
    """Decode an action object; raises SchemaViolation on any deviation."""
    if not isinstance(obj, dict):
        raise SchemaViolation("action must be an object")
    kind = obj.get("kind")
    try:
        if kind == "simple":
            if set(obj) != {"kind", "k"} or type(obj["k"]) is not int:
                raise SchemaViolation(f"bad simple action: {obj}")
            return simple(obj["k"])
        if kind == "point":
            if set(obj) != {"kind", "x", "y"}:
                raise SchemaViolation(f"bad point action: {obj}")
            if type(obj["x"]) is not int or type(obj["y"]) is not int:
                raise SchemaViolation(f"bad point action: {obj}")
            return point(obj["x"], obj["y"])
        if kind == "reset":
            if set(obj) != {"kind"}:
                raise SchemaViolation(f"bad reset action: {obj}")
            return RESET
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from exc
    raise SchemaViolation(f"unknown action kind: {kind!r}")


@dataclass(frozen=True)
class Frame:
    """One settled observation: grid of symbol ids plus the level it belongs to."""

    width: int
    height: int
    cells: tuple[int, ...]
    level_index: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_SIDE or not 1 <= self.height <= MAX_SIDE:
            raise ValueError(f"frame size out of range: {self.width}x{self.height}")
        if len(self.cells) != self.width * self.height:
            raise ValueError("cells length does not match width*height")
        if any(not 0 <= c < PALETTE_SIZE for c in self.cells):
            raise ValueError("symbol id out of palette range")
        if self.level_index < 0:
            raise ValueError("negative level index")

    def at(self, row: int, col: int) -> int:
        return self.cells[row * self.width + col]

    def to_obj(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "level": self.level_index,
            "cells": list(self.cells),
        }


def frame_from_obj(obj: object) -> Frame:
    if not isinstance(obj, dict) or set(obj) != {"width", "height", "level", "cells"}:
        raise SchemaViolation(f"bad frame object: {obj!r}")
    w, h, lvl, cells = obj["width"], obj["height"], obj["level"], obj["cells"]
    if type(w) is not int or type(h) is not int or type(lvl) is not int:
        raise SchemaViolation("frame dimensions must be integers")
    if not isinstance(cells, list) or any(type(c) is not int for c in cells):
        raise SchemaViolation("frame cells must be a list of integers")
    try:
        return Frame(w, h, tuple(cells), lvl)
    except ValueError as exc:
        raise SchemaViolation(str(exc)) from exc


def render_cells(width: int, height: int, cells: tuple[int, ...] | list[int]) -> str:
    """Normative ASCII rendering: height lines of width characters."""
    rows = []
    for r in range(height):
        rows.append("".join(SYMBOL_CHARS[c] for c in cells[r * width : (r + 1) * width]))
    return "\n".join(rows)


def canonical_ascii(frame: Frame) -> str:
    # frames are immutable; the rendering is stashed after the first call
    text = getattr(frame, "_ascii", None)
    if text is None:
        text = render_cells(frame.width, frame.height, frame.cells)
        object.__setattr__(frame, "_ascii", text)
    return text


def parse_grid(text: str) -> tuple[int, int, tuple[int, ...]]:
    """Parse a character grid (one string per line) into (width, height, cells)."""
    lines = [ln for ln in text.strip("\n").splitlines()]
    height = len(lines)
    width = len(lines[0])
    if any(len(ln) != width for ln in lines):
        raise ValueError("grid rows must have equal length")
    cells = tuple(CHAR_TO_SYMBOL[ch] for ln in lines for ch in ln)
    return width, height, cells
