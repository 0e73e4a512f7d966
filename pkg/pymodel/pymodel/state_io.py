"""Grid state encoding, decoding, and ASCII rendering.

States travel as {"width": W, "height": H, "level": L, "cells": [...]}
with symbol ids 0..15.  The character table is fixed: frame comparison
everywhere is defined on this rendering.
"""

from __future__ import annotations

from dataclasses import dataclass

SYMBOL_CHARS = ".#AGXKDBT!%a*+O~"
PALETTE_SIZE = len(SYMBOL_CHARS)


@dataclass(frozen=True)
class GridState:
    width: int
    height: int
    cells: tuple[int, ...]
    level: int


class BadState(ValueError):
    pass


def state_from_obj(obj: object) -> GridState:
    if not isinstance(obj, dict) or set(obj) != {"width", "height", "level", "cells"}:
        raise BadState(f"bad state object: {obj!r}")
    width, height, level, cells = obj["width"], obj["height"], obj["level"], obj["cells"]
    if type(width) is not int or type(height) is not int or type(level) is not int:
        raise BadState("state dimensions must be integers")
    if not isinstance(cells, list) or len(cells) != width * height:
        raise BadState("cells length must equal width*height")
    if any(type(c) is not int or not 0 <= c < PALETTE_SIZE for c in cells):
        raise BadState("cell out of palette range")
    return GridState(width, height, tuple(cells), level)


def state_to_obj(state: GridState) -> dict:
    return {
        "width": state.width,
        "height": state.height,
        "level": state.level,
        "cells": list(state.cells),
    }


def render(state: GridState) -> str:
    w = state.width
    return "\n".join(
        "".join(SYMBOL_CHARS[c] for c in state.cells[r * w : (r + 1) * w])
        for r in range(state.height)
    )


def action_key(obj: object) -> tuple:
    """Canonical comparable form of an action object."""
    if not isinstance(obj, dict):
        raise BadState(f"bad action object: {obj!r}")
    kind = obj.get("kind")
    if kind == "simple" and set(obj) == {"kind", "k"}:
        return ("simple", obj["k"])
    if kind == "point" and set(obj) == {"kind", "x", "y"}:
        return ("point", obj["x"], obj["y"])
    if kind == "reset" and set(obj) == {"kind"}:
        return ("reset",)
    raise BadState(f"bad action object: {obj!r}")
