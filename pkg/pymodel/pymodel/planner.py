"""Breadth-first planning over the transition engine."""

from __future__ import annotations

from collections import deque

from . import engine
from .state_io import GridState, render


def plan(model: engine.Model, start: GridState, actions: list[tuple],
         max_depth: int = 64, max_nodes: int = 200_000) -> list[tuple] | None:
    """Shortest action sequence reaching a predicted LEVEL_COMPLETED."""
    nodes = 1
    visited = {render(start)}
    queue = deque([(start, [])])
    while queue:
        state, path = queue.popleft()
        if len(path) >= max_depth:
            continue
        for action in actions:
            result = engine.predict(model, state, action)
            if isinstance(result, str):
                continue
            nxt, status = result
            nodes += 1
            if nodes > max_nodes:
                return None
            if status == engine.LEVEL_COMPLETED:
                return path + [action]
            if status == engine.GAME_OVER:
                continue
            key = render(nxt)
            if key not in visited:
                visited.add(key)
                queue.append((nxt, path + [action]))
    return None
