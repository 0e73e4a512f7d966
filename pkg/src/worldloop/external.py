"""Model backends: in-process rule models and external subprocess models.

An external model speaks one request/response line per call on its stdio,
using the ops wm_reconstruct / wm_predict / wm_render / wm_size with the
same canonical encoding as the game protocol.  ``handle_wm_line`` is the
reference server side, so any rule model can also be served by this
package itself; conformance of foreign implementations is judged by byte
equality against it.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from pathlib import Path

from .errors import CallTimeout, ProtocolViolation, SpawnFailure
from .frames import Action, Frame, action_from_obj, frame_from_obj, GameStatus
from .model import (
    ModelState,
    Next,
    Prediction,
    RuleModel,
    Unknown,
    description_length,
    predict,
    reconstruct,
    render,
)
from .wire import canonical_line


class RuleModelBackend:
    """In-process backend over a RuleModel.

    Predictions are memoized on the (immutable) model object, so replaying
    the same transitions through the same model costs dictionary lookups.
    """

    def __init__(self, model: RuleModel):
        self.model = model

    def reconstruct(self, frame: Frame) -> ModelState:
        return reconstruct(frame)

    def predict(self, state: ModelState, action: Action) -> Prediction:
        memo = getattr(self.model, "_memo", None)
        if memo is None:
            memo = {}
            object.__setattr__(self.model, "_memo", memo)
        key = (action, state.level_index, state.cells)
        hit = memo.get(key)
        if hit is None:
            hit = predict(self.model, state, action)
            memo[key] = hit
        return hit

    def render(self, state: ModelState) -> str:
        return render(state)

    def description_length(self) -> int:
        return description_length(self.model)

    def close(self):
        pass


def _state_obj(state: ModelState) -> dict:
    return {
        "width": state.width,
        "height": state.height,
        "level": state.level_index,
        "cells": list(state.cells),
    }


def _state_from_obj(obj) -> ModelState:
    frame = frame_from_obj(obj)
    return ModelState(frame.width, frame.height, frame.cells, frame.level_index)


def handle_wm_line(model: RuleModel, line: str) -> str:
    """Answer one model-protocol request line; raises ValueError if the line
    is not JSON at all (callers decide process-level policy for that)."""
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("request must be an object")
    op = obj.get("op")
    try:
        if op == "wm_size":
            return canonical_line({"ok": True, "size": description_length(model)})
        if op == "wm_render":
            state = _state_from_obj(obj["state"])
            return canonical_line({"ok": True, "text": render(state)})
        if op == "wm_reconstruct":
            state = reconstruct(frame_from_obj(obj["frame"]))
            return canonical_line({"ok": True, "state": _state_obj(state)})
        if op == "wm_predict":
            state = _state_from_obj(obj["state"])
            action = action_from_obj(obj["action"])
            if action.is_reset:
                return canonical_line(
                    {"ok": False,
                     "error": {"code": "IllegalAction", "text": "reset is not modeled"}}
                )
            prediction = predict(model, state, action)
            if isinstance(prediction, Next):
                pred_obj = {
                    "kind": "next",
                    "state": _state_obj(prediction.state),
                    "status": prediction.status.value,
                }
            else:
                pred_obj = {"kind": "unknown", "reason": prediction.reason}
            return canonical_line({"ok": True, "prediction": pred_obj})
    except Exception as exc:  # malformed payloads answer, they don't kill the loop
        return canonical_line(
            {"ok": False, "error": {"code": "SchemaViolation", "text": str(exc)}}
        )
    return canonical_line({"ok": False, "error": {"code": "UnknownOp", "text": str(op)}})


def serve_model_stdio(model: RuleModel, rfile=None, wfile=None):
    """Serve wm_* requests over stdio; a non-JSON line exits nonzero."""
    import sys

    rfile = rfile if rfile is not None else sys.stdin
    wfile = wfile if wfile is not None else sys.stdout
    for raw in rfile:
        if not raw.strip():
            continue
        try:
            response = handle_wm_line(model, raw)
        except ValueError:
            raise SystemExit(2)
        wfile.write(response)
        wfile.flush()


class ExternalWorldModel:
    """Subprocess adapter exposing the backend interface over stdio lines.

    One in-flight call at a time; each call has a deadline.  The child is
    spawned eagerly so launch problems surface as SpawnFailure.
    """

    def __init__(self, command: list[str], cwd: str | Path | None = None,
                 timeout: float = 10.0):
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                command,
                cwd=str(cwd) if cwd else None,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
            )
        except OSError as exc:
            raise SpawnFailure(f"{command!r}: {exc}") from exc
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _call(self, request: dict) -> dict:
        if self._proc.poll() is not None:
            raise ProtocolViolation("model process has exited")
        try:
            self._proc.stdin.write(canonical_line(request))
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise ProtocolViolation(f"cannot write to model process: {exc}") from exc
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise CallTimeout(f"no response within {self.timeout}s") from None
        if line is None:
            raise ProtocolViolation("model process closed its output mid-call")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolViolation(f"bad response line: {exc}") from exc
        if not isinstance(obj, dict) or "ok" not in obj:
            raise ProtocolViolation(f"bad response object: {obj!r}")
        if not obj["ok"]:
            err = obj.get("error", {})
            raise ProtocolViolation(f"{err.get('code')}: {err.get('text')}")
        return obj

    def reconstruct(self, frame: Frame) -> ModelState:
        obj = self._call({"op": "wm_reconstruct", "frame": frame.to_obj()})
        return _state_from_obj(obj["state"])

    def predict(self, state: ModelState, action: Action) -> Prediction:
        obj = self._call(
            {"op": "wm_predict", "state": _state_obj(state), "action": action.to_obj()}
        )
        pred = obj["prediction"]
        if pred.get("kind") == "next":
            return Next(_state_from_obj(pred["state"]), GameStatus(pred["status"]))
        if pred.get("kind") == "unknown":
            return Unknown(pred["reason"])
        raise ProtocolViolation(f"bad prediction object: {pred!r}")

    def render(self, state: ModelState) -> str:
        return self._call({"op": "wm_render", "state": _state_obj(state)})["text"]

    def description_length(self) -> int:
        return self._call({"op": "wm_size"})["size"]

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
