"""Stdio request loop: one canonical JSON line in, one line out.

Protocol errors are answered with ok=false; a line that is not JSON at
all terminates the process with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import engine
from .state_io import BadState, action_key, render, state_from_obj, state_to_obj


def _line(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":")) + "\n"


def _error(code: str, text: str) -> str:
    return _line({"ok": False, "error": {"code": code, "text": text}})


def handle(model: engine.Model, obj: dict) -> str:
    op = obj.get("op")
    try:
        if op == "wm_size":
            return _line({"ok": True, "size": engine.size(model)})
        if op == "wm_render":
            return _line({"ok": True, "text": render(state_from_obj(obj["state"]))})
        if op == "wm_reconstruct":
            state = state_from_obj(obj["frame"])
            return _line({"ok": True, "state": state_to_obj(state)})
        if op == "wm_predict":
            state = state_from_obj(obj["state"])
            action = action_key(obj["action"])
            if action == ("reset",):
                return _error("IllegalAction", "reset is not modeled")
            result = engine.predict(model, state, action)
            if isinstance(result, str):
                prediction = {"kind": "unknown", "reason": result}
            else:
                nxt, status = result
                prediction = {"kind": "next", "state": state_to_obj(nxt),
                              "status": status}
            return _line({"ok": True, "prediction": prediction})
    except (BadState, KeyError, TypeError) as exc:
        return _error("SchemaViolation", str(exc))
    return _error("UnknownOp", str(op))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pymodel")
    parser.add_argument("--rules", required=True, help="rules file to serve")
    args = parser.parse_args(argv)
    model = engine.load_model(args.rules)
    for raw in sys.stdin:
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError:
            return 2
        if not isinstance(obj, dict):
            return 2
        sys.stdout.write(handle(model, obj))
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
