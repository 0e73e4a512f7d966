"""Newline-delimited wire protocol between game server and clients.

Every message is one UTF-8 line holding a single JSON object whose keys
appear in a fixed canonical order, so encodings are byte-reproducible.
All numerics on the wire are integers.  Responses carry observations,
statuses, and counters only; game definitions never cross the boundary.

Frame encoding: {"width": W, "height": H, "level": L, "cells": [...]}.
Error codes: UnknownGame, UnknownSession, IllegalAction, SessionFinished,
MalformedMessage, UnknownOp, SchemaViolation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import errors
from .errors import MalformedMessage, SchemaViolation, UnknownOp
from .frames import Action, Frame, GameStatus, action_from_obj, frame_from_obj

REQUEST_OPS = ("new_session", "step", "legal_actions", "close")

ERROR_CODES = {
    "UnknownGame": errors.UnknownGame,
    "UnknownSession": errors.UnknownSession,
    "IllegalAction": errors.IllegalAction,
    "SessionFinished": errors.SessionFinished,
    "MalformedMessage": errors.MalformedMessage,
    "UnknownOp": errors.UnknownOp,
    "SchemaViolation": errors.SchemaViolation,
}
CODE_BY_EXCEPTION = {exc: code for code, exc in ERROR_CODES.items()}


@dataclass(frozen=True)
class RequestMessage:
    op: str
    session_id: str | None = None
    game_id: str | None = None
    action: Action | None = None


@dataclass(frozen=True)
class ResponseMessage:
    ok: bool
    session_id: str | None = None
    frame: Frame | None = None
    settled: Frame | None = None
    status: GameStatus | None = None
    level: int | None = None
    attempt: int | None = None
    total_actions: int | None = None
    level_actions: tuple[int, ...] | None = None
    legal: tuple[Action, ...] | None = None
    error: tuple[str, str] | None = None  # (code, text)


def canonical_line(obj: dict) -> str:
    """Compact single-line JSON; key order is the dict insertion order."""
    return json.dumps(obj, separators=(",", ":")) + "\n"


def encode_message(msg: RequestMessage | ResponseMessage) -> bytes:
    if isinstance(msg, RequestMessage):
        obj: dict = {"op": msg.op}
        if msg.op == "new_session":
            obj["game_id"] = msg.game_id
        else:
            obj["session_id"] = msg.session_id
            if msg.op == "step":
                obj["action"] = msg.action.to_obj()
        return canonical_line(obj).encode()

    if not msg.ok:
        code, text = msg.error
        return canonical_line({"ok": False, "error": {"code": code, "text": text}}).encode()
    obj = {"ok": True, "session_id": msg.session_id}
    if msg.frame is not None:
        obj["frame"] = msg.frame.to_obj()
        obj["settled"] = msg.settled.to_obj()
        obj["status"] = msg.status.value
        obj["level"] = msg.level
        obj["attempt"] = msg.attempt
        obj["total_actions"] = msg.total_actions
        obj["level_actions"] = list(msg.level_actions)
    elif msg.legal is not None:
        obj["legal"] = [a.to_obj() for a in msg.legal]
    return canonical_line(obj).encode()


def _require_keys(obj: dict, required: set[str], context: str):
    if set(obj) != required:
        raise SchemaViolation(
            f"{context}: expected fields {sorted(required)}, got {sorted(obj)}"
        )


def _decode_request(obj: dict) -> RequestMessage:
    op = obj.get("op")
    if type(op) is not str:
        raise SchemaViolation("op must be a string")
    if op not in REQUEST_OPS:
        raise UnknownOp(f"unknown op: {op!r}")
    if op == "new_session":
        _require_keys(obj, {"op", "game_id"}, op)
        if type(obj["game_id"]) is not str:
            raise SchemaViolation("game_id must be a string")
        return RequestMessage(op, game_id=obj["game_id"])
    if op == "step":
        _require_keys(obj, {"op", "session_id", "action"}, op)
    else:
        _require_keys(obj, {"op", "session_id"}, op)
    if type(obj["session_id"]) is not str:
        raise SchemaViolation("session_id must be a string")
    action = action_from_obj(obj["action"]) if op == "step" else None
    return RequestMessage(op, session_id=obj["session_id"], action=action)


def _int_field(obj: dict, key: str) -> int:
    v = obj[key]
    if type(v) is not int:
        raise SchemaViolation(f"{key} must be an integer")
    return v


def _decode_response(obj: dict) -> ResponseMessage:
    ok = obj.get("ok")
    if type(ok) is not bool:
        raise SchemaViolation("ok must be a boolean")
    if not ok:
        _require_keys(obj, {"ok", "error"}, "error response")
        err = obj["error"]
        if not isinstance(err, dict) or set(err) != {"code", "text"}:
            raise SchemaViolation("error must carry code and text")
        if err["code"] not in ERROR_CODES:
            raise SchemaViolation(f"unknown error code: {err['code']!r}")
        return ResponseMessage(False, error=(err["code"], err["text"]))
    keys = set(obj)
    if keys == {"ok", "session_id"}:
        return ResponseMessage(True, session_id=obj["session_id"])
    if keys == {"ok", "session_id", "legal"}:
        legal = tuple(action_from_obj(a) for a in obj["legal"])
        return ResponseMessage(True, session_id=obj["session_id"], legal=legal)
    full = {
        "ok", "session_id", "frame", "settled", "status", "level", "attempt",
        "total_actions", "level_actions",
    }
    _require_keys(obj, full, "session response")
    try:
        status = GameStatus(obj["status"])
    except ValueError:
        raise SchemaViolation(f"unknown status: {obj['status']!r}") from None
    la = obj["level_actions"]
    if not isinstance(la, list) or any(type(x) is not int for x in la):
        raise SchemaViolation("level_actions must be a list of integers")
    return ResponseMessage(
        True,
        session_id=obj["session_id"],
        frame=frame_from_obj(obj["frame"]),
        settled=frame_from_obj(obj["settled"]),
        status=status,
        level=_int_field(obj, "level"),
        attempt=_int_field(obj, "attempt"),
        total_actions=_int_field(obj, "total_actions"),
        level_actions=tuple(la),
    )


def decode_message(data: bytes | str) -> RequestMessage | ResponseMessage:
    """Inverse of encode_message; raises MalformedMessage / UnknownOp /
    SchemaViolation."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedMessage(f"not UTF-8: {exc}") from exc
    line = data.strip("\r\n")
    if not line or "\n" in line:
        raise MalformedMessage("expected exactly one non-empty line")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedMessage("message must be a JSON object")
    if "op" in obj:
        return _decode_request(obj)
    if "ok" in obj:
        return _decode_response(obj)
    raise SchemaViolation("message is neither a request nor a response")


def error_response(exc: Exception) -> ResponseMessage:
    code = CODE_BY_EXCEPTION.get(type(exc), "SchemaViolation")
    return ResponseMessage(False, error=(code, str(exc)))
