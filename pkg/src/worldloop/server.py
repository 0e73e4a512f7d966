"""Game server and clients.

The server isolates game internals behind the wire protocol: each
connection owns its sessions, requests are handled strictly in arrival
order, and a dropped connection loses its sessions (runs are never
resumed).  The same dispatch core backs the TCP server, a stdio server
for subprocess use, and the in-process client the controller uses.
"""

from __future__ import annotations

import socket
import socketserver
import threading
from dataclasses import dataclass

from . import errors
from .env import Session, new_session
from .frames import Action, Frame, GameStatus
from .games import GameSpec
from .wire import (
    RequestMessage,
    ResponseMessage,
    decode_message,
    encode_message,
    error_response,
)


@dataclass(frozen=True)
class StepView:
    """Client-side view of a session response."""

    frame: Frame
    settled: Frame
    status: GameStatus
    level: int
    attempt: int
    total_actions: int
    level_actions: tuple[int, ...]


class SessionHost:
    """Session table plus request dispatch; one instance per connection."""

    def __init__(self, games: dict[str, GameSpec] | None = None):
        self._games = games
        self._sessions: dict[str, Session] = {}
        self._next_id = 1

    def handle(self, request: RequestMessage) -> ResponseMessage:
        try:
            return self._dispatch(request)
        except errors.WorldLoopError as exc:
            return error_response(exc)

    def _session_response(self, sid: str, session: Session, frame: Frame,
                          settled: Frame, status: GameStatus) -> ResponseMessage:
        # expose per-level counters only up to the level reached so far
        upto = session.level_index + 1
        return ResponseMessage(
            True,
            session_id=sid,
            frame=frame,
            settled=settled,
            status=status,
            level=session.level_index,
            attempt=session.attempt_number,
            total_actions=session.total_actions,
            level_actions=tuple(session.level_actions[:upto]),
        )

    def _get(self, sid: str | None) -> Session:
        if sid is None or sid not in self._sessions:
            raise errors.UnknownSession(f"no such session: {sid!r}")
        return self._sessions[sid]

    def _dispatch(self, request: RequestMessage) -> ResponseMessage:
        if request.op == "new_session":
            session, frame = new_session(request.game_id, self._games)
            sid = f"s{self._next_id}"
            self._next_id += 1
            self._sessions[sid] = session
            return self._session_response(sid, session, frame, frame, GameStatus.RUNNING)
        if request.op == "step":
            session = self._get(request.session_id)
            out = session.step(request.action)
            return self._session_response(
                request.session_id, session, out.frame, out.settled, out.status
            )
        if request.op == "legal_actions":
            session = self._get(request.session_id)
            return ResponseMessage(
                True,
                session_id=request.session_id,
                legal=tuple(session.legal_actions()),
            )
        if request.op == "close":
            self._get(request.session_id)
            del self._sessions[request.session_id]
            return ResponseMessage(True, session_id=request.session_id)
        raise errors.UnknownOp(f"unknown op: {request.op!r}")


def _serve_stream(host: SessionHost, rfile, wfile):
    for raw in rfile:
        if not raw.strip():
            continue
        try:
            request = decode_message(raw)
            if not isinstance(request, RequestMessage):
                raise errors.SchemaViolation("expected a request message")
            response = host.handle(request)
        except errors.WireError as exc:
            response = error_response(exc)
        wfile.write(encode_message(response))
        wfile.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        host = SessionHost(self.server.games)  # type: ignore[attr-defined]
        try:
            _serve_stream(host, self.rfile, self.wfile)
        except (ConnectionError, BrokenPipeError):
            pass  # session dies with its connection


class GameServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], games: dict[str, GameSpec] | None = None):
        super().__init__(address, _Handler)
        self.games = games

    @property
    def port(self) -> int:
        return self.server_address[1]

    def serve_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


def serve_stdio(games: dict[str, GameSpec] | None = None, rfile=None, wfile=None):
    """One-connection server over stdio, for subprocess isolation."""
    import sys

    rfile = rfile if rfile is not None else sys.stdin.buffer
    wfile = wfile if wfile is not None else sys.stdout.buffer
    _serve_stream(SessionHost(games), rfile, wfile)


def _raise_error(response: ResponseMessage):
    code, text = response.error
    from .wire import ERROR_CODES

    raise ERROR_CODES[code](text)


class _ClientBase:
    """Typed request helpers shared by remote and in-process clients."""

    game_id: str | None = None

    def _transact(self, request: RequestMessage) -> ResponseMessage:
        raise NotImplementedError

    def _view(self, response: ResponseMessage) -> StepView:
        return StepView(
            frame=response.frame,
            settled=response.settled,
            status=response.status,
            level=response.level,
            attempt=response.attempt,
            total_actions=response.total_actions,
            level_actions=response.level_actions,
        )

    def new_session(self, game_id: str) -> StepView:
        response = self._transact(RequestMessage("new_session", game_id=game_id))
        if not response.ok:
            _raise_error(response)
        self.session_id = response.session_id
        self.game_id = game_id
        return self._view(response)

    def step(self, action: Action) -> StepView:
        response = self._transact(
            RequestMessage("step", session_id=self.session_id, action=action)
        )
        if not response.ok:
            _raise_error(response)
        return self._view(response)

    def legal_actions(self) -> list[Action]:
        response = self._transact(
            RequestMessage("legal_actions", session_id=self.session_id)
        )
        if not response.ok:
            _raise_error(response)
        return list(response.legal)

    def close(self):
        pass


class InProcessClient(_ClientBase):
    """Drives sessions through the same codec and dispatch as the server."""

    def __init__(self, games: dict[str, GameSpec] | None = None):
        self._host = SessionHost(games)
        self.session_id: str | None = None

    def _transact(self, request: RequestMessage) -> ResponseMessage:
        # encode/decode round trip keeps this path byte-identical to the wire
        wire_request = decode_message(encode_message(request))
        response = self._host.handle(wire_request)
        return decode_message(encode_message(response))


class RemoteClient(_ClientBase):
    """TCP client; one connection, sessions live server-side."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._rfile = self._sock.makefile("rb")
        self.session_id: str | None = None

    def _transact(self, request: RequestMessage) -> ResponseMessage:
        self._sock.sendall(encode_message(request))
        line = self._rfile.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        return decode_message(line)

    def close(self):
        try:
            self._rfile.close()
            self._sock.close()
        except OSError:
            pass
