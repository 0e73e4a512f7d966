import pytest
from hypothesis import given, strategies as st

from worldloop.errors import MalformedMessage, SchemaViolation, UnknownOp
from worldloop.frames import Frame, GameStatus, point, simple, RESET
from worldloop.wire import (
    RequestMessage,
    ResponseMessage,
    decode_message,
    encode_message,
)

FRAME = Frame(2, 1, (2, 0), 0)

# frozen byte encodings: any change here is a wire format break
GOLDEN = [
    (
        RequestMessage("new_session", game_id="corridor"),
        b'{"op":"new_session","game_id":"corridor"}\n',
    ),
    (
        RequestMessage("step", session_id="s1", action=simple(2)),
        b'{"op":"step","session_id":"s1","action":{"kind":"simple","k":2}}\n',
    ),
    (
        RequestMessage("step", session_id="s1", action=RESET),
        b'{"op":"step","session_id":"s1","action":{"kind":"reset"}}\n',
    ),
    (
        RequestMessage("step", session_id="s1", action=point(3, 4)),
        b'{"op":"step","session_id":"s1","action":{"kind":"point","x":3,"y":4}}\n',
    ),
    (
        RequestMessage("legal_actions", session_id="s2"),
        b'{"op":"legal_actions","session_id":"s2"}\n',
    ),
    (RequestMessage("close", session_id="s2"), b'{"op":"close","session_id":"s2"}\n'),
    (
        ResponseMessage(False, error=("UnknownGame", "no such game")),
        b'{"ok":false,"error":{"code":"UnknownGame","text":"no such game"}}\n',
    ),
    (
        ResponseMessage(
            True,
            session_id="s1",
            frame=FRAME,
            settled=FRAME,
            status=GameStatus.RUNNING,
            level=0,
            attempt=1,
            total_actions=0,
            level_actions=(0,),
        ),
        b'{"ok":true,"session_id":"s1","frame":{"width":2,"height":1,"level":0,'
        b'"cells":[2,0]},"settled":{"width":2,"height":1,"level":0,"cells":[2,0]},'
        b'"status":"RUNNING","level":0,"attempt":1,"total_actions":0,'
        b'"level_actions":[0]}\n',
    ),
    (
        ResponseMessage(True, session_id="s1", legal=(simple(1), RESET)),
        b'{"ok":true,"session_id":"s1","legal":[{"kind":"simple","k":1},'
        b'{"kind":"reset"}]}\n',
    ),
    (
        ResponseMessage(True, session_id="s1"),
        b'{"ok":true,"session_id":"s1"}\n',
    ),
]


@pytest.mark.parametrize("message,expected", GOLDEN, ids=range(len(GOLDEN)))
def test_golden_encoding(message, expected):
    assert encode_message(message) == expected


@pytest.mark.parametrize("message,expected", GOLDEN, ids=range(len(GOLDEN)))
def test_golden_round_trip(message, expected):
    assert decode_message(expected) == message


def test_unknown_op():
    with pytest.raises(UnknownOp):
        decode_message(b'{"op":"jump","session_id":"s1"}\n')


def test_truncated_line():
    with pytest.raises(MalformedMessage):
        decode_message(b'{"op":"step","session_id"')
    with pytest.raises(MalformedMessage):
        decode_message(b"")


def test_extra_fields_rejected():
    with pytest.raises(SchemaViolation):
        decode_message(b'{"op":"close","session_id":"s1","extra":1}\n')


def test_wrong_types_rejected():
    with pytest.raises(SchemaViolation):
        decode_message(b'{"op":"close","session_id":7}\n')
    with pytest.raises(SchemaViolation):
        decode_message(b'{"ok":1,"error":{"code":"UnknownOp","text":""}}\n')


actions = st.one_of(
    st.integers(1, 6).map(simple),
    st.builds(point, st.integers(0, 63), st.integers(0, 63)),
    st.just(RESET),
)
frames = st.integers(1, 5).flatmap(
    lambda w: st.integers(1, 5).flatmap(
        lambda h: st.lists(st.integers(0, 15), min_size=w * h, max_size=w * h).map(
            lambda cells: Frame(w, h, tuple(cells), 0)
        )
    )
)
requests = st.one_of(
    st.builds(lambda g: RequestMessage("new_session", game_id=g), st.text(max_size=8)),
    st.builds(
        lambda s, a: RequestMessage("step", session_id=s, action=a),
        st.text(min_size=1, max_size=8),
        actions,
    ),
    st.builds(lambda s: RequestMessage("legal_actions", session_id=s), st.just("s1")),
    st.builds(lambda s: RequestMessage("close", session_id=s), st.just("s1")),
)
responses = st.one_of(
    st.builds(
        lambda f, st_, t: ResponseMessage(
            True, session_id="s1", frame=f, settled=f, status=st_, level=0,
            attempt=1, total_actions=t, level_actions=(t,),
        ),
        frames,
        st.sampled_from(list(GameStatus)),
        st.integers(0, 1000),
    ),
    st.builds(
        lambda legal: ResponseMessage(True, session_id="s1", legal=tuple(legal)),
        st.lists(actions, max_size=4),
    ),
    st.builds(
        lambda code, text: ResponseMessage(False, error=(code, text)),
        st.sampled_from(["UnknownGame", "IllegalAction", "SchemaViolation"]),
        st.text(max_size=20),
    ),
)


@given(st.one_of(requests, responses))
def test_round_trip_property(message):
    encoded = encode_message(message)
    assert not encoded[:-1].count(b"\n")  # single line
    assert decode_message(encoded) == message
