"""Per-transceiver ARQ state machine.

The engine is a pure transducer: :func:`step` takes the current state and one
:class:`ProtocolEvent` and returns the updated state plus the actions the
caller must carry out (start carrier sense, transmit, arm a timer, hand a
frame to the sequencer, ...). It never touches a clock or a radio itself.

Receiving is the idle state. A chunk handed over by the parallelizer is sent
after a clear carrier sense and then waits for an ACK; a missing ACK is a NACK
and triggers a binary exponential backoff. A frame that arrives while this
side has data queued is answered with a single frame carrying both the ACK and
the data.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

from crlink import adapt
from crlink.adapt import ShiftAbandoned, ShiftHandshakeState, ShiftTo
from crlink.mux import Chunk
from crlink.profiles import ModulationProfile, lowest_rung
from crlink.wire import Frame, PayloadHeader

# ack_seq carried before anything has been received on a link
NO_ACK = 0xFFFFFFFF


class Mode(str, Enum):
    RX_IDLE = "rx_idle"
    SENSING = "sensing"
    TRANSMITTING = "transmitting"
    AWAITING_ACK = "awaiting_ack"
    BACKOFF = "backoff"


# --- events -----------------------------------------------------------------


@dataclass(frozen=True)
class Start:
    pass


@dataclass(frozen=True)
class DataAvailable:
    chunk: Chunk


@dataclass(frozen=True)
class CsResult:
    clear: bool
    token: int = 0


@dataclass(frozen=True)
class TxDone:
    pass


@dataclass(frozen=True)
class FrameReceived:
    frame: Frame
    rssi: float | None = None


@dataclass(frozen=True)
class FrameCorrupted:
    pass


@dataclass(frozen=True)
class TimerFired:
    timer_id: str


@dataclass(frozen=True)
class ShiftCommand:
    direction: str  # "up" | "down"


@dataclass(frozen=True)
class SequenceReset:
    """The node's sequencer restarted; forget recently delivered sequence numbers."""


ProtocolEvent = Union[
    Start, DataAvailable, CsResult, TxDone, FrameReceived, FrameCorrupted, TimerFired, ShiftCommand, SequenceReset
]


# --- actions ----------------------------------------------------------------


@dataclass(frozen=True)
class StartCs:
    token: int


@dataclass(frozen=True)
class StartTx:
    frame: Frame
    # responses go out right after the turnaround, without carrier sense
    response: bool = False


@dataclass(frozen=True)
class StartTimer:
    timer_id: str
    duration: int


@dataclass(frozen=True)
class CancelTimer:
    timer_id: str


@dataclass(frozen=True)
class DeliverToSequencer:
    frame: Frame


@dataclass(frozen=True)
class EscalateToOtherTransceiver:
    chunk: Chunk


@dataclass(frozen=True)
class DropPayload:
    chunk: Chunk


@dataclass(frozen=True)
class SwitchModulation:
    profile: ModulationProfile


@dataclass(frozen=True)
class ReportOutcome:
    outcome: str  # adapt.ACK | adapt.NACK
    rssi: float | None
    chunk: Chunk


ProtocolAction = Union[
    StartCs,
    StartTx,
    StartTimer,
    CancelTimer,
    DeliverToSequencer,
    EscalateToOtherTransceiver,
    DropPayload,
    SwitchModulation,
    ReportOutcome,
    ShiftAbandoned,
]


# --- state ------------------------------------------------------------------


@dataclass
class InFlight:
    chunk: Chunk
    attempts: int = 0
    transmitted: bool = False


@dataclass
class EngineConfig:
    max_retries: int | None = 5  # None: retry forever
    ack_margin: float = 0.25
    dup_window: int = 64
    shifting: bool = True
    silence_timeout: int | None = 250_000_000  # ns
    handshake_timeout_factor: int = 2


@dataclass
class EngineState:
    node_id: int
    peer_id: int
    profile: ModulationProfile
    config: EngineConfig = field(default_factory=EngineConfig)
    mode: Mode = Mode.RX_IDLE
    in_flight: InFlight | None = None
    pending: deque = field(default_factory=deque)
    last_rx_seq: int = NO_ACK
    recent_rx: deque = field(default_factory=deque)
    last_reset_seq: int | None = None
    hs: ShiftHandshakeState = field(default_factory=ShiftHandshakeState)
    timers: dict[str, str] = field(default_factory=dict)
    timer_serial: int = 0
    cs_token: int = 0
    tx_frame: Frame | None = None
    last_valid_rx: int = 0

    def __post_init__(self):
        self.recent_rx = deque(self.recent_rx, maxlen=self.config.dup_window)
        self.hs.node_id = self.node_id


def ack_wait(profile: ModulationProfile, margin: float = 0.25) -> int:
    """Longest plausible gap between our TX end and the peer's ACK, plus margin."""
    t = profile.timings
    return round((t.tx_to_rx + t.fs_switch + t.rx_ack + t.rx_to_cs + t.cs_to_tx) * (1 + margin))


def backoff_base(profile: ModulationProfile) -> int:
    t = profile.timings
    return t.tx_full + t.tx_to_rx + t.rx_ack


def compute_backoff(attempt: int, profile: ModulationProfile, rng: random.Random) -> int:
    """Binary exponential backoff in ns: base * 2**(attempt-1) * U[0.5, 1.5)."""
    if attempt < 1:
        raise ValueError("attempt counts from 1")
    u = 0.5 + rng.random()
    return round(backoff_base(profile) * (1 << (attempt - 1)) * u)


# --- helpers ----------------------------------------------------------------


def _arm(state: EngineState, kind: str, duration: int, actions: list):
    if kind in state.timers:
        actions.append(CancelTimer(state.timers[kind]))
    state.timer_serial += 1
    timer_id = f"{kind}#{state.timer_serial}"
    state.timers[kind] = timer_id
    actions.append(StartTimer(timer_id, duration))


def _disarm(state: EngineState, kind: str, actions: list):
    timer_id = state.timers.pop(kind, None)
    if timer_id is not None:
        actions.append(CancelTimer(timer_id))


def _build_frame(state: EngineState, chunk: Chunk | None) -> Frame:
    header = PayloadHeader(
        seq_reset=bool(chunk and chunk.reset),
        mod_shift_req=state.hs.sets_req,
        mod_shift_ack=state.hs.sets_ack,
        frame_seq=chunk.seq if chunk else 0,
        ack_seq=state.last_rx_seq,
    )
    return Frame(header, chunk.data if chunk else b"")


def _transmit(state: EngineState, chunk: Chunk | None, response: bool, actions: list):
    frame = _build_frame(state, chunk)
    state.tx_frame = frame
    state.mode = Mode.TRANSMITTING
    actions.append(StartTx(frame, response))


def _begin_attempt(state: EngineState, actions: list):
    state.in_flight.attempts += 1
    state.cs_token += 1
    state.mode = Mode.SENSING
    actions.append(StartCs(state.cs_token))


def _start_next(state: EngineState, actions: list):
    if state.in_flight is None and state.pending:
        state.in_flight = InFlight(state.pending.popleft())
    if state.in_flight is not None:
        _begin_attempt(state, actions)
    else:
        state.mode = Mode.RX_IDLE


def _switch_to(state: EngineState, profile: ModulationProfile, now: int, actions: list):
    if profile == state.profile:
        return
    state.profile = profile
    actions.append(SwitchModulation(profile))
    _disarm(state, "hs", actions)
    state.last_valid_rx = now
    _arm_silence(state, now, actions)


def _arm_silence(state: EngineState, now: int, actions: list):
    cfg = state.config
    if cfg.shifting and cfg.silence_timeout and state.profile != lowest_rung(state.profile):
        remaining = max(state.last_valid_rx + cfg.silence_timeout - now, 1)
        _arm(state, "silence", remaining, actions)
    else:
        _disarm(state, "silence", actions)


def _handshake(state: EngineState, event: str, now: int, actions: list):
    _, out = adapt.shift_handshake_step(state.hs, event, state.profile, state.peer_id)
    for a in out:
        if isinstance(a, ShiftTo):
            _switch_to(state, a.profile, now, actions)
        elif isinstance(a, ShiftAbandoned):
            actions.append(a)
    if not state.hs.sets_req:
        _disarm(state, "hs", actions)


def handle_retry_exhaustion(state: EngineState) -> list:
    """Give up on the in-flight chunk: hand it to the other transceiver once, then drop."""
    chunk = state.in_flight.chunk
    state.in_flight = None
    if chunk.escalated:
        return [DropPayload(chunk)]
    return [EscalateToOtherTransceiver(replace(chunk, escalated=True, reset=chunk.reset))]


def _exhausted(state: EngineState) -> bool:
    limit = state.config.max_retries
    return limit is not None and state.in_flight.attempts >= limit


def _attempt_failed(state: EngineState, now: int, rng: random.Random, nack: bool, actions: list):
    chunk = state.in_flight.chunk
    if nack:
        actions.append(ReportOutcome(adapt.NACK, None, chunk))
        _handshake(state, adapt.PROBATION_NACK, now, actions)
    if _exhausted(state):
        actions.extend(handle_retry_exhaustion(state))
        _start_next(state, actions)
        return
    state.mode = Mode.BACKOFF
    _arm(state, "backoff", compute_backoff(state.in_flight.attempts, state.profile, rng), actions)


def handle_seq_reset(state: EngineState, frame: Frame) -> tuple[EngineState, bool]:
    """Apply a peer's sequence reset; returns (state, is_fresh).

    A reset frame is fresh unless it is a retransmission of the reset we
    already accepted.
    """
    seq = frame.header.frame_seq
    if state.last_reset_seq == seq and seq in state.recent_rx:
        return state, False
    state.recent_rx.clear()
    state.last_reset_seq = seq
    return state, True


# --- transitions --------------------------------------------------------------


def _on_frame(state: EngineState, ev: FrameReceived, now: int, rng: random.Random, actions: list):
    frame, h = ev.frame, ev.frame.header
    state.last_valid_rx = now
    _arm_silence(state, now, actions)
    _handshake(state, adapt.PROBATION_ACK, now, actions)

    fl = state.in_flight
    if fl is not None and fl.transmitted and h.ack_seq == fl.chunk.seq:
        _disarm(state, "ack", actions)
        _disarm(state, "backoff", actions)
        if state.mode is Mode.SENSING:
            state.cs_token += 1
        actions.append(ReportOutcome(adapt.ACK, ev.rssi, fl.chunk))
        state.in_flight = None
        state.mode = Mode.RX_IDLE

    if h.mod_shift_ack:
        _handshake(state, adapt.FRAME_WITH_ACK, now, actions)

    respond = False
    if h.mod_shift_req:
        _handshake(state, adapt.FRAME_WITH_REQ, now, actions)
        respond = True

    if frame.payload:
        respond = True
        fresh = True
        if h.seq_reset:
            _, fresh = handle_seq_reset(state, frame)
        if fresh and h.frame_seq not in state.recent_rx:
            state.recent_rx.append(h.frame_seq)
            actions.append(DeliverToSequencer(frame))
        state.last_rx_seq = h.frame_seq

    if not respond:
        if state.in_flight is None and state.mode is Mode.RX_IDLE:
            _start_next(state, actions)
        return

    fl = state.in_flight
    if fl is not None:
        if state.mode is Mode.AWAITING_ACK:
            # the peer spoke without acknowledging us: our frame was lost
            _disarm(state, "ack", actions)
            actions.append(ReportOutcome(adapt.NACK, None, fl.chunk))
            _handshake(state, adapt.PROBATION_NACK, now, actions)
            if _exhausted(state):
                actions.extend(handle_retry_exhaustion(state))
            else:
                fl.attempts += 1
        elif state.mode is Mode.BACKOFF:
            _disarm(state, "backoff", actions)
            fl.attempts += 1
        elif state.mode is Mode.SENSING:
            state.cs_token += 1
    if state.in_flight is None and state.pending:
        state.in_flight = InFlight(state.pending.popleft(), attempts=1)
    chunk = state.in_flight.chunk if state.in_flight else None
    _transmit(state, chunk, True, actions)


def step(
    state: EngineState, event: ProtocolEvent, now: int, rng: random.Random
) -> tuple[EngineState, list[ProtocolAction]]:
    """Apply one event. ``state`` is updated in place and returned."""
    actions: list = []
    if isinstance(event, Start):
        state.last_valid_rx = now
        _arm_silence(state, now, actions)

    elif isinstance(event, DataAvailable):
        if event.chunk.escalated:
            state.pending.appendleft(event.chunk)
        else:
            state.pending.append(event.chunk)
        if state.mode is Mode.RX_IDLE:
            _start_next(state, actions)

    elif isinstance(event, CsResult):
        if state.mode is Mode.SENSING and event.token == state.cs_token:
            if event.clear:
                _transmit(state, state.in_flight.chunk, False, actions)
            else:
                _attempt_failed(state, now, rng, nack=False, actions=actions)

    elif isinstance(event, TxDone):
        if state.mode is Mode.TRANSMITTING:
            frame = state.tx_frame
            state.tx_frame = None
            if frame.header.mod_shift_ack:
                _handshake(state, adapt.ACK_SENT, now, actions)
            if frame.header.mod_shift_req and state.hs.sets_req:
                _handshake(state, adapt.REQ_SENT, now, actions)
                if "hs" not in state.timers:
                    wait = ack_wait(state.profile, state.config.ack_margin)
                    _arm(state, "hs", wait * state.config.handshake_timeout_factor, actions)
            if frame.payload:
                state.in_flight.transmitted = True
                state.mode = Mode.AWAITING_ACK
                _arm(state, "ack", ack_wait(state.profile, state.config.ack_margin), actions)
            else:
                state.mode = Mode.RX_IDLE
                _start_next(state, actions)

    elif isinstance(event, FrameReceived):
        if state.mode is not Mode.TRANSMITTING:
            _on_frame(state, event, now, rng, actions)

    elif isinstance(event, FrameCorrupted):
        pass

    elif isinstance(event, TimerFired):
        kind = event.timer_id.split("#", 1)[0]
        if state.timers.get(kind) != event.timer_id:
            return state, actions
        del state.timers[kind]
        if kind == "ack" and state.mode is Mode.AWAITING_ACK:
            _attempt_failed(state, now, rng, nack=True, actions=actions)
        elif kind == "backoff" and state.mode is Mode.BACKOFF:
            _begin_attempt(state, actions)
        elif kind == "hs":
            _handshake(state, adapt.ACK_TIMEOUT, now, actions)
        elif kind == "silence":
            timeout = state.config.silence_timeout
            if now - state.last_valid_rx >= timeout:
                state.hs = ShiftHandshakeState(node_id=state.node_id)
                _disarm(state, "hs", actions)
                actions.append(ShiftAbandoned())
                _switch_to(state, lowest_rung(state.profile), now, actions)
            else:
                _arm_silence(state, now, actions)

    elif isinstance(event, ShiftCommand):
        ev = adapt.DECIDE_UP if event.direction == adapt.UP else adapt.DECIDE_DOWN
        _handshake(state, ev, now, actions)

    elif isinstance(event, SequenceReset):
        state.recent_rx.clear()
        state.last_reset_seq = None

    else:
        raise TypeError(f"unknown event {event!r}")
    return state, actions
