"""Link-quality tracking, frame-length control and modulation shifting."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from crlink.profiles import ModulationProfile, higher_rung, ladder_for, lower_rung

MIN_FRAME_LENGTH = 250

ACK = "ack"
NACK = "nack"


@dataclass
class LinkQuality:
    window: int = 32
    alpha: float = 0.25
    outcomes: deque = field(default_factory=deque)
    rssi_ema: float | None = None
    consecutive_successes: int = 0
    consecutive_failures: int = 0

    def __post_init__(self):
        self.outcomes = deque(self.outcomes, maxlen=self.window)

    @property
    def fer(self) -> float:
        if not self.outcomes:
            return 0.0
        return sum(1 for ok in self.outcomes if not ok) / len(self.outcomes)

    def reset_streaks(self):
        self.consecutive_successes = 0
        self.consecutive_failures = 0


def update_link_quality(lq: LinkQuality, outcome: str, rssi: float | None = None) -> LinkQuality:
    ok = outcome == ACK
    lq.outcomes.append(ok)
    if ok:
        lq.consecutive_successes += 1
        lq.consecutive_failures = 0
    else:
        lq.consecutive_failures += 1
        lq.consecutive_successes = 0
    if rssi is not None:
        lq.rssi_ema = rssi if lq.rssi_ema is None else lq.rssi_ema + lq.alpha * (rssi - lq.rssi_ema)
    return lq


@dataclass
class FrameLengthController:
    current_target: int
    max: int
    min: int = MIN_FRAME_LENGTH

    def __post_init__(self):
        self.current_target = min(max(self.current_target, self.min), self.max)

    def set_max(self, new_max: int):
        self.max = max(new_max, self.min)
        self.current_target = min(self.current_target, self.max)


def next_frame_length(ctl: FrameLengthController, outcome: str, profile: ModulationProfile | None = None) -> int:
    """Grow the target by 10% on ACK, shrink by 10% on NACK, within [min, max]."""
    ceiling = ctl.max if profile is None else min(ctl.max, profile.max_frame_length)
    ceiling = max(ceiling, ctl.min)
    factor = 1.10 if outcome == ACK else 0.90
    ctl.current_target = min(max(round(ctl.current_target * factor), ctl.min), ceiling)
    return ctl.current_target


UP, DOWN, STAY = "up", "down", "stay"


def shift_decision(
    lq: LinkQuality,
    current: ModulationProfile,
    ladder: tuple[ModulationProfile, ...] | None = None,
    margin_db: float = 10.0,
    down_after: int = 3,
    down_fer: float = 0.5,
) -> str:
    ladder = ladder if ladder is not None else ladder_for(current)
    i = ladder.index(current)
    if i + 1 < len(ladder) and current.upshift_after is not None:
        up = ladder[i + 1]
        if (
            lq.consecutive_successes >= current.upshift_after
            and lq.rssi_ema is not None
            and lq.rssi_ema >= up.sensitivity + margin_db
        ):
            return UP
    if i > 0 and (lq.consecutive_failures >= down_after or lq.fer > down_fer):
        return DOWN
    return STAY


class Role(str, Enum):
    IDLE = "idle"
    REQUESTER = "requester"
    RESPONDER = "responder"


@dataclass
class ShiftHandshakeState:
    node_id: int = 0
    role: Role = Role.IDLE
    proposed: ModulationProfile | None = None
    awaiting_ack: bool = False
    post_shift_probation: int = 0
    probation_nacks: int = 0
    probation_frames: int = 10
    probation_limit: int = 3

    @property
    def sets_req(self) -> bool:
        return self.role is Role.REQUESTER

    @property
    def sets_ack(self) -> bool:
        return self.role is Role.RESPONDER


@dataclass(frozen=True)
class ShiftTo:
    profile: ModulationProfile


@dataclass(frozen=True)
class ShiftAbandoned:
    pass


DECIDE_UP = "decide-up"
DECIDE_DOWN = "decide-down"
REQ_SENT = "req-sent"
FRAME_WITH_REQ = "frame-with-req"
FRAME_WITH_ACK = "frame-with-ack"
ACK_SENT = "ack-sent"
ACK_TIMEOUT = "ack-timeout"
PROBATION_ACK = "probation-ack"
PROBATION_NACK = "probation-nack"


def _other_rung(current: ModulationProfile) -> ModulationProfile | None:
    return higher_rung(current) or lower_rung(current)


def _switch(hs: ShiftHandshakeState, target: ModulationProfile) -> list:
    hs.role = Role.IDLE
    hs.proposed = None
    hs.awaiting_ack = False
    hs.post_shift_probation = hs.probation_frames
    hs.probation_nacks = 0
    return [ShiftTo(target)]


def shift_handshake_step(
    hs: ShiftHandshakeState,
    event: str,
    current: ModulationProfile,
    peer_id: int | None = None,
) -> tuple[ShiftHandshakeState, list]:
    """Advance the two-node modulation-shift handshake by one event.

    A request always means "move to the other rung of the ladder the frame
    was heard on", so a retransmitted request can never toggle a responder
    twice: after switching it no longer hears the old rung.
    """
    lowest = ladder_for(current)[0]
    if event in (DECIDE_UP, DECIDE_DOWN):
        target = higher_rung(current) if event == DECIDE_UP else lower_rung(current)
        if target is not None and hs.role is Role.IDLE and hs.post_shift_probation == 0:
            hs.role = Role.REQUESTER
            hs.proposed = target
            hs.awaiting_ack = False
        return hs, []
    if event == REQ_SENT:
        if hs.role is Role.REQUESTER:
            hs.awaiting_ack = True
        return hs, []
    if event == FRAME_WITH_REQ:
        target = _other_rung(current)
        if target is None:
            return hs, []
        if hs.role is Role.REQUESTER:
            # simultaneous requests: the lower node id keeps its own
            if peer_id is not None and hs.node_id < peer_id:
                return hs, []
        hs.role = Role.RESPONDER
        hs.proposed = target
        hs.awaiting_ack = False
        return hs, []
    if event == FRAME_WITH_ACK:
        if hs.role is Role.REQUESTER and hs.awaiting_ack:
            return hs, _switch(hs, hs.proposed)
        return hs, []
    if event == ACK_SENT:
        if hs.role is Role.RESPONDER:
            return hs, _switch(hs, hs.proposed)
        return hs, []
    if event == ACK_TIMEOUT:
        if hs.role is not Role.REQUESTER:
            return hs, []
        proposed = hs.proposed
        hs.role = Role.IDLE
        hs.proposed = None
        hs.awaiting_ack = False
        actions: list = [ShiftAbandoned()]
        # a lost downshift ack may have left the peer on the lowest rung already
        if proposed == lowest and current != lowest:
            actions += _switch(hs, lowest)
        return hs, actions
    if event == PROBATION_ACK:
        if hs.post_shift_probation > 0:
            hs.post_shift_probation -= 1
            hs.probation_nacks = 0
        return hs, []
    if event == PROBATION_NACK:
        if hs.post_shift_probation > 0:
            hs.probation_nacks += 1
            if hs.probation_nacks >= hs.probation_limit:
                hs.post_shift_probation = 0
                hs.probation_nacks = 0
                if current != lowest:
                    actions = _switch(hs, lowest)
                    hs.post_shift_probation = 0
                    return hs, actions
        return hs, []
    raise ValueError(f"unknown handshake event {event!r}")
