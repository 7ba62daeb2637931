"""Discrete-event RF medium.

The world owns the event queue, the radios attached to each channel and the
transmissions currently on air. It answers three questions for the runner:
is the channel clear for a radio (carrier sense), what did a radio hear when
a transmission ended (reception resolution), and is a radio in the middle of
hearing a frame right now.
"""
from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Any, Union

from crlink.profiles import ModulationProfile

FSPL_CONSTANT_DB = 147.55
REFERENCE_FREQ_HZ = 915e6
# in-flight records older than this are never consulted again
_HISTORY_NS = 2_000_000_000


class DomainError(ValueError):
    pass


class EndOfSimulation(Exception):
    pass


@dataclass(frozen=True)
class FreeSpace:
    pass


@dataclass(frozen=True)
class TwoRayGround:
    ht: float = 1.0
    hr: float = 1.0
    freq_correction: bool = False


PropagationModel = Union[FreeSpace, TwoRayGround]


def path_loss(distance: float, freq: float, model: PropagationModel) -> float:
    if distance <= 0:
        raise DomainError(f"distance must be positive, got {distance}")
    if isinstance(model, FreeSpace):
        return 20 * math.log10(distance) + 20 * math.log10(freq) - FSPL_CONSTANT_DB
    if isinstance(model, TwoRayGround):
        loss = 40 * math.log10(distance) - 20 * math.log10(model.ht * model.hr)
        if model.freq_correction:
            loss += 20 * math.log10(freq / REFERENCE_FREQ_HZ)
        return loss
    raise TypeError(f"unknown propagation model {model!r}")


def received_power(
    tx_power: float,
    gains: tuple[float, float],
    distance: float,
    freq: float,
    model: PropagationModel,
) -> float:
    return tx_power + gains[0] + gains[1] - path_loss(distance, freq, model)


DELIVERED = "delivered"
CORRUPTED = "corrupted"
NOT_DETECTED = "not_detected"


def resolve_reception(
    desired: float,
    interferers: list[float],
    noise_floor: float,
    sensitivity: float,
    capture_db: float = 10.0,
) -> tuple[str, float | None]:
    """Classify one reception from the desired and interfering powers (dBm)."""
    if desired < sensitivity:
        return NOT_DETECTED, None
    if noise_floor > desired - capture_db:
        return CORRUPTED, None
    if any(p > desired - capture_db for p in interferers):
        return CORRUPTED, None
    return DELIVERED, desired


@dataclass
class NodeRF:
    position: tuple[float, float]
    tx_power: float = 20.0
    antenna_gain: float = -3.0


@dataclass(frozen=True)
class Jammer:
    channel: str
    start: int
    end: int
    power: float  # dBm at each affected node
    nodes: frozenset[int] | None = None  # None: heard everywhere

    def heard_at(self, node: int) -> bool:
        return self.nodes is None or node in self.nodes


@dataclass
class Radio:
    key: tuple[int, str]
    node: int
    channel: str
    profile: ModulationProfile
    mod_since: int = 0
    dead_until: int = 0
    # [start, end) spans during which the radio cannot hear anything
    busy: list[tuple[int, int]] = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"n{self.node}.{self.key[1]}"

    def is_busy_during(self, a: int, b: int) -> bool:
        return any(s < b and e > a for s, e in self.busy)

    def add_busy(self, a: int, b: int, now: int):
        if b > a:
            self.busy.append((a, b))
        if len(self.busy) > 32:
            self.busy = [(s, e) for s, e in self.busy if e > now - _HISTORY_NS]


@dataclass
class Transmission:
    radio: Radio
    channel: str
    start: int
    end: int
    profile: ModulationProfile
    data: bytes
    meta: Any = None


@dataclass
class ChannelConfig:
    frequency: float
    frame_error_rate: float = 0.0


class World:
    def __init__(
        self,
        nodes: dict[int, NodeRF],
        channels: dict[str, ChannelConfig],
        model: PropagationModel = FreeSpace(),
        noise_floor: float = -125.0,
        cs_threshold: float = -105.0,
        cs_dwell: int = 128_000,
        capture_db: float = 10.0,
        jammers: list[Jammer] | None = None,
        seed: int | str = 0,
    ):
        self.nodes = nodes
        self.channels = channels
        self.model = model
        self.noise_floor = noise_floor
        self.cs_threshold = cs_threshold
        self.cs_dwell = cs_dwell
        self.capture_db = capture_db
        self.jammers = list(jammers or [])
        self.rng = random.Random(f"channel/{seed}")
        self.radios: dict[tuple[int, str], Radio] = {}
        self.on_air: list[Transmission] = []
        self.now = 0
        self._queue: list = []
        self._counter = 0
        self._power_cache: dict[tuple[int, int, str], float] = {}

    # --- event queue -------------------------------------------------------

    def schedule(self, time: int, item: Any):
        if time < self.now:
            raise ValueError(f"cannot schedule in the past ({time} < {self.now})")
        heapq.heappush(self._queue, (time, self._counter, item))
        self._counter += 1

    def advance(self) -> tuple[int, list[Any]]:
        """Pop every event sharing the earliest timestamp, in insertion order."""
        if not self._queue:
            raise EndOfSimulation()
        t = self._queue[0][0]
        batch = []
        while self._queue and self._queue[0][0] == t:
            batch.append(heapq.heappop(self._queue)[2])
        self.now = t
        return t, batch

    def peek_time(self) -> int | None:
        return self._queue[0][0] if self._queue else None

    # --- radios -------------------------------------------------------------

    def add_radio(self, node: int, role: str, channel: str, profile: ModulationProfile) -> Radio:
        radio = Radio((node, role), node, channel, profile)
        self.radios[radio.key] = radio
        return radio

    def link_power(self, tx_node: int, rx_node: int, channel: str) -> float:
        key = (tx_node, rx_node, channel)
        if key not in self._power_cache:
            a, b = self.nodes[tx_node], self.nodes[rx_node]
            d = math.dist(a.position, b.position)
            self._power_cache[key] = received_power(
                a.tx_power, (a.antenna_gain, b.antenna_gain), d, self.channels[channel].frequency, self.model
            )
        return self._power_cache[key]

    def switch_modulation(self, radio: Radio, profile: ModulationProfile, t: int) -> int:
        """Retune ``radio``; returns the time it can listen again."""
        start = max(t, radio.dead_until)
        ready = start + profile.timings.fs_switch
        radio.profile = profile
        radio.mod_since = start
        radio.dead_until = ready
        radio.add_busy(start, ready, t)
        return ready

    def charge_dead_time(self, radio: Radio, t: int, duration: int) -> int:
        start = max(t, radio.dead_until)
        radio.dead_until = start + duration
        radio.add_busy(start, radio.dead_until, t)
        return radio.dead_until

    # --- carrier sense ------------------------------------------------------

    def carrier_sense(self, radio: Radio, t0: int, t1: int) -> bool:
        """True when the channel is clear at ``radio`` over [t0, t1]."""
        for tx in self.on_air:
            if tx.channel != radio.channel or tx.radio is radio:
                continue
            if tx.start < t1 and tx.end > t0:
                if self.link_power(tx.radio.node, radio.node, tx.channel) >= self.cs_threshold:
                    return False
        for j in self.jammers:
            if j.channel == radio.channel and j.heard_at(radio.node) and j.start < t1 and j.end > t0:
                if j.power >= self.cs_threshold:
                    return False
        return True

    # --- transmissions ------------------------------------------------------

    def schedule_tx(self, radio: Radio, data: bytes, start: int, duration: int, meta: Any = None) -> Transmission:
        tx = Transmission(radio, radio.channel, start, start + duration, radio.profile, data, meta)
        self.on_air.append(tx)
        radio.add_busy(start, tx.end + radio.profile.timings.tx_to_rx, self.now)
        radio.dead_until = max(radio.dead_until, tx.end + radio.profile.timings.tx_to_rx)
        if len(self.on_air) > 64:
            horizon = self.now - _HISTORY_NS
            self.on_air = [x for x in self.on_air if x.end > horizon]
        return tx

    def listeners(self, tx: Transmission) -> list[Radio]:
        return [r for r in self.radios.values() if r.channel == tx.channel and r is not tx.radio]

    def reception(self, radio: Radio, tx: Transmission) -> tuple[str, float | None]:
        """What ``radio`` made of ``tx`` once it ended."""
        if radio.profile != tx.profile or radio.mod_since > tx.start:
            return NOT_DETECTED, None
        if radio.is_busy_during(tx.start, tx.end):
            return NOT_DETECTED, None
        desired = self.link_power(tx.radio.node, radio.node, tx.channel)
        interferers = [
            self.link_power(other.radio.node, radio.node, other.channel)
            for other in self.on_air
            if other is not tx
            and other.channel == tx.channel
            and other.radio is not radio
            and other.start < tx.end
            and other.end > tx.start
        ]
        interferers += [
            j.power
            for j in self.jammers
            if j.channel == tx.channel and j.heard_at(radio.node) and j.start < tx.end and j.end > tx.start
        ]
        outcome, rssi = resolve_reception(
            desired, interferers, self.noise_floor, radio.profile.sensitivity, self.capture_db
        )
        if outcome == DELIVERED:
            fer = self.channels[tx.channel].frame_error_rate
            if fer > 0 and self.rng.random() < fer:
                return CORRUPTED, None
        return outcome, rssi

    def reception_in_progress(self, radio: Radio, t: int) -> int | None:
        """End time of a detectable frame ``radio`` is currently hearing."""
        end = None
        for tx in self.on_air:
            if tx.channel != radio.channel or tx.radio is radio:
                continue
            if not (tx.start <= t < tx.end):
                continue
            if tx.profile != radio.profile or radio.mod_since > tx.start:
                continue
            if radio.is_busy_during(tx.start, t + 1):
                continue
            if self.link_power(tx.radio.node, radio.node, tx.channel) < radio.profile.sensitivity:
                continue
            end = tx.end if end is None else max(end, tx.end)
        return end
