"""Scenario files: JSON documents validated into a fully defaulted model."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from crlink.profiles import PROFILES, band_of_frequency


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PropagationSpec(_Strict):
    model: Literal["free_space", "two_ray"] = "free_space"
    tx_height_m: float = Field(1.0, gt=0)
    rx_height_m: float = Field(1.0, gt=0)
    freq_correction: bool = False


class ChannelSpec(_Strict):
    frequency_hz: float = Field(gt=0)
    frame_error_rate: float = Field(0.0, ge=0, le=1)


class TransceiverSpec(_Strict):
    channel: str
    modulation: str
    # raises (or lowers) the per-modulation frame length ceiling
    max_frame_length: int | None = Field(None, ge=250, le=1000)
    enabled: bool = True


def _main() -> TransceiverSpec:
    return TransceiverSpec(channel="main", modulation="2G4_1M")


def _helper() -> TransceiverSpec:
    return TransceiverSpec(channel="helper", modulation="915M_200K")


class NodeSpec(_Strict):
    id: int = Field(ge=0)
    position: tuple[float, float] = (0.0, 0.0)
    tx_power_dbm: float = 20.0
    antenna_gain_dbi: float = -3.0
    initial_seq: int = Field(0, ge=0, lt=1 << 32)
    main: TransceiverSpec = Field(default_factory=_main)
    helper: TransceiverSpec = Field(default_factory=_helper)


def _default_nodes() -> list[NodeSpec]:
    return [NodeSpec(id=0, position=(0.0, 0.0)), NodeSpec(id=1, position=(10.0, 0.0))]


def _default_channels() -> dict[str, ChannelSpec]:
    return {"main": ChannelSpec(frequency_hz=2440e6), "helper": ChannelSpec(frequency_hz=915e6)}


class JammerSpec(_Strict):
    channel: str
    start_s: float = Field(0.0, ge=0)
    duration_s: float = Field(gt=0)
    power_dbm: float = -60.0
    # nodes that hear the jammer; None means every node
    nodes: list[int] | None = None


class BurstTraffic(_Strict):
    kind: Literal["burst"]
    node: int
    bytes: int = Field(ge=0)
    at_s: float = Field(0.0, ge=0)


class StreamTraffic(_Strict):
    kind: Literal["stream"]
    node: int
    rate_bps: float = Field(gt=0)
    start_s: float = Field(0.0, ge=0)
    stop_s: float = Field(gt=0)
    write_bytes: int = Field(64, gt=0)


class CaptureTraffic(_Strict):
    kind: Literal["capture"]
    node: int
    path: str
    at_s: float = Field(0.0, ge=0)


Traffic = Annotated[Union[BurstTraffic, StreamTraffic, CaptureTraffic], Field(discriminator="kind")]


class ProtocolSpec(_Strict):
    max_retries: int | None = Field(5, ge=1)  # null: retry forever
    cs_threshold_dbm: float = -105.0
    cs_dwell_us: float = Field(128.0, gt=0)
    capture_threshold_db: float = 10.0
    ack_timeout_margin: float = Field(0.25, ge=0)
    dup_window: int = Field(64, ge=1)
    sequencer_capacity: int = Field(32, ge=1)
    flush_timeout_ms: float = Field(300.0, gt=0)
    relay_delay_ms: float = Field(1.0, ge=0)
    modulation_shifting: bool = True
    upshift_margin_db: float = 10.0
    silence_timeout_ms: float | None = Field(250.0, gt=0)
    fixed_frame_length: int | None = Field(None, ge=10, le=1000)
    host_buffer_bytes: int = Field(16 * 1024, gt=0)


class Scenario(_Strict):
    name: str = "scenario"
    duration_s: float = Field(gt=0)
    seed: int = 0
    propagation: PropagationSpec = Field(default_factory=PropagationSpec)
    noise_floor_dbm: float = -125.0
    channels: dict[str, ChannelSpec] = Field(default_factory=_default_channels)
    nodes: list[NodeSpec] = Field(default_factory=_default_nodes)
    jammers: list[JammerSpec] = []
    traffic: list[Traffic] = []
    host_rate_limit_bps: float | None = Field(None, gt=0)
    protocol: ProtocolSpec = Field(default_factory=ProtocolSpec)

    @model_validator(mode="after")
    def _cross_refs(self):
        ids = [n.id for n in self.nodes]
        if len(ids) != 2 or len(set(ids)) != 2:
            raise ValueError("exactly two nodes with distinct ids are required")
        for n in self.nodes:
            for role in ("main", "helper"):
                t = getattr(n, role)
                if t.channel not in self.channels:
                    raise ValueError(f"node {n.id} {role}: unknown channel {t.channel!r}")
                if t.modulation not in PROFILES:
                    raise ValueError(f"node {n.id} {role}: unknown modulation {t.modulation!r}")
                band = band_of_frequency(self.channels[t.channel].frequency_hz)
                if band is not PROFILES[t.modulation].band:
                    raise ValueError(f"node {n.id} {role}: {t.modulation} does not fit channel {t.channel!r}")
        a, b = self.nodes
        for role in ("main", "helper"):
            if getattr(a, role).channel != getattr(b, role).channel:
                raise ValueError(f"{role} transceivers of both nodes must share a channel")
        for j in self.jammers:
            if j.channel not in self.channels:
                raise ValueError(f"jammer references unknown channel {j.channel!r}")
            for nid in j.nodes or []:
                if nid not in ids:
                    raise ValueError(f"jammer references unknown node {nid}")
        for t in self.traffic:
            if t.node not in ids:
                raise ValueError(f"traffic references unknown node {t.node}")
        return self


def _line_of(text: str, loc: tuple) -> int | None:
    """Best-effort line number for the innermost key named in ``loc``."""
    keys = [k for k in loc if isinstance(k, str)]
    if not keys:
        return None
    needle = f'"{keys[-1]}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def parse_scenario(text: str, base_dir: str | Path | None = None) -> Scenario:
    """Parse and validate a scenario document. Raises :class:`ParseError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from None
    try:
        scenario = Scenario.model_validate(raw)
    except ValidationError as e:
        err = e.errors()[0]
        loc = tuple(err["loc"])
        field = ".".join(str(p) for p in loc) or None
        raise ParseError(err["msg"], line=_line_of(text, loc), field=field) from None
    if base_dir is not None:
        for t in scenario.traffic:
            if isinstance(t, CaptureTraffic) and not Path(t.path).is_absolute():
                t.path = str(Path(base_dir) / t.path)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    return parse_scenario(p.read_text(), base_dir=p.parent)
