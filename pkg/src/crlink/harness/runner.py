"""Deterministic scenario runner.

One event loop owns the RF world, both nodes (each a Main and a Helper
transceiver running its own engine), the parallelizer/sequencer pair of every
node and the host streams. Engine actions are turned into channel activity
and queued events here; engines never see the clock directly.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from crlink import adapt
from crlink.adapt import FrameLengthController, LinkQuality
from crlink.channel import (
    CORRUPTED,
    DELIVERED,
    ChannelConfig,
    FreeSpace,
    Jammer,
    NodeRF,
    Radio,
    Transmission,
    TwoRayGround,
    World,
)
from crlink.engine import (
    CancelTimer,
    CsResult,
    DataAvailable,
    DeliverToSequencer,
    DropPayload,
    EngineConfig,
    EngineState,
    EscalateToOtherTransceiver,
    FrameCorrupted,
    FrameReceived,
    Mode,
    ReportOutcome,
    SequenceReset,
    ShiftCommand,
    Start,
    StartCs,
    StartTimer,
    StartTx,
    SwitchModulation,
    TimerFired,
    TxDone,
    step,
)
from crlink.harness.hoststream import HostStream, host_write
from crlink.harness.metrics import DirectionMetrics, MetricsReport, TransceiverCounters
from crlink.harness.scenario import BurstTraffic, CaptureTraffic, Scenario, StreamTraffic
from crlink.mux import Chunk, SequencerBuffer, TransceiverStatus, route, seq_next
from crlink.profiles import PROFILES, ModulationProfile
from crlink.wire import HEADER_LEN, Frame, FrameError, decode_frame, encode_frame

S = 1_000_000_000
MS = 1_000_000
US = 1_000

ROLES = ("main", "helper")


def fmt_time(ns: int) -> str:
    return f"{ns // 1000}.{ns % 1000:03d}"


def _flags(frame: Frame) -> str:
    h = frame.header
    return "".join(c for c, on in (("R", h.seq_reset), ("Q", h.mod_shift_req), ("A", h.mod_shift_ack)) if on) or "-"


def _describe(frame: Frame) -> str:
    h = frame.header
    ack = "none" if h.ack_seq == 0xFFFFFFFF else str(h.ack_seq)
    if frame.is_pure_ack:
        return f"ack={ack} flags={_flags(frame)}"
    return f"seq={h.frame_seq} ack={ack} len={len(frame.payload)} flags={_flags(frame)}"


@dataclass
class Transceiver:
    node: "Node"
    role: str
    index: int
    radio: Radio
    state: EngineState
    rng: random.Random
    lq: LinkQuality
    flc: FrameLengthController
    frame_cap: int | None
    enabled: bool
    relay: int  # ns between the node's host side and this transceiver
    outstanding: list[Chunk] = field(default_factory=list)
    # seq of the chunk an arriving frame is about to acknowledge
    acking_seq: int | None = None
    cs_start: int = 0
    # after closing an exchange with a pure ACK, leave the peer the first turn
    defer_until: int = 0
    counters: TransceiverCounters = field(default_factory=TransceiverCounters)

    @property
    def label(self) -> str:
        return self.radio.label

    def cap_for(self, profile: ModulationProfile) -> int:
        return self.frame_cap if self.frame_cap is not None else profile.max_frame_length


@dataclass
class Node:
    id: int
    peer: int
    host: HostStream
    seqbuf: SequencerBuffer
    trx: dict[str, Transceiver] = field(default_factory=dict)
    next_seq: int = 0
    first_chunk: bool = True
    seq_started: bool = False
    applied_reset: int | None = None
    pending_input: deque = field(default_factory=deque)
    input_data: bytearray = field(default_factory=bytearray)
    unassigned: bytearray = field(default_factory=bytearray)
    accepted_total: int = 0
    assigned_total: int = 0
    accept_segments: deque = field(default_factory=deque)  # (end offset, accept time)
    chunk_info: dict[int, tuple[int, int]] = field(default_factory=dict)  # seq -> (accept time, size)
    latencies: list[int] = field(default_factory=list)  # of chunks this node received
    first_offer: int | None = None
    last_emit: int | None = None
    retry_at: int | None = None
    tick_at: int | None = None
    shifts: int = 0

    @property
    def active(self) -> list[Transceiver]:
        return [t for t in self.trx.values() if t.enabled]


class Runner:
    def __init__(self, scenario: Scenario, trace: bool = True, stop_when_idle: bool = True):
        self.s = scenario
        self.trace_on = trace
        self.stop_when_idle = stop_when_idle
        self.lines: list[str] = []
        p = scenario.protocol
        if scenario.propagation.model == "two_ray":
            pr = scenario.propagation
            model = TwoRayGround(pr.tx_height_m, pr.rx_height_m, pr.freq_correction)
        else:
            model = FreeSpace()
        self.world = World(
            nodes={n.id: NodeRF(n.position, n.tx_power_dbm, n.antenna_gain_dbi) for n in scenario.nodes},
            channels={k: ChannelConfig(c.frequency_hz, c.frame_error_rate) for k, c in scenario.channels.items()},
            model=model,
            noise_floor=scenario.noise_floor_dbm,
            cs_threshold=p.cs_threshold_dbm,
            cs_dwell=round(p.cs_dwell_us * US),
            capture_db=p.capture_threshold_db,
            jammers=[
                Jammer(
                    j.channel,
                    round(j.start_s * S),
                    round((j.start_s + j.duration_s) * S),
                    j.power_dbm,
                    frozenset(j.nodes) if j.nodes is not None else None,
                )
                for j in scenario.jammers
            ],
            seed=scenario.seed,
        )
        self.duration = round(scenario.duration_s * S)
        self.relay = round(p.relay_delay_ms * MS)
        ids = [n.id for n in scenario.nodes]
        self.nodes: dict[int, Node] = {}
        for spec in scenario.nodes:
            peer = ids[1] if spec.id == ids[0] else ids[0]
            node = Node(
                id=spec.id,
                peer=peer,
                host=HostStream(capacity=p.host_buffer_bytes, rate_limit_bps=scenario.host_rate_limit_bps),
                seqbuf=SequencerBuffer(capacity=p.sequencer_capacity, flush_timeout=round(p.flush_timeout_ms * MS)),
                next_seq=spec.initial_seq,
            )
            for index, role in enumerate(ROLES):
                t = getattr(spec, role)
                profile = PROFILES[t.modulation]
                radio = self.world.add_radio(spec.id, role, t.channel, profile)
                cfg = EngineConfig(
                    max_retries=p.max_retries,
                    ack_margin=p.ack_timeout_margin,
                    dup_window=p.dup_window,
                    shifting=p.modulation_shifting,
                    silence_timeout=round(p.silence_timeout_ms * MS) if p.silence_timeout_ms else None,
                )
                cap = t.max_frame_length if t.max_frame_length is not None else profile.max_frame_length
                node.trx[role] = Transceiver(
                    node=node,
                    role=role,
                    index=index,
                    radio=radio,
                    state=EngineState(node_id=spec.id, peer_id=peer, profile=profile, config=cfg),
                    rng=random.Random(f"engine/{scenario.seed}/{spec.id}/{role}"),
                    lq=LinkQuality(),
                    flc=FrameLengthController(cap, cap),
                    frame_cap=t.max_frame_length,
                    enabled=t.enabled,
                    relay=self.relay if role == "helper" else 0,
                )
            self.nodes[spec.id] = node
        self.by_radio = {t.radio.key: t for n in self.nodes.values() for t in n.trx.values()}
        self.shift_log: list[tuple[int, str, str]] = []
        self.offers_left = 0
        self.relays_pending = 0
        self.ready: deque = deque()  # same-instant engine deliveries
        self._schedule_traffic()

    # --- bookkeeping ------------------------------------------------------------

    @property
    def now(self) -> int:
        return self.world.now

    def log(self, who: str, event: str, detail: str = ""):
        if self.trace_on:
            self.lines.append(f"{fmt_time(self.now)},{who},{event},{detail}")

    def _offer(self, t: int, node: int, data: bytes):
        if t > self.duration:
            return
        self.world.schedule(t, ("offer", node, data))
        self.offers_left += 1

    def _schedule_traffic(self):
        for i, tr in enumerate(self.s.traffic):
            rng = random.Random(f"traffic/{self.s.seed}/{i}")
            if isinstance(tr, BurstTraffic):
                if tr.bytes:
                    self._offer(round(tr.at_s * S), tr.node, rng.randbytes(tr.bytes))
            elif isinstance(tr, StreamTraffic):
                step_ns = tr.write_bytes * 8 * S / tr.rate_bps
                k = 0
                while True:
                    t = round(tr.start_s * S + k * step_ns)
                    if t >= round(tr.stop_s * S) or t > self.duration:
                        break
                    self._offer(t, tr.node, rng.randbytes(tr.write_bytes))
                    k += 1
            elif isinstance(tr, CaptureTraffic):
                data = Path(tr.path).read_bytes()
                if data:
                    self._offer(round(tr.at_s * S), tr.node, data)

    # --- host side --------------------------------------------------------------

    def _pump_host(self, node: Node):
        while node.pending_input:
            data = node.pending_input[0]
            n = host_write(node.host, data, self.now)
            if n:
                node.unassigned += data[:n]
                node.accepted_total += n
                node.accept_segments.append((node.accepted_total, self.now))
            if n < len(data):
                node.pending_input[0] = data[n:]
                if node.host.rate_limit_bps is not None and node.host.free > 0:
                    at = node.host.wait_for(min(len(data) - n, node.host.free), self.now)
                    if node.retry_at is None or node.retry_at > at:
                        node.retry_at = at
                        self.world.schedule(at, ("host_retry", node.id))
                break
            node.pending_input.popleft()
        self._parallelize(node)

    def _release(self, node: Node, nbytes: int):
        node.host.release(nbytes)
        self._pump_host(node)

    # --- parallelizer -----------------------------------------------------------

    def _chunk_size(self, trx: Transceiver) -> int:
        fixed = self.s.protocol.fixed_frame_length
        return (fixed if fixed is not None else trx.flc.current_target) - HEADER_LEN

    def _parallelize(self, node: Node):
        while node.unassigned:
            avail = len(node.unassigned)
            cands = []
            for trx in node.active:
                n = sum(1 for c in trx.outstanding if c.seq != trx.acking_seq)
                if n == 0 or (n == 1 and avail >= self._chunk_size(trx)):
                    cands.append(trx)
            if not cands:
                return
            statuses = [
                TransceiverStatus(
                    trx.index,
                    sum(len(c) for c in trx.outstanding if c.seq != trx.acking_seq),
                    trx.radio.profile.data_rate,
                    trx.state.mode is Mode.BACKOFF,
                )
                for trx in cands
            ]
            want = min(avail, max(self._chunk_size(t) for t in cands))
            pick = next(t for t in cands if t.index == route(want, statuses))
            size = min(avail, self._chunk_size(pick))
            data = bytes(node.unassigned[:size])
            del node.unassigned[:size]
            while node.accept_segments[0][0] <= node.assigned_total:
                node.accept_segments.popleft()
            accepted_at = node.accept_segments[0][1]
            node.assigned_total += size
            chunk = Chunk(node.next_seq, data, reset=node.first_chunk)
            node.first_chunk = False
            node.next_seq = seq_next(node.next_seq)
            node.chunk_info[chunk.seq] = (accepted_at, size)
            pick.outstanding.append(chunk)
            self.log(f"n{node.id}", "assign", f"seq={chunk.seq} len={size} to={pick.role}")
            if pick.relay:
                self.world.schedule(self.now + pick.relay, ("deliver", pick.radio.key, DataAvailable(chunk)))
            else:
                self.ready.append((pick, DataAvailable(chunk)))

    def _flush_ready(self):
        while self.ready:
            trx, event = self.ready.popleft()
            self._feed(trx, event)

    # --- sequencer --------------------------------------------------------------

    def _emit(self, node: Node, released: list[tuple[int, bytes]]):
        peer = self.nodes[node.peer]
        for seq, payload in released:
            node.host.output += payload
            node.last_emit = self.now
            info = peer.chunk_info.pop(seq, None)
            if info is not None:
                node.latencies.append(self.now - info[0])
            self.log(f"n{node.id}", "emit", f"seq={seq} len={len(payload)}")

    def _arm_tick(self, node: Node):
        buf = node.seqbuf
        if buf.held and buf.newest_arrival is not None:
            at = buf.newest_arrival + buf.flush_timeout
            if node.tick_at != at:
                node.tick_at = at
                self.world.schedule(max(at, self.now), ("seq_tick", node.id))

    def _to_sequencer(self, node: Node, frame: Frame, via: Transceiver):
        h = frame.header
        buf = node.seqbuf
        dumps = buf.dumps
        if h.seq_reset and h.frame_seq != node.applied_reset:
            node.applied_reset = h.frame_seq
            if node.seq_started:
                self._emit(node, buf.reset(h.frame_seq))
                for trx in node.trx.values():
                    if trx is not via:
                        self._feed(trx, SequenceReset())
            else:
                buf.expected_seq = h.frame_seq
            node.seq_started = True
        if node.seq_started:
            self._emit(node, buf.insert(h.frame_seq, frame.payload, self.now))
        elif h.frame_seq not in buf.held:
            # nothing of this stream has been ordered yet: hold until its reset frame
            buf.held[h.frame_seq] = frame.payload
            buf.newest_arrival = self.now
        if buf.dumps != dumps:
            self.log(f"n{node.id}", "dump", f"expected={buf.expected_seq}")
        self._arm_tick(node)

    # --- engine glue ------------------------------------------------------------

    def _feed(self, trx: Transceiver, event):
        _, actions = step(trx.state, event, self.now, trx.rng)
        if isinstance(event, FrameReceived) and event.frame.payload:
            if not any(isinstance(a, DeliverToSequencer) for a in actions):
                self.log(trx.label, "dup_discard", f"seq={event.frame.header.frame_seq}")
        for a in actions:
            self._apply(trx, a)

    def _apply(self, trx: Transceiver, a):
        node = trx.node
        radio = trx.radio
        if isinstance(a, StartCs):
            ready = max(self.now, radio.dead_until, trx.defer_until)
            trx.cs_start = ready + radio.profile.timings.rx_to_cs
            end = trx.cs_start + self.world.cs_dwell
            self.log(trx.label, "cs_start", f"window={fmt_time(trx.cs_start)}-{fmt_time(end)}")
            self.world.schedule(end, ("cs", radio.key, a.token))
        elif isinstance(a, StartTx):
            t = radio.profile.timings
            data = encode_frame(a.frame)
            if a.response:
                start = max(self.now, radio.dead_until) + t.tx_to_rx
            else:
                start = max(trx.cs_start + t.cs_to_tx, self.now)
            duration = t.rx_ack if a.frame.is_pure_ack else radio.profile.airtime(len(data))
            tx = self.world.schedule_tx(radio, data, start, duration, meta=a.frame)
            if a.frame.is_pure_ack:
                trx.counters.acks_sent += 1
                # the peer may retune and then transmit without contention; make sure our next
                # carrier sense window opens no later than its earliest start
                retune = t.fs_switch if radio.profile.resynth_after_rx else 0
                trx.defer_until = tx.end + retune + t.cs_to_tx
            else:
                trx.counters.sent += 1
            kind = "tx_resp" if a.response else "tx"
            self.log(trx.label, kind, f"{_describe(a.frame)} on={fmt_time(tx.start)}-{fmt_time(tx.end)}")
            self.world.schedule(tx.end, ("txend", tx))
        elif isinstance(a, StartTimer):
            self.world.schedule(self.now + a.duration, ("timer", radio.key, a.timer_id))
            if a.timer_id.startswith("backoff"):
                self.log(trx.label, "backoff", f"attempt={trx.state.in_flight.attempts} wait_us={fmt_time(a.duration)}")
        elif isinstance(a, CancelTimer):
            pass
        elif isinstance(a, DeliverToSequencer):
            if trx.relay:
                self.relays_pending += 1
                self.world.schedule(self.now + trx.relay, ("relay_rx", node.id, radio.key, a.frame))
            else:
                self._to_sequencer(node, a.frame, trx)
        elif isinstance(a, EscalateToOtherTransceiver):
            trx.outstanding = [c for c in trx.outstanding if c.seq != a.chunk.seq]
            trx.counters.escalated += 1
            other = next((t for t in node.active if t is not trx), None)
            if other is None:
                self.log(trx.label, "drop", f"seq={a.chunk.seq} reason=no_alternate")
                trx.counters.dropped += 1
                self._release(node, len(a.chunk))
                return
            self.log(trx.label, "escalate", f"seq={a.chunk.seq} to={other.role}")
            other.outstanding.insert(0, a.chunk)
            self.world.schedule(self.now + self.relay, ("deliver", other.radio.key, DataAvailable(a.chunk)))
        elif isinstance(a, DropPayload):
            trx.outstanding = [c for c in trx.outstanding if c.seq != a.chunk.seq]
            trx.counters.dropped += 1
            self.log(trx.label, "drop", f"seq={a.chunk.seq}")
            self._release(node, len(a.chunk))
        elif isinstance(a, SwitchModulation):
            ready = self.world.switch_modulation(radio, a.profile, self.now)
            trx.flc.set_max(trx.cap_for(a.profile))
            trx.lq = LinkQuality(rssi_ema=trx.lq.rssi_ema)
            node.shifts += 1
            self.shift_log.append((self.now, trx.label, a.profile.name))
            self.log(trx.label, "shift", f"to={a.profile.name} ready={fmt_time(ready)}")
        elif isinstance(a, ReportOutcome):
            adapt.update_link_quality(trx.lq, a.outcome, a.rssi)
            adapt.next_frame_length(trx.flc, a.outcome)
            if a.outcome == adapt.ACK:
                trx.counters.acked += 1
                trx.outstanding = [c for c in trx.outstanding if c.seq != a.chunk.seq]
                self.log(trx.label, "acked", f"seq={a.chunk.seq}")
                self._release(node, len(a.chunk))
            else:
                trx.counters.nacked += 1
                self.log(trx.label, "nack", f"seq={a.chunk.seq}")
            self._consider_shift(trx)
        elif isinstance(a, adapt.ShiftAbandoned):
            trx.lq.reset_streaks()
            self.log(trx.label, "shift_abandoned")
        else:
            raise TypeError(f"unhandled action {a!r}")

    def _consider_shift(self, trx: Transceiver):
        if not self.s.protocol.modulation_shifting:
            return
        hs = trx.state.hs
        if hs.role is not adapt.Role.IDLE or hs.post_shift_probation:
            return
        d = adapt.shift_decision(trx.lq, trx.state.profile, margin_db=self.s.protocol.upshift_margin_db)
        if d != adapt.STAY:
            self.log(trx.label, "shift_request", f"dir={d}")
            self._feed(trx, ShiftCommand(d))

    # --- event dispatch ---------------------------------------------------------

    def _on_txend(self, tx: Transmission):
        sender = self.by_radio[tx.radio.key]
        self._feed(sender, TxDone())
        frame: Frame = tx.meta
        for radio in self.world.listeners(tx):
            trx = self.by_radio[radio.key]
            if not trx.enabled:
                continue
            outcome, rssi = self.world.reception(radio, tx)
            if outcome == DELIVERED:
                try:
                    got = decode_frame(tx.data)
                except FrameError:
                    self._feed(trx, FrameCorrupted())
                    continue
                h = got.header
                rssi_s = f"{rssi:.1f}"
                self.log(trx.label, "rx", f"{_describe(got)} rssi={rssi_s}")
                if got.is_pure_ack and not (h.mod_shift_req or h.mod_shift_ack) and radio.profile.resynth_after_rx:
                    self.world.charge_dead_time(radio, self.now, radio.profile.timings.fs_switch)
                fl = trx.state.in_flight
                if fl is not None and fl.transmitted and h.ack_seq == fl.chunk.seq and not trx.state.pending:
                    # the transceiver frees up now: give it the next chunk in time to piggyback
                    trx.acking_seq = fl.chunk.seq
                    self._parallelize(trx.node)
                    trx.acking_seq = None
                    self._flush_ready()
                self._feed(trx, FrameReceived(got, rssi))
            elif outcome == CORRUPTED:
                raw = bytearray(tx.data)
                # the preamble only trains the receiver; damage is modelled from the sync word on
                bit = self.world.rng.randrange(16, len(raw) * 8)
                raw[bit // 8] ^= 1 << (bit % 8)
                try:
                    decode_frame(bytes(raw))
                    reason = "undetected"
                except FrameError as e:
                    reason = type(e).__name__
                self.log(trx.label, "rx_corrupt", f"{_describe(frame)} error={reason}")
                self._feed(trx, FrameCorrupted())
            else:
                self.log(trx.label, "rx_miss", _describe(frame))

    def _dispatch(self, item):
        kind = item[0]
        if kind == "txend":
            self._on_txend(item[1])
        elif kind == "start":
            for node in self.nodes.values():
                for trx in node.active:
                    self._feed(trx, Start())
        elif kind == "offer":
            node = self.nodes[item[1]]
            self.offers_left -= 1
            node.pending_input.append(item[2])
            node.input_data += item[2]
            if node.first_offer is None:
                node.first_offer = self.now
            self.log(f"n{node.id}", "offer", f"len={len(item[2])}")
            self._pump_host(node)
        elif kind == "host_retry":
            node = self.nodes[item[1]]
            if node.retry_at == self.now:
                node.retry_at = None
            self._pump_host(node)
        elif kind == "deliver":
            self._feed(self.by_radio[item[1]], item[2])
        elif kind == "cs":
            trx = self.by_radio[item[1]]
            clear = self.world.carrier_sense(trx.radio, trx.cs_start, trx.cs_start + self.world.cs_dwell)
            if trx.state.mode is Mode.SENSING and item[2] == trx.state.cs_token:
                self.log(trx.label, "cs_clear" if clear else "cs_busy")
                if not clear:
                    trx.counters.cs_busy += 1
            self._feed(trx, CsResult(clear, item[2]))
        elif kind == "timer":
            trx, timer_id = self.by_radio[item[1]], item[2]
            if trx.state.timers.get(timer_id.split("#", 1)[0]) != timer_id:
                return
            end = self.world.reception_in_progress(trx.radio, self.now)
            if end is not None and end > self.now:
                self.world.schedule(end, item)
                return
            self.log(trx.label, "timeout", timer_id.split("#", 1)[0])
            self._feed(trx, TimerFired(timer_id))
        elif kind == "relay_rx":
            node = self.nodes[item[1]]
            self.relays_pending -= 1
            self._to_sequencer(node, item[3], self.by_radio[item[2]])
        elif kind == "seq_tick":
            node = self.nodes[item[1]]
            dumps = node.seqbuf.dumps
            self._emit(node, node.seqbuf.tick(self.now))
            if node.seqbuf.dumps != dumps:
                self.log(f"n{node.id}", "dump", f"expected={node.seqbuf.expected_seq} reason=timeout")
            self._arm_tick(node)
        else:
            raise ValueError(f"unknown queue item {kind!r}")

    def _idle(self) -> bool:
        if self.offers_left or self.relays_pending:
            return False
        for node in self.nodes.values():
            if node.pending_input or node.unassigned or node.host.buffered or node.seqbuf.held:
                return False
        return True

    def run(self) -> tuple[MetricsReport, list[str]]:
        self.world.schedule(0, ("start",))
        while True:
            t = self.world.peek_time()
            if t is None or t > self.duration:
                break
            _, batch = self.world.advance()
            # receptions complete before anything else scheduled for the same instant
            batch.sort(key=lambda item: item[0] != "txend")
            for item in batch:
                self._dispatch(item)
                self._flush_ready()
            if self.stop_when_idle and self._idle():
                break
        return self._report(), self.lines

    def _report(self) -> MetricsReport:
        report = MetricsReport(self.s.name, self.s.seed, shift_log=list(self.shift_log), end_time_ns=self.now)
        for node in self.nodes.values():
            report.dumps[node.id] = node.seqbuf.dumps
            for trx in node.trx.values():
                report.transceivers[trx.label] = trx.counters
        for src in self.nodes.values():
            if not src.input_data:
                continue
            dst = self.nodes[src.peer]
            out = bytes(dst.host.output)
            delivered = len(out)
            span = (dst.last_emit or 0) - (src.first_offer or 0)
            goodput = delivered * 8 * S / span if delivered and span > 0 else 0.0
            counters = [t.counters for t in src.trx.values()]
            acked = sum(c.acked for c in counters)
            nacked = sum(c.nacked for c in counters)
            report.directions.append(
                DirectionMetrics(
                    src=src.id,
                    dst=dst.id,
                    offered_bytes=len(src.input_data),
                    delivered_bytes=delivered,
                    goodput_bps=goodput,
                    latencies_ns=list(dst.latencies),
                    fer=nacked / (acked + nacked) if acked + nacked else 0.0,
                    retries=sum(c.nacked + c.cs_busy for c in counters),
                    drops=sum(c.dropped for c in counters),
                    shifts=src.shifts,
                    intact=out == bytes(src.input_data[:delivered]),
                )
            )
        return report


def run_scenario(scenario: Scenario, trace: bool = True) -> tuple[MetricsReport, list[str]]:
    """Run ``scenario`` to completion; returns the metrics and the event trace lines."""
    return Runner(scenario, trace=trace).run()


def trace_text(lines: list[str]) -> str:
    return "time_us,node,event,detail\n" + "".join(line + "\n" for line in lines)
