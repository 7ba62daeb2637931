"""Parallelizer (outbound routing) and Sequencer (inbound reordering)."""
from __future__ import annotations

from dataclasses import dataclass, field

SEQ_MOD = 1 << 32
_HALF = 1 << 31


def seq_next(seq: int) -> int:
    return (seq + 1) % SEQ_MOD


def seq_lt(a: int, b: int) -> bool:
    """Serial-number ``a < b`` modulo 2**32."""
    return 0 < (b - a) % SEQ_MOD < _HALF


def seq_key(seq: int, base: int) -> int:
    """Sort key placing ``seq`` relative to ``base`` in serial order."""
    return (seq - base) % SEQ_MOD


@dataclass(frozen=True)
class Chunk:
    seq: int
    data: bytes
    reset: bool = False
    escalated: bool = False

    def __len__(self):
        return len(self.data)


@dataclass
class TransceiverStatus:
    id: int
    backlog_bytes: int
    data_rate: int
    blocked: bool = False

    def drain_time(self, extra: int = 0) -> float:
        return (self.backlog_bytes + extra) * 8 / self.data_rate


def route(chunk_len: int, statuses: list[TransceiverStatus]) -> int:
    """Pick the transceiver that would finish sending ``chunk_len`` more bytes first."""
    if not statuses:
        raise ValueError("no transceivers to route to")
    pool = [s for s in statuses if not s.blocked] or statuses
    best = min(pool, key=lambda s: (s.drain_time(chunk_len), s.id))
    return best.id


@dataclass
class SequencerBuffer:
    """Reorders frames by sequence number and drops late duplicates.

    ``insert`` and ``tick`` return the (seq, payload) pairs released to the
    host, in output order.
    """

    expected_seq: int = 0
    capacity: int = 32
    flush_timeout: int = 300_000_000  # ns
    held: dict[int, bytes] = field(default_factory=dict)
    newest_arrival: int | None = None
    dumps: int = 0

    def _release_run(self) -> list[tuple[int, bytes]]:
        out = []
        while self.expected_seq in self.held:
            out.append((self.expected_seq, self.held.pop(self.expected_seq)))
            self.expected_seq = seq_next(self.expected_seq)
        return out

    def _dump(self) -> list[tuple[int, bytes]]:
        ordered = sorted(self.held, key=lambda s: seq_key(s, self.expected_seq))
        out = [(s, self.held[s]) for s in ordered]
        self.held.clear()
        if ordered:
            self.expected_seq = seq_next(ordered[-1])
            self.dumps += 1
        return out

    def insert(self, seq: int, payload: bytes, now: int) -> list[tuple[int, bytes]]:
        if seq == self.expected_seq:
            self.newest_arrival = now
            self.expected_seq = seq_next(seq)
            return [(seq, payload)] + self._release_run()
        if seq_lt(seq, self.expected_seq) or seq in self.held:
            return []
        self.newest_arrival = now
        if len(self.held) >= self.capacity:
            self.held[seq] = payload
            return self._dump()
        self.held[seq] = payload
        return []

    def tick(self, now: int) -> list[tuple[int, bytes]]:
        if self.held and self.newest_arrival is not None and now - self.newest_arrival >= self.flush_timeout:
            return self._dump()
        return []

    def reset(self, seq: int) -> list[tuple[int, bytes]]:
        """Peer restarted its sequence space at ``seq``: flush, then expect ``seq``."""
        out = self._dump() if self.held else []
        self.expected_seq = seq
        return out


def sequencer_insert(buf: SequencerBuffer, seq: int, payload: bytes, now: int):
    out = buf.insert(seq, payload, now)
    return buf, out


def sequencer_tick(buf: SequencerBuffer, now: int):
    out = buf.tick(now)
    return buf, out
