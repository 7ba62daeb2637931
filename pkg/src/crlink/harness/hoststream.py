"""Host-side byte stream endpoint with hardware-style flow control."""
from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_CAPACITY = 16 * 1024
# token bucket depth for the optional host rate limit, in bytes
RATE_BUCKET_BYTES = 64


@dataclass
class HostStream:
    """Bounded input buffer plus an unbounded output accumulator.

    Bytes stay counted against ``capacity`` from the moment they are accepted
    until the protocol releases them (acknowledged or dropped), so a full
    buffer refuses writes instead of losing data.
    """

    capacity: int = DEFAULT_CAPACITY
    rate_limit_bps: float | None = None
    buffered: int = 0
    output: bytearray = field(default_factory=bytearray)
    tokens: float = RATE_BUCKET_BYTES
    last_refill: int = 0  # ns

    @property
    def free(self) -> int:
        return self.capacity - self.buffered

    @property
    def backpressure(self) -> bool:
        return self.buffered >= self.capacity

    def _refill(self, now: int):
        if self.rate_limit_bps is None:
            return
        if now > self.last_refill:
            gained = (now - self.last_refill) * self.rate_limit_bps / 8e9
            self.tokens = min(RATE_BUCKET_BYTES, self.tokens + gained)
            self.last_refill = now

    def allowance(self, now: int = 0) -> int:
        """Bytes a write at ``now`` could place in the buffer."""
        room = self.free
        if self.rate_limit_bps is not None:
            self._refill(now)
            room = min(room, int(self.tokens))
        return max(room, 0)

    def wait_for(self, nbytes: int, now: int) -> int:
        """Time (ns) at which the rate limiter will allow ``nbytes`` more bytes."""
        if self.rate_limit_bps is None:
            return now
        self._refill(now)
        nbytes = min(nbytes, RATE_BUCKET_BYTES)
        missing = nbytes - self.tokens
        if missing <= 0:
            return now
        return now + max(1, -int(-missing * 8e9 // self.rate_limit_bps))

    def release(self, nbytes: int):
        if nbytes > self.buffered:
            raise ValueError("releasing more bytes than are buffered")
        self.buffered -= nbytes


def host_write(stream: HostStream, data: bytes, now: int = 0) -> int:
    """Accept as many leading bytes of ``data`` as flow control allows."""
    n = min(len(data), stream.allowance(now))
    stream.buffered += n
    if stream.rate_limit_bps is not None:
        stream.tokens -= n
    return n
