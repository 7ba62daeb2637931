"""Modulation profiles and their measured transceiver delays.

All durations are integer nanoseconds so simulated event times add up
exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from crlink.wire import MAX_DECLARED_LEN, encoded_length

US = 1_000
MS = 1_000_000
S = 1_000_000_000

# encoded size of a frame whose declared length is the 1000-byte maximum
FULL_FRAME_BYTES = encoded_length(MAX_DECLARED_LEN - 9)


class Band(str, Enum):
    SUB_GHZ = "915MHz"
    ISM_2G4 = "2.4GHz"


@dataclass(frozen=True)
class TimingProfile:
    rx_to_cs: int
    cs_to_tx: int
    tx_full: int
    tx_to_rx: int
    rx_ack: int
    fs_switch: int

    def exchange(self) -> int:
        """One unidirectional data + ACK exchange starting from idle RX."""
        return self.rx_to_cs + self.cs_to_tx + self.tx_full + self.tx_to_rx + self.rx_ack


@dataclass(frozen=True)
class ModulationProfile:
    name: str
    band: Band
    data_rate: int  # bits/s
    sensitivity: float  # dBm
    max_frame_length: int  # declared bytes (header + payload)
    timings: TimingProfile
    upshift_after: int | None  # back-to-back successes needed to go up
    # the radio re-synthesizes after completing an exchange (ACK reception)
    resynth_after_rx: bool

    def airtime(self, nbytes: int) -> int:
        """Air time of an encoded frame, scaled from the measured full-frame time."""
        return round(self.timings.tx_full * nbytes / FULL_FRAME_BYTES)

    def __str__(self):
        return self.name


P915_200K = ModulationProfile(
    name="915M_200K",
    band=Band.SUB_GHZ,
    data_rate=200_000,
    sensitivity=-100.0,
    max_frame_length=250,
    timings=TimingProfile(240_700, 213_100, 40_930_000, 80_700, 2_610_000, 392_100),
    upshift_after=10,
    resynth_after_rx=False,
)
P915_1M = ModulationProfile(
    name="915M_1M",
    band=Band.SUB_GHZ,
    data_rate=1_000_000,
    sensitivity=-93.0,
    max_frame_length=1000,
    timings=TimingProfile(231_800, 214_700, 8_110_000, 82_900, 505_600, 562_500),
    upshift_after=None,
    resynth_after_rx=False,
)
P2G4_1M = ModulationProfile(
    name="2G4_1M",
    band=Band.ISM_2G4,
    data_rate=1_000_000,
    sensitivity=-94.0,
    max_frame_length=1000,
    timings=TimingProfile(234_100, 212_400, 8_120_000, 82_000, 506_600, 633_100),
    upshift_after=20,
    resynth_after_rx=True,
)
P2G4_2M = ModulationProfile(
    name="2G4_2M",
    band=Band.ISM_2G4,
    data_rate=2_000_000,
    sensitivity=-89.0,
    max_frame_length=1000,
    timings=TimingProfile(459_200, 213_800, 4_080_000, 80_500, 696_800, 581_300),
    upshift_after=None,
    resynth_after_rx=True,
)

PROFILES: dict[str, ModulationProfile] = {
    p.name: p for p in (P915_200K, P915_1M, P2G4_1M, P2G4_2M)
}

LADDERS: dict[Band, tuple[ModulationProfile, ...]] = {
    Band.SUB_GHZ: (P915_200K, P915_1M),
    Band.ISM_2G4: (P2G4_1M, P2G4_2M),
}

BAND_RANGES_HZ = {
    Band.SUB_GHZ: (902e6, 928e6),
    Band.ISM_2G4: (2400e6, 2483.5e6),
}


def ladder_for(profile: ModulationProfile) -> tuple[ModulationProfile, ...]:
    return LADDERS[profile.band]


def lowest_rung(profile: ModulationProfile) -> ModulationProfile:
    return ladder_for(profile)[0]


def higher_rung(profile: ModulationProfile) -> ModulationProfile | None:
    ladder = ladder_for(profile)
    i = ladder.index(profile)
    return ladder[i + 1] if i + 1 < len(ladder) else None


def lower_rung(profile: ModulationProfile) -> ModulationProfile | None:
    ladder = ladder_for(profile)
    i = ladder.index(profile)
    return ladder[i - 1] if i > 0 else None


def band_of_frequency(freq_hz: float) -> Band | None:
    for band, (lo, hi) in BAND_RANGES_HZ.items():
        if lo <= freq_hz <= hi:
            return band
    return None
