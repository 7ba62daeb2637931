"""Closed-form calculators: air time, throughput ceilings, spatial efficiency, range."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from crlink.channel import FSPL_CONSTANT_DB, REFERENCE_FREQ_HZ, FreeSpace, PropagationModel, TwoRayGround
from crlink.profiles import PROFILES, Band, TimingProfile


class DomainError(ValueError):
    pass


FULL_FRAME_BITS = 8000


def on_air_time(length: int, rate: int | Fraction) -> Fraction:
    """Seconds to transmit ``length`` bytes at ``rate`` bits/s, exactly."""
    if rate <= 0:
        raise DomainError("data rate must be positive")
    return Fraction(length * 8) / Fraction(rate)


@dataclass(frozen=True)
class ThroughputTerms:
    include_fs: bool = False
    include_ack_rx_in_bidir: bool = False


def throughput_unidirectional(t: TimingProfile, terms: ThroughputTerms = ThroughputTerms()) -> float:
    total_ns = t.rx_to_cs + t.cs_to_tx + t.tx_full + t.tx_to_rx + t.rx_ack
    if terms.include_fs:
        total_ns += t.fs_switch
    return FULL_FRAME_BITS * 1e9 / total_ns


def throughput_bidirectional(t: TimingProfile, terms: ThroughputTerms = ThroughputTerms()) -> float:
    total_ns = t.rx_to_cs + t.cs_to_tx + 2 * t.tx_full + t.tx_to_rx
    if terms.include_ack_rx_in_bidir:
        total_ns += t.rx_ack
    return FULL_FRAME_BITS * 1e9 / total_ns


def spatial_efficiency(throughput: float, rate: float, bidirectional: bool = False) -> float:
    if rate <= 0:
        raise DomainError("data rate must be positive")
    eff = throughput / rate
    return 2 * eff if bidirectional else eff


def reconciled_terms(band: Band) -> ThroughputTerms:
    """Term flags under which the published 2.4 GHz ceilings are reproduced."""
    if band is Band.ISM_2G4:
        return ThroughputTerms(include_fs=True, include_ack_rx_in_bidir=True)
    return ThroughputTerms()


@dataclass(frozen=True)
class RangeParams:
    sensitivity: float
    frequency: float
    tx_power: float = 20.0
    antenna_gain: float = -3.0
    tx_height: float = 1.0
    rx_height: float = 1.0
    noise_floor: float = -125.0


def link_budget(params: RangeParams) -> float:
    return params.tx_power + 2 * params.antenna_gain - params.sensitivity


def solve_range(params: RangeParams, model: PropagationModel) -> float:
    """Distance in meters at which received power falls to the sensitivity."""
    budget = link_budget(params)
    if budget <= 0:
        raise DomainError(f"link budget {budget:.2f} dB is not positive")
    if isinstance(model, TwoRayGround):
        corr = 20 * math.log10(params.frequency / REFERENCE_FREQ_HZ) if model.freq_correction else 0.0
        exponent = (budget + 20 * math.log10(model.ht * model.hr) - corr) / 40
        return 10**exponent
    if isinstance(model, FreeSpace):
        exponent = (budget - 20 * math.log10(params.frequency) + FSPL_CONSTANT_DB) / 20
        return 10**exponent
    raise TypeError(f"unknown propagation model {model!r}")


# (profile name, carrier frequency) rows in the order of the published range table
RANGE_ROWS = (
    ("915M_200K", 915e6),
    ("915M_1M", 915e6),
    ("2G4_1M", 2440e6),
    ("2G4_2M", 2440e6),
)


def range_table(freq_correction: bool = False) -> list[dict]:
    rows = []
    for name, freq in RANGE_ROWS:
        params = RangeParams(sensitivity=PROFILES[name].sensitivity, frequency=freq)
        rows.append(
            {
                "modulation": name,
                "frequency_hz": freq,
                "sensitivity_dbm": params.sensitivity,
                "range_grm_m": solve_range(params, TwoRayGround(1.0, 1.0, freq_correction)),
                "range_los_m": solve_range(params, FreeSpace()),
            }
        )
    return rows


def throughput_table(terms: ThroughputTerms | None = None) -> list[dict]:
    """Throughput ceilings and efficiencies for every profile.

    ``terms=None`` applies the per-band reconciliation.
    """
    rows = []
    for profile in PROFILES.values():
        t = terms if terms is not None else reconciled_terms(profile.band)
        uni = throughput_unidirectional(profile.timings, t)
        bi = throughput_bidirectional(profile.timings, t)
        rows.append(
            {
                "modulation": profile.name,
                "uni_bps": uni,
                "bi_bps": bi,
                "uni_efficiency": spatial_efficiency(uni, profile.data_rate),
                "bi_efficiency": spatial_efficiency(bi, profile.data_rate, bidirectional=True),
            }
        )
    return rows
