import math
from fractions import Fraction

import pytest

from crlink import models
from crlink.channel import FreeSpace, TwoRayGround, received_power
from crlink.models import DomainError, RangeParams, ThroughputTerms
from crlink.profiles import PROFILES

# published ceilings, bits/s
UNI = {"915M_200K": 181_510, "915M_1M": 874_794, "2G4_1M": 817_311, "2G4_2M": 1_308_986}
BI = {"915M_200K": 97_093, "915M_1M": 479_257, "2G4_1M": 463_094, "2G4_2M": 832_441}


def test_on_air_time_is_exact():
    assert models.on_air_time(250, 200_000) == Fraction(1, 100)
    assert models.on_air_time(1000, 1_000_000) == Fraction(8, 1000)
    assert models.on_air_time(1000, 2_000_000) == Fraction(4, 1000)


def test_on_air_time_rejects_zero_rate():
    with pytest.raises(DomainError):
        models.on_air_time(10, 0)


def test_plain_unidirectional_sum_by_hand():
    t = PROFILES["915M_200K"].timings
    total_s = (240.7 + 213.1 + 40930 + 80.7 + 2610) * 1e-6
    assert models.throughput_unidirectional(t) == pytest.approx(8000 / total_s, rel=1e-12)


@pytest.mark.parametrize("name", ["915M_200K", "915M_1M"])
def test_sub_ghz_unidirectional_without_extra_terms(name):
    got = models.throughput_unidirectional(PROFILES[name].timings)
    assert got == pytest.approx(UNI[name], rel=1e-3)


@pytest.mark.parametrize("name", ["2G4_1M", "2G4_2M"])
def test_2g4_unidirectional_needs_fs(name):
    t = PROFILES[name].timings
    plain = models.throughput_unidirectional(t)
    assert abs(plain - UNI[name]) / UNI[name] > 0.01
    assert models.throughput_unidirectional(t, ThroughputTerms(include_fs=True)) == pytest.approx(UNI[name], rel=1e-3)


def test_bidirectional_rows():
    t200 = PROFILES["915M_200K"].timings
    assert models.throughput_bidirectional(t200) == pytest.approx(BI["915M_200K"], rel=1e-3)
    t1m = PROFILES["915M_1M"].timings
    assert models.throughput_bidirectional(t1m) == pytest.approx(BI["915M_1M"], rel=5e-3)
    terms = ThroughputTerms(include_ack_rx_in_bidir=True)
    for name in ("2G4_1M", "2G4_2M"):
        got = models.throughput_bidirectional(PROFILES[name].timings, terms)
        assert got == pytest.approx(BI[name], rel=1e-3)


def test_spatial_efficiency():
    assert models.spatial_efficiency(500_000, 1_000_000) == 0.5
    assert models.spatial_efficiency(500_000, 1_000_000, bidirectional=True) == 1.0
    with pytest.raises(DomainError):
        models.spatial_efficiency(1, 0)


def test_throughput_table_reconciled_rows():
    rows = {r["modulation"]: r for r in models.throughput_table()}
    for name, value in UNI.items():
        assert rows[name]["uni_bps"] == pytest.approx(value, rel=1e-3)


def test_link_budget_and_range_inverse():
    p = RangeParams(sensitivity=-100, frequency=915e6)
    assert models.link_budget(p) == pytest.approx(114.0)
    for model in (TwoRayGround(), TwoRayGround(freq_correction=True), FreeSpace()):
        d = models.solve_range(p, model)
        rx = received_power(p.tx_power, (p.antenna_gain, p.antenna_gain), d, p.frequency, model)
        assert rx == pytest.approx(p.sensitivity, abs=1e-9)


def test_two_ray_915_rows():
    # 114 dB budget over 40 log10(d): d = 10**(114/40)
    p = RangeParams(sensitivity=-100, frequency=915e6)
    assert models.solve_range(p, TwoRayGround()) == pytest.approx(10 ** (114 / 40))


def test_nonpositive_budget_is_domain_error():
    with pytest.raises(DomainError):
        models.solve_range(RangeParams(sensitivity=20, frequency=915e6), FreeSpace())


def test_range_table_shape():
    rows = models.range_table()
    assert [r["modulation"] for r in rows] == ["915M_200K", "915M_1M", "2G4_1M", "2G4_2M"]
    assert all(r["range_los_m"] > r["range_grm_m"] > 0 for r in rows)
    assert all(math.isfinite(r["range_grm_m"]) for r in rows)
