import sys
from pathlib import Path

import pytest

GOLDEN = Path(__file__).parent / "golden"
sys.path.insert(0, str(GOLDEN))
from regen import SCENARIOS, render  # noqa: E402


@pytest.mark.parametrize("name", SCENARIOS)
def test_trace_matches_checked_in_file(name):
    expected = (GOLDEN / f"{name}.trace.csv").read_text()
    assert render(name) == expected


@pytest.mark.parametrize("name", SCENARIOS)
def test_trace_is_byte_identical_across_runs(name):
    assert render(name).encode() == render(name).encode()


def events(name):
    rows = (GOLDEN / f"{name}.trace.csv").read_text().splitlines()[1:]
    return [r.split(",", 3) for r in rows]


def test_clean_ack_shape():
    ev = [(who, e) for _, who, e, _ in events("clean_ack")]
    assert ("n0.main", "tx") in ev and ("n1.main", "tx_resp") in ev and ("n0.main", "acked") in ev
    assert not any(e in ("nack", "backoff") for _, e in ev)


def test_cs_busy_shape():
    ev = [e for _, _, e, _ in events("cs_busy_retry")]
    assert ev.index("cs_busy") < ev.index("backoff") < ev.index("cs_clear") < ev.index("acked")


def test_lost_ack_shape():
    ev = events("lost_ack")
    kinds = [e for _, _, e, _ in ev]
    assert "rx_corrupt" in kinds and "nack" in kinds and "dup_discard" in kinds
    assert sum(1 for _, who, e, _ in ev if who == "n1" and e == "emit") == 1


def test_piggyback_shape():
    combined = [d for _, who, e, d in events("piggyback") if who == "n1.main" and e == "tx_resp"]
    assert combined and combined[0].startswith("seq=0 ack=0 len=400")


def test_reroute_shape():
    ev = events("reroute_helper")
    assert sum(1 for _, who, e, _ in ev if who == "n0.main" and e == "nack") == 5
    assert any(who == "n0.main" and e == "escalate" for _, who, e, _ in ev)
    assert any(who == "n0.helper" and e == "acked" for _, who, e, _ in ev)
