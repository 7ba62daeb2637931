import json

import pytest

from crlink.cli import main
from crlink.harness import (
    HostStream,
    ParseError,
    emit_metrics,
    host_write,
    load_scenario,
    parse_scenario,
    run_scenario,
)
from crlink.harness.metrics import CSV_COLUMNS, MetricsReport
from crlink.harness.runner import trace_text
from helpers import build, single_link

MINIMAL = '{"duration_s": 1.0}'


def test_minimal_scenario_defaults():
    s = parse_scenario(MINIMAL)
    assert [n.id for n in s.nodes] == [0, 1]
    assert s.nodes[0].main.modulation == "2G4_1M"
    assert s.nodes[0].helper.modulation == "915M_200K"
    assert s.protocol.max_retries == 5
    assert s.protocol.relay_delay_ms == 1.0
    assert s.host_rate_limit_bps is None


def test_unknown_key_is_rejected_with_field():
    with pytest.raises(ParseError) as e:
        parse_scenario('{\n  "duration_s": 1,\n  "bogus": 3\n}')
    assert e.value.field == "bogus"
    assert e.value.line == 3


def test_jammer_on_unknown_channel():
    doc = {"duration_s": 1, "jammers": [{"channel": "nope", "duration_s": 1}]}
    with pytest.raises(ParseError, match="unknown channel"):
        parse_scenario(json.dumps(doc))


def test_bad_json_reports_line():
    with pytest.raises(ParseError) as e:
        parse_scenario('{\n"duration_s": 1,\n}')
    assert e.value.line == 3


@pytest.mark.parametrize(
    "patch",
    [
        {"duration_s": 0},
        {"traffic": [{"kind": "burst", "node": 5, "bytes": 10}]},
        {"nodes": [{"id": 0}, {"id": 0}]},
        {"nodes": [{"id": 0, "main": {"channel": "main", "modulation": "915M_1M"}}, {"id": 1}]},
        {"channels": {"main": {"frequency_hz": 5.8e9}, "helper": {"frequency_hz": 915e6}}},
    ],
)
def test_invalid_scenarios(patch):
    doc = {"duration_s": 1}
    doc.update(patch)
    with pytest.raises(ParseError):
        parse_scenario(json.dumps(doc))


def test_persistent_main_jammer_parses_and_reroutes():
    doc = {
        "duration_s": 2,
        "jammers": [{"channel": "main", "duration_s": 2, "power_dbm": -40, "nodes": [1]}],
        "traffic": [{"kind": "burst", "node": 0, "bytes": 3000}],
    }
    report, _ = run_scenario(build(doc), trace=False)
    d = report.direction(0)
    assert d.delivered_bytes == 3000 and d.intact
    assert report.transceivers["n0.helper"].acked > 0
    assert report.transceivers["n0.main"].acked == 0


def test_host_write_clamps_to_capacity_and_frees_on_release():
    hs = HostStream()
    assert host_write(hs, bytes(20 * 1024)) == 16 * 1024
    assert hs.backpressure
    assert host_write(hs, b"more") == 0
    hs.release(1000)
    assert host_write(hs, bytes(5000)) == 1000


def test_host_rate_limit_throttles():
    hs = HostStream(rate_limit_bps=1_218_000)
    assert host_write(hs, bytes(1000), now=0) == 64
    assert host_write(hs, bytes(1000), now=0) == 0
    at = hs.wait_for(64, 0)
    # 64 bytes at 1.218 Mbps
    assert at == pytest.approx(64 * 8 / 1.218e6 * 1e9, abs=2)
    assert host_write(hs, bytes(1000), now=at) == 64


def test_empty_report_is_header_only():
    assert emit_metrics(MetricsReport("x", 0)) == ",".join(CSV_COLUMNS) + "\n"


def test_zero_traffic_gives_empty_report():
    doc = {"duration_s": 1, "traffic": [{"kind": "burst", "node": 0, "bytes": 0}]}
    report, _ = run_scenario(build(doc))
    assert report.directions == []


def test_lossless_burst_delivers_everything():
    doc = {"duration_s": 2, "traffic": [{"kind": "burst", "node": 0, "bytes": 20000}]}
    report, _ = run_scenario(build(doc), trace=False)
    d = report.direction(0)
    assert d.delivered_bytes == d.offered_bytes == 20000 and d.intact
    line = emit_metrics(report).splitlines()[1].split(",")
    assert line[3] == line[4] == "20000"


def test_bidirectional_random_data_round_trip():
    doc = {
        "duration_s": 5,
        "traffic": [{"kind": "burst", "node": 0, "bytes": 30000}, {"kind": "burst", "node": 1, "bytes": 30000}],
    }
    report, _ = run_scenario(build(doc), trace=False)
    for d in report.directions:
        assert d.delivered_bytes == 30000 and d.intact


def test_offered_load_above_capacity_only_slows_acceptance():
    doc = single_link("main", "2G4_1M", duration_s=3)
    doc["traffic"] = [{"kind": "stream", "node": 0, "rate_bps": 4e6, "stop_s": 0.2, "write_bytes": 512}]
    report, _ = run_scenario(build(doc), trace=False)
    d = report.direction(0)
    assert d.offered_bytes == 100_352
    assert d.delivered_bytes == d.offered_bytes and d.intact


def test_capture_replay(tmp_path):
    blob = bytes(range(256)) * 20
    (tmp_path / "cap.bin").write_bytes(blob)
    doc = {"duration_s": 2, "traffic": [{"kind": "capture", "node": 1, "path": "cap.bin"}]}
    (tmp_path / "s.json").write_text(json.dumps(doc))
    report, _ = run_scenario(load_scenario(tmp_path / "s.json"), trace=False)
    assert report.direction(1).delivered_bytes == len(blob) and report.direction(1).intact


def test_run_is_deterministic():
    doc = {
        "duration_s": 2,
        "seed": 11,
        "channels": {"main": {"frequency_hz": 2440e6, "frame_error_rate": 0.2}, "helper": {"frequency_hz": 915e6}},
        "traffic": [{"kind": "burst", "node": 0, "bytes": 9000}, {"kind": "burst", "node": 1, "bytes": 4000}],
    }
    a = run_scenario(build(doc))
    b = run_scenario(build(doc))
    assert emit_metrics(a[0]) == emit_metrics(b[0])
    assert trace_text(a[1]) == trace_text(b[1])


def test_cli_simulate_and_exit_codes(tmp_path, capsys):
    good = tmp_path / "ok.json"
    good.write_text(json.dumps({"duration_s": 1, "traffic": [{"kind": "burst", "node": 0, "bytes": 500}]}))
    trace = tmp_path / "t.csv"
    metrics = tmp_path / "m.csv"
    assert main(["simulate", str(good), "--trace", str(trace), "--metrics", str(metrics), "--seed", "3"]) == 0
    assert trace.read_text().startswith("time_us,node,event,detail\n")
    assert metrics.read_text().splitlines()[1].startswith("scenario,3,0->1,500,500")
    bad = tmp_path / "bad.json"
    bad.write_text('{"duration_s": 1, "extra": 1}')
    assert main(["simulate", str(bad)]) == 2
    assert "extra" in capsys.readouterr().err


def test_cli_calculators(capsys):
    assert main(["throughput", "--include-fs"]) == 0
    out = capsys.readouterr().out
    assert "2G4_1M,817311" in out
    assert main(["range", "--freq-correction"]) == 0
    assert "2G4_2M" in capsys.readouterr().out


def test_cli_codec_round_trip(capsys):
    assert main(["codec", "encode", "c0ffee", "--seq", "5"]) == 0
    encoded = capsys.readouterr().out.strip()
    assert main(["codec", "decode", encoded]) == 0
    out = capsys.readouterr().out
    assert "frame_seq=5" in out and "payload=c0ffee" in out
    assert main(["codec", "decode", encoded[:-2] + "00"]) == 2
    assert main(["codec", "decode", "zz"]) == 2
