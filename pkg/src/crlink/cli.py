"""Command-line entry point: ``crlink simulate|throughput|range|codec``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from crlink import models
from crlink.harness import ParseError, emit_metrics, load_scenario, run_scenario, trace_text
from crlink.wire import Frame, FrameError, PayloadHeader, decode_frame, encode_frame

EXIT_INVALID = 2


def _simulate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ParseError as e:
        print(f"{args.scenario}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"{args.scenario}: {e}", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        scenario = scenario.model_copy(update={"seed": args.seed})
    report, lines = run_scenario(scenario, trace=args.trace is not None)
    csv_text = emit_metrics(report)
    if args.trace:
        Path(args.trace).write_text(trace_text(lines))
    if args.metrics:
        Path(args.metrics).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    return 0


def _throughput(args) -> int:
    if args.reconciled:
        terms = None
    else:
        terms = models.ThroughputTerms(include_fs=args.include_fs, include_ack_rx_in_bidir=args.include_ack_rx)
    print("modulation,uni_bps,bi_bps,uni_efficiency,bi_efficiency")
    for row in models.throughput_table(terms):
        print(
            f"{row['modulation']},{row['uni_bps']:.0f},{row['bi_bps']:.0f},"
            f"{row['uni_efficiency']:.4f},{row['bi_efficiency']:.4f}"
        )
    return 0


def _range(args) -> int:
    print("modulation,frequency_hz,sensitivity_dbm,range_grm_m,range_los_m")
    for row in models.range_table(freq_correction=args.freq_correction):
        print(
            f"{row['modulation']},{row['frequency_hz']:.0f},{row['sensitivity_dbm']:g},"
            f"{row['range_grm_m']:.1f},{row['range_los_m']:.1f}"
        )
    return 0


def _codec(args) -> int:
    try:
        raw = bytes.fromhex(args.hex)
    except ValueError as e:
        print(f"bad hex: {e}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if args.op == "encode":
            header = PayloadHeader(
                seq_reset=args.reset, mod_shift_req=False, mod_shift_ack=False, frame_seq=args.seq, ack_seq=args.ack
            )
            print(encode_frame(Frame(header, raw)).hex())
        else:
            frame = decode_frame(raw)
            h = frame.header
            print(
                f"seq_reset={int(h.seq_reset)} mod_shift_req={int(h.mod_shift_req)} "
                f"mod_shift_ack={int(h.mod_shift_ack)} frame_seq={h.frame_seq} ack_seq={h.ack_seq} "
                f"payload={frame.payload.hex()}"
            )
    except FrameError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crlink", description="Dual-transceiver cognitive radio link tools")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario file")
    sim.add_argument("scenario")
    sim.add_argument("--trace", metavar="OUT", help="write the event trace here")
    sim.add_argument("--metrics", metavar="OUT", help="write metrics CSV here (default: stdout)")
    sim.add_argument("--seed", type=int, help="override the scenario seed")
    sim.set_defaults(func=_simulate)

    tp = sub.add_parser("throughput", help="theoretical throughput ceilings")
    tp.add_argument("--include-fs", action="store_true", help="add frequency synthesis time per exchange")
    tp.add_argument("--include-ack-rx", action="store_true", help="add ACK reception time to the bidirectional cycle")
    tp.add_argument("--reconciled", action="store_true", help="both terms on for 2.4 GHz, off for 915 MHz")
    tp.set_defaults(func=_throughput)

    rg = sub.add_parser("range", help="link range per modulation")
    rg.add_argument("--freq-correction", action="store_true", help="scale two-ray loss with carrier frequency")
    rg.set_defaults(func=_range)

    cd = sub.add_parser("codec", help="encode a payload or decode a frame, both as hex")
    cd.add_argument("op", choices=("encode", "decode"))
    cd.add_argument("hex")
    cd.add_argument("--seq", type=int, default=0)
    cd.add_argument("--ack", type=int, default=0xFFFFFFFF)
    cd.add_argument("--reset", action="store_true")
    cd.set_defaults(func=_codec)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    return args.func(args)
