"""Scenario runner, host streams and metrics."""
from crlink.harness.hoststream import HostStream, host_write
from crlink.harness.metrics import MetricsReport, emit_metrics
from crlink.harness.runner import run_scenario, trace_text
from crlink.harness.scenario import ParseError, Scenario, load_scenario, parse_scenario

__all__ = [
    "HostStream",
    "MetricsReport",
    "ParseError",
    "Scenario",
    "emit_metrics",
    "host_write",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "trace_text",
]
