"""Scenario builders shared by the test modules."""
from __future__ import annotations

import json

from crlink.harness import parse_scenario

OFF = {"enabled": False}


def single_link(role: str, modulation: str, **extra) -> dict:
    """Two nodes 10 m apart with only ``role`` enabled on both."""
    other = "helper" if role == "main" else "main"
    other_mod = "915M_200K" if other == "helper" else "2G4_1M"
    t = {"channel": role, "modulation": modulation}
    if "max_frame_length" in extra:
        t["max_frame_length"] = extra.pop("max_frame_length")
    nodes = []
    for i, x in ((0, 0.0), (1, 10.0)):
        nodes.append({"id": i, "position": [x, 0.0], role: dict(t), other: {"channel": other, "modulation": other_mod, **OFF}})
    doc = {"duration_s": 5.0, "nodes": nodes}
    doc.update(extra)
    return doc


def build(doc: dict):
    return parse_scenario(json.dumps(doc))
