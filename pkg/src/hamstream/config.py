"""Checked-in acceptance thresholds, shared by tests, CLI, and docs."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

__all__ = ["load_thresholds"]


@lru_cache(maxsize=1)
def load_thresholds() -> dict:
    text = resources.files("hamstream.data").joinpath("thresholds.json").read_text()
    return json.loads(text)
