"""Pinned reference values, each with the short quote it was taken from.

The manifest lives in ``data/reference.json``; values are stored in the
bracket notation used throughout the package and parsed on demand.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

MANIFEST_VERSION = 1


@lru_cache(maxsize=1)
def load_reference() -> dict:
    text = resources.files("boxlogic").joinpath("data/reference.json").read_text(encoding="utf-8")
    data = json.loads(text)
    if data.get("version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported reference manifest version {data.get('version')!r}")
    return data


def expected(name: str):
    return load_reference()[name]["value"]


def anchor(name: str) -> str:
    return load_reference()[name].get("anchor", "")


def entry(name: str) -> dict:
    """The whole manifest record, including side fields next to ``value``."""
    return load_reference()[name]
