"""Certification of nonclassical teleportation and entanglement bounds from teleportation data."""

from __future__ import annotations

import importlib

__all__ = ["linalg", "states", "teleport", "sdp", "sepcone", "estimators", "cli"]
__version__ = "0.1.0"


def __getattr__(name: str):
    if name in __all__:
        return importlib.import_module(f"telecert.{name}")
    raise AttributeError(f"module 'telecert' has no attribute {name!r}")
