"""Geodesic curve segments for omnidirectional cameras."""

from __future__ import annotations

from typing import Any

__all__ = ["ConfigLoader", "detect", "load_model", "main", "match", "solve"]


def __getattr__(name: str) -> Any:
    if name == "ConfigLoader":
        from .config import ConfigLoader as _ConfigLoader

        return _ConfigLoader
    if name == "detect":
        from .features.detector import detect as _detect

        return _detect
    if name == "load_model":
        from .geometry.camera import load_model as _load_model

        return _load_model
    if name == "match":
        from .features.descriptor import match as _match

        return _match
    if name == "solve":
        from .backend.solver import solve as _solve

        return _solve
    if name == "main":
        from .cli import main as _main

        return _main
    raise AttributeError(name)
