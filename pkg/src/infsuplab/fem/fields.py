"""Analytic velocity fields used to drive projections and load assembly."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class AnalyticField:
    """A 2D vector field given by vectorized numpy callbacks.

    value(x, y) -> (..., 2); gradient(x, y) -> (..., 2, 2) with
    gradient[..., i, j] = d v_i / d x_j; divergence(x, y) -> (...).
    boundary_compatible marks fields vanishing on the unit-square boundary.
    """

    value: Callable
    gradient: Optional[Callable]
    divergence: Optional[Callable]
    boundary_compatible: bool
    name: str = ""


def _g(t):
    return t * (1.0 - t)


def _gp(t):
    return 1.0 - 2.0 * t


def divfree_field() -> AnalyticField:
    """Curl of (x(1-x)y(1-y))^2: divergence-free, vanishing with its first
    derivatives on the boundary."""

    def value(x, y):
        a, b = _g(x), _g(y)
        v1 = 2.0 * a**2 * b * _gp(y)
        v2 = -2.0 * a * _gp(x) * b**2
        return np.stack([v1, v2], axis=-1)

    def gradient(x, y):
        a, ap = _g(x), _gp(x)
        b, bp = _g(y), _gp(y)
        d11 = 4.0 * a * ap * b * bp
        d12 = 2.0 * a**2 * (bp**2 - 2.0 * b)
        d21 = -2.0 * b**2 * (ap**2 - 2.0 * a)
        d22 = -4.0 * a * ap * b * bp
        row1 = np.stack([d11, d12], axis=-1)
        row2 = np.stack([d21, d22], axis=-1)
        return np.stack([row1, row2], axis=-2)

    def divergence(x, y):
        return np.zeros(np.broadcast(x, y).shape)

    return AnalyticField(value, gradient, divergence, True, name="divfree")


def generic_field() -> AnalyticField:
    """(x(1-x)y(1-y), x(1-x)y(1-y)): boundary-compatible, non-solenoidal."""

    def value(x, y):
        v = _g(x) * _g(y)
        return np.stack([v, v], axis=-1)

    def gradient(x, y):
        dx = _gp(x) * _g(y)
        dy = _g(x) * _gp(y)
        row = np.stack([dx, dy], axis=-1)
        return np.stack([row, row], axis=-2)

    def divergence(x, y):
        return _gp(x) * _g(y) + _g(x) * _gp(y)

    return AnalyticField(value, gradient, divergence, True, name="generic")


FIELD_REGISTRY = {
    "divfree": divfree_field,
    "generic": generic_field,
}
