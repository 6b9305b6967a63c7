"""Extrapolation of the squared-distance decay of a Gilbert run.

The model is that ``|log(D_c^2 - a)|^b`` grows linearly with the correction
index ``c``; ``a`` then estimates the limiting squared distance.  ``(a, b)``
are chosen to maximize the absolute Pearson correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PRECISION = 1e-5
A_GRID = 200
B_GRID = 50
B_RANGE = (0.1, 5.0)
A_FRACTION = 0.999
TRANSIENT = 0.1
MIN_POINTS = 10

_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class DecayFit:
    a: float
    b: float
    r: float
    classification: str

    @property
    def sqrt_a(self) -> float:
        return math.sqrt(self.a)


def classify(a: float) -> str:
    """The fit can only support entanglement, never certify separability."""
    return "entangled" if a > PRECISION else "inconclusive"


def _score(c, d2, a, b):
    z = d2 - a
    if np.any(z <= 0):
        return -1.0
    y = np.abs(np.log(z)) ** b
    if not np.all(np.isfinite(y)) or np.ptp(y) == 0:
        return -1.0
    r = np.corrcoef(c, y)[0, 1]
    return abs(r) if np.isfinite(r) else -1.0


def _golden_max(f, lo, hi, tol):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; ties resolve toward ``lo``."""
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def prepare(corrections, squared_distances):
    c = np.asarray(corrections, dtype=float)
    d2 = np.asarray(squared_distances, dtype=float)
    if c.shape != d2.shape:
        raise ValueError("corrections and distances differ in length")
    if np.any(np.diff(d2) > 0):
        raise ValueError("squared distances must be non-increasing")
    keep = np.concatenate(([True], np.diff(d2) < 0))
    c, d2 = c[keep], d2[keep]
    if len(c) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} distinct points, got {len(c)}")
    skip = int(len(c) * TRANSIENT)
    return c[skip:], d2[skip:]


def fit_decay(trace) -> DecayFit:
    """Fit a :class:`~upbwit.gilbert.GilbertTrace`."""
    return fit_points(trace.corrections, trace.squared_distances)


def fit_points(corrections, squared_distances, refine_rounds: int = 4) -> DecayFit:
    c, d2 = prepare(corrections, squared_distances)
    a_hi = A_FRACTION * float(d2.min())
    a_grid = np.linspace(0.0, a_hi, A_GRID)
    b_grid = np.linspace(*B_RANGE, B_GRID)

    best = (-1.0, 0.0, b_grid[0])
    for a in a_grid:
        for b in b_grid:
            s = _score(c, d2, a, b)
            if s > best[0]:
                best = (s, a, b)
    score, a, b = best

    a_step = a_grid[1] - a_grid[0]
    b_step = b_grid[1] - b_grid[0]
    for _ in range(refine_rounds):
        a_new, s_a = _golden_max(
            lambda x: _score(c, d2, x, b), max(0.0, a - a_step), min(a_hi, a + a_step), 1e-10
        )
        if s_a > score:
            a, score = a_new, s_a
        b_new, s_b = _golden_max(
            lambda x: _score(c, d2, a, x),
            max(B_RANGE[0], b - b_step),
            min(B_RANGE[1], b + b_step),
            1e-8,
        )
        if s_b > score:
            b, score = b_new, s_b
    a = float(a)
    return DecayFit(a=a, b=float(b), r=float(score), classification=classify(a))
