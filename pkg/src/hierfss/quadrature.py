"""Adaptive Gauss-Legendre quadrature on finite intervals.

Panels are bisected until the difference between a one-panel estimate and
the sum of its two halves drops below the local share of the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalFailure

ROUNDOFF = 50 * np.finfo(float).eps


class QuadratureError(NumericalFailure):
    """Raised when the subdivision budget is exhausted before convergence."""

    def __init__(self, message: str, value: float, error: float):
        super().__init__(message)
        self.value = value
        self.error = error


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    order: int = 20

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1 or self.order < 2:
            raise ValueError("invalid subdivision budget or order")


DEFAULT_QUAD = QuadratureConfig()


@lru_cache(maxsize=16)
def _nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, order: int) -> float:
    x, w = _nodes(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return float(half * np.dot(w, f(mid + half * x)))


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    cfg: QuadratureConfig = DEFAULT_QUAD,
) -> tuple[float, float]:
    """Integrate a vectorised ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    Returns ``(value, error_estimate)``.  The integrand must be nonnegative
    or at least not cancel badly, since the relative tolerance is applied to
    the running total.  Features narrower than a panel must be bracketed by
    ``breakpoints``: a peak that no node sees is invisible to the error test.
    """
    pts = sorted(set(float(p) for p in breakpoints))
    if len(pts) < 2:
        return 0.0, 0.0
    order = cfg.order
    # stack of (a, b, coarse estimate)
    stack = [(a, b, _panel(f, a, b, order)) for a, b in zip(pts[:-1], pts[1:])]
    total_len = pts[-1] - pts[0]
    done_value = 0.0
    done_error = 0.0
    pending = sum(s[2] for s in stack)
    n_split = 0
    while stack:
        a, b, coarse = stack.pop()
        m = 0.5 * (a + b)
        left = _panel(f, a, m, order)
        right = _panel(f, m, b, order)
        fine = left + right
        err = abs(fine - coarse)
        pending += fine - coarse
        budget = max(cfg.abs_tol, cfg.rel_tol * abs(done_value + pending)) * (b - a) / total_len
        # the last clause is the roundoff floor of the running total
        if err <= budget or (b - a) <= 1e-15 * max(1.0, abs(m)) or err <= ROUNDOFF * abs(done_value + pending):
            done_value += fine
            done_error += err
            pending -= fine
            continue
        n_split += 1
        if n_split > cfg.max_subdivisions:
            value = done_value + pending
            raise QuadratureError(
                f"subdivision budget exhausted (achieved error ~{done_error + err:.3e})",
                value,
                done_error + err,
            )
        stack.append((a, m, left))
        stack.append((m, b, right))
    return done_value, done_error
