"""Direct evaluation of the fractional Laplacian in one dimension.

This is the independent check of s-harmonicity: it never looks at the
Poisson kernel, only at point values of ``u``.  We use the one-sided form

    L u(x) = int_0^inf (2 u(x) - u(x+y) - u(x-y)) y^(-1-2s) dy,

which is the symmetric-difference integral over the whole line divided by
two; the normalising constant is irrelevant for deciding ``L u = 0``.
The integral is split into

* a near field ``[0, h]`` where the bracket is ``O(y^2)``: the even part of
  ``u`` around ``x`` is interpolated in powers of ``y^2`` and integrated
  exactly against ``y^(-1-2s)``, so no catastrophic cancellation occurs;
* a middle range ``[h, Y]`` handled by adaptive quadrature with break points
  at the non-smooth points of ``u``;
* a tail ``[Y, inf)`` where ``u(x +- y) = 0`` and the integral is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GeometryError, InputError, SupportError
from .kernel_extension import FracParams
from .parallel import parallel_map
from .quadrature import DEFAULT_QUAD, QuadSettings, integrate
from .serialization import csv_text, dumps

DEFAULT_H = 1e-3
NEAR_NODES = 3
CERTIFY_FRACTION = 0.9


def _near_field(u, x, s, h, ux):
    ys = h * np.arange(1, NEAR_NODES + 1) / NEAR_NODES
    vals = np.asarray(u(np.concatenate([x + ys, x - ys])), dtype=float)
    even = vals[:NEAR_NODES] + vals[NEAR_NODES:] - 2.0 * ux
    # even(y) = sum_k a_k y^(2k), k = 1..NEAR_NODES
    powers = 2 * np.arange(1, NEAR_NODES + 1)
    scaled = (ys / h)[:, None] ** powers[None, :]
    a_scaled = np.linalg.solve(scaled, even)          # a_k h^(2k)
    moments = h ** (-2.0 * s) / (powers - 2.0 * s)    # int_0^h y^(2k-1-2s) dy / h^(2k)
    return -float(a_scaled @ moments)


def frac_laplacian(u: Callable, x: float, params: FracParams, h: float = DEFAULT_H,
                   Y: float | None = None, quad: QuadSettings = DEFAULT_QUAD, *,
                   support_radius: float | None = None,
                   breakpoints: Sequence[float] = (),
                   full_output: bool = False):
    """One-sided fractional Laplacian of a compactly supported ``u`` at ``x``.

    Parameters
    ----------
    u : callable
        Vectorised function on the real line, zero outside ``[-R, R]``.
    x : float
        Evaluation point; ``u`` must be smooth on ``[x - h, x + h]``.
    params : FracParams
    h : float
        Near-field radius, ``0 < h < 1``.
    Y : float, optional
        Far-field cut; defaults to ``support_radius + |x| + 1``.
    quad : QuadSettings
        Tolerances for the middle range.
    support_radius : float, optional
        ``R`` above.  When omitted, ``Y`` is required and support is probed.
    breakpoints : sequence of float
        Points where ``u`` is not smooth (ball boundaries, support edges).
    full_output : bool
        Return ``(value, error_estimate)``.

    Raises
    ------
    SupportError
        If ``u`` does not vanish at distance ``>= Y`` from ``x``.
    """
    if params.n != 1:
        raise NotImplementedError("fractional Laplacian is implemented for n = 1")
    if not 0.0 < h < 1.0:
        raise InputError(f"h must lie in (0, 1), got {h}")
    s = params.s
    x = float(x)
    if Y is None:
        if support_radius is None:
            raise InputError("either Y or support_radius is required")
        Y = support_radius + abs(x) + 1.0
    if support_radius is not None and Y < support_radius + abs(x):
        raise SupportError(f"Y={Y} is smaller than support radius + |x|")
    if Y <= h:
        raise InputError("Y must exceed h")
    if support_radius is None:
        probe = np.concatenate([x + Y + np.linspace(0, Y, 16), x - Y - np.linspace(0, Y, 16)])
        if np.any(np.asarray(u(probe)) != 0.0):
            raise SupportError(f"u does not vanish at distance {Y} from x={x}")

    ux = float(np.asarray(u(np.array([x])))[0])
    near = _near_field(u, x, s, h, ux)

    def mid(y):
        vals = np.asarray(u(np.concatenate([x + y, x - y])), dtype=float)
        m = y.size
        return (2.0 * ux - vals[:m] - vals[m:]) * y ** (-1.0 - 2.0 * s)

    kinks = sorted({abs(b - x) for b in breakpoints if h < abs(b - x) < Y})
    middle, err = integrate(mid, h, Y, quad, points=kinks, full_output=True)
    tail = 2.0 * ux * Y ** (-2.0 * s) / (2.0 * s)
    value = near + middle + tail
    if full_output:
        return value, float(err)
    return value


@dataclass
class ResidualReport:
    points: list[tuple[float, float]]
    max_abs_residual: float
    scale: float
    relative_max: float
    error_bound: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "points": [{"x": x, "residual": r} for x, r in self.points],
            "max_abs_residual": self.max_abs_residual,
            "scale": self.scale,
            "relative_max": self.relative_max,
            "error_bound": self.error_bound,
            **({"meta": self.meta} if self.meta else {}),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        return csv_text(["x", "residual"], ((float(x), float(r)) for x, r in self.points))


def default_grid(fn, count: int = 9) -> np.ndarray:
    """``count`` equispaced points in the open certification ball."""
    p, r = fn.ball.center, fn.ball.radius
    half = CERTIFY_FRACTION * r
    return np.linspace(p - half, p + half, count + 2)[1:-1]


def residual_report(fn, grid: Sequence[float] | None = None,
                    params: FracParams | None = None, *,
                    h: float = DEFAULT_H, quad: QuadSettings | None = None,
                    scale_samples: int = 201) -> ResidualReport:
    """Fractional-Laplacian residuals of an s-harmonic function on ``grid``.

    ``fn`` is anything exposing ``ball``, ``params``, ``support_radius``,
    ``breakpoints()`` and vectorised ``__call__`` (a single extension or a sum
    of them).  Grid points must lie in ``B_{0.9 r}(p)``.
    """
    params = params or fn.params
    quad = quad or DEFAULT_QUAD
    if grid is None:
        grid = default_grid(fn)
    grid = [float(g) for g in grid]
    p, r = fn.ball.center, fn.ball.radius
    for g in grid:
        if abs(g - p) > CERTIFY_FRACTION * r:
            raise GeometryError(f"grid point {g} lies outside B_{CERTIFY_FRACTION * r}({p})")
    kinks = fn.breakpoints()
    radius = fn.support_radius

    def one(x):
        return frac_laplacian(fn, x, params, h, None, quad, support_radius=radius,
                              breakpoints=kinks, full_output=True)

    results = parallel_map(one, grid)
    residuals = [v for v, _ in results]
    bound = max((e for _, e in results), default=0.0)
    sample = np.linspace(p - r, p + r, scale_samples)
    scale = float(np.max(np.abs(fn(sample)))) if scale_samples else 0.0
    max_abs = max((abs(v) for v in residuals), default=0.0)
    relative = max_abs / scale if scale > 0 else (0.0 if max_abs == 0 else float("inf"))
    return ResidualReport(list(zip(grid, residuals)), max_abs, scale, relative, bound)
