"""Fractional Poisson kernel for balls and the s-harmonic extension of bump data.

For a ball ``B_r(p)`` and exterior data ``g`` the function

    u(x) = int_{|y-p|>r} P(x, y) g(y) dy,   |x - p| < r,
    u(x) = g(x),                            |x - p| >= r,

satisfies ``(-Delta)^s u = 0`` in the ball, where

    P(x, y) = c(n,s) * ((r^2 - |x-p|^2) / (|y-p|^2 - r^2))^s * |x - y|^(-n),
    c(n,s)  = Gamma(n/2) * sin(pi s) / pi^(n/2 + 1).

Exterior data are finite sums of smooth bumps, so every Poisson integral is a
sum of integrals over the (compact) bump supports.  All objects here are
immutable; evaluation is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import (BadEta, GeometryError, InputError, OrderTooHigh,
                     TooCloseToBoundary)
from .jets import DerivativeVector, leibniz, power_series_pow
from .quadrature import (DEFAULT_QUAD, QuadSettings, integrate,
                         integrate_endpoint_singular, panel_edges)

CLEARANCE_FACTOR = 0.05
MAX_DERIVATIVE_ORDER = 8
MIN_BOUNDARY_DISTANCE = 1e-3
_CHUNK = 512
FROZEN_PROBES = 33


@dataclass(frozen=True)
class FracParams:
    s: float
    n: int = 1

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise InputError(f"fractional order s must lie strictly in (0, 1), got {self.s}")
        if int(self.n) != self.n or self.n < 1:
            raise InputError(f"dimension n must be a positive integer, got {self.n}")


@dataclass(frozen=True)
class Ball:
    center: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise InputError(f"ball radius must be positive, got {self.radius}")

    def distance_to_center(self, x):
        return np.abs(np.asarray(x, dtype=float) - self.center)


def bump_profile(t):
    """Standard mollifier ``exp(1 - 1/(1 - t^2))`` on ``|t| < 1``, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Bump:
    center: float
    half_width: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise InputError(f"bump half_width must be positive, got {self.half_width}")
        for name in ("center", "half_width", "amplitude"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"bump {name} must be finite")

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.half_width, self.center + self.half_width

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * bump_profile((x - self.center) / self.half_width)


@dataclass(frozen=True)
class ExteriorData:
    bumps: tuple[Bump, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))

    @property
    def support_radius(self) -> float:
        """Smallest ``R`` with every bump supported in ``B_R(0)``."""
        if not self.bumps:
            return 0.0
        return max(max(abs(lo), abs(hi)) for lo, hi in (b.support for b in self.bumps))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        comp = np.zeros_like(x)
        for b in self.bumps:
            y = b(x) - comp
            t = total + y
            comp = (t - total) - y
            total = t
        return total if total.ndim else float(total)

    def scaled(self, factor: float) -> "ExteriorData":
        return ExteriorData(tuple(replace(b, amplitude=b.amplitude * factor) for b in self.bumps))

    def __add__(self, other: "ExteriorData") -> "ExteriorData":
        return ExteriorData(self.bumps + other.bumps)

    def breakpoints(self) -> list[float]:
        pts = []
        for b in self.bumps:
            pts.extend(b.support)
        return pts


def poisson_constant(params: FracParams) -> float:
    """Normalisation ``c(n,s) = Gamma(n/2) sin(pi s) / pi^(n/2+1)``."""
    n, s = params.n, params.s
    return math.gamma(n / 2) * math.sin(math.pi * s) / math.pi ** (n / 2 + 1)


def _radial(params, ball, z):
    z = np.asarray(z, dtype=float)
    if params.n == 1:
        return np.abs(z - ball.center)
    return np.linalg.norm(z - ball.center, axis=-1)


def poisson_kernel(params: FracParams, ball: Ball, x, y):
    """Fractional Poisson kernel ``P(x, y)`` of ``ball``.

    For ``n = 1`` points are scalars (arrays broadcast); for ``n > 1`` points
    carry the coordinate on the last axis.
    """
    rx = _radial(params, ball, x)
    ry = _radial(params, ball, y)
    r = ball.radius
    if np.any(rx >= r):
        raise GeometryError("x must lie strictly inside the ball")
    if np.any(ry <= r):
        raise GeometryError("y must lie strictly outside the closed ball")
    if params.n == 1:
        dist = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    else:
        dist = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), axis=-1)
    ratio = (r * r - rx * rx) / (ry * ry - r * r)
    out = poisson_constant(params) * ratio ** params.s * dist ** (-float(params.n))
    return out if np.ndim(out) else float(out)


def kernel_mass(params: FracParams, ball: Ball, x: float,
                quad: QuadSettings = DEFAULT_QUAD) -> float:
    """``int_{|y-p|>r} P(x, y) dy``; equals one for every interior ``x``.

    The ``(|y-p|^2 - r^2)^(-s)`` singularity at the sphere is removed by the
    power substitution of :func:`integrate_endpoint_singular`; the unbounded
    tail ``|y-p| > 2r`` is mapped to ``(0, 1]`` by ``u = 2r tau^(-1/(2s))``,
    which makes the transformed integrand bounded at ``tau = 0``.
    """
    if params.n != 1:
        raise NotImplementedError("kernel_mass is implemented for n = 1")
    s, r = params.s, ball.radius
    xx = float(x) - ball.center
    if not abs(xx) < r:
        raise GeometryError("x must lie strictly inside the ball")
    c = poisson_constant(params) * (r * r - xx * xx) ** s

    # Both half-lines |y - p| = u > r, folded together.
    def near(u):
        return c * (u + r) ** (-s) * (1.0 / (u - xx) + 1.0 / (u + xx))

    head = integrate_endpoint_singular(near, r, 2.0 * r, s, quad)

    lead = 2.0 * r

    def tail(tau):
        u = lead * tau ** (-1.0 / (2.0 * s))
        du = lead / (2.0 * s) * tau ** (-1.0 / (2.0 * s) - 1.0)
        return c * (u * u - r * r) ** (-s) * (1.0 / (u - xx) + 1.0 / (u + xx)) * du

    return float(head + integrate(tail, 0.0, 1.0, quad))


def _check_clearance(ball: Ball, exterior: ExteriorData):
    gap = CLEARANCE_FACTOR * ball.radius
    for b in exterior.bumps:
        lo, hi = b.support
        # distance of the support interval from the closed ball
        if hi < ball.center:
            d = (ball.center - hi) - ball.radius
        elif lo > ball.center:
            d = (lo - ball.center) - ball.radius
        else:
            d = -1.0
        if d < gap * (1 - 1e-12):
            raise GeometryError(
                f"bump {b} is within clearance {gap:g} of the ball B_{ball.radius}({ball.center})")


@dataclass(frozen=True)
class SHarmonicFn:
    """The s-harmonic extension of bump data from ``ball``.

    Callable: ``fn(x)`` evaluates the extension anywhere on the line.
    """

    params: FracParams
    ball: Ball
    exterior: ExteriorData
    quad: QuadSettings = field(default=DEFAULT_QUAD)

    def __post_init__(self):
        if self.params.n != 1:
            raise InputError("s-harmonic extensions are evaluated for n = 1 only")
        _check_clearance(self.ball, self.exterior)

    @property
    def support_radius(self) -> float:
        return self.exterior.support_radius

    def __call__(self, x):
        return extend(self, x)

    def derivatives(self, x: float, order: int) -> DerivativeVector:
        return extend_derivatives(self, x, order)

    def breakpoints(self) -> list[float]:
        p, r = self.ball.center, self.ball.radius
        return [p - r, p + r] + self.exterior.breakpoints()

    def with_quad(self, quad: QuadSettings) -> "SHarmonicFn":
        return replace(self, quad=quad)

    def scaled(self, factor: float) -> "SHarmonicFn":
        return replace(self, exterior=self.exterior.scaled(factor))

    def to_dict(self) -> dict:
        return {
            "s": self.params.s,
            "n": self.params.n,
            "ball": {"p": self.ball.center, "r": self.ball.radius},
            "bumps": [{"center": b.center, "half_width": b.half_width,
                       "amplitude": b.amplitude} for b in self.exterior.bumps],
        }

    @classmethod
    def from_dict(cls, data: dict, quad: QuadSettings = DEFAULT_QUAD) -> "SHarmonicFn":
        try:
            params = FracParams(float(data["s"]), int(data.get("n", 1)))
            ball_d = data.get("ball", {"p": 0.0, "r": 1.0})
            ball = Ball(float(ball_d.get("p", 0.0)), float(ball_d.get("r", 1.0)))
            bumps = tuple(Bump(float(b["center"]), float(b["half_width"]),
                               float(b.get("amplitude", 1.0))) for b in data.get("bumps", []))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed exterior data: {exc}") from exc
        return cls(params, ball, ExteriorData(bumps), quad)


def _bump_nodes(fn: SHarmonicFn, t: np.ndarray):
    """Per bump: abscissae ``y(t)`` and weights ``w a psi(t) (|y-p|^2-r^2)^(-s)``."""
    p, r, s = fn.ball.center, fn.ball.radius, fn.params.s
    prof = bump_profile(t)
    out = []
    for b in fn.exterior.bumps:
        y = b.center + b.half_width * t
        d2 = (y - p) ** 2 - r * r
        out.append((y, b.half_width * b.amplitude * prof * d2 ** (-s)))
    return out


def _kahan_add(total, comp, term):
    y = term - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def _integrand(fn: SHarmonicFn, x: np.ndarray, order: int, t: np.ndarray) -> np.ndarray:
    total = np.zeros((order + 1, x.size, t.size))
    comp = np.zeros_like(total)
    for y, w in _bump_nodes(fn, t):
        d = y[None, :] - x[:, None]
        base = w[None, :] / np.abs(d)
        term = np.empty_like(total)
        term[0] = base
        inv = 1.0 / d
        for m in range(1, order + 1):
            base = base * inv
            term[m] = base
        total, comp = _kahan_add(total, comp, term)
    facts = np.array([math.factorial(m) for m in range(order + 1)], dtype=float)
    return total * facts[:, None, None]


@lru_cache(maxsize=256)
def _frozen_edges(fn: SHarmonicFn, order: int) -> tuple[float, ...]:
    # Probe the closed ball: the integrand is sharpest at the boundary.
    probes = fn.ball.center + fn.ball.radius * np.cos(np.linspace(0.0, np.pi, FROZEN_PROBES))
    edges = panel_edges(lambda t: _integrand(fn, probes, order, t), -1.0, 1.0, fn.quad)
    return tuple(edges[1:-1])


def _interior_integrals(fn: SHarmonicFn, x: np.ndarray, order: int):
    """``int sum_b weight_b(t) * m! / (|d| d^m) dt`` with ``d = y_b(t) - x``.

    Returns an array of shape ``(order + 1, x.size)``.  Integration starts
    from a panel set frozen per ``(fn, order)``, so the quadrature error is a
    smooth function of ``x`` across separate calls; a batch is refined
    further only if its own estimate misses the tolerance.
    """
    return integrate(lambda t: _integrand(fn, x, order, t), -1.0, 1.0, fn.quad,
                     points=_frozen_edges(fn, order))


def extend(fn: SHarmonicFn, x):
    """Evaluate the s-harmonic extension at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.asarray(fn.exterior(flat), dtype=float).reshape(flat.shape).copy()
    rel = flat - fn.ball.center
    r = fn.ball.radius
    inside = np.nonzero(np.abs(rel) < r)[0]
    if inside.size and fn.exterior.bumps:
        c = poisson_constant(fn.params)
        for start in range(0, inside.size, _CHUNK):
            idx = inside[start:start + _CHUNK]
            xi = flat[idx]
            integral = _interior_integrals(fn, xi, 0)[0]
            out[idx] = c * (r * r - rel[idx] ** 2) ** fn.params.s * integral
    elif inside.size:
        out[inside] = 0.0
    out = out.reshape(x.shape)
    return out if out.ndim else float(out)


def extend_derivatives(fn: SHarmonicFn, x: float, order: int) -> DerivativeVector:
    """All derivatives of the extension at an interior point up to ``order``.

    The kernel is differentiated under the integral sign with truncated
    Taylor arithmetic: the factor ``(r^2 - (x-p)^2)^s`` is expanded by the
    power-series recurrence and ``|x - y|^(-1)`` has closed-form derivatives
    ``m! / (|d| d^m)``; the two are combined by the Leibniz rule.
    """
    if int(order) != order or order < 0:
        raise InputError(f"order must be a nonnegative integer, got {order}")
    if order > MAX_DERIVATIVE_ORDER:
        raise OrderTooHigh(f"order {order} exceeds {MAX_DERIVATIVE_ORDER}")
    x = float(x)
    r, p, s = fn.ball.radius, fn.ball.center, fn.params.s
    xx = x - p
    if r - abs(xx) < MIN_BOUNDARY_DISTANCE * r:
        raise TooCloseToBoundary(
            f"x={x} is closer than {MIN_BOUNDARY_DISTANCE}*r to the boundary")
    if not fn.exterior.bumps:
        return DerivativeVector(order, np.zeros(order + 1))
    q = np.array([r * r - xx * xx, -2.0 * xx, -1.0])
    coeffs = power_series_pow(q, s, order)
    a_derivs = coeffs * np.array([math.factorial(k) for k in range(order + 1)])
    b_derivs = _interior_integrals(fn, np.array([x]), order)[:, 0]
    values = poisson_constant(fn.params) * leibniz(a_derivs, b_derivs, order)
    return DerivativeVector(order, values)


def transform(fn: SHarmonicFn, eta: float, p: float, power: float) -> SHarmonicFn:
    """Represent ``x -> eta**(-power) * fn(eta * x + p)`` exactly.

    The ball and every bump are mapped by the inverse affine change of
    variables and amplitudes are multiplied by ``eta**(-power)``; no new
    quadrature is involved.
    """
    if not 0.0 < eta <= 1.0:
        raise BadEta(f"eta must lie in (0, 1], got {eta}")
    gain = eta ** (-power)
    ball = Ball((fn.ball.center - p) / eta, fn.ball.radius / eta)
    bumps = tuple(Bump((b.center - p) / eta, b.half_width / eta, b.amplitude * gain)
                  for b in fn.exterior.bumps)
    return SHarmonicFn(fn.params, ball, ExteriorData(bumps), fn.quad)


def reference_bump(center: float = 2.5, half_width: float = 0.5, amplitude: float = 1.0) -> Bump:
    """Radial profile supported in ``(2, 3)`` used for the boundary-growth function."""
    return Bump(center, half_width, amplitude)


def radial_data(profile: Bump) -> ExteriorData:
    """``psi_0(y) = profile(|y|)`` in one dimension: the profile and its mirror."""
    mirror = Bump(-profile.center, profile.half_width, profile.amplitude)
    return ExteriorData((mirror, profile))


def grid_values(fn: SHarmonicFn, points: Iterable[float]) -> np.ndarray:
    return np.asarray(extend(fn, np.asarray(list(points), dtype=float)))
