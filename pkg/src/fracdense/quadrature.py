"""Adaptive Gauss-Legendre quadrature on finite intervals.

Integrands are vectorised: ``f`` receives a 1-D array of abscissae of shape
``(m,)`` and returns either shape ``(m,)`` or ``(..., m)``.  In the latter case
the integral is vector valued and the adaptive refinement is driven by the
worst component, so families of related integrals (one per evaluation point,
one per derivative order) share a single panel set.

Each panel is integrated with two Gauss-Legendre rules of different order and
the difference is used as the error estimate.  Panels are bisected until the
summed estimate satisfies ``abs_tol + rel_tol * |I|`` componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import BadExponent, InputError, NonConvergence, NonFinite

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    base_rule_order: int = 15

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise InputError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol >= 0:
            raise InputError(f"rel_tol must be nonnegative, got {self.rel_tol}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise InputError("max_subdivisions must be a positive integer")
        if int(self.base_rule_order) != self.base_rule_order or self.base_rule_order < 2:
            raise InputError("base_rule_order must be an integer >= 2")

    def scaled(self, factor: float) -> "QuadSettings":
        """Return settings with both tolerances multiplied by ``factor``."""
        return QuadSettings(self.abs_tol * factor, self.rel_tol * factor,
                            self.max_subdivisions, self.base_rule_order)


DEFAULT_QUAD = QuadSettings()


@lru_cache(maxsize=16)
def _rule_pair(order: int):
    hi_x, hi_w = np.polynomial.legendre.leggauss(order)
    lo_x, lo_w = np.polynomial.legendre.leggauss(max(1, order // 2))
    nodes = np.concatenate([hi_x, lo_x])
    nodes.flags.writeable = False
    return nodes, hi_w, lo_w


def _panel_estimates(f, left, right, order):
    nodes, hi_w, lo_w = _rule_pair(order)
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    t = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    vals = np.asarray(f(t), dtype=float)
    if vals.shape[-1] != t.size:
        raise InputError(
            f"integrand returned trailing dimension {vals.shape[-1]}, expected {t.size}")
    if not np.all(np.isfinite(vals)):
        bad = t[np.nonzero(~np.isfinite(vals.reshape(-1, t.size)).any(axis=0))[0][0]]
        raise NonFinite(f"integrand is not finite at t={bad!r}")
    vals = vals.reshape(vals.shape[:-1] + (left.size, nodes.size))
    n_hi = hi_w.size
    i_hi = (vals[..., :n_hi] @ hi_w) * half
    i_lo = (vals[..., n_hi:] @ lo_w) * half
    return i_hi, np.abs(i_hi - i_lo)


def integrate(f: Integrand, a: float, b: float,
              settings: QuadSettings = DEFAULT_QUAD, *,
              points: Sequence[float] | None = None,
              full_output: bool = False):
    """Integrate ``f`` over ``[a, b]``.

    Parameters
    ----------
    f : callable
        Vectorised integrand, see the module docstring.
    a, b : float
        Finite limits with ``a < b``.
    settings : QuadSettings
        Tolerances and subdivision budget.
    points : sequence of float, optional
        Interior break points (kinks, support edges) used to seed the panels.
    full_output : bool
        If True return ``(value, error_estimate)``.

    Returns
    -------
    float or ndarray
        The integral (shape follows the leading dimensions of ``f``'s output).

    Raises
    ------
    NonConvergence
        If ``settings.max_subdivisions`` panels were created without meeting
        the tolerance.
    NonFinite
        If the integrand produced a NaN or infinity.
    """
    edges = _initial_edges(a, b, points)
    _, _, total, total_err = _adapt(f, edges, settings)
    value = total if total.ndim else float(total)
    if full_output:
        err = total_err if total_err.ndim else float(total_err)
        return value, err
    return value


def panel_edges(f: Integrand, a: float, b: float,
                settings: QuadSettings = DEFAULT_QUAD, *,
                points: Sequence[float] | None = None) -> np.ndarray:
    """Panel edges on which ``f`` meets ``settings``.

    Passing these edges back as ``points`` reproduces the integral without
    refinement, which makes repeated evaluations of a parametrised family use
    one fixed rule.
    """
    left, right, _, _ = _adapt(f, _initial_edges(a, b, points), settings)
    return np.unique(np.concatenate([left, right]))


def _initial_edges(a, b, points):
    a = float(a)
    b = float(b)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise InputError("integration limits must be finite")
    if not a < b:
        raise InputError(f"need a < b, got a={a}, b={b}")
    edges = [a]
    if points is not None:
        edges.extend(sorted(float(p) for p in points if a < p < b))
    edges.append(b)
    return np.unique(np.asarray(edges))


def _adapt(f, edges, settings):
    a, b = edges[0], edges[-1]
    left = edges[:-1]
    right = edges[1:]
    order = settings.base_rule_order

    vals, errs = _panel_estimates(f, left, right, order)
    created = 0
    while True:
        total = vals.sum(axis=-1)
        total_err = errs.sum(axis=-1)
        tol = settings.abs_tol + settings.rel_tol * np.abs(total)
        if np.all(total_err <= tol):
            break
        # Panel score: worst fraction of the per-component tolerance it uses.
        score = (errs / np.expand_dims(tol, -1)).reshape(-1, left.size).max(axis=0)
        ranked = np.argsort(score)[::-1]
        cumulative = np.cumsum(score[ranked])
        n_split = int(np.searchsorted(cumulative, 0.5 * cumulative[-1])) + 1
        chosen = np.sort(ranked[:n_split])
        created += 2 * chosen.size
        if created > settings.max_subdivisions:
            raise NonConvergence(
                f"subdivision budget {settings.max_subdivisions} exhausted on "
                f"[{a}, {b}]; error estimate {np.max(total_err):.3e} > tol {np.min(tol):.3e}")
        mids = 0.5 * (left[chosen] + right[chosen])
        new_left = np.concatenate([left[chosen], mids])
        new_right = np.concatenate([mids, right[chosen]])
        new_vals, new_errs = _panel_estimates(f, new_left, new_right, order)
        keep = np.ones(left.size, dtype=bool)
        keep[chosen] = False
        left = np.concatenate([left[keep], new_left])
        right = np.concatenate([right[keep], new_right])
        vals = np.concatenate([vals[..., keep], new_vals], axis=-1)
        errs = np.concatenate([errs[..., keep], new_errs], axis=-1)
    return left, right, total, total_err


def integrate_endpoint_singular(f: Integrand, a: float, b: float, sigma: float,
                                settings: QuadSettings = DEFAULT_QUAD, *,
                                endpoint: str = "left",
                                full_output: bool = False):
    """Integrate ``(t - a)**(-sigma) * f(t)`` over ``[a, b]`` for smooth ``f``.

    The substitution ``t = a + tau**(1/(1-sigma))`` absorbs the weight exactly,
    leaving the smooth integrand ``f(a + tau**p) / (1 - sigma)`` on
    ``[0, (b-a)**(1-sigma)]``.  With ``endpoint="right"`` the weight is
    ``(b - t)**(-sigma)`` instead.
    """
    if not 0.0 < sigma < 1.0:
        raise BadExponent(f"sigma must lie in (0, 1), got {sigma}")
    if not a < b:
        raise InputError(f"need a < b, got a={a}, b={b}")
    if endpoint not in ("left", "right"):
        raise InputError(f"endpoint must be 'left' or 'right', got {endpoint!r}")
    power = 1.0 / (1.0 - sigma)
    upper = (b - a) ** (1.0 - sigma)
    scale = 1.0 / (1.0 - sigma)
    if endpoint == "left":
        def g(tau):
            return f(a + tau ** power) * scale
    else:
        def g(tau):
            return f(b - tau ** power) * scale
    return integrate(g, 0.0, upper, settings, full_output=full_output)
