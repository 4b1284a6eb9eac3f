"""Density of s-harmonic functions: boundary growth, blow-ups, derivative
spanning, rescaling and the end-to-end approximation pipeline.

Everything is built from :class:`~fracdense.kernel_extension.SHarmonicFn`
objects on a common ball, combined linearly and rescaled exactly.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (BudgetInfeasible, IllConditioned, InputError, NonConvergence,
                     NumericalError, RankDeficient)
from .fraclap import residual_report
from .jets import DerivativeVector, MultiIndex
from .kernel_extension import (Ball, Bump, ExteriorData, FracParams, SHarmonicFn,
                               extend, extend_derivatives, reference_bump,
                               poisson_constant, radial_data, transform)
from .parallel import parallel_map
from .polyapprox import Polynomial, weierstrass_approx
from .quadrature import DEFAULT_QUAD, QuadSettings, integrate
from .serialization import dumps

SPAN_TOL = 1e-6
RANK_TOL = 1e-8
ILL_CONDITIONED = 1e10
MAX_BETA = 4
ETA_FLOOR = 2.0 ** -20
DICT_CENTERS = (1.6, 2.2, 3.0, 4.0, 5.2)
DICT_HALF_WIDTHS = (0.1, 0.25, 0.5)
FD_STEP = 1e-2


# --------------------------------------------------------------------------
# C^k norms on the unit ball


def fd_weights(order: int, accuracy: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Central finite-difference offsets and weights for ``d^order/dx^order``."""
    half = (order + 1) // 2 - 1 + accuracy // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    vander = offsets[None, :] ** np.arange(offsets.size)[:, None]
    rhs = np.zeros(offsets.size)
    rhs[order] = math.factorial(order)
    return offsets, np.linalg.solve(vander, rhs)


def ck_errors(u: Callable, f: Callable, k: int, grid: int = 201,
              step: float = FD_STEP) -> list[float]:
    """``max_{x in grid} |D^g (u - f)(x)|`` for ``g = 0..k`` on ``[-1, 1]``.

    Derivatives use fourth-order central differences with step ``step``;
    both functions must be evaluable on ``[-1 - delta, 1 + delta]`` with
    ``delta`` the stencil half-width.
    """
    xs = np.linspace(-1.0, 1.0, grid)
    out = []
    for g in range(k + 1):
        if g == 0:
            diff = np.asarray(u(xs)) - np.asarray(f(xs))
        else:
            offsets, weights = fd_weights(g)
            pts = xs[:, None] + step * offsets[None, :]
            vals = np.asarray(u(pts.ravel())) - np.asarray(f(pts.ravel()))
            diff = vals.reshape(pts.shape) @ weights / step ** g
        out.append(float(np.max(np.abs(diff))))
    return out


def ck_error(u: Callable, f: Callable, k: int, grid: int = 201,
             step: float = FD_STEP) -> float:
    """Discrete ``||u - f||_{C^k(B_1)}``."""
    return max(ck_errors(u, f, k, grid, step))


def monomial(beta) -> Callable:
    """``x -> x^beta / beta!`` (one dimension)."""
    b = MultiIndex(beta)[0]
    scale = 1.0 / math.factorial(b)

    def f(x):
        return scale * np.asarray(x, dtype=float) ** b

    return f


# --------------------------------------------------------------------------
# Boundary growth of the extension of radial data


def growth_function(params: FracParams, profile: Bump | None = None,
                   quad: QuadSettings = DEFAULT_QUAD) -> SHarmonicFn:
    """Extension from ``B_1`` of ``psi_0(y) = profile(|y|)``; profile in ``(2, 3)``."""
    profile = profile or reference_bump()
    return SHarmonicFn(params, Ball(0.0, 1.0), radial_data(profile), quad)


def boundary_growth_constant(profile: Bump, params: FracParams,
                             quad: QuadSettings = DEFAULT_QUAD) -> float:
    """Coefficient ``kappa`` of ``psi(1 - eps) ~ kappa eps^s`` from the kernel.

    In one dimension the unit sphere is ``{-1, +1}`` and

        kappa = 2^s c(1,s) int_2^3 psi(rho) (rho^2-1)^(-s) [1/(rho-1) + 1/(rho+1)] drho.
    """
    lo, hi = profile.support
    if lo < 2.0 or hi > 3.0:
        raise InputError(f"profile support {profile.support} is not inside [2, 3]")
    s = params.s

    def g(rho):
        return profile(rho) * (rho * rho - 1.0) ** (-s) * (1.0 / (rho - 1.0) + 1.0 / (rho + 1.0))

    return 2.0 ** s * poisson_constant(params) * integrate(g, lo, hi, quad)


@dataclass(frozen=True)
class GrowthFit:
    kappa: float
    s: float
    correction: tuple[float, ...]
    eps: tuple[float, ...]
    values: tuple[float, ...]


def fit_boundary_growth(fn: SHarmonicFn, eps_grid: Sequence[float], correction: int = 1,
                        full_output: bool = False):
    """Fit ``log psi(1 - eps) = log kappa + s log eps + sum_i a_i eps^i``.

    ``psi(1 - eps) eps^(-s)`` is analytic in ``eps``, so the remainder is a
    power series in ``eps``; ``correction`` sets how many of its terms enter
    the least-squares model (0 gives the plain log-log line).

    Returns ``(kappa_fit, s_fit)``.
    """
    eps = np.asarray(sorted(float(e) for e in eps_grid))
    if eps.size < 6:
        raise InputError("need at least 6 eps values")
    if np.any(eps <= 0) or np.any(eps > 0.1):
        raise InputError("eps values must lie in (0, 0.1]")
    if eps.size < 2 + correction + 1:
        raise InputError("too few eps values for the requested correction order")
    x = fn.ball.center + fn.ball.radius * (1.0 - eps)
    vals = np.asarray(extend(fn, x), dtype=float)
    if np.any(vals <= 0):
        raise NumericalError("boundary values must be positive to fit a power law")
    cols = [np.ones_like(eps), np.log(eps)] + [eps ** i for i in range(1, correction + 1)]
    design = np.vstack(cols).T
    coef, *_ = np.linalg.lstsq(design, np.log(vals), rcond=None)
    kappa, s_fit = float(np.exp(coef[0])), float(coef[1])
    if full_output:
        return GrowthFit(kappa, s_fit, tuple(coef[2:]), tuple(eps), tuple(vals))
    return kappa, s_fit


# --------------------------------------------------------------------------
# Blow-up towards the half-line profile


def blowup_member(e: int, j: int, base: SHarmonicFn) -> SHarmonicFn:
    """``v_{e,j}(x) = j^s base(x/j - e)``, s-harmonic in ``B_j(j e)``."""
    if e not in (1, -1):
        raise InputError("direction e must be +1 or -1")
    if int(j) != j or j < 1:
        raise InputError("j must be a positive integer")
    return transform(base, 1.0 / j, -float(e), base.params.s)


BLOWUP_QUAD = QuadSettings(abs_tol=1e-9, rel_tol=1e-9, max_subdivisions=4000)


def blowup_l1_error(e: int, j: int, kappa: float, base: SHarmonicFn | None = None,
                    quad: QuadSettings = BLOWUP_QUAD, params: FracParams | None = None) -> float:
    """``int_{B_1(e)} |v_{e,j}(x) - kappa (x e)_+^s| dx``."""
    if base is None:
        base = growth_function(params or FracParams(0.5))
    s = base.params.s
    v = blowup_member(e, j, base)

    def g(x):
        return np.abs(np.asarray(v(x)) - kappa * np.maximum(x * e, 0.0) ** s)

    return float(integrate(g, e - 1.0, e + 1.0, quad))


# --------------------------------------------------------------------------
# Spanning derivative vectors with a finite dictionary


@dataclass(frozen=True)
class Dictionary:
    members: tuple[SHarmonicFn, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.members:
            raise InputError("dictionary must have at least one member")
        balls = {m.ball for m in self.members}
        if len(balls) != 1:
            raise InputError("dictionary members must share one ball")

    @property
    def ball(self) -> Ball:
        return self.members[0].ball

    @property
    def params(self) -> FracParams:
        return self.members[0].params

    def __len__(self):
        return len(self.members)


def dictionary_placements(count: int, seed: int | None = 0, mirror: bool = False):
    """Signed centres and half-widths for ``count`` unit-ball bumps.

    ``mirror=True`` lists exact mirror pairs ``(+c, w), (-c, w)``.  Otherwise
    signs alternate along the centre list so consecutive members sit on
    opposite sides at different distances, and centres are jittered by at
    most 0.04 with the given seed (``None`` disables jitter).
    """
    rng = np.random.default_rng(seed) if (seed is not None and not mirror) else None
    n_c = len(DICT_CENTERS)
    out = []
    for k in range(count):
        if mirror:
            pair = k // 2
            sign = 1.0 if k % 2 == 0 else -1.0
            c = DICT_CENTERS[pair % n_c]
            w = DICT_HALF_WIDTHS[(pair // n_c) % len(DICT_HALF_WIDTHS)]
        else:
            sign = 1.0 if k % 2 == 0 else -1.0
            c = DICT_CENTERS[k % n_c]
            w = DICT_HALF_WIDTHS[(k // (2 * n_c)) % len(DICT_HALF_WIDTHS)]
        if rng is not None:
            c = c + rng.uniform(-0.04, 0.04)
        out.append((sign * c, w))
    return out


def build_dictionary(params: FracParams, count: int, seed: int | None = 0, *,
                     mirror: bool = False, ball: Ball = Ball(0.0, 1.0),
                     quad: QuadSettings = DEFAULT_QUAD) -> Dictionary:
    """``count`` single-bump extensions from a common ball."""
    if int(count) != count or count < 1:
        raise InputError("count must be a positive integer")
    members, labels = [], []
    for c, w in dictionary_placements(count, seed, mirror):
        bump = Bump(ball.center + ball.radius * c, ball.radius * w, 1.0)
        members.append(SHarmonicFn(params, ball, ExteriorData((bump,)), quad))
        labels.append(f"bump(c={bump.center:.6g}, w={bump.half_width:.6g})")
    return Dictionary(tuple(members), tuple(labels))


def derivative_matrix(dictionary: Dictionary, p: float = 0.0, m: int = 0) -> np.ndarray:
    """Matrix whose column ``i`` holds ``D^a v_i(p)`` for ``a = 0..m``."""
    cols = parallel_map(lambda v: extend_derivatives(v, p, m).values, dictionary.members)
    return np.column_stack(cols)


def combine(dictionary: Dictionary, coefficients: Sequence[float]) -> SHarmonicFn:
    """The extension of ``sum_i c_i g_i`` as a single function."""
    bumps = []
    for member, c in zip(dictionary.members, coefficients):
        bumps.extend(replace(b, amplitude=b.amplitude * float(c)) for b in member.exterior.bumps)
    first = dictionary.members[0]
    return SHarmonicFn(first.params, first.ball, ExteriorData(tuple(bumps)), first.quad)


@dataclass(frozen=True)
class SpanSolution:
    coefficients: np.ndarray
    beta: MultiIndex
    achieved: DerivativeVector
    condition_number: float
    v: SHarmonicFn
    p: float = 0.0
    singular_values: tuple[float, ...] = ()

    @property
    def defect(self) -> float:
        target = np.zeros(self.achieved.length)
        target[self.beta.order] = 1.0
        return float(np.max(np.abs(self.achieved.values - target)))

    def to_dict(self) -> dict:
        return {
            "beta": list(self.beta),
            "p": self.p,
            "coefficients": [float(c) for c in self.coefficients],
            "achieved": [float(a) for a in self.achieved.values],
            "defect": self.defect,
            "condition_number": self.condition_number,
            "singular_values": list(self.singular_values),
            "support_radius": self.v.support_radius,
            "v": self.v.to_dict(),
        }


def span_solve(dictionary: Dictionary, beta, p: float = 0.0, *,
               span_tol: float = SPAN_TOL, rank_tol: float = RANK_TOL) -> SpanSolution:
    """Coefficients ``c`` with ``D^a v(p) = delta_{a beta}`` for ``|a| <= |beta|``.

    Solves ``min ||A c - e_beta||`` by a truncated SVD (rank-revealing); the
    minimum-norm solution is used.  The achieved derivative vector is
    recomputed from the combined exterior data.

    Raises
    ------
    RankDeficient
        If the numerical rank of the derivative matrix is below ``|beta|+1``.
    """
    beta = MultiIndex(beta)
    if beta.n != 1:
        raise NotImplementedError("spanning is implemented for n = 1")
    if beta.order > MAX_BETA:
        raise InputError(f"|beta| = {beta.order} exceeds the supported maximum {MAX_BETA}")
    m = beta.order
    A = derivative_matrix(dictionary, p, m)
    target = np.zeros(m + 1)
    target[m] = 1.0
    U, sig, Vt = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(sig > rank_tol * sig[0])) if sig.size and sig[0] > 0 else 0
    if rank < m + 1:
        raise RankDeficient(
            f"derivative matrix has numerical rank {rank} < {m + 1}; enlarge the dictionary")
    cond = float(sig[0] / sig[m])
    if cond > ILL_CONDITIONED:
        warnings.warn(f"derivative matrix condition number {cond:.3e}", IllConditioned)
    coeffs = Vt[:rank].T @ ((U[:, :rank].T @ target) / sig[:rank])
    v = combine(dictionary, coeffs)
    achieved = extend_derivatives(v, p, m)
    sol = SpanSolution(coeffs, beta, achieved, cond, v, p, tuple(float(x) for x in sig))
    if sol.defect > span_tol:
        raise NonConvergence(
            f"achieved derivatives miss the target by {sol.defect:.3e} > {span_tol}")
    return sol


# --------------------------------------------------------------------------
# Rescaling a spanning solution into a monomial approximant


def rescale(sol: SpanSolution, eta: float) -> SHarmonicFn:
    """``x -> eta^(-|beta|) v(eta x + p)``."""
    return transform(sol.v, eta, sol.p, sol.beta.order)


def rescale_for_monomial(sol: SpanSolution, k: int, budget: float, *,
                         eta0: float = 0.5, eta_floor: float = ETA_FLOOR,
                         grid: int = 201, full_output: bool = False):
    """Shrink ``eta`` geometrically until ``||u_eta - x^beta/beta!||_{C^k(B_1)} <= budget``.

    Returns the rescaled function, or ``(fn, eta, history)`` with
    ``full_output``; ``history`` lists ``(eta, measured error)``.
    """
    if not budget > 0:
        raise BudgetInfeasible(f"budget must be positive, got {budget}")
    target = monomial(sol.beta)
    history = []
    eta = eta0
    while eta >= eta_floor:
        u = rescale(sol, eta)
        err = ck_error(u, target, k, grid)
        history.append((eta, err))
        if err <= budget:
            return (u, eta, history) if full_output else u
        eta *= 0.5
    raise NonConvergence(
        f"eta reached {eta_floor:g} with C^{k} gap {history[-1][1]:.3e} > budget {budget:.3e}")


# --------------------------------------------------------------------------
# Sums of extensions and the end-to-end pipeline


@dataclass(frozen=True)
class SHarmonicSum:
    """Sum of extensions, each s-harmonic on a ball containing ``ball``."""

    pieces: tuple[SHarmonicFn, ...]
    params: FracParams
    ball: Ball = Ball(0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        for piece in self.pieces:
            if piece.params != self.params:
                raise InputError("all pieces must share the fractional order")
            reach = abs(piece.ball.center - self.ball.center) + self.ball.radius
            if reach > piece.ball.radius * (1 + 1e-12):
                raise InputError("every piece must be s-harmonic on the common ball")

    @property
    def support_radius(self) -> float:
        return max((p.support_radius for p in self.pieces), default=0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        comp = np.zeros_like(x)
        for piece in self.pieces:
            y = np.asarray(piece(x)) - comp
            t = total + y
            comp = (t - total) - y
            total = t
        return total if total.ndim else float(total)

    def derivatives(self, x: float, order: int) -> DerivativeVector:
        vals = np.zeros(order + 1)
        for piece in self.pieces:
            vals = vals + extend_derivatives(piece, x, order).values
        return DerivativeVector(order, vals)

    def breakpoints(self) -> list[float]:
        pts = set()
        for piece in self.pieces:
            pts.update(piece.breakpoints())
        return sorted(pts)

    def to_dict(self) -> dict:
        return {"s": self.params.s, "n": self.params.n,
                "ball": {"p": self.ball.center, "r": self.ball.radius},
                "pieces": [p.to_dict() for p in self.pieces]}


@dataclass
class ApproximationReport:
    method: str
    eps: float
    k: int
    etas: dict
    R_total: float
    errors: list
    residual: dict
    wall_time: float
    condition_numbers: dict = field(default_factory=dict)
    dropped_tail: float = 0.0
    polynomial_error: float = 0.0
    vanishes_outside: bool = True
    converged: bool = True

    @property
    def error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "eps": self.eps,
            "k": self.k,
            "error": self.error,
            "errors_by_order": {str(g): e for g, e in enumerate(self.errors)},
            "etas": self.etas,
            "R_total": self.R_total,
            "residual": self.residual,
            "condition_numbers": self.condition_numbers,
            "dropped_tail": self.dropped_tail,
            "polynomial_error": self.polynomial_error,
            "vanishes_outside": self.vanishes_outside,
            "converged": self.converged,
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def monomial_ck_norm(coefficient: float, power: int, k: int) -> float:
    """``||a x^power||_{C^k(B_1)} = |a| max_{g<=k} power!/(power-g)!``."""
    return abs(coefficient) * max(math.perm(power, g) for g in range(min(k, power) + 1))


def _split_polynomial(P: Polynomial, k: int, allowance: float):
    kept, dropped = {}, 0.0
    for (power,), a in sorted(P.coeffs.items()):
        if power > MAX_BETA:
            dropped += monomial_ck_norm(a, power, k)
        else:
            kept[power] = a
    if dropped > allowance:
        raise BudgetInfeasible(
            f"monomials of degree > {MAX_BETA} carry C^{k} norm {dropped:.3e} > {allowance:.3e}")
    return kept, dropped


def _zero_check(u, R: float, count: int = 10) -> bool:
    far = np.concatenate([np.linspace(R + 1e-9, 2 * R + 1, count // 2),
                          -np.linspace(R + 1e-9, 2 * R + 1, count - count // 2)])
    return bool(np.all(np.asarray(u(far)) == 0.0))


def approximate(f, k: int, eps: float, method: str = "taylor-rescale", *,
                params: FracParams = FracParams(0.5), quad: QuadSettings = DEFAULT_QUAD,
                seed: int | None = 0, mirror: bool = False, mu: float = 0.9, grid: int = 201,
                residual_points: int = 9, residual: bool = True):
    """s-harmonic ``u`` in ``B_1`` with ``||f - u||_{C^k(B_1)} <= eps``, vanishing
    outside a bounded interval.

    ``f`` is a :class:`Polynomial` or a vectorised callable; callables are
    first replaced by a polynomial with ``C^k`` error ``eps/4``.  With
    ``method="taylor-rescale"`` each monomial ``a x^b`` is matched by a
    spanning solution with ``D^g v(0) = delta_{gb}`` rescaled until its own
    share of the budget is met; monomials above degree 4 are dropped and
    charged to the budget.  ``method="global-lsq"`` fits dictionary
    coefficients to the ``C^k`` grid misfit directly.

    ``mirror=True`` uses mirror-pair dictionaries, so even targets give even
    ``u`` up to rounding.

    Returns ``(u, report)``.
    """
    if method not in ("taylor-rescale", "global-lsq"):
        raise InputError(f"unknown method {method!r}")
    if not eps > 0:
        raise InputError("eps must be positive")
    if int(k) != k or k < 0:
        raise InputError("k must be a nonnegative integer")
    start = time.perf_counter()
    if method == "global-lsq":
        u, report = _approximate_lsq(f, k, eps, params, quad, seed, mirror, grid)
    else:
        u, report = _approximate_taylor(f, k, eps, params, quad, seed, mirror, mu, grid)
    if residual:
        res = residual_report(u, np.linspace(-0.9, 0.9, residual_points), params, quad=quad)
        report.residual = res.to_dict()
    report.vanishes_outside = _zero_check(u, report.R_total)
    report.wall_time = time.perf_counter() - start
    return u, report


def _approximate_taylor(f, k, eps, params, quad, seed, mirror, mu, grid):
    if isinstance(f, Polynomial):
        P, poly_err = f, 0.0
        remaining = eps
    else:
        poly = weierstrass_approx(f, k, eps / 4, mu=mu, full_output=True)
        P, poly_err = poly.polynomial, poly.error
        remaining = eps - eps / 4
    kept, dropped = _split_polynomial(P, k, eps / 4)
    remaining -= dropped
    kept = {b: a for b, a in kept.items() if a != 0.0}
    pieces, etas, conds = [], {}, {}
    if kept:
        share = 0.9 * remaining / len(kept)
        for power, a in sorted(kept.items()):
            weight = a * math.factorial(power)
            dictionary = build_dictionary(params, 2 * (power + 1) + 4, seed, mirror=mirror,
                                          quad=quad)
            sol = span_solve(dictionary, (power,))
            budget = share / abs(weight)
            u_b, eta, _ = rescale_for_monomial(sol, k, budget, grid=grid, full_output=True)
            pieces.append(u_b.scaled(weight))
            etas[str(power)] = eta
            conds[str(power)] = sol.condition_number
    u = SHarmonicSum(tuple(pieces), params)
    errors = ck_errors(u, f, k, grid)
    report = ApproximationReport(
        method="taylor-rescale", eps=eps, k=k, etas=etas, R_total=u.support_radius,
        errors=errors, residual={}, wall_time=0.0, condition_numbers=conds,
        dropped_tail=dropped, polynomial_error=poly_err,
        converged=max(errors) <= eps)
    return u, report


LSQ_BALL = Ball(0.0, 1.25)


def _approximate_lsq(f, k, eps, params, quad, seed, mirror, grid, fit_points: int = 41,
                     ridge: float = 1e-12):
    dictionary = build_dictionary(params, 2 * len(DICT_CENTERS) * len(DICT_HALF_WIDTHS),
                                  seed, mirror=mirror, ball=LSQ_BALL, quad=quad)
    xs = np.linspace(-1.0, 1.0, fit_points)
    blocks = [np.zeros((fit_points, len(dictionary))) for _ in range(k + 1)]
    for i, member in enumerate(dictionary.members):
        for row, x in enumerate(xs):
            d = extend_derivatives(member, x, k).values
            for g in range(k + 1):
                blocks[g][row, i] = d[g]
    rhs = []
    if isinstance(f, Polynomial):
        for g in range(k + 1):
            rhs.append(np.asarray(f.derivative(g)(xs)) if g else np.asarray(f(xs)))
    else:
        for g in range(k + 1):
            if g == 0:
                rhs.append(np.asarray(f(xs), dtype=float))
            else:
                offsets, weights = fd_weights(g)
                pts = xs[:, None] + FD_STEP * offsets[None, :]
                rhs.append(np.asarray(f(pts.ravel())).reshape(pts.shape) @ weights / FD_STEP ** g)
    A = np.vstack(blocks)
    b = np.concatenate(rhs)
    lam = ridge * np.linalg.norm(A, 2) ** 2
    A_aug = np.vstack([A, math.sqrt(lam) * np.eye(A.shape[1])])
    b_aug = np.concatenate([b, np.zeros(A.shape[1])])
    coeffs, *_ = np.linalg.lstsq(A_aug, b_aug, rcond=None)
    u_single = combine(dictionary, coeffs)
    u = SHarmonicSum((u_single,), params)
    errors = ck_errors(u, f, k, grid)
    sig = np.linalg.svd(A, compute_uv=False)
    report = ApproximationReport(
        method="global-lsq", eps=eps, k=k, etas={}, R_total=u.support_radius,
        errors=errors, residual={}, wall_time=0.0,
        condition_numbers={"fit": float(sig[0] / sig[-1]) if sig[-1] > 0 else float("inf")},
        converged=max(errors) <= eps)
    return u, report
