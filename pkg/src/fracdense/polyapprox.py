"""Constructive polynomial approximation in C^k by a truncated Gaussian mollifier.

A target ``f`` (cut off smoothly to a compact support) is convolved with

    Q(x) = (pi eta)^(-n/2) sum_{j<=J} (-1)^j |x|^(2j) / (j! eta^j),

the degree-``2J`` Taylor truncation of the heat kernel
``G(x) = (pi eta)^(-n/2) exp(-|x|^2 / eta)``.  Since ``Q`` is a polynomial so
is ``P = f * Q``; as ``eta -> 0`` (and ``J`` grows accordingly) ``P -> f`` in
``C^k`` of the unit ball.

The monomial expansion of ``f * Q`` cancels catastrophically (terms of size
``exp((1+R)^2/eta)``), so the moments and the binomial re-expansion are done
in extended precision.  The target is sampled once on a composite
Gauss-Legendre rule; the weighted samples define a discrete measure whose
convolution with ``Q`` is formed exactly (to the working precision) and only
the final coefficients are rounded to double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import gmpy2
import numpy as np
from scipy import optimize, special

from .errors import InputError, NonConvergence, OverflowRisk
from .jets import MultiIndex
from .quadrature import DEFAULT_QUAD, QuadSettings
from .serialization import dumps

GAUSS_B3_RADIUS_SQ = 9.0
DEFAULT_MU = 0.25
_LOG_MAX = 700.0


class Polynomial:
    """Polynomial with real coefficients over multi-indices.

    Evaluation is vectorised; for ``n > 1`` points carry the coordinates on
    the last axis.
    """

    def __init__(self, coeffs: Mapping | Sequence | None = None, n: int = 1):
        self.n = int(n)
        items = {}
        if coeffs is None:
            coeffs = {}
        if isinstance(coeffs, Mapping):
            pairs = coeffs.items()
        else:
            pairs = enumerate(coeffs) if self.n == 1 else coeffs
        for alpha, value in pairs:
            alpha = MultiIndex(alpha)
            if alpha.n != self.n:
                raise InputError(f"multi-index {alpha} does not match n={self.n}")
            value = float(value)
            if not math.isfinite(value):
                raise InputError(f"non-finite coefficient for {alpha}")
            if value != 0.0:
                items[alpha] = items.get(alpha, 0.0) + value
        self.coeffs = {a: v for a, v in items.items() if v != 0.0}

    @classmethod
    def monomial(cls, beta, scale: float = 1.0) -> "Polynomial":
        beta = MultiIndex(beta)
        return cls({beta: scale}, n=beta.n)

    @property
    def degree(self) -> int:
        return max((a.order for a in self.coeffs), default=0)

    def dense(self) -> np.ndarray:
        """Coefficient array indexed by power (``n = 1``)."""
        if self.n != 1:
            raise NotImplementedError("dense form exists for n = 1 only")
        out = np.zeros(self.degree + 1)
        for a, v in self.coeffs.items():
            out[a[0]] = v
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.n == 1:
            out = np.polynomial.polynomial.polyval(x, self.dense())
            return out if np.ndim(out) else float(out)
        out = np.zeros(x.shape[:-1])
        for a, v in self.coeffs.items():
            out = out + v * np.prod(x ** np.asarray(a), axis=-1)
        return out

    def derivative(self, order: int = 1) -> "Polynomial":
        if self.n != 1:
            raise NotImplementedError("derivative implemented for n = 1")
        out = {}
        for (p,), v in self.coeffs.items():
            if p >= order:
                out[(p - order,)] = v * math.perm(p, order)
        return Polynomial(out)

    def scaled(self, factor: float) -> "Polynomial":
        return Polynomial({a: v * factor for a, v in self.coeffs.items()}, self.n)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        merged = dict(self.coeffs)
        for a, v in other.coeffs.items():
            merged[a] = merged.get(a, 0.0) + v
        return Polynomial(merged, self.n)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scaled(-1.0)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.n == other.n and self.coeffs == other.coeffs

    def __repr__(self):
        terms = sorted(self.coeffs.items())
        return f"Polynomial(n={self.n}, {', '.join(f'{tuple(a)}: {v:.6g}' for a, v in terms)})"

    def to_dict(self) -> dict:
        if self.n == 1:
            coeffs = [[a[0], v] for a, v in sorted(self.coeffs.items())]
        else:
            coeffs = [[list(a), v] for a, v in sorted(self.coeffs.items())]
        return {"n": self.n, "coeffs": coeffs}

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "Polynomial":
        try:
            n = int(data.get("n", 1))
            pairs = [(tuple(a) if isinstance(a, list) else (int(a),), float(v))
                     for a, v in data["coeffs"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed polynomial: {exc}") from exc
        return cls(dict(pairs), n=n)


@dataclass(frozen=True)
class MollifierPlan:
    eta: float
    J: int
    k: int
    R_gauss: float
    n: int = 1

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise InputError(f"eta must lie in (0, 1), got {self.eta}")
        if int(self.J) != self.J or self.J < 1:
            raise InputError("J must be a positive integer")

    @property
    def log_tail(self) -> float:
        """``log sum_{j>J} 9^j / (j! eta^j)``."""
        return log_exp_tail(GAUSS_B3_RADIUS_SQ / self.eta, self.J)

    @property
    def tail_threshold_log(self) -> float:
        return -1.0 / math.sqrt(self.eta)

    def satisfies_tail_bound(self) -> bool:
        return self.log_tail <= self.tail_threshold_log

    def to_dict(self) -> dict:
        return {"eta": self.eta, "J": self.J, "k": self.k, "R_gauss": self.R_gauss,
                "n": self.n, "log_tail": self.log_tail,
                "log_tail_threshold": self.tail_threshold_log}


def log_exp_tail(a: float, J: int) -> float:
    """``log sum_{j>J} a^j / j!`` by log-sum-exp over the decaying terms."""
    jmax = int(max(J + 50, math.ceil(math.e ** 2 * a) + 50))
    j = np.arange(J + 1, jmax + 1)
    logs = j * math.log(a) - special.gammaln(j + 1)
    return float(special.logsumexp(logs))


def gaussian_tail_mass(R: float, n: int = 1) -> float:
    """``int_{|z|>R} exp(-|z|^2) dz`` in ``R^n``."""
    return math.pi ** (n / 2) * float(special.gammaincc(n / 2, R * R))


def gaussian_cutoff(eps: float, n: int = 1) -> float:
    """Smallest ``R`` with Gaussian tail mass outside ``B_R`` at most ``eps``."""
    if gaussian_tail_mass(0.0, n) <= eps:
        return 0.0
    return float(optimize.brentq(lambda R: gaussian_tail_mass(R, n) - eps, 0.0, 50.0,
                                 xtol=1e-14))


def truncation_order(eta: float) -> int:
    """Smallest ``J`` with ``sum_{j>J} 9^j/(j! eta^j) <= exp(-1/sqrt(eta))``."""
    a = GAUSS_B3_RADIUS_SQ / eta
    target = -1.0 / math.sqrt(eta)
    jmax = int(math.ceil(math.e ** 2 * a) + 100)
    j = np.arange(0, jmax + 1)
    logs = j * math.log(a) - special.gammaln(j + 1)
    # suffix[i] = log sum_{j>=i} term_j
    suffix = np.logaddexp.accumulate(logs[::-1])[::-1]
    # tail beyond J is suffix[J+1]
    ok = np.nonzero(suffix[1:] <= target)[0]
    if ok.size == 0:
        raise NonConvergence(f"no truncation order found for eta={eta}")
    return max(1, int(ok[0]))


def choose_plan(eps: float, k: int, eta: float = 0.5, n: int = 1) -> MollifierPlan:
    """Plan for a given ``eta``: Gaussian cutoff radius and truncation order.

    ``J`` satisfies the tail bound on ``B_3`` (terms weighted by ``|x|^(2j) <= 9^j``)
    so that ``|G - Q| <= exp(-1/sqrt(eta))`` there.  The caller shrinks ``eta``
    until the measured ``C^k`` error is small enough.
    """
    if not eps > 0:
        raise InputError("eps must be positive")
    if k < 0:
        raise InputError("k must be nonnegative")
    return MollifierPlan(eta=eta, J=truncation_order(eta), k=int(k),
                         R_gauss=gaussian_cutoff(eps, n), n=n)


def gaussian_kernel(plan: MollifierPlan, x):
    x = np.asarray(x, dtype=float)
    return (math.pi * plan.eta) ** (-0.5) * np.exp(-x * x / plan.eta)


def mollifier_polynomial(plan: MollifierPlan) -> Polynomial:
    """``Q`` with coefficient ``(pi eta)^(-1/2) (-1)^j / (j! eta^j)`` on ``x^(2j)``."""
    if plan.n != 1:
        raise NotImplementedError("mollifier polynomial assembled for n = 1")
    coeffs = {}
    lead = -0.5 * math.log(math.pi * plan.eta)
    for j in range(plan.J + 1):
        logc = lead - math.lgamma(j + 1) - j * math.log(plan.eta)
        if logc > _LOG_MAX:
            raise OverflowRisk(f"coefficient of x^{2 * j} overflows (log {logc:.1f})")
        coeffs[(2 * j,)] = (-1) ** j * math.exp(logc)
    return Polynomial(coeffs)


def _mollifier_coeffs_hp(plan: MollifierPlan):
    eta = gmpy2.mpfr(plan.eta)
    lead = 1 / gmpy2.sqrt(gmpy2.const_pi() * eta)
    out = []
    term = lead
    for j in range(plan.J + 1):
        if j:
            term = -term / (j * eta)
        out.append(term)
    return out


def composite_nodes(lo: float, hi: float, width: float, order: int,
                    breakpoints: Sequence[float] = ()):
    """Composite Gauss-Legendre nodes and weights with panels of at most ``width``."""
    edges = sorted({lo, hi, *(b for b in breakpoints if lo < b < hi)})
    gx, gw = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, int(math.ceil((b - a) / width)))
        cuts = np.linspace(a, b, m + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[1:] + cuts[:-1])
        xs.append((mid[:, None] + half[:, None] * gx[None, :]).ravel())
        ws.append((half[:, None] * gw[None, :]).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def convolve_to_polynomial(f: Callable, plan: MollifierPlan,
                           quad: QuadSettings = DEFAULT_QUAD, *,
                           support: tuple[float, float] = (-2.0, 2.0),
                           breakpoints: Sequence[float] = (),
                           eval_radius: float = 1.0) -> Polynomial:
    """``P(x) = int f(y) Q(x - y) dy`` as explicit coefficients.

    Uses ``(x - y)^(2j) = sum_l C(2j, l) x^l (-y)^(2j-l)`` so the coefficient
    of ``x^l`` is ``(-1)^l sum_j q_j C(2j, l) m_(2j-l)`` with moments
    ``m_i = int f(y) y^i dy``.  The moments come from a composite
    Gauss-Legendre rule fine enough to resolve the Gaussian of width
    ``sqrt(eta/2)``; the sums run in extended precision chosen from the
    cancellation bound ``exp((eval_radius + max|y|)^2 / eta)``.
    """
    if plan.n != 1:
        raise NotImplementedError("convolution implemented for n = 1")
    lo, hi = support
    if not lo < hi:
        raise InputError("support must be an interval lo < hi")
    breakpoints = tuple(breakpoints) + tuple(getattr(f, "breakpoints", ()))
    width = min(0.1, math.sqrt(plan.eta / 2.0))
    ys, ws = composite_nodes(lo, hi, width, max(quad.base_rule_order, 20), breakpoints)
    fv = np.asarray(f(ys), dtype=float)
    if not np.all(np.isfinite(fv)):
        raise InputError("target is not finite on its support")
    keep = fv != 0.0
    ys, wf = ys[keep], (ws * fv)[keep]
    if wf.size == 0:
        return Polynomial()

    ymax = float(np.max(np.abs(ys)))
    log10_mag = ((eval_radius + ymax) ** 2 / plan.eta
                 + math.log(max(float(np.sum(np.abs(wf))), 1e-300))
                 - 0.5 * math.log(math.pi * plan.eta)) / math.log(10.0)
    digits = max(40, int(math.ceil(log10_mag)) + 35)
    degree = 2 * plan.J
    with gmpy2.context(gmpy2.get_context(), precision=int(digits * 3.33) + 16):
        moments = [gmpy2.mpfr(0)] * (degree + 1)
        for y, w in zip(ys.tolist(), wf.tolist()):
            yy = gmpy2.mpfr(y)
            pw = gmpy2.mpfr(w)
            for i in range(degree + 1):
                moments[i] += pw
                pw *= yy
        # l! p_l = (-1)^l sum_m [(l+m)! q_((l+m)/2)] [m_m / m!], l+m even
        q = _mollifier_coeffs_hp(plan)
        scaled_q = [gmpy2.mpfr(0)] * (2 * degree + 1)
        for j, qj in enumerate(q):
            scaled_q[2 * j] = qj * gmpy2.fac(2 * j)
        scaled_m = [mom / gmpy2.fac(i) for i, mom in enumerate(moments)]
        coeffs = {}
        for l in range(degree + 1):
            acc = gmpy2.mpfr(0)
            for m in range(l % 2, degree - l + 1, 2):
                acc += scaled_q[l + m] * scaled_m[m]
            acc /= gmpy2.fac(l)
            value = float(acc if l % 2 == 0 else -acc)
            if not math.isfinite(value):
                raise OverflowRisk(f"coefficient of x^{l} is not representable")
            if value != 0.0:
                coeffs[(l,)] = value
    return Polynomial(coeffs)


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def cutoff(x, inner: float, outer: float):
    """1 on ``|x| <= inner``, 0 on ``|x| >= outer``, smooth in between."""
    x = np.abs(np.asarray(x, dtype=float))
    return 1.0 - smooth_step((x - inner) / (outer - inner))


def cut_off_target(f: Callable, mu: float = DEFAULT_MU) -> Callable:
    """Compactly supported version of ``f``: equal to ``f`` on ``B_{1+mu/2}``,
    zero outside ``B_{1+mu}``; ``f`` is only evaluated inside ``B_{1+mu}``.

    The returned function carries ``breakpoints`` (the ends of the
    transition layers) so quadrature panels can align with them.
    """
    inner, outer = 1.0 + 0.5 * mu, 1.0 + mu

    def g(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        live = np.abs(x) < outer
        if np.any(live):
            out[live] = np.asarray(f(x[live]), dtype=float) * cutoff(x[live], inner, outer)
        return out

    g.breakpoints = (-outer, -inner, inner, outer)
    return g


@dataclass
class WeierstrassResult:
    polynomial: Polynomial
    plan: MollifierPlan
    error: float
    history: list = field(default_factory=list)


def weierstrass_approx(f: Callable, k: int, eps: float, *, mu: float = DEFAULT_MU,
                       eta0: float = 0.5, max_halvings: int = 6,
                       quad: QuadSettings = DEFAULT_QUAD, grid: int = 201,
                       full_output: bool = False):
    """Polynomial ``P`` with measured ``||f - P||_{C^k(B_1)} <= eps``.

    ``f`` must be vectorised and ``C^k`` on ``[-1-mu, 1+mu]``.  ``eta`` is
    halved from ``eta0`` until the error measured by :func:`ck_error` passes.
    The cut-off transition sits in ``[1+mu/2, 1+mu]``, so the Gaussian must be
    narrow compared with ``mu/2``: small ``mu`` forces small ``eta`` and a
    large truncation order.  Targets defined on the whole line should pass
    ``mu=0.9``.

    Raises
    ------
    NonConvergence
        If ``max_halvings`` halvings do not reach ``eps``.
    """
    from .density_engine import ck_error

    if mu < DEFAULT_MU:
        raise InputError(f"target must be given on [-1-mu, 1+mu] with mu >= {DEFAULT_MU}")
    g = cut_off_target(f, mu)
    edge = 1.0 + mu
    history = []
    eta = eta0
    for _ in range(max_halvings + 1):
        plan = choose_plan(eps, k, eta)
        P = convolve_to_polynomial(g, plan, quad, support=(-edge, edge))
        err = ck_error(P, f, k, grid)
        history.append((eta, err))
        if err <= eps:
            if full_output:
                return WeierstrassResult(P, plan, err, history)
            return P
        # Rounding floor of the monomial coefficients on [-1, 1].
        floor = float(np.sum(np.abs(P.dense()))) * P.degree ** k * np.finfo(float).eps
        if floor > eps:
            raise NonConvergence(
                f"coefficients of P reach {floor / np.finfo(float).eps:.3e}; double precision "
                f"cannot represent a C^{k} accuracy of {eps} (eta={eta:.3g})")
        eta *= 0.5
    raise NonConvergence(
        f"C^{k} error {history[-1][1]:.3e} still above {eps} after eta={history[-1][0]:.3g}")
