"""Multi-indices, derivative vectors and truncated power-series arithmetic."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


class MultiIndex(tuple):
    """Tuple of nonnegative integers ``(a_1, ..., a_n)``."""

    def __new__(cls, entries):
        if isinstance(entries, (int, np.integer)):
            entries = (int(entries),)
        entries = tuple(int(a) for a in entries)
        if not entries or any(a < 0 for a in entries):
            raise InputError(f"multi-index needs nonnegative entries, got {entries}")
        return super().__new__(cls, entries)

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(a) for a in self)

    @property
    def n(self) -> int:
        return len(self)

    def __repr__(self):
        return f"MultiIndex{tuple(self)}"


def graded_indices(n: int, order: int) -> list[MultiIndex]:
    """All multi-indices of length ``n`` with ``|alpha| <= order``, graded.

    Within one total order the indices are listed lexicographically
    (descending in the first entry).
    """
    out = []
    for total in range(order + 1):
        for combo in itertools.product(range(total, -1, -1), repeat=n):
            if sum(combo) == total:
                out.append(MultiIndex(combo))
    return out


def jet_length(n: int, order: int) -> int:
    """Number of ordered derivative slots ``sum_{j<=order} n**j``."""
    return sum(n ** j for j in range(order + 1))


@dataclass(frozen=True)
class DerivativeVector:
    """Derivatives ``D^alpha v(x)`` for all ``|alpha| <= order`` (one dimension).

    ``values[k]`` holds the k-th derivative.
    """

    order: int
    values: np.ndarray
    n: int = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if self.n != 1:
            raise InputError("derivative vectors are implemented for n = 1 only")
        if values.shape != (jet_length(self.n, self.order),):
            raise InputError(
                f"expected {jet_length(self.n, self.order)} entries, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def length(self) -> int:
        return jet_length(self.n, self.order)

    def __getitem__(self, alpha) -> float:
        k = MultiIndex(alpha).order
        return float(self.values[k])

    def __len__(self):
        return self.length

    def as_dict(self) -> dict:
        return {str(k): float(v) for k, v in enumerate(self.values)}


def power_series_pow(q: np.ndarray, alpha: float, order: int) -> np.ndarray:
    """Taylor coefficients of ``q(h)**alpha`` up to ``h**order``.

    ``q`` holds the Taylor coefficients of the base along its first axis
    (``q[0]`` must be positive); trailing axes broadcast.  Uses the
    recurrence obtained from ``q F' = alpha q' F``.
    """
    q = np.asarray(q, dtype=float)
    out = np.zeros((order + 1,) + q.shape[1:])
    out[0] = q[0] ** alpha
    for m in range(1, order + 1):
        acc = np.zeros(q.shape[1:])
        for k in range(1, min(m, q.shape[0] - 1) + 1):
            acc = acc + (alpha * k - (m - k)) * q[k] * out[m - k]
        out[m] = acc / (m * q[0])
    return out


def leibniz(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Derivatives of ``A*B`` from the derivative arrays of ``A`` and ``B``."""
    out = np.zeros((order + 1,) + np.broadcast(a[0], b[0]).shape)
    for k in range(order + 1):
        for j in range(k + 1):
            out[k] = out[k] + math.comb(k, j) * a[j] * b[k - j]
    return out
