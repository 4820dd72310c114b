"""Exact combinatorial groundwork and the logistic function.

Eulerian numbers and Bernoulli numbers are kept as Python integers and
:class:`fractions.Fraction` values; they are only converted to floats where an
evaluation needs them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "DEFAULT_MAX_ORDER",
    "ExactRational",
    "EulerianTable",
    "LogisticParams",
    "RiccatiParams",
    "eulerian",
    "eulerian_table",
    "bernoulli",
    "logistic_eval",
    "expit",
    "riccati_derivative",
    "logistic_unit_derivative",
]

DEFAULT_MAX_ORDER = 64

# Fraction already normalizes sign and gcd on construction.
ExactRational = Fraction

_EXP_CUTOFF = 700.0


class EulerianTable:
    """Triangle of Eulerian numbers ``<n, k>`` for ``1 <= n <= max_order``.

    Rows are built once with the recurrence
    ``<n, k> = (k + 1) <n-1, k> + (n - k) <n-1, k-1>`` and never mutated.
    """

    def __init__(self, max_order: int = DEFAULT_MAX_ORDER):
        if max_order < 1:
            raise ValueError("max_order must be >= 1")
        self.max_order = max_order
        rows = [(1,)]
        for n in range(2, max_order + 1):
            prev = rows[-1]
            row = []
            for k in range(n):
                left = (k + 1) * prev[k] if k < n - 1 else 0
                right = (n - k) * prev[k - 1] if k >= 1 else 0
                row.append(left + right)
            rows.append(tuple(row))
        self._rows = tuple(rows)

    def row(self, n: int) -> tuple[int, ...]:
        self._check(n)
        return self._rows[n - 1]

    def __call__(self, n: int, k: int) -> int:
        self._check(n)
        if k < 0 or k > n - 1:
            return 0
        return self._rows[n - 1][k]

    def _check(self, n: int) -> None:
        if not 1 <= n <= self.max_order:
            raise ValueError(f"order n={n} outside 1..{self.max_order}")


@lru_cache(maxsize=None)
def eulerian_table(max_order: int = DEFAULT_MAX_ORDER) -> EulerianTable:
    return EulerianTable(max_order)


def eulerian(n: int, k: int, max_order: int = DEFAULT_MAX_ORDER) -> int:
    """Number of permutations of ``{1..n}`` with exactly ``k`` ascents."""
    return eulerian_table(max_order)(n, k)


@lru_cache(maxsize=None)
def _bernoulli_list(max_index: int) -> tuple[Fraction, ...]:
    # B_m = -1/(m+1) * sum_{k<m} C(m+1, k) B_k, with B_1 = -1/2.
    values = [Fraction(1)]
    for m in range(1, max_index + 1):
        acc = sum(math.comb(m + 1, k) * values[k] for k in range(m))
        values.append(-acc / (m + 1))
    return tuple(values)


def bernoulli(m: int, max_index: int = DEFAULT_MAX_ORDER) -> Fraction:
    """Exact Bernoulli number ``B_m`` (convention ``B_1 = -1/2``).

    Parameters
    ----------
    m : int
        Index, ``0 <= m <= max_index``.
    max_index : int
        Largest index the cached table is allowed to reach.
    """
    if m < 0 or m > max_index:
        raise ValueError(f"Bernoulli index m={m} outside 0..{max_index}")
    return _bernoulli_list(max_index)[m]


@dataclass(frozen=True)
class LogisticParams:
    """Logistic curve ``x_max / (1 + exp(-s (t - t0)))``."""

    x_max: float
    s: float
    t0: float

    def __post_init__(self):
        if not self.x_max > 0:
            raise ValueError("x_max must be positive")
        if not self.s > 0:
            raise ValueError("s must be positive")


@dataclass(frozen=True)
class RiccatiParams:
    """Constant coefficients of ``x' = r (x - x1) (x - x2)``."""

    r: float
    x1: float
    x2: float

    def __post_init__(self):
        if self.r == 0:
            raise ValueError("r must be nonzero")


def expit(z):
    """Overflow-safe ``1 / (1 + exp(-z))`` for scalars or arrays."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    e = np.exp(-np.abs(z))
    out[pos] = 1.0 / (1.0 + e[pos])
    out[~pos] = e[~pos] / (1.0 + e[~pos])
    return out if out.ndim else float(out)


def logistic_eval(p: LogisticParams, t):
    """Evaluate the logistic curve; saturates to 0 or ``x_max`` far from ``t0``."""
    z = p.s * (np.asarray(t, dtype=float) - p.t0)
    out = p.x_max * expit(np.clip(z, -_EXP_CUTOFF, _EXP_CUTOFF))
    out = np.where(z < -_EXP_CUTOFF, 0.0, np.where(z > _EXP_CUTOFF, p.x_max, out))
    return out if out.ndim else float(out)


def riccati_derivative(n: int, q: RiccatiParams, x):
    """n-th time derivative of a Riccati solution, as a polynomial in ``x``.

    Returns ``r**n * sum_k <n,k> (x - x1)**(k+1) (x - x2)**(n-k)``.
    """
    if n < 2:
        raise ValueError("riccati_derivative requires n >= 2")
    row = eulerian_table().row(n)
    x = np.asarray(x, dtype=float)
    u = x - q.x1
    v = x - q.x2
    total = np.zeros_like(x)
    for k, e in enumerate(row):
        total = total + float(e) * u ** (k + 1) * v ** (n - k)
    out = q.r**n * total
    return out if out.ndim else float(out)


def logistic_unit_derivative(n: int, t):
    """n-th derivative of the standard logistic ``1 / (1 + exp(-t))``.

    Uses ``sum_k (-1)**k <n,k> x**(k+1) (1-x)**(n-k)`` with ``1 - x``
    evaluated directly as ``expit(-t)`` to avoid cancellation in the tails.
    """
    if n < 2:
        raise ValueError("logistic_unit_derivative requires n >= 2")
    row = eulerian_table().row(n)
    t = np.asarray(t, dtype=float)
    x = np.asarray(expit(t))
    y = np.asarray(expit(-t))
    total = np.zeros_like(t)
    for k, e in enumerate(row):
        sign = -1.0 if k % 2 else 1.0
        total = total + sign * float(e) * x ** (k + 1) * y ** (n - k)
    return total if total.ndim else float(total)
