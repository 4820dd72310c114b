"""Normalized logistic wavelets and their quadrature self-checks.

The mother wavelet of order ``n >= 2`` is the n-th derivative of the standard
logistic function scaled to unit L2 norm:

    psi_n(t) = x^(n)(t) / sqrt(|B_2n|),    x(t) = 1 / (1 + exp(-t))
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numeric_core import bernoulli, eulerian_table, expit, logistic_unit_derivative

__all__ = [
    "ChildParams",
    "LogisticWavelet",
    "NonConvergenceError",
    "QuadratureResult",
    "QuadratureSettings",
    "WaveletSample",
    "admissibility_integral",
    "child_eval",
    "grosset_veselov_check",
    "grosset_veselov_rhs",
    "l2_norm_squared",
    "logistic_derivative",
    "mother_eval",
    "psi2_closed_form",
    "sample_mother",
    "simpson",
    "unnormalized_l2_norm_squared",
]


class NonConvergenceError(ArithmeticError):
    """Quadrature hit its refinement limit before reaching the tolerance."""

    def __init__(self, message, value, error):
        super().__init__(message)
        self.value = value
        self.error = error


@dataclass(frozen=True)
class LogisticWavelet:
    order: int = 2
    norm_constant: float = field(init=False)

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be >= 2")
        magnitude = abs(bernoulli(2 * self.order))
        object.__setattr__(self, "norm_constant", 1.0 / math.sqrt(magnitude))

    @property
    def coefficients(self) -> np.ndarray:
        """Signed, normalized coefficients of ``x**(k+1) (1-x)**(n-k)``."""
        row = eulerian_table().row(self.order)
        return np.array(
            [self.norm_constant * (-1.0 if k % 2 else 1.0) * float(e) for k, e in enumerate(row)]
        )


@dataclass(frozen=True)
class ChildParams:
    a: float
    b: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("scale a must be positive")


@dataclass(frozen=True)
class QuadratureSettings:
    """Settings for composite Simpson integration over ``[-half_width, half_width]``.

    ``half_width=None`` selects ``7 + 4 n`` for a wavelet of order ``n``.
    """

    half_width: float | None = None
    tolerance: float = 1e-11
    max_refinements: int = 14

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.half_width is not None and self.half_width < 7:
            raise ValueError("half_width must be >= 7")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")

    def width_for(self, order: int) -> float:
        return float(self.half_width) if self.half_width is not None else 7.0 + 4.0 * order


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    intervals: int
    tail: float = 0.0


@dataclass(frozen=True)
class WaveletSample:
    t: np.ndarray
    psi: np.ndarray


def simpson(f, lo, hi, tolerance=1e-11, max_refinements=14, initial_intervals=64):
    """Composite Simpson rule, halving the step until estimates settle.

    ``f`` must accept a numpy array. The returned value carries one
    Richardson correction; ``error`` is the magnitude of that correction.
    """
    m = initial_intervals
    t = np.linspace(lo, hi, m + 1)
    fx = f(t)
    h = (hi - lo) / m
    prev = h / 3.0 * (fx[0] + fx[-1] + 4.0 * fx[1:-1:2].sum() + 2.0 * fx[2:-1:2].sum())
    for _ in range(max_refinements):
        m *= 2
        h = (hi - lo) / m
        mid = f(lo + h * np.arange(1, m, 2))
        new_fx = np.empty(m + 1)
        new_fx[0::2] = fx
        new_fx[1::2] = mid
        fx = new_fx
        cur = h / 3.0 * (fx[0] + fx[-1] + 4.0 * fx[1:-1:2].sum() + 2.0 * fx[2:-1:2].sum())
        diff = cur - prev
        if abs(diff) < tolerance:
            return QuadratureResult(cur + diff / 15.0, abs(diff) / 15.0, m)
        prev = cur
    raise NonConvergenceError(
        f"Simpson rule did not reach tolerance {tolerance:g} after {max_refinements} refinements",
        prev,
        abs(diff),
    )


def logistic_derivative(n: int, t):
    """n-th derivative (``n >= 1``) of the unnormalized standard logistic."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        t = np.asarray(t, dtype=float)
        out = np.asarray(expit(t)) * np.asarray(expit(-t))
        return out if out.ndim else float(out)
    return logistic_unit_derivative(n, t)


def mother_eval(w: LogisticWavelet, t):
    return w.norm_constant * np.asarray(logistic_unit_derivative(w.order, t))


def psi2_closed_form(t):
    """``sqrt(30) (e^{-2t} - e^{-t}) / (1 + e^{-t})**3``, written overflow-free for t < 0."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-np.abs(t))
    sqrt30 = math.sqrt(30.0)
    # For t < 0 multiply numerator and denominator by e^{3t}.
    pos = sqrt30 * (e * e - e) / (1.0 + e) ** 3
    neg = sqrt30 * (e - e * e) / (1.0 + e) ** 3
    out = np.where(t >= 0, pos, neg)
    return out if out.ndim else float(out)


def child_eval(w: LogisticWavelet, c: ChildParams, t):
    """Dilated and translated wavelet ``psi((t - b) / a) / sqrt(a)``."""
    if not c.a > 0:
        raise ValueError("scale a must be positive")
    u = (np.asarray(t, dtype=float) - c.b) / c.a
    return mother_eval(w, u) / math.sqrt(c.a)


def l2_norm_squared(w: LogisticWavelet, q: QuadratureSettings = QuadratureSettings()) -> QuadratureResult:
    L = q.width_for(w.order)
    return simpson(lambda t: mother_eval(w, t) ** 2, -L, L, q.tolerance, q.max_refinements)


def unnormalized_l2_norm_squared(n: int, q: QuadratureSettings = QuadratureSettings()) -> QuadratureResult:
    """Integral of the squared n-th logistic derivative; equals ``|B_2n|``."""
    L = q.width_for(n)
    return simpson(lambda t: logistic_derivative(n, t) ** 2, -L, L, q.tolerance, q.max_refinements)


def admissibility_integral(w: LogisticWavelet, q: QuadratureSettings = QuadratureSettings(), tails=True) -> QuadratureResult:
    """Integral of ``psi_n`` over the real line.

    The interval ``[-L, L]`` is integrated numerically. With ``tails`` the two
    half-lines beyond it are added exactly through the antiderivative
    ``x^(n-1)``, which decays like ``exp(-L)`` and is not negligible for odd
    ``n - 1`` at moderate ``L``.
    """
    L = q.width_for(w.order)
    res = simpson(lambda t: mother_eval(w, t), -L, L, q.tolerance, q.max_refinements)
    if not tails:
        return res
    anti = logistic_derivative(w.order - 1, np.array([-L, L]))
    tail = w.norm_constant * float(anti[0] - anti[1])
    return QuadratureResult(res.value + tail, res.error, res.intervals, tail)


def grosset_veselov_rhs(n: int) -> float:
    """``(-1)**(n-1) 2**(2n+1) B_2n`` as a float (computed exactly first)."""
    return float((-1) ** (n - 1) * 2 ** (2 * n + 1) * bernoulli(2 * n))


def _sech2(t):
    e = np.exp(-2.0 * np.abs(t))
    return 4.0 * e / (1.0 + e) ** 2


def _central_difference(f, m, t, h):
    acc = np.zeros_like(t)
    for j in range(m + 1):
        acc += (-1) ** j * math.comb(m, j) * f(t + (m / 2.0 - j) * h)
    return acc / h**m


def _sech2_derivative_fd(m, t, h):
    if m == 0:
        return _sech2(t)
    d0 = _central_difference(_sech2, m, t, h)
    d1 = _central_difference(_sech2, m, t, h / 2)
    d2 = _central_difference(_sech2, m, t, h / 4)
    r0 = (4.0 * d1 - d0) / 3.0
    r1 = (4.0 * d2 - d1) / 3.0
    return (16.0 * r1 - r0) / 15.0


def _sech2_derivative_chain(m, t):
    # sech^2 t = 4 x'(2t)  =>  d^m/dt^m sech^2 t = 2**(m+2) x^(m+1)(2t)
    return 2.0 ** (m + 2) * np.asarray(logistic_derivative(m + 1, 2.0 * np.asarray(t)))


def grosset_veselov_check(n: int, q: QuadratureSettings = QuadratureSettings(), method="chain", fd_step=1e-2):
    """Quadrature of ``(d^{n-1}/dt^{n-1} sech^2 t)^2`` against its closed form.

    Parameters
    ----------
    n : int
        ``n >= 1``.
    method : {"chain", "finite-difference"}
        ``"chain"`` differentiates through ``sech^2 t = 4 x'(2t)`` and the
        Eulerian polynomial; ``"finite-difference"`` differentiates
        ``sech^2`` directly with central differences and two Richardson
        levels, independent of the Eulerian route (``n <= 8``).

    Returns
    -------
    (lhs, rhs) : tuple of float
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m = n - 1
    if method == "chain":
        deriv = lambda t: _sech2_derivative_chain(m, t)  # noqa: E731
    elif method == "finite-difference":
        if n > 8:
            raise ValueError("finite-difference route supports n <= 8")
        deriv = lambda t: _sech2_derivative_fd(m, t, fd_step)  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    L = q.width_for(n)
    res = simpson(lambda t: deriv(t) ** 2, -L, L, q.tolerance, q.max_refinements)
    return res.value, grosset_veselov_rhs(n)


def sample_mother(w: LogisticWavelet, lower: float, upper: float, count: int) -> WaveletSample:
    """Mother wavelet on ``count`` equally spaced points of ``[lower, upper]``."""
    if count < 2:
        raise ValueError("count must be >= 2")
    if not lower < upper:
        raise ValueError("lower must be < upper")
    t = np.linspace(lower, upper, count)
    return WaveletSample(t, np.asarray(mother_eval(w, t)))
