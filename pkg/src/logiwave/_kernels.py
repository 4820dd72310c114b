"""Hot loops for the wavelet transform.

Two interchangeable implementations of the same reduction are kept here: a
numba ``@njit`` kernel and a pure-numpy version. The numba path is used when
numba imports and ``LOGIWAVE_DISABLE_NUMBA`` is unset (or ``0``).
"""
from __future__ import annotations

import os

import numpy as np

__all__ = ["BACKEND", "HAS_NUMBA", "cwt_matrix", "cwt_numpy", "psi_values"]

_DISABLED = os.environ.get("LOGIWAVE_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    import numba

    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "workqueue"
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA and not _DISABLED else "numpy"


def _psi_numpy(u, coeffs):
    # psi(u) = sum_k coeffs[k] * x**(k+1) * (1-x)**(n-k), x = expit(u)
    n = len(coeffs)
    e = np.exp(-np.abs(u))
    big = 1.0 / (1.0 + e)
    small = e / (1.0 + e)
    pos = u >= 0
    x = np.where(pos, big, small)
    y = np.where(pos, small, big)
    total = np.zeros_like(u)
    for k in range(n):
        total += coeffs[k] * x ** (k + 1) * y ** (n - k)
    return total


def psi_values(u, coeffs):
    """Evaluate the scaled logistic-derivative polynomial at ``u`` (numpy)."""
    return _psi_numpy(np.asarray(u, dtype=float), np.asarray(coeffs, dtype=float))


def cwt_numpy(d2, valid, scales, b_values, coeffs, support):
    """Reference numpy implementation of :func:`cwt_matrix`."""
    d2 = np.where(valid, d2, 0.0)
    n_idx = np.arange(d2.shape[0], dtype=float)
    out = np.empty((scales.shape[0], b_values.shape[0]))
    for i, a in enumerate(scales):
        lo = np.ceil(b_values - support * a)
        hi = np.floor(b_values + support * a)
        offs = n_idx[None, :] - b_values[:, None]
        mask = (n_idx[None, :] >= lo[:, None]) & (n_idx[None, :] <= hi[:, None]) & valid[None, :]
        psi = _psi_numpy(offs / a, coeffs) / np.sqrt(a)
        out[i] = np.sum(np.where(mask, d2[None, :] * psi, 0.0), axis=1)
    return out


if HAS_NUMBA:

    @numba.njit(cache=True, parallel=True)
    def _cwt_numba(d2, valid, scales, b_values, coeffs, support):
        n_data = d2.shape[0]
        n_scales = scales.shape[0]
        n_b = b_values.shape[0]
        order = coeffs.shape[0]
        out = np.zeros((n_scales, n_b))
        for i in numba.prange(n_scales):
            a = scales[i]
            inv_sqrt = 1.0 / np.sqrt(a)
            step = np.exp(1.0 / a)
            for j in range(n_b):
                b = b_values[j]
                lo = int(np.ceil(b - support * a))
                hi = int(np.floor(b + support * a))
                if lo < 0:
                    lo = 0
                if hi > n_data - 1:
                    hi = n_data - 1
                # r = exp((n - b) / a) advanced multiplicatively; |n - b| <= support * a
                # keeps r within [exp(-support), exp(support)].
                r = np.exp((lo - b) / a)
                acc = 0.0
                for n in range(lo, hi + 1):
                    if valid[n]:
                        y = 1.0 / (1.0 + r)
                        poly = coeffs[order - 1]
                        for k in range(order - 2, -1, -1):
                            poly = poly * r + coeffs[k]
                        yp = y
                        for _ in range(order):
                            yp *= y
                        acc += d2[n] * r * yp * poly
                    r *= step
                acc *= inv_sqrt
                out[i, j] = acc
        return out


def cwt_matrix(d2, valid, scales, b_values, coeffs, support=7.0, backend=None):
    """Dense transform ``out[i, j] = sum_n d2[n] * psi_{a_i, b_j}(n)``.

    Only samples with ``valid[n]`` and ``|n - b_j| <= support * a_i`` enter
    each sum. ``coeffs`` are the signed, normalized polynomial coefficients of
    the mother wavelet.
    """
    d2 = np.ascontiguousarray(d2, dtype=np.float64)
    valid = np.ascontiguousarray(valid, dtype=np.bool_)
    scales = np.ascontiguousarray(scales, dtype=np.float64)
    b_values = np.ascontiguousarray(b_values, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    backend = backend or BACKEND
    if backend == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        return _cwt_numba(d2, valid, scales, b_values, coeffs, float(support))
    if backend == "numpy":
        return cwt_numpy(d2, valid, scales, b_values, coeffs, float(support))
    raise ValueError(f"unknown backend {backend!r}")
