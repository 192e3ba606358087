"""Quadrature and finite-difference helpers on uniform grids.

The integral-equation solvers need running integrals of the forms

    B(y_i) = int_{y_i}^{y_N} q(w) dw,
    A(y_i) = int_{y_0}^{y_i} q(w) dw,
    W(y_i) = int_{y_i}^{y_N} (exp(2k (y_i - w)) - 1)/k * q(w) dw,   k >= 0,

at every node, to fourth order, without forming O(N^2) kernels.  All three
are computed by two-cell Simpson panels chained by parity; the exponentially
weighted one uses a constant-ratio linear recurrence evaluated by an IIR
filter, with expm1-based coefficients so the k -> 0 limit is exact.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import simpson
from scipy.signal import lfilter


def em1x(x: float) -> float:
    """expm1(x)/x, continuous through x = 0."""
    if abs(x) < 1e-5:
        return 1.0 + 0.5 * x + x * x / 6.0
    return math.expm1(x) / x


def suffix_integral(q: np.ndarray, h: float) -> np.ndarray:
    """B[i] = integral of q from y_i to y_N, O(h^4) for smooth q.

    The final cell is closed with a trapezoid; intended for integrands that
    are negligible at the right end of the grid.
    """
    m = q.shape[0]
    B = np.zeros(m)
    if m < 2:
        return B
    if m == 2:
        B[0] = 0.5 * h * (q[0] + q[1])
        return B
    # one-cell closure, O(h^4): int over the last cell from three nodes
    B[m - 2] = (h / 12.0) * (-q[m - 3] + 8.0 * q[m - 2] + 5.0 * q[m - 1])
    P = (h / 3.0) * (q[:-2] + 4.0 * q[1:-1] + q[2:])
    for r in (0, 1):
        ii = np.arange(r, m - 2, 2)
        if ii.size == 0:
            continue
        anchor = ii[-1] + 2
        B[ii] = np.cumsum(P[ii][::-1])[::-1] + B[anchor]
    return B


def prefix_integral(q: np.ndarray, h: float) -> np.ndarray:
    """A[i] = integral of q from y_0 to y_i, O(h^4) for smooth q."""
    m = q.shape[0]
    A = np.zeros(m)
    if m < 2:
        return A
    if m == 2:
        A[1] = 0.5 * h * (q[0] + q[1])
        return A
    A[1] = (h / 12.0) * (5.0 * q[0] + 8.0 * q[1] - q[2])
    P = (h / 3.0) * (q[:-2] + 4.0 * q[1:-1] + q[2:])
    for r in (0, 1):
        ii = np.arange(r, m - 2, 2)
        if ii.size == 0:
            continue
        A[ii + 2] = np.cumsum(P[ii]) + A[r]
    return A


def weighted_suffix_combo(q: np.ndarray, B: np.ndarray, h: float, k: float) -> np.ndarray:
    """W[i] = int_{y_i}^{y_N} (exp(2k(y_i - w)) - 1)/k * q(w) dw.

    `B` must be the plain suffix integral of q (from suffix_integral).  The
    recurrence W[i] = a2 W[i+2] + P[i] keeps every term O(1); the k -> 0
    limit (weight 2(y_i - w)) falls out of the expm1 coefficients.
    """
    m = q.shape[0]
    W = np.zeros(m)
    if m < 2:
        return W
    a2 = math.exp(-4.0 * k * h)
    phi1 = -2.0 * h * em1x(-2.0 * k * h)   # (e^{-2kh} - 1)/k
    phi2 = -4.0 * h * em1x(-4.0 * k * h)   # (e^{-4kh} - 1)/k
    if m == 2:
        W[0] = 0.5 * h * phi1 * q[1]
        return W
    # O(h^4) one-cell closure with the weight evaluated at the three nodes
    phi_plus = 2.0 * h * em1x(2.0 * k * h)  # (e^{+2kh} - 1)/k
    W[m - 2] = (h / 12.0) * (-phi_plus * q[m - 3] + 5.0 * phi1 * q[m - 1])
    P = (h / 3.0) * (4.0 * phi1 * q[1:-1] + phi2 * q[2:]) + phi2 * B[2:]
    for r in (0, 1):
        ii = np.arange(r, m - 2, 2)
        if ii.size == 0:
            continue
        anchor = ii[-1] + 2
        x = np.concatenate(([W[anchor]], P[ii][::-1]))
        W[ii] = lfilter([1.0], [1.0, -a2], x)[1:][::-1]
    return W


def deriv1(f: np.ndarray, h: float) -> np.ndarray:
    """First derivative, fourth order, one-sided stencils at the edges."""
    if f.shape[0] < 5:
        return np.gradient(f, h, edge_order=2)
    df = np.empty_like(f)
    df[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    df[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    df[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    df[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    df[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    return df


_D2_STENCIL = np.array([1.0 / 90, -3.0 / 20, 1.5, -49.0 / 18, 1.5, -3.0 / 20, 1.0 / 90])


def deriv2_decaying(f: np.ndarray, h: float) -> np.ndarray:
    """Second derivative, sixth order, assuming f ~ 0 beyond both ends.

    Zero-extends by three nodes; only valid for fields that decay at the
    grid boundary (tails below the target accuracy).
    """
    g = np.concatenate((np.zeros(3), f, np.zeros(3)))
    return np.convolve(g, _D2_STENCIL[::-1], mode="valid") / (h * h)


def integrate(f: np.ndarray, h: float) -> float:
    """Simpson integral over the whole grid."""
    return float(simpson(f, dx=h))


def norm_l1(f: np.ndarray, h: float) -> float:
    return float(simpson(np.abs(f), dx=h))


def norm_linf(f: np.ndarray) -> float:
    return float(np.max(np.abs(f)))


def norm_x(f: np.ndarray, h: float) -> float:
    """The L1 + Linf norm used by the kink fixed-point iteration."""
    return norm_l1(f, h) + norm_linf(f)
