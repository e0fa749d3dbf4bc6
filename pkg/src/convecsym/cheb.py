"""Chebyshev helpers: collocation nodes, differentiation, modal boundary bases."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as _cheb


def lobatto(n: int, a: float, b: float):
    """Chebyshev-Gauss-Lobatto nodes (ascending) and differentiation matrix on [a, b]."""
    if n < 4:
        raise ValueError("need at least 4 collocation points")
    big = n - 1
    x = np.cos(np.pi * np.arange(big + 1) / big)
    c = np.hstack([2.0, np.ones(big - 1), 2.0]) * (-1.0) ** np.arange(big + 1)
    xm = np.tile(x, (big + 1, 1)).T
    dx = xm - xm.T
    d = np.outer(c, 1.0 / c) / (dx + np.eye(big + 1))
    d -= np.diag(d.sum(axis=1))
    x = x[::-1]
    d = d[::-1, ::-1] * (2.0 / (b - a))
    return a + (b - a) * (x + 1) / 2, d


def gauss(n: int, a: float, b: float):
    """Gauss-Legendre nodes/weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return a + (b - a) * (x + 1) / 2, w * (b - a) / 2


def dirichlet_modes(n_modes: int) -> np.ndarray:
    """Chebyshev coefficients (columns) of T_j - T_{j+2}: zero at both ends."""
    out = np.zeros((n_modes + 3, n_modes))
    for j in range(n_modes):
        out[j, j] = 1.0
        out[j + 2, j] = -1.0
    return out


def clamped_modes(n_modes: int) -> np.ndarray:
    """Columns with value and first derivative zero at both ends.

    T_j - 2(j+2)/(j+3) T_{j+2} + (j+1)/(j+3) T_{j+4}.
    """
    out = np.zeros((n_modes + 5, n_modes))
    for j in range(n_modes):
        out[j, j] = 1.0
        out[j + 2, j] = -2.0 * (j + 2) / (j + 3)
        out[j + 4, j] = (j + 1) / (j + 3)
    return out


def swirl_mode() -> np.ndarray:
    """Single column: value 0 at the left end, 1 at the right, flat ends.

    Spans the mean-swirl direction that the clamped family omits (profiles
    whose derivative vanishes at the walls but with a net end-to-end change).
    """
    out = np.zeros((4, 1))
    out[0, 0] = 0.5
    out[1, 0] = 9.0 / 16.0
    out[3, 0] = -1.0 / 16.0
    return out


def eval_modes(coeffs: np.ndarray, x, a: float, b: float, n_der: int):
    """Values and derivatives of coefficient columns at points x in [a, b].

    Returns a list of arrays [(npts, nmodes)] for derivative orders 0..n_der.
    """
    x = np.asarray(x, dtype=float)
    xi = (2 * x - (a + b)) / (b - a)
    scale = 2.0 / (b - a)
    out = []
    ck = np.asarray(coeffs, dtype=float)
    for k in range(n_der + 1):
        out.append(_cheb.chebvander(xi, ck.shape[0] - 1) @ ck * scale**k)
        nxt = np.zeros((max(ck.shape[0] - 1, 1), ck.shape[1]))
        for j in range(ck.shape[1]):
            d = _cheb.chebder(ck[:, j])
            nxt[: len(d), j] = d
        ck = nxt
    return out


def fit_nodal(values: np.ndarray, nodes: np.ndarray, a: float, b: float) -> np.ndarray:
    """Chebyshev coefficients interpolating nodal values (columns = fields)."""
    xi = (2 * nodes - (a + b)) / (b - a)
    v = _cheb.chebvander(xi, len(nodes) - 1)
    return np.linalg.solve(v, values)


def clenshaw_curtis_weights(n: int, a: float, b: float) -> np.ndarray:
    """Quadrature weights for the ascending Lobatto nodes of :func:`lobatto`."""
    big = n - 1
    theta = np.pi * np.arange(big + 1) / big
    w = np.zeros(big + 1)
    v = np.ones(big - 1)
    if big % 2 == 0:
        w[0] = w[big] = 1.0 / (big**2 - 1)
        for k in range(1, big // 2):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
        v -= np.cos(big * theta[1:-1]) / (big**2 - 1)
    else:
        w[0] = w[big] = 1.0 / big**2
        for k in range(1, (big - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
    w[1:-1] = 2.0 * v / big
    return w[::-1] * (b - a) / 2
