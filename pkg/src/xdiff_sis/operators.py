"""Flux-form spatial operators and the frequency-dependent reaction terms.

All divergence operators use zero flux on the two boundary faces, so their
midpoint-rule integral telescopes to zero.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels

#: Below this value of S + I the incidence SI/(S+I) is taken as 0.
EPS_DEN = 1e-30


@dataclass(frozen=True)
class TridiagonalSystem:
    """Bands of an ``n x n`` tridiagonal matrix.

    ``sub[j]`` multiplies ``x[j-1]`` and ``sup[j]`` multiplies ``x[j+1]`` in
    row ``j``; ``sub[0]`` and ``sup[-1]`` are unused.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def solve(self, rhs):
        return kernels.thomas(self.sub, self.diag, self.sup,
                              np.ascontiguousarray(rhs, dtype=float))

    def matvec(self, x):
        y = self.diag * x
        y[1:] += self.sub[1:] * x[:-1]
        y[:-1] += self.sup[:-1] * x[1:]
        return y

    def dense(self):
        return (np.diag(self.diag) + np.diag(self.sub[1:], -1)
                + np.diag(self.sup[:-1], 1))

    def __add__(self, other):
        return TridiagonalSystem(self.sub + other.sub, self.diag + other.diag,
                                 self.sup + other.sup)

    def scaled(self, c):
        return TridiagonalSystem(c * self.sub, c * self.diag, c * self.sup)

    def shifted(self, diagonal):
        """Return the system with ``diagonal`` (scalar or field) added."""
        return TridiagonalSystem(self.sub.copy(), self.diag + diagonal,
                                 self.sup.copy())


def laplacian_system(grid):
    """The zero-flux Laplacian as a :class:`TridiagonalSystem`."""
    n = grid.n_cells
    inv_h2 = 1.0 / (grid.h * grid.h)
    off = np.full(n, inv_h2)
    off_sub = off.copy()
    off_sub[0] = 0.0
    off_sup = off.copy()
    off_sup[-1] = 0.0
    diag = np.full(n, -2.0 * inv_h2)
    diag[0] = diag[-1] = -inv_h2
    return TridiagonalSystem(off_sub, diag, off_sup)


def neumann_laplacian(u, grid):
    """Second difference ``(F[j+1/2] - F[j-1/2]) / h`` with zero boundary flux."""
    return kernels.laplacian(np.ascontiguousarray(grid.check(u, "u")), grid.h)


def cross_diffusion_divergence(S, I, grid, chi, d_I=None):
    """Divergence of ``chi * S * grad(I)`` in flux form.

    With ``d_I=None`` the face value of ``S`` is the arithmetic mean of its
    neighbours. When ``d_I`` is given the face value is chosen so that
    ``d_I + chi*S_face`` is the logarithmic mean of ``d_I + chi*S`` on the two
    cells; this is still second order, reduces to the arithmetic mean for
    ``chi = 0`` or equal neighbours, and makes the equilibrium reduction
    ``(d_S/chi) log(1 + chi*S/d_I) + I = const`` hold exactly on the grid.
    """
    S = np.ascontiguousarray(grid.check(S, "S"))
    I = np.ascontiguousarray(grid.check(I, "I"))
    log_mean = d_I is not None and chi > 0
    return kernels.cross_divergence(S, I, grid.h, float(chi),
                                    float(d_I) if log_mean else 0.0, log_mean)


def _nonnegative(S, I):
    S = np.ascontiguousarray(S, dtype=float)
    I = np.ascontiguousarray(I, dtype=float)
    if S.shape != I.shape:
        raise ValueError("S and I must have the same shape")
    if np.any(S < 0) or np.any(I < 0):
        raise ValueError("S and I must be non-negative")
    return S, I


def incidence(S, I, beta):
    """Frequency-dependent incidence ``beta * S * I / (S + I)``; 0 where S+I ~ 0."""
    S, I = _nonnegative(S, I)
    beta = np.ascontiguousarray(beta, dtype=float)
    return kernels.incidence(S, I, beta, EPS_DEN)


def reaction_model1(S, I, beta, gamma):
    """Return ``(dS, dI)``; ``dS`` is the exact negation of ``dI``."""
    S, I = _nonnegative(S, I)
    dI = incidence(S, I, beta) - gamma * I
    return -dI, dI


def reaction_model2_S(S, I, beta, gamma, Lambda):
    S, I = _nonnegative(S, I)
    return (Lambda - S) - (incidence(S, I, beta) - gamma * I)
