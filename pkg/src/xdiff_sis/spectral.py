"""Principal eigenvalue, basic reproduction number and the critical d_I.

Both eigenproblems reduce to the smallest eigenpair of a symmetric
tridiagonal matrix. The eigenvalue is bracketed by LAPACK bisection and the
eigenvector refined by shifted inverse iteration with Thomas solves;
convergence is judged on the eigen-residual.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .domain import integrate
from .operators import TridiagonalSystem, laplacian_system

#: Round-off floor for residual tests, in units of eps * ||A||_inf.
_ROUNDOFF_FACTOR = 64.0


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history


class PreconditionError(ValueError):
    """Inputs fall outside the regime where the requested quantity exists."""


@dataclass
class EigenResult:
    lambda_star: float
    phi_star: np.ndarray
    iterations: int
    residual: float


@dataclass
class R0Result:
    r0: float
    maximizer: np.ndarray
    iterations: int
    residual: float


@dataclass
class SignReport:
    r0: float
    lambda_star: float
    passed: bool


def _start_vector(n, seed):
    return np.random.default_rng(seed).uniform(0.5, 1.5, n)


def _validate(d_I, beta, gamma, grid):
    if not d_I > 0:
        raise ValueError("d_I must be positive")
    beta = grid.check(beta, "beta")
    gamma = grid.check(gamma, "gamma")
    if np.any(beta <= 0) or np.any(gamma <= 0):
        raise ValueError("beta and gamma must be positive")
    return beta, gamma


def eigen_operator(d_I, beta, gamma, grid):
    """``A = -d_I * L + diag(gamma - beta)`` as a tridiagonal system."""
    return laplacian_system(grid).scaled(-d_I).shifted(gamma - beta)


def _norm_inf(T):
    return float(np.max(np.abs(T.diag) + np.abs(T.sub) + np.abs(T.sup)))


def _lowest_pair(T, tol, max_iter, seed):
    """Smallest eigenpair of the symmetric tridiagonal ``T``.

    The eigenvalue comes from LAPACK bisection, which is unaffected by
    clustered eigenvalues; the vector from inverse iteration with a shift
    just below it. Returns ``(lam, x, iterations, residual)`` with ``x``
    positive-leaning and normalised to max 1.
    """
    norm = _norm_inf(T)
    lam0 = float(linalg.eigh_tridiagonal(T.diag, T.sup[:-1], eigvals_only=True,
                                         select="i", select_range=(0, 0))[0])
    floor = _ROUNDOFF_FACTOR * np.finfo(float).eps * max(norm, 1.0)
    threshold = max(tol, floor)
    shifted = T.shifted(-(lam0 - floor))
    x = _start_vector(T.diag.size, seed)
    residual = np.inf
    for it in range(1, max_iter + 1):
        y = shifted.solve(x)
        x = y / y[np.argmax(np.abs(y))]
        Tx = T.matvec(x)
        lam = float(np.dot(x, Tx) / np.dot(x, x))
        residual = float(np.max(np.abs(Tx - lam * x)))
        if residual <= threshold:
            return lam, x, it, residual
    raise ConvergenceError(
        f"inverse iteration did not converge in {max_iter} iterations "
        f"(residual {residual:.3e})", residual=residual)


def principal_eigenpair(d_I, beta, gamma, grid, *, tol=1e-10, max_iter=200, seed=0):
    """Smallest eigenpair of ``-d_I * L + diag(gamma - beta)``.

    ``phi_star`` is the positive principal eigenvector normalised to max 1.
    Convergence is declared when ``||A phi - lambda phi||_inf`` falls below
    ``tol`` (or a round-off floor of ``64 eps ||A||_inf``).
    """
    beta, gamma = _validate(d_I, beta, gamma, grid)
    A = eigen_operator(d_I, beta, gamma, grid)
    lam, x, it, residual = _lowest_pair(A, tol, max_iter, seed)
    return EigenResult(lam, x, it, residual)


def basic_reproduction_number(d_I, beta, gamma, grid, *, tol=1e-12, max_iter=200,
                              seed=0):
    """Largest ``mu`` with ``diag(beta) phi = mu (d_I*(-L) + diag(gamma)) phi``.

    With ``D = diag(beta**-0.5)`` the pencil turns into the symmetric
    tridiagonal problem ``D M D v = (1/mu) v``, ``phi = D v``, so R0 is the
    reciprocal of its smallest eigenvalue. ``maximizer`` is ``phi``
    normalised to max 1; ``residual`` is ``||beta phi - mu M phi||_inf``
    relative to ``max |phi|``.
    """
    beta, gamma = _validate(d_I, beta, gamma, grid)
    M = laplacian_system(grid).scaled(-d_I).shifted(gamma)
    D = 1.0 / np.sqrt(beta)
    T = TridiagonalSystem(np.concatenate(([0.0], M.sub[1:] * D[1:] * D[:-1])),
                          M.diag * D * D,
                          np.concatenate((M.sup[:-1] * D[:-1] * D[1:], [0.0])))
    scale = float(np.max(beta)) * _norm_inf(T)
    lam, v, it, _ = _lowest_pair(T, tol * scale, max_iter, seed)
    mu = 1.0 / lam
    phi = D * v
    phi /= np.max(np.abs(phi))
    residual = float(np.max(np.abs(beta * phi - mu * M.matvec(phi))))
    return R0Result(mu, phi, it, residual)


def _sign(value, zero_tol):
    if abs(value) < zero_tol:
        return 0
    return 1 if value > 0 else -1


def sign_consistency(d_I, beta, gamma, grid, *, zero_tol=1e-8, seed=0):
    """Check that ``1 - R0`` and the principal eigenvalue share a sign."""
    r0 = basic_reproduction_number(d_I, beta, gamma, grid, seed=seed).r0
    lam = principal_eigenpair(d_I, beta, gamma, grid, seed=seed).lambda_star
    passed = _sign(1.0 - r0, zero_tol) == _sign(lam, zero_tol)
    return SignReport(r0, lam, passed)


def critical_diffusion(beta, gamma, grid, bracket=None, *, rtol=1e-8, seed=0):
    """The ``d_I`` at which R0 crosses 1.

    Requires ``int beta < int gamma`` (otherwise R0 > 1 for every ``d_I``) and
    ``max(beta/gamma) > 1`` (otherwise R0 < 1 for every ``d_I``). R0 is
    monotone in ``d_I``, so the root is found by bisection in ``log d_I``.
    ``bracket=None`` searches outward from ``d_I = 1``.
    """
    beta = grid.check(beta, "beta")
    gamma = grid.check(gamma, "gamma")
    if integrate(beta, grid) >= integrate(gamma, grid):
        raise PreconditionError(
            "int beta >= int gamma: R0 > 1 for every d_I, no finite threshold")
    if np.max(beta / gamma) <= 1.0:
        raise PreconditionError(
            "max(beta/gamma) <= 1: R0 < 1 for every d_I, no threshold")

    def r0(d):
        return basic_reproduction_number(d, beta, gamma, grid, seed=seed).r0

    if bracket is None:
        lo = hi = 1.0
        while r0(lo) <= 1.0:
            lo /= 10.0
            if lo < 1e-12:
                raise PreconditionError("could not find d_I with R0 > 1")
        while r0(hi) >= 1.0:
            hi *= 10.0
            if hi > 1e12:
                raise PreconditionError("could not find d_I with R0 < 1")
    else:
        lo, hi = map(float, bracket)
        if not (0 < lo < hi):
            raise ValueError("bracket must satisfy 0 < d_lo < d_hi")
        if not (r0(lo) > 1.0 > r0(hi)):
            raise PreconditionError(
                "bracket does not straddle R0 = 1 (need R0(d_lo) > 1 > R0(d_hi))")

    while (hi - lo) > rtol * hi:
        mid = math.sqrt(lo * hi)
        if r0(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)
