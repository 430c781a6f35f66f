"""Equilibrium solvers.

Model 1's endemic equilibrium is found through the scalar reduction: along
an equilibrium ``(d_S/chi) log(1 + chi*S/d_I) + I`` equals a constant
``kappa``, so with ``Itilde = I/kappa`` one has ``S = g(Itilde)`` and
``Itilde`` solves a single semilinear elliptic problem. ``kappa`` is then
fixed by the total mass. Model 2 has a linear DFE problem and a full
two-field Newton solve for its endemic state.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import linalg as sparse_linalg

from .domain import ModelKind, integrate
from .evolve import IntegratorConfig, simulate
from .operators import (cross_diffusion_divergence, incidence, laplacian_system,
                        neumann_laplacian)
from .spectral import ConvergenceError, PreconditionError, principal_eigenpair

logger = logging.getLogger(__name__)

#: Below this chi the linearised form of ``g`` is used.
CHI_LINEAR = 1e-8
#: Largest exponent allowed in ``g`` before declaring overflow.
MAX_EXPONENT = 700.0
#: Clamp for Itilde iterates.
CLAMP = 1e-12
_EPS = np.finfo(float).eps
_TAU_NEWTON = 1e8


class ReductionOverflow(OverflowError):
    """``exp(kappa*chi*(1 - Itilde)/d_S)`` would overflow; shrink the kappa bracket."""


@dataclass(frozen=True)
class ReductionContext:
    """Inputs of the scalar reduction at fixed ``kappa``."""

    kappa: float
    params: object
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


@dataclass
class SteadyProfile:
    """An equilibrium and its residuals.

    ``kappa`` and ``Itilde`` are only set for model 1. ``pde_residual`` is the
    sup norm of the discrete steady equations; ``mass_residual`` is
    ``|int(S+I) - N|`` for model 1 and ``|int S - int Lambda|`` for model 2.
    """

    S: np.ndarray
    I: np.ndarray
    kappa: float = None
    Itilde: np.ndarray = None
    pde_residual: float = 0.0
    mass_residual: float = 0.0


def _exponent(u, kappa, params):
    return kappa * params.chi * (1.0 - u) / params.d_S


def _g_and_slope(u, kappa, params):
    # g and dg/du; g = inf where the exponent overflows
    d_S, d_I, chi = params.d_S, params.d_I, params.chi
    if chi < CHI_LINEAR:
        g = (kappa * d_I / d_S) * (1.0 - u)
        return g, np.full_like(g, -kappa * d_I / d_S)
    z = _exponent(u, kappa, params)
    with np.errstate(over="ignore"):
        g = np.where(z > MAX_EXPONENT, np.inf,
                     (d_I / chi) * np.expm1(np.minimum(z, MAX_EXPONENT)))
        slope = -(kappa * d_I / d_S) * (1.0 + chi * g / d_I)
    return g, slope


def g_of_Itilde(Itilde, kappa, params):
    """``S = (d_I/chi) * expm1(kappa*chi*(1 - Itilde)/d_S)``.

    For ``chi < 1e-8`` the first-order form ``(kappa*d_I/d_S)(1 - Itilde)``
    is returned. Raises :class:`ReductionOverflow` when the exponent exceeds
    700.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    u = np.asarray(Itilde, dtype=float)
    if params.chi >= CHI_LINEAR and np.any(_exponent(u, kappa, params) > MAX_EXPONENT):
        raise ReductionOverflow(
            f"exponent exceeds {MAX_EXPONENT:g} at kappa={kappa:.6g}; shrink the kappa bracket")
    g, _ = _g_and_slope(u, kappa, params)
    return g if g.ndim else float(g)


def _reaction(u, ctx):
    # f(u) and u*f(u) derivative pieces
    kappa = ctx.kappa
    g, dg = _g_and_slope(u, kappa, ctx.params)
    finite = np.isfinite(g)
    gs = np.where(finite, g, 0.0)
    denom = gs + kappa * u
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(finite, gs / denom, 1.0)
        # kappa*(u*g' - g)/denom^2 written as kappa*(u*g'/g - 1)*ratio/denom
        dratio = np.where(finite, kappa * (u * dg / gs - 1.0) * ratio / denom, 0.0)
    f = ctx.beta * ratio - ctx.gamma
    return f, ctx.beta * dratio


def reduction_residual(u, ctx, grid):
    """``d_I * L u + u * f(u)`` on the grid."""
    f, _ = _reaction(u, ctx)
    return ctx.params.d_I * neumann_laplacian(u, grid) + u * f


def _context(kappa, params, grid):
    if params.kind is not ModelKind.CONSERVED:
        raise ValueError("the scalar reduction applies to the conserved model only")
    beta, gamma, _ = params.fields(grid)
    return ReductionContext(float(kappa), params, beta, gamma)


def _start(params, grid, beta, gamma):
    eig = principal_eigenpair(params.d_I, beta, gamma, grid)
    if not eig.lambda_star < 0:
        raise PreconditionError(
            f"R0 <= 1 (lambda* = {eig.lambda_star:.3e} >= 0): no positive solution")
    return 0.1 * eig.phi_star


def solve_scalar_reduction(kappa, params, grid, *, init=None, tol=1e-11,
                           max_iter=500):
    """Positive solution ``Itilde`` of ``d_I L u + u f(u) = 0`` with ``0 < u < 1``.

    Pseudo-transient continuation from ``0.1 * phi*``: each step solves
    ``(I/tau - J) delta = F`` and ``tau`` follows the residual ratio. Once
    ``tau`` passes 1e8 the iteration is damped Newton (up to 40 halvings).
    Starting from plain Newton risks the trivial root ``u = 0``.
    Iterates are clamped to ``[1e-12, 1 - 1e-12]``.
    """
    ctx = _context(kappa, params, grid)
    d_I = params.d_I
    if init is None:
        u = _start(params, grid, ctx.beta, ctx.gamma)
    else:
        u = np.clip(grid.check(init, "init"), CLAMP, 1.0 - CLAMP)
    L = laplacian_system(grid)
    scale = 4.0 * d_I / grid.h ** 2 + float(np.max(ctx.beta) + np.max(ctx.gamma))
    floor = 64.0 * _EPS * scale  # round-off level of the discrete residual
    target = tol

    F = reduction_residual(u, ctx, grid)
    res = float(np.max(np.abs(F)))
    history = [res]
    tau0 = 1.0 / float(np.max(ctx.beta) + np.max(ctx.gamma))
    tau = tau0
    for _ in range(max_iter):
        if res <= target:
            return u
        f, df = _reaction(u, ctx)
        J = L.scaled(-d_I).shifted(-(f + u * df))
        newton = tau >= _TAU_NEWTON
        delta = J.shifted(0.0 if newton else 1.0 / tau).solve(F)
        if not newton:
            # transient step: the flow keeps u inside (0, 1), so a step that
            # leaves it is too long; otherwise the step size follows the
            # residual ratio (switched evolution relaxation)
            trial = u + delta
            if not (np.all(trial >= CLAMP) and np.all(trial <= 1.0 - CLAMP)):
                tau /= 4.0
                continue
            F = reduction_residual(trial, ctx, grid)
            res_new = float(np.max(np.abs(F)))
            tau *= min(4.0, max(0.25, res / res_new))
            u, res = trial, res_new
            history.append(res)
            continue
        step = 1.0
        for _halving in range(41):
            trial = np.clip(u + step * delta, CLAMP, 1.0 - CLAMP)
            F_trial = reduction_residual(trial, ctx, grid)
            res_trial = float(np.max(np.abs(F_trial)))
            if res_trial < res:
                break
            step *= 0.5
        else:
            if res <= floor:
                return u  # stagnated at round-off
            tau = tau0  # fall back to transient steps
            continue
        u, F, res = trial, F_trial, res_trial
        history.append(res)
    raise ConvergenceError(
        f"scalar reduction stagnated at residual {res:.3e}", residual=res,
        history=history)


def _mass_of(u, kappa, params, grid):
    S = g_of_Itilde(u, kappa, params)
    return integrate(S, grid) + kappa * integrate(u, grid)


def kappa_residual(kappa, params, grid, *, init=None):
    """``int g(Itilde) + kappa * int Itilde - N`` with ``Itilde`` the reduction solution."""
    u = solve_scalar_reduction(kappa, params, grid, init=init)
    return _mass_of(u, kappa, params, grid) - params.N


def steady_residual_model1(S, I, params, grid):
    """Sup norm of the two discrete steady equations of the conserved model."""
    beta, gamma, _ = params.fields(grid)
    inc = incidence(S, I, beta)
    rI = params.d_I * neumann_laplacian(I, grid) + inc - gamma * I
    rS = (params.d_S * neumann_laplacian(S, grid)
          + cross_diffusion_divergence(S, I, grid, params.chi, params.d_I)
          - inc + gamma * I)
    return max(float(np.max(np.abs(rI))), float(np.max(np.abs(rS))))


def solve_endemic_model1(params, grid, *, kappa_max=1e12, xtol=1e-15):
    """Endemic equilibrium of the conserved model through the scalar reduction.

    ``kappa`` is bracketed by doubling or halving from
    ``min(N/|Omega|, d_S/chi)``, where the reduction is mild, and refined
    with Brent's bracketed root finder. Each reduction solve is warm-started
    from the solution at the nearest kappa already visited, which carries
    the iteration across the boundary layers that appear when
    ``kappa*chi/d_S`` is large. A kappa whose reduction overflows counts as
    lying above the root.
    """
    if params.kind is not ModelKind.CONSERVED:
        raise ValueError("solve_endemic_model1 needs the conserved model")
    beta, gamma, _ = params.fields(grid)
    cold = _start(params, grid, beta, gamma)
    N = params.N
    cache = {}

    def nearest(k):
        known = [kk for kk, v in cache.items() if v[1] is not None]
        if not known:
            return cold
        return cache[min(known, key=lambda kk: abs(math.log(kk / k)))][1]

    def resid(k):
        if k in cache:
            return cache[k][0]
        try:
            try:
                u = solve_scalar_reduction(k, params, grid, init=nearest(k))
            except ConvergenceError:
                u = solve_scalar_reduction(k, params, grid, init=cold)
            value = _mass_of(u, k, params, grid) - N
        except ReductionOverflow:
            cache[k] = (math.inf, None)
            return math.inf
        cache[k] = (value, u)
        return value

    k0 = N / grid.measure
    if params.chi >= CHI_LINEAR:
        k0 = min(k0, params.d_S / params.chi)
    lo = hi = k0
    if resid(lo) > 0:
        while resid(lo) > 0:
            hi = lo
            lo /= 2.0
            if lo < 1e-14:
                raise ConvergenceError("no kappa bracket above 1e-14")
    else:
        while resid(hi) <= 0:
            lo = hi
            hi *= 2.0
            if hi > kappa_max:
                raise ConvergenceError(f"no kappa bracket below {kappa_max:g}")

    def finite_resid(k):
        v = resid(k)
        return v if math.isfinite(v) else N

    kappa = optimize.brentq(finite_resid, lo, hi, xtol=xtol * hi, rtol=4 * _EPS,
                            maxiter=500)
    resid(kappa)
    u = cache[kappa][1]
    if u is None:
        raise ConvergenceError("kappa root landed in the overflow range")
    S = g_of_Itilde(u, kappa, params)
    I = kappa * u
    pde = steady_residual_model1(S, I, params, grid)
    mass = abs(integrate(S + I, grid) - N)
    logger.debug("model-1 EE: kappa=%.15g pde=%.3e mass=%.3e", kappa, pde, mass)
    return SteadyProfile(S, I, kappa, u, pde, mass)


def solve_dfe_model2(d_S, Lambda, grid):
    """Solve ``d_S L S + Lambda - S = 0`` (tridiagonal, diagonally dominant)."""
    if not d_S > 0:
        raise ValueError("d_S must be positive")
    Lambda = grid.check(Lambda, "Lambda")
    if np.any(Lambda <= 0):
        raise ValueError("Lambda must be positive")
    A = laplacian_system(grid).scaled(d_S).shifted(-1.0)
    return A.solve(-Lambda)


def _model2_residual(S, I, params, grid, fields):
    beta, gamma, lam = fields
    inc = incidence(np.maximum(S, 0), np.maximum(I, 0), beta)
    rS = (params.d_S * neumann_laplacian(S, grid)
          + cross_diffusion_divergence(S, I, grid, params.chi, params.d_I)
          + lam - S - inc + gamma * I)
    rI = params.d_I * neumann_laplacian(I, grid) + inc - gamma * I
    return rS, rI


def steady_residual_model2(S, I, params, grid):
    rS, rI = _model2_residual(S, I, params, grid, params.fields(grid))
    return max(float(np.max(np.abs(rS))), float(np.max(np.abs(rI))))


def _fd_jacobian(S, I, params, grid, fields, base):
    # the residual couples each cell to its two neighbours, so three colours
    # per field suffice: six residual evaluations give the full Jacobian
    n = grid.n_cells
    x = np.concatenate([S, I])
    rows, cols, vals = [], [], []
    for field_offset in (0, n):
        for colour in range(3):
            idx = np.arange(colour, n, 3) + field_offset
            step = np.sqrt(_EPS) * np.maximum(np.abs(x[idx]), 1.0)
            xp = x.copy()
            xp[idx] += step
            rS, rI = _model2_residual(xp[:n], xp[n:], params, grid, fields)
            diff = (np.concatenate([rS, rI]) - base)
            for k, j in enumerate(idx):
                cell = j - field_offset
                for nb in (cell - 1, cell, cell + 1):
                    if 0 <= nb < n:
                        for r in (nb, nb + n):
                            rows.append(r)
                            cols.append(j)
                            vals.append(diff[r] / step[k])
    return sparse.csc_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))


def _newton_model2(S, I, params, grid, tol, max_iter=50):
    fields = params.fields(grid)
    n = grid.n_cells
    rS, rI = _model2_residual(S, I, params, grid, fields)
    F = np.concatenate([rS, rI])
    res = float(np.max(np.abs(F)))
    history = [res]
    for _ in range(max_iter):
        if res <= tol:
            break
        J = _fd_jacobian(S, I, params, grid, fields, F)
        delta = sparse_linalg.spsolve(J, -F)
        step = 1.0
        for _halving in range(41):
            Sn = S + step * delta[:n]
            In = I + step * delta[n:]
            if np.all(Sn > 0) and np.all(In > 0):
                rS, rI = _model2_residual(Sn, In, params, grid, fields)
                Fn = np.concatenate([rS, rI])
                rn = float(np.max(np.abs(Fn)))
                if rn < res:
                    break
            step *= 0.5
        else:
            break  # no decrease: round-off floor reached
        S, I, F, res = Sn, In, Fn, rn
        history.append(res)
    return S, I, res, history


def solve_endemic_model2(params, grid, init=None, *, tol=1e-10, t_relax=1e4,
                         relax_tol=1e-6):
    """An endemic equilibrium of the source model.

    Relaxes by simulation until the state change rate drops below
    ``relax_tol`` (or ``t_relax``), then polishes with Newton on the discrete
    steady equations using a coloured finite-difference Jacobian. ``init``
    (a :class:`State`) replaces the default start ``(Lambda, Lambda*phi*)``.
    The returned equilibrium need not be the only one.
    """
    if params.kind is not ModelKind.SOURCE:
        raise ValueError("solve_endemic_model2 needs the source model")
    beta, gamma, lam = params.fields(grid)
    eig = principal_eigenpair(params.d_I, beta, gamma, grid)
    if not eig.lambda_star < 0:
        raise PreconditionError("R0 <= 1: no endemic equilibrium")
    if init is None:
        S0, I0 = lam.copy(), lam * eig.phi_star
    else:
        S0, I0 = init.S, init.I
    cfg = IntegratorConfig(t_end=t_relax, steady_tol=relax_tol, record_every=10 ** 9,
                           store_fields=False)
    record, state = simulate(params, grid, S0, I0, cfg)
    scale = (4.0 * max(params.d_S, params.d_I) / grid.h ** 2
             + float(np.max(beta) + np.max(gamma)) + 1.0) * max(1.0, float(np.max(state.S)))
    floor = 64.0 * _EPS * scale
    S, I, res, history = _newton_model2(state.S, state.I, params, grid, tol)
    if res > max(tol, floor):
        raise ConvergenceError(
            f"model-2 Newton polish stalled at residual {res:.3e} "
            f"(relaxation reached t={state.t:.6g}, steady={record.steady})",
            residual=res, history=history)
    mass = abs(integrate(S, grid) - integrate(lam, grid))
    return SteadyProfile(S, I, None, None, res, mass)


__all__ = [
    "ReductionContext", "ReductionOverflow", "SteadyProfile", "g_of_Itilde",
    "reduction_residual", "solve_scalar_reduction", "kappa_residual",
    "steady_residual_model1", "solve_endemic_model1", "solve_dfe_model2",
    "steady_residual_model2", "solve_endemic_model2",
]
