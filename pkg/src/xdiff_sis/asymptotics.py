"""Small-``d_S`` experiments on the endemic equilibria.

Covers the limit profile when every site is high risk, the sign-changing
case where the infection dies out while ``kappa/d_S`` tends to a constant
``M``, and the persistence of infection in the source model.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy import optimize

from .domain import ModelKind, integrate
from .spectral import PreconditionError
from .steady import solve_endemic_model1, solve_endemic_model2

#: Absolute slack when checking that a gap sequence decreases; gaps that are
#: already at round-off level may wobble by this much.
MONOTONE_SLACK = 1e-9


def _map(fn, items, workers):
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _decreasing(values, slack=MONOTONE_SLACK):
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def _check_ds_list(ds_list):
    ds = [float(d) for d in ds_list]
    if not ds or any(d <= 0 for d in ds):
        raise ValueError("ds_list must hold positive values")
    if any(b >= a for a, b in zip(ds, ds[1:])):
        raise ValueError("ds_list must be strictly decreasing")
    return ds


@dataclass
class LimitProfileHighRisk:
    S_star: np.ndarray
    I_star: float


def limit_profile_high_risk(beta, gamma, N, grid):
    """``I* = N / int beta/(beta - gamma)`` and ``S* = gamma I*/(beta - gamma)``.

    Requires ``beta > gamma`` at every cell.
    """
    beta = grid.check(beta, "beta")
    gamma = grid.check(gamma, "gamma")
    gap = beta - gamma
    if np.any(gap <= 0):
        j = int(np.argmin(gap))
        raise PreconditionError(
            f"beta must exceed gamma everywhere (fails at cell {j})")
    I_star = N / integrate(beta / gap, grid)
    return LimitProfileHighRisk(gamma * I_star / gap, I_star)


@dataclass
class HighRiskReport:
    """One row per ``d_S``: ``(d_S, sup-gap, kappa)``."""

    rows: list
    monotone: bool
    final_gap: float
    kappa_min: float
    passed: bool
    limit: LimitProfileHighRisk = None


def _ee_point(params_template, grid, d_S):
    return solve_endemic_model1(params_template.replace(d_S=d_S), grid)


def verify_high_risk_limit(params_template, ds_list=(1e-1, 1e-2, 1e-3, 1e-4),
                           grid=None, *, final_tol=1e-2, workers=1):
    """Solve the EE along ``ds_list`` and track the sup-distance to ``(S*, I*)``.

    Passes when the gap sequence is nonincreasing (up to ``MONOTONE_SLACK``)
    and the last gap is below ``final_tol``.
    """
    ds = _check_ds_list(ds_list)
    beta, gamma, _ = params_template.fields(grid)
    limit = limit_profile_high_risk(beta, gamma, params_template.N, grid)
    profiles = _map(partial(_ee_point, params_template, grid), ds, workers)
    rows = []
    for d, prof in zip(ds, profiles):
        gap = (float(np.max(np.abs(prof.S - limit.S_star)))
               + float(np.max(np.abs(prof.I - limit.I_star))))
        rows.append((d, gap, prof.kappa))
    gaps = [r[1] for r in rows]
    monotone = _decreasing(gaps)
    kappa_min = min(r[2] for r in rows)
    passed = monotone and gaps[-1] < final_tol and kappa_min > 0
    return HighRiskReport(rows, monotone, gaps[-1], kappa_min, passed, limit)


def _M_residual(M, Itilde_star, chi, grid, rhs):
    # int exp(chi*(1 - I*)*M) - rhs, accumulated with expm1 for small M
    return integrate(np.expm1(chi * (1.0 - Itilde_star) * M), grid) + grid.measure - rhs


def solve_M(Itilde_star, chi, d_I, N, grid, *, rtol=1e-14):
    """Root ``M > 0`` of ``int exp(chi (1 - I*) M) = N chi / d_I + |Omega|``.

    The left side increases strictly in ``M`` as soon as ``I* < 1`` on some
    cell, so the root is bracketed by doubling and refined by bisection.
    """
    u = grid.check(Itilde_star, "Itilde_star")
    if not chi > 0 or not d_I > 0 or not N > 0:
        raise ValueError("chi, d_I and N must be positive")
    if not integrate(1.0 - u, grid) > 0:
        raise PreconditionError("Itilde* == 1 everywhere: no M solves the constraint")
    rhs = N * chi / d_I + grid.measure

    def resid(M):
        return _M_residual(M, u, chi, grid, rhs)

    hi = 1.0
    while resid(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            raise PreconditionError("could not bracket M")
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if resid(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class SignChangingLimit:
    """Limit data; index arrays select cells of the grid."""

    Itilde_star: np.ndarray
    M: float
    S_star: np.ndarray
    H_minus: np.ndarray
    H_plus: np.ndarray
    J_minus: np.ndarray
    J_plus: np.ndarray


@dataclass
class SignChangingReport:
    """Sweep rows ``(d_S, kappa, sup I, kappa/d_S)`` and assertions (a)-(g)."""

    rows: list
    checks: dict = field(default_factory=dict)
    ratio_extrapolated: float = math.nan

    @property
    def passed(self):
        return all(self.checks.values())


def limit_from_itilde(Itilde_star, beta, gamma, chi, d_I, N, grid, tol_one=1e-3):
    """Classify cells and build ``M`` and ``S*`` from a limiting ``Itilde*``."""
    u = grid.check(Itilde_star, "Itilde_star")
    J_plus = np.flatnonzero(u > 1.0 - tol_one)
    J_minus = np.flatnonzero(u <= 1.0 - tol_one)
    if J_minus.size == 0:
        raise PreconditionError("J- is empty: classification degenerate")
    u_lim = u.copy()
    u_lim[J_plus] = 1.0
    M = solve_M(u_lim, chi, d_I, N, grid)
    S_star = (d_I / chi) * np.expm1(chi * (1.0 - u_lim) * M)
    return SignChangingLimit(u_lim, M, S_star, np.flatnonzero(beta < gamma),
                             np.flatnonzero(beta > gamma), J_minus, J_plus)


def _richardson(values, ds):
    # first order in d_S from the last two points
    (d0, v0), (d1, v1) = (ds[-2], values[-2]), (ds[-1], values[-1])
    return v1 + (v1 - v0) * d1 / (d0 - d1)


def sign_changing_limit(params_template, ds_list, grid, tol_one=1e-3, *,
                        extrapolate=True, ratio_rtol=0.05, mass_rtol=1e-2,
                        workers=1):
    """Run the EE along ``ds_list`` and check the sign-changing limit.

    ``Itilde*`` is the last sweep profile, Richardson-extrapolated to
    ``d_S = 0`` from the last two points when ``extrapolate`` is set and
    clipped to ``[0, 1]``. Cells with ``Itilde* > 1 - tol_one`` form ``J+``.
    Returns ``(SignChangingLimit, SignChangingReport)``; the report's checks
    are (a) kappa decreasing, (b) sup I decreasing, (c) ``H- in J-``,
    (d) ``J+`` inside ``{beta >= gamma}``, (e) ``J+`` nonempty,
    (f) ``int S* = N`` within ``mass_rtol``, (g) ``kappa/d_S`` within
    ``ratio_rtol`` of ``M``.
    """
    ds = _check_ds_list(ds_list)
    p = params_template
    if p.kind is not ModelKind.CONSERVED:
        raise ValueError("sign_changing_limit needs the conserved model")
    beta, gamma, _ = p.fields(grid)
    if not np.any(beta < gamma):
        raise PreconditionError("{beta < gamma} is empty: not a sign-changing case")
    if p.chi <= 0:
        raise ValueError("sign_changing_limit needs chi > 0")
    profiles = _map(partial(_ee_point, p, grid), ds, workers)
    rows = [(d, pr.kappa, float(np.max(pr.I)), pr.kappa / d)
            for d, pr in zip(ds, profiles)]

    u = profiles[-1].Itilde
    ratio = rows[-1][3]
    if extrapolate and len(ds) >= 2:
        u = np.clip(_richardson([pr.Itilde for pr in profiles[-2:]], ds), 0.0, 1.0)
        ratio = _richardson([r[3] for r in rows[-2:]], ds)
    limit = limit_from_itilde(u, beta, gamma, p.chi, p.d_I, p.N, grid, tol_one)

    kappas = [r[1] for r in rows]
    sups = [r[2] for r in rows]
    J_plus = set(limit.J_plus.tolist())
    checks = {
        "a_kappa_decreasing": all(b < a for a, b in zip(kappas, kappas[1:])),
        "b_supI_decreasing": all(b < a for a, b in zip(sups, sups[1:])),
        "c_Hminus_in_Jminus": not (set(limit.H_minus.tolist()) & J_plus),
        "d_Jplus_in_beta_ge_gamma": bool(np.all(beta[limit.J_plus] >= gamma[limit.J_plus])),
        "e_Jplus_nonempty": limit.J_plus.size > 0,
        "f_mass": abs(integrate(limit.S_star, grid) - p.N) <= mass_rtol * p.N,
        "g_ratio_to_M": abs(ratio - limit.M) <= ratio_rtol * limit.M,
    }
    return limit, SignChangingReport(rows, checks, ratio)


@dataclass
class PersistenceReport:
    """Rows ``(d_S, min I, |int S - int Lambda|)``; ``eta`` is half the first min."""

    rows: list
    eta: float
    passed: bool
    profiles: list = field(default_factory=list, repr=False)


def _ee2_point(params_template, grid, d_S):
    return solve_endemic_model2(params_template.replace(d_S=d_S), grid)


def model2_persistence_sweep(params_template, ds_list, grid, *, mass_tol=1e-6,
                             workers=1):
    """Solve the source-model EE along ``ds_list`` and check persistence.

    Passes when ``min I >= eta`` at every point, with ``eta`` half the
    minimum at the largest ``d_S``, and ``int S = int Lambda`` within
    ``mass_tol``.
    """
    ds = _check_ds_list(ds_list)
    if params_template.kind is not ModelKind.SOURCE:
        raise ValueError("model2_persistence_sweep needs the source model")
    profiles = _map(partial(_ee2_point, params_template, grid), ds, workers)
    rows = [(d, float(np.min(pr.I)), pr.mass_residual) for d, pr in zip(ds, profiles)]
    eta = 0.5 * rows[0][1]
    passed = eta > 0 and all(r[1] >= eta and r[2] <= mass_tol for r in rows)
    return PersistenceReport(rows, eta, passed, profiles)
