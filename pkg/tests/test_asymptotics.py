import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from xdiff_sis.asymptotics import (limit_from_itilde, limit_profile_high_risk,
                                   model2_persistence_sweep, sign_changing_limit,
                                   solve_M, verify_high_risk_limit)
from xdiff_sis.domain import CoefficientSpec, Grid1D, ModelParams, integrate
from xdiff_sis.spectral import PreconditionError

G = Grid1D(0.0, 1.0, 64)
X = G.centers
ONE = np.ones(64)


def conserved(beta, gamma=1.0, d_S=0.1, d_I=1.0, chi=0.1, N=1.0):
    return ModelParams("conserved", d_S, d_I, chi, beta, gamma, N=N)


@pytest.mark.parametrize("beta, I_star, S_star", [(2.0, 0.5, 0.5), (3.0, 2 / 3, 1 / 3)])
def test_high_risk_limit_constants(beta, I_star, S_star):
    lim = limit_profile_high_risk(beta * ONE, ONE, 1.0, G)
    assert lim.I_star == pytest.approx(I_star, rel=1e-14)
    np.testing.assert_allclose(lim.S_star, S_star, rtol=1e-14)


def test_high_risk_limit_affine_mass_identity():
    beta = 2.0 + X
    lim = limit_profile_high_risk(beta, ONE, 1.0, G)
    assert integrate(lim.S_star + lim.I_star, G) == pytest.approx(1.0, abs=1e-10)
    # the continuous integral of (2+x)/(1+x) is 1 + ln 2; midpoint rule is O(h^2) off
    exact, _ = sp_integrate.quad(lambda x: (2 + x) / (1 + x), 0, 1)
    assert exact == pytest.approx(1 + math.log(2), rel=1e-12)
    assert lim.I_star == pytest.approx(1.0 / exact, rel=1e-4)


def test_high_risk_limit_precondition():
    with pytest.raises(PreconditionError):
        limit_profile_high_risk(1.0 + X, 1.2 * ONE, 1.0, G)


def test_high_risk_sweep_constant_case():
    rep = verify_high_risk_limit(conserved(2.0), (1e-1, 1e-2, 1e-3, 1e-4), G,
                                 final_tol=1e-3)
    assert rep.passed and rep.monotone
    assert rep.final_gap < 1e-3
    assert rep.kappa_min > 0.1


def test_high_risk_sweep_heterogeneous():
    p = conserved(CoefficientSpec.cosine(2.0, 0.5))
    rep = verify_high_risk_limit(p, (1e-1, 1e-2, 1e-3, 1e-4), G)
    assert rep.passed
    gaps = [r[1] for r in rep.rows]
    assert gaps[-1] < gaps[0]


def test_ds_list_validation():
    with pytest.raises(ValueError, match="decreasing"):
        verify_high_risk_limit(conserved(2.0), (1e-3, 1e-2), G)
    with pytest.raises(ValueError, match="positive"):
        verify_high_risk_limit(conserved(2.0), (), G)


@pytest.mark.parametrize("c", [0.0, 0.3, 0.9])
def test_solve_M_constant_closed_form(c):
    chi, d_I, N = 0.7, 0.4, 1.3
    M = solve_M(np.full(64, c), chi, d_I, N, G)
    expected = math.log(N * chi / (d_I * G.measure) + 1.0) / (chi * (1.0 - c))
    assert M == pytest.approx(expected, rel=1e-10)


def test_solve_M_heterogeneous_residual():
    u = 0.5 + 0.5 * np.cos(np.pi * X) ** 2
    M = solve_M(u, 1.0, 0.1, 1.0, G)
    lhs = integrate(np.exp((1.0 - u) * M), G)
    assert abs(lhs - (1.0 * 1.0 / 0.1 + 1.0)) < 1e-10 * lhs


def test_solve_M_rejects_itilde_one():
    with pytest.raises(PreconditionError):
        solve_M(ONE, 1.0, 0.1, 1.0, G)
    with pytest.raises(ValueError):
        solve_M(0.5 * ONE, 0.0, 0.1, 1.0, G)


def test_limit_from_itilde_mass():
    u = np.where(X < 0.5, 0.4, 1.0 - 1e-5)
    beta = np.where(X < 0.5, 0.5, 2.0)
    lim = limit_from_itilde(u, beta, ONE, 1.0, 0.1, 1.0, G)
    assert set(lim.J_plus) == set(np.flatnonzero(X >= 0.5))
    assert np.all(lim.Itilde_star[lim.J_plus] == 1.0)
    assert integrate(lim.S_star, G) == pytest.approx(1.0, rel=1e-10)
    with pytest.raises(PreconditionError):
        limit_from_itilde(ONE, beta, ONE, 1.0, 0.1, 1.0, G)


def test_sign_changing_preconditions():
    with pytest.raises(PreconditionError):
        sign_changing_limit(conserved(2.0), (1e-1, 1e-2), G)
    with pytest.raises(ValueError):
        sign_changing_limit(conserved(CoefficientSpec.cosine(1.1, 0.9, 2), chi=0.0),
                            (1e-1, 1e-2), G)


def test_sign_changing_short_sweep():
    p = conserved(CoefficientSpec.cosine(1.1, 0.9, 2.0), d_I=0.1, chi=1.0)
    lim, rep = sign_changing_limit(p, (1e-1, 1e-2, 1e-3), G)
    for key in ("a_kappa_decreasing", "b_supI_decreasing", "c_Hminus_in_Jminus",
                "d_Jplus_in_beta_ge_gamma", "f_mass"):
        assert rep.checks[key], key
    assert len(rep.rows) == 3 and lim.M > 0


def source(beta, Lambda, chi=0.01):
    return ModelParams("source", 0.1, 0.1, chi, beta, 1.0, Lambda=Lambda)


def test_persistence_constants():
    rep = model2_persistence_sweep(source(2.0, 1.0, chi=0.1), (1e-1, 1e-2, 1e-3), G)
    assert rep.passed
    for prof in rep.profiles:
        np.testing.assert_allclose(prof.I, 1.0, atol=1e-6)


def test_persistence_needs_source_model():
    with pytest.raises(ValueError):
        model2_persistence_sweep(conserved(2.0), (1e-1,), G)


def test_parallel_sweep_matches_serial():
    p = conserved(2.0)
    serial = verify_high_risk_limit(p, (1e-1, 1e-2), G)
    parallel = verify_high_risk_limit(p, (1e-1, 1e-2), G, workers=2)
    assert serial.rows == parallel.rows


def test_S_star_vanishes_exactly_on_J_plus():
    u = np.where(X < 0.5, 0.3 + 0.2 * X, 1.0 - 1e-6)
    lim = limit_from_itilde(u, np.where(X < 0.5, 0.5, 2.0), ONE, 1.0, 0.1, 1.0, G)
    assert np.all(lim.S_star[lim.J_plus] == 0.0)
    assert np.all(lim.S_star[lim.J_minus] > 0.0)


def test_M_residual_strictly_increasing():
    from xdiff_sis.asymptotics import _M_residual
    u = 0.5 + 0.5 * np.cos(np.pi * X) ** 2
    vals = [_M_residual(M, u, 1.0, G, 11.0) for M in np.linspace(0.0, 20.0, 41)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_small_chi_limit_form():
    # for chi -> 0 the limit S* tends to N (1 - Itilde*)/int(1 - Itilde*)
    u = 0.5 + 0.4 * np.cos(np.pi * X)
    chi, d_I, N = 1e-6, 0.1, 1.0
    lim = limit_from_itilde(u, ONE, ONE, chi, d_I, N, G)
    expected = N * (1.0 - u) / integrate(1.0 - u, G)
    np.testing.assert_allclose(lim.S_star, expected, rtol=1e-4)
