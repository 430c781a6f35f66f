"""Acceptance criteria, one check per criterion.

Each ``criterion_*`` function returns ``(passed, detail)``. Under pytest every
criterion is a test that prints a ``[PASS]``/``[FAIL]`` line (collected and
repeated in the terminal summary); ``python tests/test_acceptance.py`` prints
the same lines directly.
"""
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import dense_principal_eigenvalue, relax_reduction  # noqa: E402
from xdiff_sis import asymptotics, evolve, spectral, steady  # noqa: E402
from xdiff_sis.domain import CoefficientSpec, Grid1D, ModelParams, integrate  # noqa: E402
from xdiff_sis.operators import neumann_laplacian  # noqa: E402

RESULTS = []


def _bump(grid, scale=0.1):
    return scale * (1.0 + np.cos(np.pi * grid.centers))


def _conserved_start(grid, N=1.0):
    I0 = _bump(grid)
    S0 = np.full(grid.n_cells, N / grid.measure) - 0.5 * I0
    S0 *= (N - integrate(I0, grid)) / integrate(S0, grid)
    return S0, I0


def criterion_1():
    grid = Grid1D(0.0, 1.0, 256)
    p = ModelParams("conserved", 0.1, 0.05, 1.0, CoefficientSpec.cosine(1.5, 1.0),
                    CoefficientSpec.affine(1.0, 0.5), N=1.0)
    S0, I0 = _conserved_start(grid)
    cfg = evolve.IntegratorConfig(t_end=1e9, steady_tol=0.0, max_steps=10_000,
                                  record_every=1000, store_fields=False)
    t0 = time.perf_counter()
    rec, _ = evolve.simulate(p, grid, S0, I0, cfg)
    elapsed = time.perf_counter() - t0
    ok = (rec.accepted_steps == 10_000 and rec.max_mass_error <= 1e-12 * p.N
          and elapsed < 5.0)
    return ok, (f"{rec.accepted_steps} steps, max |mass - N| = {rec.max_mass_error:.2e}, "
                f"simulate {elapsed:.2f} s")


def criterion_2():
    grid = Grid1D(0.0, 1.0, 256)
    x = grid.centers
    gamma = 1.0 + 0.5 * x
    r0 = spectral.basic_reproduction_number(0.3, 3.0 * gamma, gamma, grid).r0
    ratio_ok = abs(r0 - 3.0) < 1e-10
    beta = 1.0 + 0.8 * np.cos(np.pi * x)
    big = spectral.basic_reproduction_number(1e4, beta, gamma, grid).r0
    target = integrate(beta, grid) / integrate(gamma, grid)
    big_ok = abs(big - target) < 1e-3
    sweep = [spectral.basic_reproduction_number(d, beta, gamma, grid).r0
             for d in np.logspace(-3, 3, 20)]
    mono = all(b < a for a, b in zip(sweep, sweep[1:]))
    return ratio_ok and big_ok and mono, (
        f"|R0 - r| = {abs(r0 - 3):.1e}, |R0(1e4) - ratio| = {abs(big - target):.1e}, "
        f"decreasing = {mono}")


def criterion_3():
    grid = Grid1D(0.0, 1.0, 128)
    x = grid.centers
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(50):
        a, c, k = rng.uniform(0.3, 2.0), rng.uniform(-0.9, 0.9), rng.integers(1, 4)
        beta = a * (1.0 + c * np.cos(k * np.pi * x))
        gamma = rng.uniform(0.5, 1.5) * (1.0 + 0.3 * np.sin(np.pi * x))
        d_I = 10 ** rng.uniform(-3, 1)
        if not spectral.sign_consistency(d_I, beta, gamma, grid).passed:
            bad += 1
    return bad == 0, f"{50 - bad}/50 draws sign-consistent"


def criterion_4():
    grid = Grid1D(0.0, 1.0, 128)
    p = ModelParams("conserved", 0.1, 0.1, 1.0, 0.5, 1.0, N=1.0)
    S0, I0 = _conserved_start(grid)
    rec, st = evolve.simulate(p, grid, S0, I0, evolve.IntegratorConfig(t_end=50.0))
    gap = max(float(np.max(np.abs(st.S - 1.0))), float(np.max(st.I)))
    eig = spectral.principal_eigenpair(0.1, np.full(128, 0.5), np.ones(128), grid)
    env = evolve.decay_envelope_check(rec, eig.lambda_star, eig.phi_star, I0)
    return gap < 1e-6 and env.passed, (
        f"gap at t={st.t:.3g}: {gap:.2e}; envelope worst ratio {env.worst_ratio:.9f}")


def criterion_5():
    grid = Grid1D(0.0, 1.0, 128)
    p = ModelParams("conserved", 1.0, 1.0, 0.1, 2.0, 1.0, N=1.0)
    S0, I0 = _conserved_start(grid)
    rec, st = evolve.simulate(p, grid, S0, I0, evolve.IntegratorConfig(t_end=60.0),
                              lyapunov_ref=(0.5, 0.5))
    gap = max(float(np.max(np.abs(st.S - 0.5))), float(np.max(np.abs(st.I - 0.5))))
    chi0 = evolve.chi0_estimate(2.0, 1.0, 1.0, max(rec.sup_I))
    V = np.asarray(rec.lyapunov)
    mono = bool(np.all(np.diff(V[10:]) <= 1e-10))
    ok = gap < 1e-6 and mono and p.chi < 0.5 * chi0
    return ok, f"gap {gap:.2e}; chi0 estimate {chi0:.3g}; V nonincreasing = {mono}"


def criterion_6():
    grid = Grid1D(0.0, 1.0, 256)
    p = ModelParams("conserved", 0.1, 0.1, 1.0, CoefficientSpec.cosine(1.5, 1.0), 1.0, N=1.0)
    t0 = time.perf_counter()
    prof = steady.solve_endemic_model1(p, grid)
    elapsed = time.perf_counter() - t0
    inside = prof.Itilde.min() > 0 and prof.Itilde.max() < 1
    beta, gamma, _ = p.fields(grid)
    oracle = relax_reduction(prof.kappa, p.d_S, p.d_I, p.chi, beta, gamma, grid.h,
                             np.full(grid.n_cells, 0.5))
    agree = float(np.max(np.abs(oracle - prof.Itilde)))
    ok = (prof.pde_residual < 1e-8 and inside and prof.mass_residual < 1e-8 * p.N
          and agree < 1e-6 and elapsed < 30)
    return ok, (f"residual {prof.pde_residual:.1e}, kappa residual {prof.mass_residual:.1e}, "
                f"Itilde in [{prof.Itilde.min():.4f}, {prof.Itilde.max():.4f}], "
                f"oracle gap {agree:.1e}")


def criterion_7():
    grid = Grid1D(0.0, 1.0, 256)
    p = ModelParams("conserved", 0.1, 1.0, 0.1, 2.0, 1.0, N=1.0)
    rep = asymptotics.verify_high_risk_limit(p, (1e-1, 1e-2, 1e-3, 1e-4), grid,
                                             final_tol=1e-3)
    gaps = ", ".join(f"{g:.1e}" for _, g, _ in rep.rows)
    return rep.passed, f"gaps [{gaps}]"


def sign_changing_params():
    return ModelParams("conserved", 0.1, 0.1, 1.0, CoefficientSpec.cosine(1.1, 0.9, 2),
                       1.0, N=1.0)


def criterion_8():
    grid = Grid1D(0.0, 1.0, 256)
    lim, rep = asymptotics.sign_changing_limit(
        sign_changing_params(), (1e-1, 1e-2, 1e-3, 1e-4), grid, 1e-3)
    failed = [k for k, v in rep.checks.items() if not v]
    return rep.passed, (f"M = {lim.M:.5g}, kappa/d_S -> {rep.ratio_extrapolated:.5g}, "
                        f"|J+| = {lim.J_plus.size}, failed: {failed or 'none'}")


def criterion_9():
    grid = Grid1D(0.0, 1.0, 256)
    lam_spec = CoefficientSpec.cosine(1.0, 0.5)
    p = ModelParams("source", 0.1, 0.1, 0.5, CoefficientSpec.cosine(0.5, 0.3), 1.0,
                    Lambda=lam_spec)
    _, _, lam = p.fields(grid)
    rec, st = evolve.simulate(p, grid, lam.copy(), _bump(grid),
                              evolve.IntegratorConfig(t_end=60.0, store_fields=False))
    dfe_gap = float(np.max(np.abs(st.S - steady.solve_dfe_model2(p.d_S, lam, grid))))
    const = steady.solve_endemic_model2(
        ModelParams("source", 0.5, 0.5, 0.1, 2.0, 1.0, Lambda=1.0), grid)
    ee_gap = max(float(np.max(np.abs(const.S - 1))), float(np.max(np.abs(const.I - 1))))
    sweep_p = ModelParams("source", 0.1, 0.1, 0.01, CoefficientSpec.cosine(1.1, 0.9, 2),
                          1.0, Lambda=lam_spec)
    rep = asymptotics.model2_persistence_sweep(sweep_p, (1e-1, 1e-2, 1e-3, 1e-4), grid)
    ok = dfe_gap < 1e-4 and ee_gap < 1e-6 and rep.passed and rec.mass_bound_violations == 0
    return ok, (f"DFE gap {dfe_gap:.1e}, constant EE gap {ee_gap:.1e}, "
                f"min I along sweep {min(r[1] for r in rep.rows):.4f} >= eta {rep.eta:.4f}, "
                f"max |int S - int Lambda| {max(r[2] for r in rep.rows):.1e}")


def criterion_10():
    grid = Grid1D(0.0, 1.0, 128)
    x = grid.centers
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        beta = rng.uniform(0.5, 2.0) + rng.uniform(0, 0.4) * np.cos(rng.integers(1, 5) * np.pi * x)
        gamma = rng.uniform(0.5, 2.0) + rng.uniform(0, 0.4) * np.sin(np.pi * x)
        d_I = 10 ** rng.uniform(-2, 1)
        lam = spectral.principal_eigenpair(d_I, beta, gamma, grid).lambda_star
        worst = max(worst, abs(lam - dense_principal_eigenvalue(d_I, beta, gamma, grid.h)))
    return worst < 1e-8, f"max |lambda* - dense| = {worst:.1e}"


def criterion_11():
    errors = []
    for n in (32, 64, 128):
        grid = Grid1D(0.0, 1.0, n)
        x = grid.centers
        exact = -np.pi ** 2 * np.cos(np.pi * x)
        errors.append(float(np.max(np.abs(neumann_laplacian(np.cos(np.pi * x), grid) - exact))))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    ok = all(abs(r - 4.0) <= 0.6 for r in ratios)
    return ok, "error ratios " + ", ".join(f"{r:.3f}" for r in ratios)


CRITERIA = [
    (1, "conservation", criterion_1, 5),
    (2, "R0 identities", criterion_2, 5),
    (3, "sign link", criterion_3, 10),
    (4, "DFE stability", criterion_4, 10),
    (5, "EE stability", criterion_5, 10),
    (6, "reduction", criterion_6, 30),
    (7, "high-risk limit", criterion_7, 60),
    (8, "sign-changing limit", criterion_8, 120),
    (9, "model 2", criterion_9, 120),
    (10, "eigen oracle", criterion_10, 10),
    (11, "discretization order", criterion_11, 1),
]


def _evaluate(number, name, fn, budget):
    t0 = time.perf_counter()
    passed, detail = fn()
    elapsed = time.perf_counter() - t0
    within = elapsed < budget
    line = (f"[{'PASS' if passed and within else 'FAIL'}] {number:2d} {name}: {detail} "
            f"({elapsed:.2f} s, budget {budget} s)")
    return passed and within, line


@pytest.mark.parametrize("number,name,fn,budget", CRITERIA,
                         ids=[f"{c[0]:02d}-{c[1].replace(' ', '-')}" for c in CRITERIA])
def test_criterion(number, name, fn, budget):
    ok, line = _evaluate(number, name, fn, budget)
    RESULTS.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    status = 0
    for crit in CRITERIA:
        ok, line = _evaluate(*crit)
        print(line, flush=True)
        status |= not ok
    sys.exit(status)
