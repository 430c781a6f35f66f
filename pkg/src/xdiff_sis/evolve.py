"""IMEX time stepping for both SIS models and the trajectory diagnostics.

Diffusion is implicit, cross-diffusion and reactions explicit. The I update
comes first and the S update uses the new I in its cross-diffusion flux.
Steps are accepted on positivity alone; a rejected step is retried at half
the size.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .domain import ModelKind, State, integrate
from .operators import EPS_DEN

logger = logging.getLogger(__name__)

#: Steady state is declared when ||state change||_inf / dt falls below this.
STEADY_TOL = 1e-12


class PositivityError(ArithmeticError):
    """A step produced a negative or non-finite entry."""


class StepSizeError(RuntimeError):
    """The step size fell below ``dt_min``; carries the partial record."""

    def __init__(self, message, record=None, state=None):
        super().__init__(message)
        self.record = record
        self.state = state


@dataclass
class IntegratorConfig:
    """Step-size and recording controls.

    ``dt_init=None`` uses ``0.1 * h**2 / max(d_S, d_I, chi * max(I0))``. After
    each accepted step the step grows by ``growth`` up to the explicit
    stability bound (scaled by ``safety``) and ``dt_max``.
    """

    t_end: float
    dt_init: float = None
    dt_min: float = 1e-14
    dt_max: float = math.inf
    safety: float = 0.5
    growth: float = 1.2
    positivity_retries: int = 40
    record_every: int = 1
    steady_tol: float = STEADY_TOL
    store_fields: bool = True
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        if self.dt_init is not None and self.dt_init < self.dt_min:
            raise ValueError("dt_init must be at least dt_min")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class TrajectoryRecord:
    """Diagnostics sampled every ``record_every`` accepted steps.

    ``dirichlet_*`` are running sums of ``dt * int |grad u|^2``; ``w = S + I``.
    ``max_mass_error`` is taken over every accepted step, not just samples.
    """

    times: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    mass_weighted: list = field(default_factory=list)
    sup_I: list = field(default_factory=list)
    lyapunov: list = field(default_factory=list)
    dirichlet_w: list = field(default_factory=list)
    dirichlet_S: list = field(default_factory=list)
    dirichlet_I: list = field(default_factory=list)
    S: list = field(default_factory=list)
    I: list = field(default_factory=list)
    accepted_steps: int = 0
    rejected_steps: int = 0
    max_mass_error: float = 0.0
    mass_bound: float = None
    mass_bound_violations: int = 0
    steady: bool = False

    def as_arrays(self):
        """Return the sampled series as a dict of NumPy arrays."""
        keys = ("times", "steps", "mass", "mass_weighted", "sup_I", "lyapunov",
                "dirichlet_w", "dirichlet_S", "dirichlet_I")
        return {k: np.asarray(getattr(self, k), dtype=float) for k in keys}


class _Model:
    # coefficient fields cached once per run
    def __init__(self, params, grid):
        self.params = params
        self.grid = grid
        self.beta, self.gamma, lam = params.fields(grid)
        self.has_source = params.kind is ModelKind.SOURCE
        self.lam = lam if self.has_source else np.zeros(grid.n_cells)
        self.reaction_rate = (float(np.max(self.beta)) + float(np.max(self.gamma))
                              + (1.0 if self.has_source else 0.0))

    def step(self, S, I, dt):
        p = self.params
        return kernels.imex_step(S, I, self.beta, self.gamma, self.lam,
                                 self.has_source, p.d_S, p.d_I, p.chi, dt,
                                 self.grid.h, EPS_DEN, p.chi > 0)

    def stable_dt(self, I, safety):
        p = self.params
        bound = 1.0 / self.reaction_rate
        if p.chi > 0:
            gmax, lmax = kernels.drift_bounds(I, self.grid.h)
            v = p.chi * gmax
            if v > 0:
                bound = min(bound, 2.0 * p.d_S / (v * v))
            if lmax > 0:
                bound = min(bound, 1.0 / (p.chi * lmax))
        return safety * bound


def default_dt(params, grid, I0):
    scale = max(params.d_S, params.d_I, params.chi * float(np.max(I0)))
    return 0.1 * grid.h ** 2 / scale


def imex_step(state, params, dt, grid):
    """Advance ``state`` by one IMEX step of size ``dt``.

    Raises :class:`PositivityError` if the result has a negative entry.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    model = _Model(params, grid)
    S = np.ascontiguousarray(grid.check(state.S, "S"))
    I = np.ascontiguousarray(grid.check(state.I, "I"))
    S_new, I_new = model.step(S, I, dt)
    if not _admissible(S_new, I_new):
        raise PositivityError("step produced a negative or non-finite entry")
    return State(S_new, I_new, state.t + dt)


def _admissible(S, I):
    return (np.all(np.isfinite(S)) and np.all(np.isfinite(I))
            and S.min() >= 0.0 and I.min() >= 0.0)


def lyapunov_value(state, hatS, hatI, grid):
    """``int (S - hatS - hatS ln(S/hatS)) + (I - hatI - hatI ln(I/hatI))``."""
    if not (hatS > 0 and hatI > 0):
        raise ValueError("equilibrium values must be positive")
    S = grid.check(state.S, "S")
    I = grid.check(state.I, "I")
    if np.any(S <= 0) or np.any(I <= 0):
        raise ValueError("Lyapunov functional needs S > 0 and I > 0")
    return integrate(_bregman(S, hatS) + _bregman(I, hatI), grid)


def _bregman(u, ref):
    # ref * (q - 1 - ln q) with q = u/ref, written to keep accuracy near q = 1
    z = u / ref - 1.0
    return ref * (z - np.log1p(z))


def mass_bound_model2(params, grid, S0, I0):
    """The uniform bound on ``int S + (1 + 1/(2 beta*)) I`` for model 2."""
    beta, gamma, lam = params.fields(grid)
    weight = 1.0 + 1.0 / (2.0 * np.max(beta))
    initial = integrate(S0 + weight * I0, grid)
    denom = min(1.0, 2.0 * np.min(gamma) / (1.0 + 2.0 * np.max(beta)))
    return initial + 2.0 * integrate(lam, grid) / denom


def chi0_estimate(r, d_S, d_I, sup_I):
    """Observed-supremum surrogate ``2 sqrt((r-1) d_S d_I) / max_t ||I||``."""
    return 2.0 * math.sqrt((r - 1.0) * d_S * d_I) / sup_I


def simulate(params, grid, S0, I0, cfg, *, lyapunov_ref=None):
    """Integrate from ``(S0, I0)`` until ``cfg.t_end`` or steady state.

    Returns ``(record, final_state)``. ``lyapunov_ref=(hatS, hatI)`` adds the
    Lyapunov functional to the record. For the conserved model the initial
    mass must equal ``params.N``.
    """
    S = np.ascontiguousarray(grid.check(S0, "S0"), dtype=float).copy()
    I = np.ascontiguousarray(grid.check(I0, "I0"), dtype=float).copy()
    if np.any(S < 0) or np.any(I < 0):
        raise ValueError("initial data must be non-negative")
    if not np.any(I > 0):
        raise ValueError("I0 must not vanish identically")
    model = _Model(params, grid)
    conserved = not model.has_source
    N = None
    if conserved:
        N = params.N
        m0 = integrate(S + I, grid)
        if abs(m0 - N) > 1e-10 * N:
            raise ValueError(f"initial mass {m0:.12g} differs from N = {N:.12g}")

    record = TrajectoryRecord()
    weight = 1.0 + 1.0 / (2.0 * np.max(model.beta))
    if not conserved:
        record.mass_bound = mass_bound_model2(params, grid, S, I)
    h = grid.h
    energy = np.zeros(3)

    def sample(t, steps):
        record.times.append(t)
        record.steps.append(steps)
        record.mass.append(integrate(S + I, grid))
        mw = integrate(S + weight * I, grid)
        record.mass_weighted.append(mw)
        if record.mass_bound is not None and mw > record.mass_bound * (1 + 1e-12):
            record.mass_bound_violations += 1
        record.sup_I.append(float(np.max(I)))
        if lyapunov_ref is not None:
            record.lyapunov.append(
                lyapunov_value(State(S, I, t), *lyapunov_ref, grid))
        record.dirichlet_w.append(energy[0])
        record.dirichlet_S.append(energy[1])
        record.dirichlet_I.append(energy[2])
        if cfg.store_fields:
            record.S.append(S.copy())
            record.I.append(I.copy())

    dt = cfg.dt_init if cfg.dt_init is not None else default_dt(params, grid, I)
    t = 0.0
    steps = 0
    sample(t, steps)
    while t < cfg.t_end and steps < cfg.max_steps:
        remaining = cfg.t_end - t
        step_dt = min(dt, cfg.dt_max, model.stable_dt(I, cfg.safety))
        final = step_dt >= remaining
        if final:
            step_dt = remaining
        tries = 0
        while True:
            S_new, I_new = model.step(S, I, step_dt)
            if _admissible(S_new, I_new):
                break
            record.rejected_steps += 1
            tries += 1
            step_dt *= 0.5
            final = False
            if tries > cfg.positivity_retries or step_dt < cfg.dt_min:
                state = State(np.maximum(S, 0), np.maximum(I, 0), t)
                raise StepSizeError(
                    f"step size underflow at t={t:.6g} (dt={step_dt:.3e})",
                    record=record, state=state)
        change = max(float(np.max(np.abs(S_new - S))),
                     float(np.max(np.abs(I_new - I))))
        w_new = S_new + I_new
        energy[0] += step_dt * h * float(np.sum(np.diff(w_new) ** 2)) / h ** 2
        energy[1] += step_dt * h * float(np.sum(np.diff(S_new) ** 2)) / h ** 2
        energy[2] += step_dt * h * float(np.sum(np.diff(I_new) ** 2)) / h ** 2
        S, I = S_new, I_new
        t = cfg.t_end if final else t + step_dt
        steps += 1
        record.accepted_steps = steps
        if conserved:
            err = abs(integrate(S + I, grid) - N)
            if err > record.max_mass_error:
                record.max_mass_error = err
        steady = change / step_dt < cfg.steady_tol
        if steady or final or steps % cfg.record_every == 0:
            sample(t, steps)
        if steady:
            record.steady = True
            break
        if tries == 0:
            dt = step_dt * cfg.growth
        else:
            dt = step_dt
    logger.debug("simulate: %d accepted, %d rejected steps, t=%.6g",
                 record.accepted_steps, record.rejected_steps, t)
    return record, State(S, I, t)


@dataclass
class EnvelopeReport:
    passed: bool
    M: float
    worst_ratio: float
    worst_time: float


def decay_envelope_check(record, lambda_star, phi_star, I0, *, rtol=1e-6):
    """Check ``I(x, t_k) <= M exp(-lambda* t_k) phi*(x)`` at every sample.

    ``M`` is the smallest constant with ``I0 <= M phi*``. ``worst_ratio`` is
    the largest observed ``I / (M exp(-lambda* t) phi*)``.
    """
    if not lambda_star > 0:
        raise ValueError("decay envelope needs lambda* > 0 (R0 < 1)")
    if not record.I:
        raise ValueError("record has no stored I snapshots")
    phi = np.asarray(phi_star, dtype=float)
    M = float(np.max(np.asarray(I0) / phi))
    worst, worst_t = -np.inf, 0.0
    for t, I in zip(record.times, record.I):
        envelope = M * math.exp(-lambda_star * t) * phi
        ratio = float(np.max(I / envelope))
        if ratio > worst:
            worst, worst_t = ratio, t
    return EnvelopeReport(worst <= 1.0 + rtol, M, worst, worst_t)
