"""Grid, coefficient profiles, model parameters and the evolving state.

Fields are plain 1-D float arrays with one entry per cell of a
:class:`Grid1D`; functions that take a grid check the length.
"""
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class GridMismatchError(ValueError):
    """A field does not have one value per cell of the grid it is used with."""


class CoefficientError(ValueError):
    """A coefficient profile violates its positivity requirement."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centred mesh on ``[x_left, x_right]`` with zero-flux ends."""

    x_left: float
    x_right: float
    n_cells: int

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise ValueError("x_right must exceed x_left")
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ValueError("n_cells must be an integer >= 4")

    @property
    def h(self):
        return (self.x_right - self.x_left) / self.n_cells

    @property
    def measure(self):
        return self.x_right - self.x_left

    @property
    def centers(self):
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.h

    def check(self, f, name="field"):
        """Return ``f`` as a float array, raising if its length is wrong."""
        arr = np.asarray(f, dtype=float)
        if arr.shape != (self.n_cells,):
            raise GridMismatchError(
                f"{name} has shape {arr.shape}, grid has {self.n_cells} cells")
        return arr


def integrate(f, grid):
    """Midpoint-rule integral ``h * sum(f)`` over the grid."""
    return grid.h * float(np.sum(grid.check(f)))


def inner(u, v, grid):
    """Discrete L2 inner product ``h * sum(u*v)``."""
    return grid.h * float(np.dot(grid.check(u), grid.check(v)))


@dataclass(frozen=True)
class CoefficientSpec:
    """A coefficient profile from one of four families.

    ``kind`` is ``"constant"`` (``params=(c,)``), ``"affine"`` (``a + b*x``),
    ``"cosine"`` (``a + b*cos(k*pi*(x - x_left)/|Omega|)``, ``params=(a, b, k)``)
    or ``"samples"`` (``values`` given verbatim, one per cell).
    """

    kind: str
    params: tuple = ()
    values: tuple = None
    positive: bool = True

    @classmethod
    def constant(cls, c, positive=True):
        return cls("constant", (float(c),), positive=positive)

    @classmethod
    def affine(cls, a, b, positive=True):
        return cls("affine", (float(a), float(b)), positive=positive)

    @classmethod
    def cosine(cls, a, b, k=1.0, positive=True):
        return cls("cosine", (float(a), float(b), float(k)), positive=positive)

    @classmethod
    def samples(cls, values, positive=True):
        return cls("samples", values=tuple(float(v) for v in values),
                   positive=positive)

    def __post_init__(self):
        expected = {"constant": 1, "affine": 2, "cosine": 3, "samples": 0}
        if self.kind not in expected:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if len(self.params) != expected[self.kind]:
            raise ValueError(
                f"{self.kind} coefficient needs {expected[self.kind]} parameters")
        if self.kind == "samples" and self.values is None:
            raise ValueError("samples coefficient needs values")


def evaluate_spec(spec, grid, name="coefficient"):
    """Evaluate ``spec`` at the cell centres of ``grid``; ``name`` labels errors."""
    x = grid.centers
    if spec.kind == "constant":
        values = np.full(grid.n_cells, spec.params[0])
    elif spec.kind == "affine":
        a, b = spec.params
        values = a + b * x
    elif spec.kind == "cosine":
        a, b, k = spec.params
        values = a + b * np.cos(k * np.pi * (x - grid.x_left) / grid.measure)
    else:
        values = grid.check(np.array(spec.values, dtype=float), "samples")
    if not np.all(np.isfinite(values)):
        raise CoefficientError(f"{name} has non-finite values")
    if spec.positive:
        bad = np.flatnonzero(values <= 0.0)
        if bad.size:
            j = int(bad[0])
            raise CoefficientError(
                f"{name} must be positive; value {values[j]:.6g} at cell {j} "
                f"(x={x[j]:.6g})", index=j)
    return values


def as_spec(value):
    """Coerce a number, array or spec into a :class:`CoefficientSpec`."""
    if isinstance(value, CoefficientSpec):
        return value
    if np.ndim(value) == 0:
        return CoefficientSpec.constant(value)
    return CoefficientSpec.samples(value)


class ModelKind(str, Enum):
    CONSERVED = "conserved"  # model 1: total population N fixed
    SOURCE = "source"  # model 2: linear source Lambda - S


@dataclass(frozen=True)
class ModelParams:
    """Parameters of either SIS model.

    ``N`` is required for :attr:`ModelKind.CONSERVED`, ``Lambda`` for
    :attr:`ModelKind.SOURCE`. Coefficients may be given as numbers, arrays
    or :class:`CoefficientSpec` and are stored as specs.
    """

    kind: ModelKind
    d_S: float
    d_I: float
    chi: float
    beta: CoefficientSpec
    gamma: CoefficientSpec
    N: float = None
    Lambda: CoefficientSpec = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "beta", as_spec(self.beta))
        object.__setattr__(self, "gamma", as_spec(self.gamma))
        if self.Lambda is not None:
            object.__setattr__(self, "Lambda", as_spec(self.Lambda))
        for name in ("d_S", "d_I"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive")
        if not (np.isfinite(self.chi) and self.chi >= 0):
            raise ValueError("chi must be non-negative")
        if self.kind is ModelKind.CONSERVED:
            if self.N is None or not (np.isfinite(self.N) and self.N > 0):
                raise ValueError("N must be positive for the conserved model")
        elif self.Lambda is None:
            raise ValueError("Lambda is required for the source model")

    def replace(self, **changes):
        return replace(self, **changes)

    def fields(self, grid):
        """Return ``(beta, gamma, Lambda)`` evaluated on ``grid``.

        ``Lambda`` is ``None`` for the conserved model.
        """
        beta = evaluate_spec(self.beta, grid, "beta")
        gamma = evaluate_spec(self.gamma, grid, "gamma")
        lam = None
        if self.kind is ModelKind.SOURCE:
            lam = evaluate_spec(self.Lambda, grid, "Lambda")
        return beta, gamma, lam


@dataclass
class State:
    """The pair ``(S, I)`` at time ``t``."""

    S: np.ndarray
    I: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)
        self.I = np.asarray(self.I, dtype=float)
        if self.S.shape != self.I.shape or self.S.ndim != 1:
            raise GridMismatchError("S and I must be 1-D arrays of equal length")
        if np.any(self.S < 0) or np.any(self.I < 0):
            raise ValueError("S and I must be non-negative")
        if not (np.all(np.isfinite(self.S)) and np.all(np.isfinite(self.I))):
            raise ValueError("S and I must be finite")
        if self.t < 0:
            raise ValueError("time must be non-negative")

    def copy(self):
        return State(self.S.copy(), self.I.copy(), self.t)
