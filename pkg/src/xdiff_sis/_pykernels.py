"""Pure-Python/NumPy twins of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built, or when ``XDIFF_SIS_PURE=1`` is set.
Elementwise work is vectorised; the tridiagonal sweeps run over Python floats.
"""
import numpy as np

BACKEND = "python"


def _face_weight(t):
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-3
    safe = np.where(small, 1.0, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = 1.0 / np.log1p(safe) - 1.0 / safe
    series = 0.5 - t / 12.0 + t * t / 24.0 - 19.0 * t * t * t / 720.0
    return np.where(small, series, direct)


def thomas(sub, diag, sup, rhs):
    """Solve a tridiagonal system; ``sub[0]`` and ``sup[-1]`` are ignored."""
    a = sub.tolist()
    b = diag.tolist()
    c = sup.tolist()
    d = rhs.tolist()
    n = len(b)
    cp = [0.0] * n
    x = [0.0] * n
    denom = b[0]
    cp[0] = c[0] / denom
    x[0] = d[0] / denom
    for k in range(1, n):
        denom = b[k] - a[k] * cp[k - 1]
        cp[k] = c[k] / denom
        x[k] = (d[k] - a[k] * x[k - 1]) / denom
    for k in range(n - 2, -1, -1):
        x[k] = x[k] - cp[k] * x[k + 1]
    return np.array(x)


def neumann_solve(r, rhs):
    """Solve ``(Id - r*h^2*L) x = rhs`` for the zero-flux Laplacian ``L``."""
    d = rhs.tolist()
    n = len(d)
    cp = [0.0] * n
    x = [0.0] * n
    interior = 1.0 + 2.0 * r
    denom = 1.0 + r
    cp[0] = -r / denom
    x[0] = d[0] / denom
    for k in range(1, n):
        diag = 1.0 + r if k == n - 1 else interior
        denom = diag + r * cp[k - 1]
        cp[k] = -r / denom
        x[k] = (d[k] + r * x[k - 1]) / denom
    for k in range(n - 2, -1, -1):
        x[k] = x[k] - cp[k] * x[k + 1]
    return np.array(x)


def conservative_solve(r, rhs):
    """``neumann_solve`` followed by a flux-form rebuild that preserves the sum."""
    x = neumann_solve(r, rhs)
    padded = np.concatenate(([0.0], x[1:] - x[:-1], [0.0]))
    return rhs + r * (padded[1:] - padded[:-1])


def _divergence(flux, h):
    # flux holds the n-1 interior face values; boundary faces carry zero
    padded = np.concatenate(([0.0], flux, [0.0]))
    return (padded[1:] - padded[:-1]) / h


def laplacian(u, h):
    return _divergence((u[1:] - u[:-1]) / h, h)


def _face_values(S, chi, d_I, log_mean):
    dS = S[1:] - S[:-1]
    if not log_mean:
        return 0.5 * (S[:-1] + S[1:])
    t = chi * dS / (d_I + chi * S[:-1])
    face = S[:-1] + dS * _face_weight(t)
    return np.where(dS != 0.0, face, 0.5 * (S[:-1] + S[1:]))


def cross_divergence(S, I, h, chi, d_I, log_mean):
    face = _face_values(S, chi, d_I, log_mean)
    return _divergence(chi * face * (I[1:] - I[:-1]) / h, h)


def incidence(S, I, beta, eps):
    total = S + I
    ok = total > eps
    with np.errstate(divide="ignore", invalid="ignore"):
        val = beta * S * I / np.where(ok, total, 1.0)
    return np.where(ok, val, 0.0)


def drift_bounds(I, h):
    """Return ``(max |grad I|, max |lap I|)`` over faces and cells."""
    grad = (I[1:] - I[:-1]) / h
    lap = _divergence(grad, h)
    gmax = float(np.max(np.abs(grad))) if grad.size else 0.0
    return gmax, float(np.max(np.abs(lap)))


def imex_step(S, I, beta, gamma, lam, has_source, d_S, d_I, chi, dt, h, eps,
              log_mean):
    """One IMEX step; returns ``(S_new, I_new)``."""
    inc = incidence(S, I, beta, eps)
    dI = inc - gamma * I
    dS = -dI
    if has_source:
        dS = (lam - S) + dS
    I_new = conservative_solve(dt * d_I / (h * h), I + dt * dI)
    cross = cross_divergence(S, I_new, h, chi, d_I, log_mean)
    S_new = conservative_solve(dt * d_S / (h * h), S + dt * (cross + dS))
    return S_new, I_new
