"""Self-contained numerical kernel used by every other module.

Dense complex matrices are plain ``numpy.ndarray`` in row-major order.  The
three entry points are

* :func:`eigh` -- Hermitian eigendecomposition by cyclic Jacobi rotations,
* :func:`integrate_ode` -- embedded Dormand-Prince 5(4) with PI step control
  and dense output,
* :func:`fit_least_squares` -- damped Gauss-Newton (Levenberg-Marquardt style
  damping schedule).

All routines are pure functions of their inputs and deterministic.  Time is
measured in microseconds and rates in inverse microseconds throughout the
package; nothing in this module depends on that convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateFitError, StiffnessError

__all__ = [
    "EigenDecomposition",
    "FitResult",
    "OdeSolution",
    "eigh",
    "fit_least_squares",
    "hermitian_defect",
    "integrate_ode",
]


def hermitian_defect(m: np.ndarray) -> float:
    """Largest |m[i,j] - conj(m[j,i])| relative to the largest |entry|."""
    m = np.asarray(m)
    scale = np.abs(m).max()
    if scale == 0.0:
        return 0.0
    return float(np.abs(m - m.conj().T).max() / scale)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order; eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Annihilate a[p, q] with a complex Givens rotation, updating in place."""
    apq = a[p, q]
    r = abs(apq)
    if r == 0.0:
        return
    phase = apq / r
    tau = (a[p, p].real - a[q, q].real) / (2.0 * r)
    if tau >= 0.0:
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c

    # Column update A <- A J with J = [[c, -s], [s*conj(phase), c*conj(phase)]]
    # on the (p, q) plane, followed by the matching row update A <- J^H A.
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p + s * np.conj(phase) * col_q
    a[:, q] = -s * col_p + c * np.conj(phase) * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p + s * phase * row_q
    a[q, :] = -s * row_p + c * phase * row_q
    a[p, q] = 0.0
    a[q, p] = 0.0

    vcol_p = v[:, p].copy()
    vcol_q = v[:, q].copy()
    v[:, p] = c * vcol_p + s * np.conj(phase) * vcol_q
    v[:, q] = -s * vcol_p + c * np.conj(phase) * vcol_q


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eigh(
    h: np.ndarray,
    *,
    hermitian_tol: float = 1e-12,
    max_sweeps: int = 60,
) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Eigenvalues are returned ascending.  Within degenerate clusters, vectors
    are ordered by the row index of their largest-magnitude component (ties
    to the lower index), and each vector's phase is fixed so that component
    is real and positive.  The ordering and gauge make the output
    deterministic across runs and platforms.

    Raises
    ------
    ValueError
        If ``h`` is not square or not Hermitian to ``hermitian_tol``
        (relative to the largest entry).
    ConvergenceError
        If the off-diagonal norm fails to vanish within ``max_sweeps``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if hermitian_defect(h) > hermitian_tol:
        raise ValueError(
            f"matrix is not Hermitian: relative defect {hermitian_defect(h):.3e}"
        )

    n = h.shape[0]
    a = 0.5 * (h + h.conj().T)  # symmetrize away the sub-tolerance defect
    v = np.eye(n, dtype=complex)
    scale = max(float(np.linalg.norm(a)), 1.0)
    target = 1e-14 * scale

    if n > 1:
        converged = False
        for _ in range(max_sweeps):
            if _off_norm(a) <= target:
                converged = True
                break
            # Small pivots are skipped; the threshold keeps sweeps productive
            # without stalling on entries already at the target level.
            thresh = max(_off_norm(a) / (n * n), target / n)
            for p in range(n - 1):
                for q in range(p + 1, n):
                    if abs(a[p, q]) >= thresh:
                        _jacobi_rotate(a, v, p, q)
        else:
            converged = _off_norm(a) <= target
        if not converged:
            raise ConvergenceError(
                f"Jacobi sweep limit {max_sweeps} reached; off-diagonal norm "
                f"{_off_norm(a):.3e} > {target:.3e}"
            )

    eigenvalues = np.diag(a).real.copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = v[:, order]

    # Deterministic ordering inside degenerate clusters and phase gauge.
    cluster_tol = max(1e-9 * max(np.abs(eigenvalues).max(), 1.0), 1e-300)
    i = 0
    while i < n:
        j = i + 1
        while j < n and eigenvalues[j] - eigenvalues[j - 1] <= cluster_tol:
            j += 1
        if j - i > 1:
            keys = [int(np.argmax(np.abs(vectors[:, k]))) for k in range(i, j)]
            sub = np.argsort(np.asarray(keys), kind="stable")
            vectors[:, i:j] = vectors[:, i + sub]
            eigenvalues[i:j] = eigenvalues[i + sub]
        i = j
    for k in range(n):
        lead = int(np.argmax(np.abs(vectors[:, k])))
        z = vectors[lead, k]
        if z != 0.0:
            vectors[:, k] *= np.conj(z) / abs(z)

    return EigenDecomposition(eigenvalues=eigenvalues, eigenvectors=vectors)


# --- Dormand-Prince 5(4) --------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Coefficients of the order-4 dense-output polynomial for this pair.
_DP_D = np.array(
    [
        -12715105075 / 11282082432,
        0.0,
        87487479700 / 32700410799,
        -10690763975 / 1880347072,
        701980252875 / 199316789632,
        -1453857185 / 822651844,
        69997945 / 29380423,
    ]
)


@dataclass(frozen=True)
class OdeSolution:
    """Sampled trajectory: ``y[k]`` is the state at time ``t[k]``."""

    t: np.ndarray
    y: np.ndarray


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, tol: float) -> float:
    scale = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def integrate_ode(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[complex] | np.ndarray,
    t_span: tuple[float, float],
    tol: float = 1e-9,
    t_eval: Sequence[float] | np.ndarray | None = None,
    max_steps: int = 1_000_000,
) -> OdeSolution:
    """Integrate ``y' = f(t, y)`` with an adaptive Dormand-Prince 5(4) pair.

    Local error per step is kept at or below ``tol`` (used as both absolute
    and relative tolerance).  Requested sample times in ``t_eval`` are filled
    by the pair's order-4 dense-output interpolant; without ``t_eval`` the
    accepted step points are returned.  Real and complex states are both
    supported.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be a non-degenerate forward interval")
    y = np.atleast_1d(np.asarray(y0))
    if not np.iscomplexobj(y):
        y = y.astype(float)

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.size and (t_eval.min() < t0 - 1e-12 or t_eval.max() > t1 + 1e-12):
            raise ValueError("t_eval must lie within t_span")
        if np.any(np.diff(t_eval) < 0):
            raise ValueError("t_eval must be nondecreasing")

    k = np.empty((7, y.size), dtype=y.dtype)
    k[0] = f(t0, y)

    # Starting step from the local derivative scale (Hairer-style heuristic).
    sc = tol + tol * np.abs(y)
    d0 = float(np.sqrt(np.mean(np.abs(y / sc) ** 2)))
    d1 = float(np.sqrt(np.mean(np.abs(k[0] / sc) ** 2)))
    h = 1e-6 * (t1 - t0) if d1 <= 1e-15 else min(0.01 * max(d0, 1e-5) / d1, t1 - t0)

    t = t0
    ts = [t0]
    ys = [y.copy()]
    out_t: list[float] = []
    out_y: list[np.ndarray] = []
    eval_idx = 0
    if t_eval is not None:
        while eval_idx < t_eval.size and t_eval[eval_idx] <= t0 + 1e-15:
            out_t.append(float(t_eval[eval_idx]))
            out_y.append(y.copy())
            eval_idx += 1

    err_prev = 1e-4
    hmin = 1e4 * np.finfo(float).eps * max(abs(t0), abs(t1))
    steps = 0
    while t < t1:
        if steps >= max_steps:
            raise ConvergenceError(f"ODE step budget {max_steps} exhausted")
        steps += 1
        h = min(h, t1 - t)
        if h < hmin:
            raise StiffnessError(f"step size underflow at t={t:.6g} (h={h:.3e})")

        for i in range(1, 7):
            yi = y + h * (_DP_A[i] @ k[:i])
            k[i] = f(t + _DP_C[i] * h, yi)
        y_new = y + h * (_DP_A[6] @ k[:6])  # 5th-order solution (FSAL row)
        err = h * (_DP_E @ k)
        err_norm = _error_norm(err, y, y_new, tol)

        if err_norm <= 1.0:
            t_new = t + h
            if t_eval is not None:
                while eval_idx < t_eval.size and t_eval[eval_idx] <= t_new + 1e-15:
                    theta = (t_eval[eval_idx] - t) / h
                    dy = y_new - y
                    r1 = y
                    r2 = dy
                    r3 = h * k[0] - dy
                    r4 = dy - h * k[6] - r3
                    r5 = h * (_DP_D @ k)
                    u = r1 + theta * (
                        r2 + (1 - theta) * (r3 + theta * (r4 + (1 - theta) * r5))
                    )
                    out_t.append(float(t_eval[eval_idx]))
                    out_y.append(u)
                    eval_idx += 1
            t = t_new
            y = y_new
            k[0] = k[6]  # first-same-as-last
            ts.append(t)
            ys.append(y.copy())
            err_norm = max(err_norm, 1e-10)
            fac = 0.9 * err_norm ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            h *= min(5.0, max(0.2, fac))
            err_prev = err_norm
        else:
            h *= min(1.0, max(0.1, 0.9 * err_norm ** (-0.2)))

    if t_eval is not None:
        return OdeSolution(t=np.asarray(out_t), y=np.asarray(out_y))
    return OdeSolution(t=np.asarray(ts), y=np.asarray(ys))


# --- Damped Gauss-Newton least squares --------------------------------------


@dataclass(frozen=True)
class FitResult:
    """Outcome of a nonlinear least-squares minimization.

    ``converged`` is True iff the infinity norm of the gradient of the
    squared-residual objective is at or below the configured tolerance.
    ``covariance`` is the linearized parameter covariance at the optimum
    (``None`` when it cannot be formed).
    """

    params: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    covariance: np.ndarray | None = None


def _numeric_jacobian(
    model: Callable[[np.ndarray, np.ndarray], np.ndarray],
    t: np.ndarray,
    p: np.ndarray,
) -> np.ndarray:
    jac = np.empty((t.size, p.size))
    for i in range(p.size):
        step = 6e-6 * max(abs(p[i]), 1e-3)
        pp = p.copy()
        pm = p.copy()
        pp[i] += step
        pm[i] -= step
        jac[:, i] = (model(t, pp) - model(t, pm)) / (2.0 * step)
    return jac


def fit_least_squares(
    model: Callable[[np.ndarray, np.ndarray], np.ndarray],
    t: Sequence[float] | np.ndarray,
    y: Sequence[float] | np.ndarray,
    initial_guess: Sequence[float] | np.ndarray,
    *,
    gtol: float = 1e-8,
    xtol: float = 1e-12,
    max_iter: int = 200,
) -> FitResult:
    """Minimize ``sum((model(t, p) - y)**2)`` over the parameter vector.

    Damped Gauss-Newton with a Levenberg-Marquardt damping schedule on the
    scaled normal equations.  Deterministic given identical inputs; the
    Jacobian is formed by central differences.

    Raises
    ------
    DegenerateFitError
        If the Jacobian is rank deficient beyond what damping can recover
        (no descent direction found while the gradient is still large).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.asarray(initial_guess, dtype=float).copy()
    if t.size < p.size:
        raise ValueError("need at least as many samples as parameters")
    if not np.all(np.isfinite(p)):
        raise ValueError("initial guess must be finite")

    def residuals(params: np.ndarray) -> np.ndarray:
        r = np.asarray(model(t, params), dtype=float) - y
        if not np.all(np.isfinite(r)):
            raise DegenerateFitError("model returned non-finite residuals")
        return r

    r = residuals(p)
    cost = float(r @ r)
    lam = 1e-3
    iterations = 0
    gnorm = np.inf
    jac = _numeric_jacobian(model, t, p)

    for iterations in range(1, max_iter + 1):
        grad = 2.0 * (jac.T @ r)
        gnorm = float(np.abs(grad).max())
        if gnorm <= gtol * max(1.0, cost):
            break

        jtj = jac.T @ jac
        diag = np.diag(jtj).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(), 1e-300))
        stepped = False
        while lam < 1e15:
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(diag), -0.5 * grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            try:
                r_try = residuals(p + delta)
            except DegenerateFitError:
                lam *= 10.0
                continue
            with np.errstate(over="ignore"):
                cost_try = float(r_try @ r_try)
            if not math.isfinite(cost_try):
                lam *= 10.0
                continue
            if cost_try < cost:
                p = p + delta
                r = r_try
                cost = cost_try
                lam = max(lam / 3.0, 1e-14)
                stepped = True
                break
            lam *= 10.0
        if not stepped:
            # No descent at any damping: either we are at a (numerical)
            # optimum, or the Jacobian is genuinely degenerate.
            if gnorm <= 1e-6 * max(1.0, cost):
                break
            raise DegenerateFitError(
                f"no descent direction found (gradient norm {gnorm:.3e})"
            )
        if float(np.abs(delta).max()) <= xtol * (xtol + float(np.abs(p).max())):
            jac = _numeric_jacobian(model, t, p)
            grad = 2.0 * (jac.T @ r)
            gnorm = float(np.abs(grad).max())
            break
        jac = _numeric_jacobian(model, t, p)

    converged = gnorm <= gtol * max(1.0, cost)
    covariance = None
    dof = t.size - p.size
    if dof > 0:
        try:
            jtj_inv = np.linalg.pinv(jac.T @ jac)
            covariance = jtj_inv * (cost / dof)
        except np.linalg.LinAlgError:
            covariance = None
    return FitResult(
        params=p,
        residual_norm=float(np.sqrt(cost)),
        converged=converged,
        iterations=iterations,
        covariance=covariance,
    )
