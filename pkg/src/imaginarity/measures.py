"""Imaginarity quantifiers.

Closed forms are used wherever they are exact; the Schatten-p distance and
the robustness are computed by search. Each ``m_*`` function returns a
``MeasureResult``; the ``*_values`` helpers are vectorized over stacks of
density matrices and are what the Monte-Carlo scans use.
"""

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import numerics
from .errors import DimensionTooLarge, DomainError, NoConvergence
from .states import PAULI_X, PAULI_Z, delta, projector

CLAMP = 1e-9
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MeasureResult:
    value: float
    method: str  # closed_form | optimization | bisection
    witness: Optional[Any] = None
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    seed: int = 0
    sweep_tol: float = 1e-9
    max_sweeps: int = 400
    golden_iters: int = 16
    seed_with_real_part: bool = True


@dataclass(frozen=True)
class BisectionConfig:
    tol: float = 1e-10
    max_iter: int = 200
    inner_iters: int = 60


def _clamp(v):
    v = np.asarray(v, dtype=float)
    return np.where((v < 0) & (v >= -CLAMP), 0.0, v)


def _offdiag_imag(rhos):
    rhos = np.asarray(rhos, dtype=complex)
    d = rhos.shape[-1]
    return np.abs(rhos.imag) * (1 - np.eye(d))


def l1_values(rhos) -> np.ndarray:
    """sum_{i != j} |Im rho_ij| for a stack of states."""
    return np.sum(_offdiag_imag(rhos), axis=(-1, -2))


def lp_values(rhos, p: float) -> np.ndarray:
    if not p >= 1:
        raise DomainError(f"l_p measure needs p >= 1, got {p}")
    a = _offdiag_imag(rhos)
    if np.isinf(p):
        return np.max(a, axis=(-1, -2))
    return np.sum(a**p, axis=(-1, -2)) ** (1.0 / p)


def relative_entropy_values(rhos) -> np.ndarray:
    """S(Delta(rho)) - S(rho) for a stack of states."""
    rhos = np.asarray(rhos, dtype=complex)
    return _clamp(numerics.entropies(delta(rhos)) - numerics.entropies(rhos))


def m_l1(rho) -> MeasureResult:
    rho = np.asarray(rho, dtype=complex)
    return MeasureResult(float(l1_values(rho)), "closed_form", witness=delta(rho))


def m_trace(rho) -> MeasureResult:
    rho = np.asarray(rho, dtype=complex)
    value = 0.5 * numerics.trace_norm(rho - rho.T)
    return MeasureResult(float(_clamp(value)), "closed_form", witness=delta(rho))


def m_lp(rho, p: float) -> MeasureResult:
    rho = np.asarray(rho, dtype=complex)
    return MeasureResult(float(lp_values(rho, p)), "closed_form", witness=delta(rho))


def m_relative_entropy(rho) -> MeasureResult:
    rho = np.asarray(rho, dtype=complex)
    return MeasureResult(float(relative_entropy_values(rho)), "closed_form", witness=delta(rho))


def m_geometric_pure(psi) -> MeasureResult:
    """1 - max over real unit phi of |<phi|psi>|^2.

    For real phi the overlap is phi^T (a a^T + b b^T) phi with psi = a + i b,
    so the maximum is the top eigenvalue of Re(|psi><psi|).
    """
    psi = np.asarray(psi, dtype=complex)
    w, V = numerics.eigh(projector(psi).real)
    phi = V[:, 0].real
    phi = phi / np.linalg.norm(phi)
    value = float(np.clip(1.0 - w[0], 0.0, None))
    return MeasureResult(float(_clamp(value)), "closed_form", witness=phi)


def closest_real_state(rho) -> np.ndarray:
    return delta(rho)


# -- Schatten-p distance to the real states -----------------------------------


def _tril_count(d):
    return d * (d + 1) // 2


def real_states_from_params(theta, d):
    """Map ``(..., d(d+1)/2)`` reals to real states L L^T / Tr(L L^T)."""
    theta = np.asarray(theta, dtype=float)
    L = np.zeros(theta.shape[:-1] + (d, d))
    rows, cols = np.tril_indices(d)
    L[..., rows, cols] = theta
    S = L @ np.swapaxes(L, -1, -2)
    tr = np.trace(S, axis1=-2, axis2=-1)
    tr = np.where(tr > 1e-300, tr, 1.0)
    return S / tr[..., None, None]


def _params_from_real_state(sigma):
    sigma = np.asarray(sigma, dtype=float)
    d = sigma.shape[0]
    w, V = numerics.eigh(sigma)
    L = np.linalg.qr((V.real * np.sqrt(np.clip(w, 0, None))).T)[1].T
    return L[np.tril_indices(d)]


def _schatten_batch(diffs, p):
    # hot loop of the optimizer: LAPACK here, the Jacobi route re-scores the optimum
    sv = np.abs(np.linalg.eigvalsh(diffs))
    if np.isinf(p):
        return sv.max(axis=-1)
    return np.sum(sv**p, axis=-1) ** (1.0 / p)


def _golden_line_search(objective, theta, direction, radius, f0, iters):
    """Minimize along theta + u * direction for u in [-radius, radius], per row."""
    lo, hi = -radius, radius.copy()
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1 = objective(theta + x1[:, None] * direction)
    f2 = objective(theta + x2[:, None] * direction)
    for _ in range(iters):
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x2n = np.where(left, x1, lo + GOLDEN * (hi - lo))
        x1n = np.where(left, hi - GOLDEN * (hi - lo), x2)
        fn = objective(theta + np.where(left, x1n, x2n)[:, None] * direction)
        f1, f2 = np.where(left, fn, f2), np.where(left, f1, fn)
        x1, x2 = x1n, x2n
    u = np.where(f1 < f2, x1, x2)
    fu = np.minimum(f1, f2)
    take = fu < f0
    u = np.where(take, u, 0.0)
    return theta + u[:, None] * direction, np.where(take, fu, f0), np.abs(u)


def _golden_coordinate_descent(objective, theta0, cfg: OptimizerConfig, rng):
    """Lockstep coordinate-wise golden-section descent for a batch of starts.

    Each coordinate keeps its own bracket half-width, reset after every line
    search to a few times the step just taken. A sweep ends with one line
    search along the sweep's net displacement and one along a random
    direction, which gets the search off ridges of non-smooth objectives.
    Restarts that have converged drop out of the batch.
    """
    theta = np.array(theta0, dtype=float)
    batch, k = theta.shape
    best = objective(theta)
    radius = np.ones((batch, k + 2))
    converged = np.zeros(batch, dtype=bool)
    eye = np.eye(k)
    for _ in range(cfg.max_sweeps):
        act = np.flatnonzero(~converged)
        th = theta[act]
        fb = best[act]
        rad = radius[act]
        start_f, start_th = fb.copy(), th.copy()
        directions = [np.broadcast_to(eye[j], th.shape) for j in range(k)]
        for j, direction in enumerate(directions):
            th, fb, step = _golden_line_search(objective, th, direction, rad[:, j], fb, cfg.golden_iters)
            rad[:, j] = np.clip(np.maximum(4.0 * step, 0.25 * rad[:, j]), 1e-9, 1.0)
        move = th - start_th
        norm = np.linalg.norm(move, axis=1, keepdims=True)
        extra = [np.where(norm > 0, move / np.where(norm > 0, norm, 1.0), 0.0)]
        rnd = rng.normal(size=th.shape)
        extra.append(rnd / np.linalg.norm(rnd, axis=1, keepdims=True))
        for j, direction in enumerate(extra, start=k):
            th, fb, step = _golden_line_search(objective, th, direction, rad[:, j], fb, cfg.golden_iters)
            rad[:, j] = np.clip(np.maximum(4.0 * step, 0.25 * rad[:, j]), 1e-9, 1.0)
        theta[act], best[act], radius[act] = th, fb, rad
        converged[act] = (start_f - fb) < cfg.sweep_tol
        if converged.all():
            break
    return theta, best, converged


def m_schatten_p(rho, p: float, cfg: OptimizerConfig = OptimizerConfig()) -> MeasureResult:
    """min over real states sigma of ||rho - sigma||_p, by derivative-free search."""
    if not p >= 1:
        raise DomainError(f"Schatten measure needs p >= 1, got {p}")
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if d > 4:
        raise DimensionTooLarge(f"Schatten optimizer supports d <= 4, got d = {d}")
    rng = np.random.default_rng(cfg.seed)
    starts = rng.normal(size=(cfg.restarts, _tril_count(d)))
    if cfg.seed_with_real_part:
        starts[0] = _params_from_real_state(delta(rho).real)

    def objective(theta):
        return _schatten_batch(rho - real_states_from_params(theta, d), p)

    theta, values, converged = _golden_coordinate_descent(objective, starts, cfg, rng)
    if not converged.any():
        raise NoConvergence(f"no restart stabilized within {cfg.max_sweeps} sweeps")
    i = int(np.argmin(values))
    sigma = real_states_from_params(theta[i], d).astype(complex)
    value = numerics.schatten_p_norm(rho - sigma, p)
    info = {"restarts": cfg.restarts, "converged": int(converged.sum()), "seed": cfg.seed}
    return MeasureResult(float(_clamp(value)), "optimization", witness=sigma, info=info)


# -- robustness ----------------------------------------------------------------


def _complement_margin(rho, s, x, z):
    """(trace, det) of (1+s) tau - rho for tau = (I + x X + z Z) / 2."""
    tau = 0.5 * (np.eye(2) + x * PAULI_X + z * PAULI_Z)
    M = (1.0 + s) * tau - rho
    tr = float(np.real(M[0, 0] + M[1, 1]))
    det = float(np.real(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]))
    return tr, det


def _golden_max(f, lo, hi, iters):
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 > f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 > f2 else (x2, f2)


def robustness_feasible(rho, s: float, cfg: BisectionConfig = BisectionConfig()):
    """Is there a real qubit state tau with (1+s) tau - rho PSD?

    Returns ``(feasible, (x, z))`` where (x, z) is the best real Bloch point found.
    """
    x, z = 0.0, 0.0
    best = -np.inf
    for _ in range(8):
        rz = np.sqrt(max(0.0, 1.0 - z * z))
        x, _ = _golden_max(lambda u: _complement_margin(rho, s, u, z)[1], -rz, rz, cfg.inner_iters)
        rx = np.sqrt(max(0.0, 1.0 - x * x))
        z, val = _golden_max(lambda u: _complement_margin(rho, s, x, u)[1], -rx, rx, cfg.inner_iters)
        if val - best < 1e-18:
            best = max(best, val)
            break
        best = val
    tr, det = _complement_margin(rho, s, x, z)
    return (tr >= 0.0 and det >= -1e-14), (x, z)


def robustness(rho, cfg: BisectionConfig = BisectionConfig()) -> MeasureResult:
    """Smallest s >= 0 such that (s sigma + rho) / (1 + s) is real, qubits only."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[0] > 2:
        raise DimensionTooLarge("robustness is implemented for qubits only")
    ok, xz = robustness_feasible(rho, 0.0, cfg)
    if ok:
        return MeasureResult(0.0, "bisection", witness=rho.copy(), info={"tau": xz})
    lo, hi = 0.0, 1.0
    ok, xz_hi = robustness_feasible(rho, hi, cfg)
    if not ok:
        raise NoConvergence("upper bracket s = 1 is infeasible")
    for _ in range(cfg.max_iter):
        if hi - lo <= cfg.tol:
            break
        mid = 0.5 * (lo + hi)
        ok, xz = robustness_feasible(rho, mid, cfg)
        if ok:
            hi, xz_hi = mid, xz
        else:
            lo = mid
    else:
        raise NoConvergence(f"bisection did not reach width {cfg.tol}")
    x, z = xz_hi
    tau = 0.5 * (np.eye(2) + x * PAULI_X + z * PAULI_Z)
    sigma = ((1.0 + hi) * tau - rho) / hi
    return MeasureResult(float(hi), "bisection", witness=sigma, info={"tau": (x, z)})
