"""Convex-roof extension of pure-state imaginarity measures.

Every size-m pure-state decomposition of rho can be written as
psi~_i = sum_j W_ij sqrt(q_j) e_j over the eigen-ensemble {q_j, e_j}, with
W an m x r matrix of orthonormal columns. The roof is the minimum of
sum_i p_i M(psi_i) over such W, searched by derivative-free coordinate
descent from several random starts.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import channels, numerics
from .errors import DimensionTooLarge, DomainError, NoConvergence, RankDeficient, ShapeMismatch
from .reports import ScanReport
from .states import sample_mixed, validate_density

RANK_CUTOFF = 1e-12
MAX_DIM = 4


def _real_imag_gram(psis):
    a, b = psis.real, psis.imag
    aa = np.sum(a * a, axis=-1)
    bb = np.sum(b * b, axis=-1)
    ab = np.sum(a * b, axis=-1)
    return aa, bb, ab


def _top_gram_eigenvalue(psis):
    # psi = a + ib: the nonzero spectrum of Re(psi psi^dagger) = aa^T + bb^T
    # is that of the 2x2 Gram matrix of (a, b)
    aa, bb, ab = _real_imag_gram(psis)
    disc = np.sqrt((aa - bb) ** 2 + 4 * ab * ab)
    return 0.5 * (aa + bb + disc)


def pure_l1(psis) -> np.ndarray:
    """sum_{i != j} |Im psi_i conj(psi_j)| for each row of a stack of unit vectors."""
    psis = np.asarray(psis, dtype=complex)
    outer = np.einsum("...i,...j->...ij", psis, psis.conj())
    return np.sum(np.abs(outer.imag), axis=(-1, -2))


def pure_geometric(psis) -> np.ndarray:
    """1 - max over real unit phi of |<phi|psi>|^2."""
    psis = np.asarray(psis, dtype=complex)
    return np.clip(1.0 - _top_gram_eigenvalue(psis), 0.0, None)


def pure_relative_entropy(psis) -> np.ndarray:
    """S(Delta(psi psi^dagger)) for each row; the state itself has zero entropy."""
    psis = np.asarray(psis, dtype=complex)
    lam = np.clip(_top_gram_eigenvalue(psis), 0.0, 1.0)
    return numerics.shannon_bits(np.stack([lam, 1.0 - lam], axis=-1))


PURE_MEASURES = {
    "l1": pure_l1,
    "geometric": pure_geometric,
    "r": pure_relative_entropy,
}


def resolve_pure_measure(handle) -> Callable:
    if callable(handle):
        return handle
    if handle not in PURE_MEASURES:
        raise DomainError(f"unknown pure measure {handle!r}; choose from {sorted(PURE_MEASURES)}")
    return PURE_MEASURES[handle]


@dataclass(frozen=True)
class RoofConfig:
    ensemble_size: Optional[int] = None  # None: min(d^2, 2 r)
    restarts: int = 16
    max_iters: int = 2000
    step_init: float = 0.3
    step_tol: float = 1e-6
    gain_tol: float = 1e-9  # a sweep gaining less than this counts as stalled
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise DomainError("restarts must be at least 1")
        if not self.step_tol > 0 or not self.step_init > self.step_tol:
            raise DomainError("need step_init > step_tol > 0")


@dataclass(frozen=True)
class Decomposition:
    weights: np.ndarray  # (m,)
    states: np.ndarray  # (m, d), unit rows

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,ij,ik->jk", self.weights, self.states, self.states.conj())

    def average(self, pure_measure) -> float:
        return float(np.dot(self.weights, resolve_pure_measure(pure_measure)(self.states)))


def _eigen_ensemble(rho):
    w, E = numerics.eigh(rho)
    w = np.clip(w, 0.0, None)
    rank = int(np.sum(w > RANK_CUTOFF))
    return w, E, rank


def _unnormalized(W, q, E):
    """Rows psi~_i = sum_j W_ij sqrt(q_j) e_j; W may be a stack (..., m, k)."""
    k = W.shape[-1]
    basis = np.sqrt(q[:k])[:, None] * E[:, :k].T
    return W @ basis


def _split(tilde):
    weights = np.sum(np.abs(tilde) ** 2, axis=-1)
    safe = np.sqrt(np.where(weights > 0, weights, 1.0))
    return weights, tilde / safe[..., None]


def ensemble_from_isometry(rho, W, m: Optional[int] = None) -> Decomposition:
    """The decomposition of rho generated by mixing its eigen-ensemble through W.

    W is m x k with orthonormal columns and rank(rho) <= k <= d; the top k
    eigenpairs are mixed.
    """
    rho = validate_density(rho)
    W = np.asarray(W, dtype=complex)
    if W.ndim != 2:
        raise ShapeMismatch(f"W must be a matrix, got shape {W.shape}")
    m = W.shape[0] if m is None else m
    if W.shape[0] != m:
        raise ShapeMismatch(f"W has {W.shape[0]} rows, expected m = {m}")
    q, E, rank = _eigen_ensemble(rho)
    if m < rank:
        raise RankDeficient(f"ensemble size {m} is below rank(rho) = {rank}")
    k = W.shape[1]
    if not rank <= k <= rho.shape[0]:
        raise ShapeMismatch(f"W needs between {rank} and {rho.shape[0]} columns, got {k}")
    gram_err = float(np.max(np.abs(W.conj().T @ W - np.eye(k))))
    if gram_err > 1e-8:
        raise DomainError(f"W columns are not orthonormal (max |W^dagger W - I| = {gram_err:.2e})")
    weights, states = _split(_unnormalized(W, q, E))
    empty = weights <= 0
    if np.any(empty):
        states = states.copy()
        states[empty] = np.eye(rho.shape[0])[0]
    total = weights.sum()
    return Decomposition(weights / total, states)


def _isometries(X):
    """Orthonormalize columns of complex matrices built from real params (..., m, r, 2)."""
    Z = X[..., 0] + 1j * X[..., 1]
    Q, R = np.linalg.qr(Z)
    # fix the column phases so the map is continuous where R's diagonal is nonzero
    diag = np.diagonal(R, axis1=-2, axis2=-1)
    mag = np.abs(diag)
    phase = np.where(mag > 0, diag / np.where(mag > 0, mag, 1.0), 1.0)
    return Q * phase[..., None, :]


def _objective_factory(q, E, measure):
    def objective(X):
        weights, states = _split(_unnormalized(_isometries(X), q, E))
        vals = measure(states.reshape(-1, states.shape[-1])).reshape(weights.shape)
        return np.sum(weights * vals, axis=-1) / np.sum(weights, axis=-1)

    return objective


def _descend(objective, X, cfg: RoofConfig):
    """Lockstep coordinate descent over a batch of starting points.

    Each sweep tries +/- step along every coordinate (batched across starts);
    a sweep gaining at most gain_tol halves that start's step. A start has
    converged once its step falls below step_tol.
    """
    R = X.shape[0]
    flat = X.reshape(R, -1).copy()
    shape = X.shape[1:]
    f = objective(flat.reshape(X.shape))
    step = np.full(R, cfg.step_init)
    converged = np.zeros(R, dtype=bool)
    for _ in range(cfg.max_iters):
        active = np.flatnonzero(~converged)
        if active.size == 0:
            break
        start = f[active].copy()
        for k in range(flat.shape[1]):
            base = flat[active]
            cand = np.concatenate([base, base])
            cand[: active.size, k] += step[active]
            cand[active.size :, k] -= step[active]
            vals = objective(cand.reshape((-1,) + shape))
            plus, minus = vals[: active.size], vals[active.size :]
            best = np.minimum(plus, minus)
            take = best < f[active]
            if np.any(take):
                pick = np.where(plus <= minus, 0, active.size) + np.arange(active.size)
                rows = active[take]
                flat[rows] = cand[pick[take]]
                f[rows] = best[take]
        gain = start - f[active]
        stalled = gain <= cfg.gain_tol
        step[active[stalled]] *= 0.5
        converged[active] = step[active] < cfg.step_tol
    return flat.reshape(X.shape), f, converged


def convex_roof(rho, pure_measure: Union[str, Callable] = "l1", cfg: RoofConfig = RoofConfig()):
    """Upper bound on min over decompositions of sum_i p_i M(psi_i).

    Returns ``(value, Decomposition)``. The eigen-ensemble is always a
    candidate, so the value never exceeds its average.
    """
    rho = validate_density(rho)
    d = rho.shape[0]
    if d > MAX_DIM:
        raise DimensionTooLarge(f"convex roof supports d <= {MAX_DIM}, got {d}")
    measure = resolve_pure_measure(pure_measure)
    q, E, rank = _eigen_ensemble(rho)
    m = min(d * d, 2 * rank) if cfg.ensemble_size is None else cfg.ensemble_size
    if m < rank:
        raise RankDeficient(f"ensemble size {m} is below rank(rho) = {rank}")

    eye_w = np.zeros((m, rank), dtype=complex)
    eye_w[:rank, :rank] = np.eye(rank)
    eigen = ensemble_from_isometry(rho, eye_w, m)
    best_value = eigen.average(measure)
    best = eigen
    if rank == 1 or best_value <= 0.0:
        return best_value, best

    rng = np.random.default_rng(cfg.seed)
    X = rng.normal(size=(cfg.restarts, m, rank, 2))
    X[0] = 0.0
    X[0, :rank, :, 0] = np.eye(rank)
    objective = _objective_factory(q, E, measure)
    X, f, converged = _descend(objective, X, cfg)
    if not np.any(converged):
        raise NoConvergence(f"no restart stabilized within {cfg.max_iters} sweeps")
    i = int(np.argmin(np.where(converged, f, np.inf)))
    W = _isometries(X[i])
    found = ensemble_from_isometry(rho, W, m)
    value = found.average(measure)
    if value < best_value:
        best_value, best = value, found
    return best_value, best


def convexity_probe(pure_measure="l1", trials: int = 20, seed: int = 0, cfg: RoofConfig = RoofConfig(), slack: float = 3e-3, d: int = 2):
    """Sample (rho1, rho2, lam) and compare the roof of the mixture with the mixed roofs."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    violations = 0
    witness = None
    for trial in range(trials):
        r1 = sample_mixed(d, rng)
        r2 = sample_mixed(d, rng)
        lam = float(rng.uniform())
        mix = lam * r1 + (1 - lam) * r2
        rhs = lam * convex_roof(r1, pure_measure, cfg)[0] + (1 - lam) * convex_roof(r2, pure_measure, cfg)[0]
        lhs = convex_roof(mix, pure_measure, cfg)[0]
        margin = rhs + slack - lhs
        worst = min(worst, margin)
        if margin < 0:
            violations += 1
            if witness is None:
                witness = {"trial": trial, "rho1": r1, "rho2": r2, "lambda": lam, "lhs": lhs, "rhs": rhs}
    return ScanReport(
        trials, 0, violations, float(worst), seed, scan_kind="roof-convexity",
        measure_a=str(pure_measure), sampler="mixed", witness=witness,
    )


def monotonicity_probe(pure_measure="l1", trials: int = 20, seed: int = 0, cfg: RoofConfig = RoofConfig(), slack: float = 3e-3, d: int = 2):
    """Sample (rho, random real channel) and check the roof does not increase."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    violations = 0
    witness = None
    for trial in range(trials):
        rho = sample_mixed(d, rng)
        ch = channels.random_real_channel(d, seed=rng)
        out = channels.apply(ch, rho)
        before = convex_roof(rho, pure_measure, cfg)[0]
        after = convex_roof(out, pure_measure, cfg)[0]
        margin = before + slack - after
        worst = min(worst, margin)
        if margin < 0:
            violations += 1
            if witness is None:
                witness = {"trial": trial, "rho": rho, "before": before, "after": after}
    return ScanReport(
        trials, 0, violations, float(worst), seed, scan_kind="roof-monotonicity",
        measure_a=str(pure_measure), sampler="mixed", witness=witness,
    )


def eigen_average(rho, pure_measure="l1") -> float:
    q, E, _ = _eigen_ensemble(validate_density(rho))
    return float(np.dot(q, resolve_pure_measure(pure_measure)(E.T)))


def pure_value(psi, pure_measure="l1") -> float:
    return float(resolve_pure_measure(pure_measure)(np.asarray(psi, dtype=complex)[None])[0])


__all__ = [
    "Decomposition",
    "RoofConfig",
    "PURE_MEASURES",
    "convex_roof",
    "convexity_probe",
    "eigen_average",
    "ensemble_from_isometry",
    "monotonicity_probe",
    "pure_geometric",
    "pure_l1",
    "pure_relative_entropy",
    "pure_value",
]
