"""Kraus-operator channels and the real (free) operations built from them."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import measures
from .errors import DomainError, ImaginarityError, OutputInvalid, ShapeMismatch
from .states import PAULI_X, delta, maximally_mixed, validate_density

CPTP_TOL = 1e-10


@dataclass(frozen=True)
class KrausChannel:
    d_in: int
    d_out: int
    kraus_ops: Tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.array(K, dtype=complex) for K in self.kraus_ops)
        if not ops:
            raise ShapeMismatch("a channel needs at least one Kraus operator")
        for K in ops:
            if K.shape != (self.d_out, self.d_in):
                raise ShapeMismatch(f"Kraus operator shape {K.shape}, expected {(self.d_out, self.d_in)}")
            K.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)

    @classmethod
    def from_ops(cls, ops, label=""):
        ops = [np.asarray(K, dtype=complex) for K in ops]
        if not ops or ops[0].ndim != 2:
            raise ShapeMismatch("Kraus operators must be matrices")
        d_out, d_in = ops[0].shape
        return cls(d_in, d_out, tuple(ops), label)

    def stacked(self):
        return np.stack(self.kraus_ops)


def completeness_error(ch: KrausChannel) -> float:
    K = ch.stacked()
    total = np.einsum("kji,kjl->il", K.conj(), K)
    return float(np.max(np.abs(total - np.eye(ch.d_in))))


def validate_cptp(ch: KrausChannel, tol: float = CPTP_TOL) -> bool:
    return completeness_error(ch) <= tol


def is_real_operation(ch: KrausChannel, tol: float = 1e-10) -> bool:
    return bool(max(np.max(np.abs(K.imag)) for K in ch.kraus_ops) <= tol)


def apply_batch(ch: KrausChannel, rhos) -> np.ndarray:
    """sum_j K_j rho K_j^dagger over a stack ``(..., d_in, d_in)``; no validation."""
    K = ch.stacked()
    return np.einsum("kij,...jl,kml->...im", K, np.asarray(rhos, dtype=complex), K.conj())


def apply(ch: KrausChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.d_in, ch.d_in):
        raise ShapeMismatch(f"channel expects a {ch.d_in}x{ch.d_in} state, got {rho.shape}")
    out = apply_batch(ch, rho)
    try:
        return validate_density(out)
    except ImaginarityError as exc:
        raise OutputInvalid(f"channel {ch.label or '?'} produced an invalid state: {exc}") from exc


def _check_prob(p):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"channel parameter p={p} outside [0, 1]")


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(d, d, (np.eye(d),), f"identity:{d}")


def bit_flip(p: float) -> KrausChannel:
    _check_prob(p)
    return KrausChannel(2, 2, (np.sqrt(p) * np.eye(2), np.sqrt(1 - p) * PAULI_X), f"bitflip:{p!r}")


def phase_flip(p: float) -> KrausChannel:
    _check_prob(p)
    ops = (
        np.sqrt(p) * np.eye(2),
        np.sqrt(1 - p) * np.diag([1.0, 0.0]),
        np.sqrt(1 - p) * np.diag([0.0, 1.0]),
    )
    return KrausChannel(2, 2, ops, f"phaseflip:{p!r}")


def amplitude_damping(p: float) -> KrausChannel:
    _check_prob(p)
    ops = (
        np.array([[1.0, 0.0], [0.0, np.sqrt(1 - p)]]),
        np.array([[0.0, np.sqrt(p)], [0.0, 0.0]]),
    )
    return KrausChannel(2, 2, ops, f"ampdamp:{p!r}")


def collapse_channel(d: int) -> KrausChannel:
    """Kraus operators |0><i| for i = 0..d-1: every state goes to |0><0|."""
    if d < 2:
        raise DomainError("collapse channel needs d >= 2")
    ops = []
    for i in range(d):
        K = np.zeros((d, d))
        K[0, i] = 1.0
        ops.append(K)
    return KrausChannel(d, d, tuple(ops), f"collapse:{d}")


def lift_with_identity(ch: KrausChannel, d_left: int) -> KrausChannel:
    """Kraus set {I_{d_left} (x) K}."""
    eye = np.eye(d_left)
    ops = tuple(np.kron(eye, K) for K in ch.kraus_ops)
    return KrausChannel(d_left * ch.d_in, d_left * ch.d_out, ops, f"lift({ch.label},{d_left})")


def phase_gate() -> KrausChannel:
    """diag(1, i): a unitary with an imaginary entry, i.e. not a real operation."""
    return KrausChannel(2, 2, (np.diag([1.0, 1j]),), "phase-gate")


def random_real_channel(d: int, k: Optional[int] = None, seed=0) -> KrausChannel:
    """k real d x d Kraus operators cut from a random (k d) x d isometry."""
    if d < 2:
        raise DomainError("dimension must be at least 2")
    k = d * d if k is None else k
    if k < 1:
        raise DomainError("need at least one Kraus operator")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.normal(size=(k * d, d)))
    Q = Q * np.sign(np.diag(R))
    ops = tuple(Q[i * d : (i + 1) * d] for i in range(k))
    return KrausChannel(d, d, ops, f"random-real:{d}:{k}")


def transpose_covariance_check(ch: KrausChannel, rho) -> float:
    """max |E(Delta(rho)) - Delta(E(rho))|."""
    rho = np.asarray(rho, dtype=complex)
    lhs = apply_batch(ch, delta(rho))
    rhs = delta(apply_batch(ch, rho))
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class ViolationReport:
    before: float
    after: float
    violated: bool
    norm_kind: str
    p: float
    d: int

    @property
    def ratio(self):
        return self.after / self.before if self.before > 0 else float("nan")


def demonstrate_lp_violation(rho, p: float, norm_kind: str = "entrywise", d: Optional[int] = None, cfg=None):
    """Evaluate a p-norm imaginarity function on rho (x) I/d before and after the
    real channel I (x) collapse(d), which sends it to rho (x) |0><0|."""
    if not p > 1:
        raise DomainError(f"no violation exists at p = {p}; need p > 1")
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0] if d is None else d
    ch = lift_with_identity(collapse_channel(d), rho.shape[0])
    start = np.kron(rho, maximally_mixed(d))
    end = apply(ch, start)
    if norm_kind == "entrywise":
        before = measures.m_lp(start, p).value
        after = measures.m_lp(end, p).value
    elif norm_kind == "schatten":
        cfg = cfg or measures.OptimizerConfig()
        before = measures.m_schatten_p(start, p, cfg).value
        after = measures.m_schatten_p(end, p, cfg).value
    else:
        raise DomainError(f"unknown norm kind {norm_kind!r}")
    return ViolationReport(before, after, after > before + 1e-12, norm_kind, p, d)


_NAMED = {"bitflip": bit_flip, "phaseflip": phase_flip, "ampdamp": amplitude_damping}


def parse_channel_spec(spec: str) -> KrausChannel:
    """``bitflip:p``, ``phaseflip:p``, ``ampdamp:p`` or ``collapse:d``."""
    name, _, arg = spec.partition(":")
    if not arg:
        raise DomainError(f"channel spec {spec!r} is missing its parameter")
    if name == "collapse":
        return collapse_channel(int(arg))
    if name not in _NAMED:
        raise DomainError(f"unknown channel {name!r}")
    return _NAMED[name](float(arg))


def named_channel(name: str, p: float) -> KrausChannel:
    if name not in _NAMED:
        raise DomainError(f"unknown channel {name!r}")
    return _NAMED[name](p)
