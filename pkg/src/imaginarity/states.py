"""Quantum states in the fixed computational basis.

Density matrices and pure states are plain complex ``numpy`` arrays; the
``validate_*`` functions return read-only copies that satisfy the state
invariants. Transpose, real and imaginary parts are always taken in the
computational basis.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DimensionError, DomainError, NotHermitian, NotPSD, ShapeMismatch, TraceNotOne

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
NORM_TOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = HERMITIAN_TOL
    trace: float = TRACE_TOL
    psd: float = PSD_TOL
    norm: float = NORM_TOL

    def as_dict(self):
        return {"hermitian": self.hermitian, "trace": self.trace, "psd": self.psd, "norm": self.norm}


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class BlochQubit:
    """rho = (I + t n.sigma) / 2 with |n| = 1 and 0 <= t <= 1."""

    t: float
    nx: float
    ny: float
    nz: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise DomainError(f"Bloch length t={self.t} outside [0, 1]")
        norm2 = self.nx**2 + self.ny**2 + self.nz**2
        if abs(norm2 - 1.0) > 1e-10:
            raise DomainError(f"direction is not a unit vector (|n|^2 = {norm2!r})")

    @classmethod
    def from_vector(cls, r):
        r = np.asarray(r, dtype=float)
        t = float(np.linalg.norm(r))
        if t <= 1e-15:
            return cls(0.0, 0.0, 0.0, 1.0)
        n = r / t
        return cls(min(t, 1.0), float(n[0]), float(n[1]), float(n[2]))

    @property
    def vector(self):
        return self.t * np.array([self.nx, self.ny, self.nz])


def _freeze(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def validate_density(M, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ShapeMismatch(f"density matrix must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("density matrix has non-finite entries")
    herm = float(np.max(np.abs(M - M.conj().T)))
    if herm > tol.hermitian:
        raise NotHermitian(f"Hermiticity violated: max |rho - rho^dagger| = {herm:.3e} > {tol.hermitian:.1e}")
    tr = complex(np.trace(M))
    if abs(tr - 1.0) > tol.trace:
        raise TraceNotOne(f"trace violated: |Tr rho - 1| = {abs(tr - 1.0):.3e} > {tol.trace:.1e}")
    lowest = float(numerics.eigvalsh(M, tol=max(tol.hermitian, 1e-10))[-1])
    if lowest < -tol.psd:
        raise NotPSD(f"positivity violated: min eigenvalue {lowest:.3e} < -{tol.psd:.1e}")
    return _freeze(M)


def validate_pure(psi, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size < 1:
        raise ShapeMismatch(f"pure state must be a vector, got shape {psi.shape}")
    norm2 = float(np.sum(np.abs(psi) ** 2))
    if abs(norm2 - 1.0) > tol.norm:
        raise DomainError(f"pure state norm violated: |<psi|psi> - 1| = {abs(norm2 - 1.0):.3e}")
    return _freeze(psi)


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.einsum("...i,...j->...ij", psi, psi.conj())


def transpose(rho) -> np.ndarray:
    return np.swapaxes(np.asarray(rho), -1, -2)


def delta(rho) -> np.ndarray:
    """(rho + rho^T) / 2, the real part of a Hermitian matrix. Accepts stacks."""
    rho = np.asarray(rho, dtype=complex)
    return 0.5 * (rho + transpose(rho))


def real_imag_split(rho):
    """rho = rho_R + i rho_I with rho_R real symmetric and rho_I real antisymmetric."""
    rho = np.asarray(rho, dtype=complex)
    rho_r = delta(rho).real
    rho_i = ((rho - transpose(rho)) / 2j).real
    return rho_r, rho_i


def is_real_state(rho, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(np.asarray(rho).imag), initial=0.0) <= tol)


def bloch_to_density(b: BlochQubit) -> np.ndarray:
    return bloch_vectors_to_density(b.vector)


def bloch_vectors_to_density(r) -> np.ndarray:
    """Stack of Bloch vectors ``(..., 3)`` to density matrices ``(..., 2, 2)``."""
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    out = np.empty(r.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = (1 + z) / 2
    out[..., 1, 1] = (1 - z) / 2
    out[..., 0, 1] = (x - 1j * y) / 2
    out[..., 1, 0] = (x + 1j * y) / 2
    return out


def density_to_bloch_vectors(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (2, 2):
        raise DimensionError(f"Bloch parametrization needs a qubit, got shape {rho.shape}")
    x = 2 * rho[..., 1, 0].real
    y = 2 * rho[..., 1, 0].imag
    z = (rho[..., 0, 0] - rho[..., 1, 1]).real
    return np.stack([x, y, z], axis=-1)


def density_to_bloch(rho) -> BlochQubit:
    """Inverse of ``bloch_to_density``; the maximally mixed state gets n = (0, 0, 1)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise DimensionError(f"Bloch parametrization needs a 2x2 state, got shape {rho.shape}")
    return BlochQubit.from_vector(density_to_bloch_vectors(rho))


def _rng(seed):
    return np.random.default_rng(seed)


def sample_haar_pure(d: int, seed, size=None) -> np.ndarray:
    """Haar-random pure state(s): a normalized complex Gaussian vector.

    ``seed`` may be an int or a ``numpy.random.Generator``. With ``size`` a
    stack of shape ``(size, d)`` is returned.
    """
    if d < 2:
        raise DomainError("dimension must be at least 2")
    rng = _rng(seed)
    shape = (d,) if size is None else (size, d)
    v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def sample_mixed(d: int, seed, size=None) -> np.ndarray:
    """Ginibre-induced mixed state(s) G G^dagger / Tr(G G^dagger)."""
    if d < 2:
        raise DomainError("dimension must be at least 2")
    rng = _rng(seed)
    shape = (d, d) if size is None else (size, d, d)
    G = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    rho = G @ np.conj(np.swapaxes(G, -1, -2))
    tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
    return rho / tr[..., None, None]


def sample_real_mixed(d: int, seed, size=None) -> np.ndarray:
    """Real-Ginibre mixed state(s); every sample is a free state."""
    rng = _rng(seed)
    shape = (d, d) if size is None else (size, d, d)
    G = rng.normal(size=shape)
    rho = G @ np.swapaxes(G, -1, -2)
    tr = np.trace(rho, axis1=-2, axis2=-1)
    return (rho / tr[..., None, None]).astype(complex)


def sample_bloch_vectors(seed, size: int, restrict_nz_nonpositive: bool = False) -> np.ndarray:
    """Bloch-uniform qubits: t ~ U[0, 1], direction uniform on the sphere."""
    rng = _rng(seed)
    n = rng.normal(size=(size, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    if restrict_nz_nonpositive:
        n[:, 2] = -np.abs(n[:, 2])
    t = rng.uniform(size=size)
    return n * t[:, None]


def y_plus() -> np.ndarray:
    """|y+> = (|0> + i|1>) / sqrt(2)."""
    return np.array([1, 1j], dtype=complex) / np.sqrt(2)


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d
