"""Dense complex matrix kernels: Hermitian eigensystems, norms and entropies.

Every routine accepts plain ``numpy`` arrays. The eigensolver works on a stack
``(..., d, d)`` so callers can push thousands of small matrices through one
call.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    NegativeEigenvalue,
    NoConvergence,
    NotHermitian,
    ShapeMismatch,
    SupportMismatch,
)

JACOBI_THRESHOLD = 1e-12
JACOBI_MAX_SWEEPS = 100
CLAMP_WINDOW = 1e-8
SUPPORT_CUTOFF = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ShapeMismatch(f"expected a 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    return A


def _jacobi(A, max_sweeps=JACOBI_MAX_SWEEPS, threshold=JACOBI_THRESHOLD):
    """Cyclic complex Jacobi on a stack of Hermitian matrices.

    Returns ``(w, V)`` with ascending-unsorted eigenvalues ``w`` of shape
    ``(B, n)`` and eigenvector columns ``V`` of shape ``(B, n, n)``.
    """
    A = np.array(A, dtype=complex)
    B, n, _ = A.shape
    V = np.broadcast_to(np.eye(n, dtype=complex), (B, n, n)).copy()
    if n == 1:
        return A[:, :, 0].real.copy(), V
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(A) ** 2, axis=(1, 2))))
    offmask = ~np.eye(n, dtype=bool)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(A[:, offmask]) ** 2, axis=1))
        if np.all(off <= threshold * scale):
            break
        for p, q in pairs:
            apq = A[:, p, q]
            mag = np.abs(apq)
            active = mag > 1e-300
            if not active.any():
                continue
            safe = np.where(active, mag, 1.0)
            phase = np.where(active, apq / safe, 1.0)
            tau = (A[:, q, q].real - A[:, p, p].real) / (2.0 * safe)
            sgn = np.where(tau >= 0, 1.0, -1.0)
            t = np.where(active, sgn / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # J = diag(1, conj(phase)) @ [[c, s], [-s, c]]
            j00 = c
            j01 = s
            j10 = -s * phase.conj()
            j11 = c * phase.conj()
            Ap = A[:, :, p].copy()
            Aq = A[:, :, q]
            A[:, :, p] = Ap * j00[:, None] + Aq * j10[:, None]
            A[:, :, q] = Ap * j01[:, None] + Aq * j11[:, None]
            Ap = A[:, p, :].copy()
            Aq = A[:, q, :]
            A[:, p, :] = Ap * j00[:, None] + Aq * j10.conj()[:, None]
            A[:, q, :] = Ap * j01[:, None] + Aq * j11.conj()[:, None]
            A[:, p, q] = 0.0
            A[:, q, p] = 0.0
            Vp = V[:, :, p].copy()
            Vq = V[:, :, q]
            V[:, :, p] = Vp * j00[:, None] + Vq * j10[:, None]
            V[:, :, q] = Vp * j01[:, None] + Vq * j11[:, None]
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.real(np.diagonal(A, axis1=1, axis2=2)).copy()
    return w, V


def _check_hermitian_stack(M, tol):
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ShapeMismatch(f"expected square matrices, got shape {M.shape}")
    dev = np.max(np.abs(M - np.conj(np.swapaxes(M, -1, -2))), initial=0.0)
    if dev > tol:
        raise NotHermitian(f"max |M - M^dagger| = {dev:.3e} exceeds {tol:.1e}")


def eigh(M, tol: float = 1e-10):
    """Eigenvalues (descending) and eigenvector columns of a stack of Hermitian matrices."""
    M = np.asarray(M, dtype=complex)
    _check_hermitian_stack(M, tol)
    lead = M.shape[:-2]
    n = M.shape[-1]
    herm = 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))
    w, V = _jacobi(herm.reshape(-1, n, n))
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w.reshape(lead + (n,)), V.reshape(lead + (n, n))


def eigvalsh(M, tol: float = 1e-10) -> np.ndarray:
    return eigh(M, tol)[0]


def hermitian_eigensystem(M, tol: float = 1e-10) -> EigenSystem:
    M = as_matrix(M)
    w, V = eigh(M, tol)
    return EigenSystem(eigenvalues=w, eigenvectors=V)


def _clamped_spectrum(w):
    w = np.asarray(w, dtype=float)
    lowest = np.min(w, initial=0.0)
    if lowest < -CLAMP_WINDOW:
        raise NegativeEigenvalue(f"eigenvalue {lowest:.3e} below -{CLAMP_WINDOW:.0e}")
    return np.clip(w, 0.0, None)


def shannon_bits(w) -> np.ndarray:
    """-sum w log2 w along the last axis, with 0 log 0 = 0."""
    w = np.asarray(w, dtype=float)
    safe = np.where(w > 0, w, 1.0)
    return -np.sum(np.where(w > 0, w * np.log2(safe), 0.0), axis=-1)


def von_neumann_entropy(rho) -> float:
    w = _clamped_spectrum(eigvalsh(as_matrix(rho)))
    return float(shannon_bits(w))


def entropies(rhos) -> np.ndarray:
    """Vectorized von Neumann entropy over a stack ``(..., d, d)``."""
    return shannon_bits(_clamped_spectrum(eigvalsh(rhos)))


def binary_entropy(x):
    """H(x) = -x log2 x - (1-x) log2 (1-x). Works elementwise on arrays."""
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError("binary entropy argument must lie in [0, 1]")
    out = shannon_bits(np.stack([arr, 1.0 - arr], axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def relative_entropy(rho, sigma, strict: bool = True) -> float:
    """S(rho || sigma) in bits.

    When rho has weight outside the support of sigma this raises
    ``SupportMismatch``; with ``strict=False`` it returns ``inf`` instead,
    which is what a minimizer wants.
    """
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ShapeMismatch(f"{rho.shape} vs {sigma.shape}")
    w_rho = _clamped_spectrum(eigvalsh(rho))
    w_sig, V = eigh(sigma)
    w_sig = _clamped_spectrum(w_sig)
    # diagonal of rho in sigma's eigenbasis
    weights = np.real(np.einsum("ji,jk,ki->i", V.conj(), rho, V))
    kernel = w_sig <= SUPPORT_CUTOFF
    leak = float(np.sum(weights[kernel]))
    if leak > CLAMP_WINDOW:
        if strict:
            raise SupportMismatch(f"rho has weight {leak:.3e} outside supp(sigma)")
        return float("inf")
    log_sig = np.log2(np.where(kernel, 1.0, w_sig))
    cross = float(np.sum(np.where(kernel, 0.0, weights * log_sig)))
    value = -float(shannon_bits(w_rho)) - cross
    return max(value, 0.0) if value > -1e-12 else value


def singular_values(A) -> np.ndarray:
    """Singular values (descending) via the Hermitian dilation [[0, A], [A^dagger, 0]]."""
    A = as_matrix(A)
    m, n = A.shape
    if m == n and np.max(np.abs(A - A.conj().T)) == 0.0:
        return np.sort(np.abs(eigvalsh(A)))[::-1]
    dil = np.zeros((m + n, m + n), dtype=complex)
    dil[:m, m:] = A
    dil[m:, :m] = A.conj().T
    w = eigvalsh(dil)
    return np.clip(w[: min(m, n)], 0.0, None)


def trace_norm(A) -> float:
    return float(np.sum(singular_values(A)))


def schatten_p_norm(A, p: float) -> float:
    if not p >= 1:
        raise DomainError(f"Schatten norm needs p >= 1, got {p}")
    sv = singular_values(A)
    if np.isinf(p):
        return float(sv[0])
    return float(np.sum(sv**p) ** (1.0 / p))


def lp_entrywise_norm(A, p: float) -> float:
    if not p >= 1:
        raise DomainError(f"entrywise norm needs p >= 1, got {p}")
    a = np.abs(as_matrix(A)).ravel()
    if np.isinf(p):
        return float(a.max())
    return float(np.sum(a**p) ** (1.0 / p))
