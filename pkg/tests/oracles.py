"""Independent reference computations used by several test modules.

None of these touch the package's eigensolver or closed forms.
"""

import numpy as np


def real_qubit_grid(n=201):
    """Interior points of the real Bloch disc (n_y = 0) on an n x n grid, as density matrices."""
    x, z = np.meshgrid(np.linspace(-1, 1, n), np.linspace(-1, 1, n), indexing="ij")
    x, z = x.ravel(), z.ravel()
    keep = x**2 + z**2 < 1 - 1e-12
    x, z = x[keep], z[keep]
    sig = np.empty((x.size, 2, 2), dtype=complex)
    sig[:, 0, 0] = (1 + z) / 2
    sig[:, 1, 1] = (1 - z) / 2
    sig[:, 0, 1] = sig[:, 1, 0] = x / 2
    return sig


def log2_stack(sigmas):
    """Matrix log2 of full-rank states through LAPACK's eigh."""
    w, V = np.linalg.eigh(sigmas)
    return np.einsum("nij,nj,nkj->nik", V, np.log2(w), V.conj())


def relative_entropy_grid_min(rho, sigmas, log_sigmas):
    """min over the grid of S(rho || sigma), returning (value, index)."""
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    neg_s = float(np.sum(w * np.log2(w)))
    cross = np.real(np.einsum("ij,nji->n", rho, log_sigmas))
    vals = neg_s - cross
    i = int(np.argmin(vals))
    return float(vals[i]), i


def robustness_grid(rho, n=1201):
    """min over a grid of real qubit tau of the least s with (1+s) tau - rho PSD.

    For 2x2 Hermitian M, PSD <=> trace >= 0 and det >= 0; det(u tau - rho) is a
    quadratic in u = 1 + s, so each grid tau gets its exact threshold.
    """
    x, z = np.meshgrid(np.linspace(-1, 1, n), np.linspace(-1, 1, n), indexing="ij")
    x, z = x.ravel(), z.ravel()
    keep = x**2 + z**2 <= 1
    x, z = x[keep], z[keep]
    t00, t11, t01 = (1 + z) / 2, (1 - z) / 2, x / 2
    r00, r11 = rho[0, 0].real, rho[1, 1].real
    r01 = rho[0, 1]
    a = t00 * t11 - t01**2
    b = -(t00 * r11 + t11 * r00 - 2 * t01 * r01.real)
    c = (r00 * r11 - abs(r01) ** 2).real
    disc = np.clip(b * b - 4 * a * c, 0, None)
    safe = np.where(a > 1e-14, a, np.nan)
    u = (-b + np.sqrt(disc)) / (2 * safe)
    u = np.maximum(u, 1.0)
    return float(np.nanmin(u) - 1.0)


def random_real_unit_vectors(rng, d, n):
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def l1_distance(rho, sigmas):
    """Entrywise l1 distance from rho to each matrix in a stack."""
    return np.sum(np.abs(rho - sigmas), axis=(-1, -2))


def random_real_states(rng, d, n):
    G = rng.normal(size=(n, d, d))
    S = G @ np.swapaxes(G, -1, -2)
    return S / np.trace(S, axis1=1, axis2=2)[:, None, None]
