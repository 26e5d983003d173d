"""Dense complex linear algebra for small multipartite operators."""

from __future__ import annotations

import numpy as np

# A CMatrix is a square complex ndarray; SubsystemDims orders the tensor factors.
CMatrix = np.ndarray
SubsystemDims = tuple[int, ...]

HERMITICITY_TOL = 1e-9
PSD_TOL = 1e-8


def as_cmatrix(m) -> CMatrix:
    """Coerce to a square complex ndarray (no copy when already one)."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(m: CMatrix) -> CMatrix:
    return np.conj(np.asarray(m).T)


def hermitian_part(m: CMatrix) -> CMatrix:
    return (as_cmatrix(m) + dagger(m)) / 2.0


def hermiticity_defect(m: CMatrix) -> float:
    """Largest entrywise deviation of m from its adjoint."""
    m = as_cmatrix(m)
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def is_hermitian(m: CMatrix, tol: float = HERMITICITY_TOL) -> bool:
    return hermiticity_defect(m) <= tol


def assert_hermitian(m: CMatrix, tol: float = HERMITICITY_TOL, what: str = "matrix") -> CMatrix:
    m = as_cmatrix(m)
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ValueError(f"{what} deviates from Hermiticity by {defect:.3e} (tol {tol:.1e})")
    return m


def eigh(m: CMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of the Hermitian part (symmetrize, then eigh)."""
    return np.linalg.eigh(hermitian_part(m))


def min_eig(m: CMatrix) -> float:
    return float(eigh(m)[0][0])


def is_psd(m: CMatrix, tol: float = PSD_TOL) -> bool:
    """True when m is Hermitian and its spectrum is nonnegative within tol."""
    return is_hermitian(m) and min_eig(m) >= -tol


def kron(*ms: CMatrix) -> CMatrix:
    """Kronecker product of the given matrices, left factor first."""
    if not ms:
        raise ValueError("kron needs at least one matrix")
    out = np.asarray(ms[0], dtype=complex)
    for m in ms[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def _check_dims(m: CMatrix, dims: SubsystemDims) -> tuple[CMatrix, tuple[int, ...]]:
    m = as_cmatrix(m)
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"factor dimensions must be positive, got {dims}")
    if m.shape[0] != int(np.prod(dims)):
        raise ValueError(f"matrix of size {m.shape[0]} does not factor as {dims}")
    return m, dims


def partial_trace(m: CMatrix, dims: SubsystemDims, keep) -> CMatrix:
    """Trace out every factor not listed in keep; kept factors stay in order.

    dims gives the dimension of each tensor factor of m; keep is an iterable
    of factor indices.
    """
    m, dims = _check_dims(m, dims)
    k = len(dims)
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= k for i in keep):
        raise ValueError(f"keep indices {keep} out of range for {k} factors")
    row = list(range(k))
    col = list(range(k, 2 * k))
    for i in range(k):
        if i not in keep:
            col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    t = np.einsum(m.reshape(dims + dims), row + col, out)
    d_kept = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d_kept, d_kept)


def partial_transpose(m: CMatrix, dims: SubsystemDims, subsystems) -> CMatrix:
    """Transpose the listed tensor factors of m, leaving the rest untouched."""
    m, dims = _check_dims(m, dims)
    k = len(dims)
    subsystems = sorted(set(int(i) for i in subsystems))
    if any(i < 0 or i >= k for i in subsystems):
        raise ValueError(f"subsystem indices {subsystems} out of range for {k} factors")
    axes = list(range(2 * k))
    for i in subsystems:
        axes[i], axes[k + i] = axes[k + i], axes[i]
    n = m.shape[0]
    return m.reshape(dims + dims).transpose(axes).reshape(n, n)


def psd_sqrt(m: CMatrix, tol: float = PSD_TOL) -> CMatrix:
    """Principal square root of a PSD matrix; small negative eigenvalues clip to 0."""
    m = assert_hermitian(m)
    w, v = np.linalg.eigh(hermitian_part(m))
    if m.size and w[0] < -tol * max(1.0, float(w[-1])):
        raise ValueError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def fidelity(rho: CMatrix, sigma: CMatrix) -> float:
    """Root fidelity: trace norm of sqrt(rho)·sqrt(sigma)."""
    s = psd_sqrt(rho) @ psd_sqrt(sigma)
    return float(np.sum(np.linalg.svd(s, compute_uv=False)))


def negative_part_trace(h: CMatrix) -> float:
    """Sum of the absolute values of the negative eigenvalues of Hermitian h."""
    w, _ = eigh(assert_hermitian(h))
    return float(-np.sum(w[w < 0.0]))


def realify_hermitian(h: CMatrix) -> np.ndarray:
    """Real symmetric image [[Re h, -Im h], [Im h, Re h]] of Hermitian h.

    The map preserves positive semidefiniteness in both directions and doubles
    every eigenvalue's multiplicity.
    """
    h = assert_hermitian(h)
    re, im = np.real(h), np.imag(h)
    return np.block([[re, -im], [im, re]])
