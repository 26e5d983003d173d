"""Reference states, measurements, and input ensembles for teleportation scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from telecert.linalg import (
    CMatrix,
    HERMITICITY_TOL,
    PSD_TOL,
    SubsystemDims,
    as_cmatrix,
    assert_hermitian,
    dagger,
    is_psd,
    kron,
    min_eig,
)

TRACE_TOL = 1e-8


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DensityMatrix:
    """Unit-trace PSD operator on a tensor product of subsystems."""

    mat: CMatrix
    dims: SubsystemDims

    def __post_init__(self):
        m = assert_hermitian(as_cmatrix(self.mat), HERMITICITY_TOL, "density matrix")
        dims = tuple(int(d) for d in self.dims)
        if m.shape[0] != int(np.prod(dims)):
            raise ValueError(f"state of size {m.shape[0]} does not factor as {dims}")
        if min_eig(m) < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {min_eig(m):.3e}")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real} is not 1")
        object.__setattr__(self, "mat", _freeze(m))
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class Povm:
    """POVM on a (possibly composite) space, with optional correction unitaries.

    corrections[a], when present, is the unitary a receiver applies after
    learning outcome a.
    """

    elements: tuple[CMatrix, ...]
    dims: SubsystemDims
    corrections: tuple[CMatrix, ...] | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        n = int(np.prod(dims))
        elems = []
        for i, e in enumerate(self.elements):
            e = as_cmatrix(e)
            if e.shape[0] != n:
                raise ValueError(f"element {i} has size {e.shape[0]}, expected {n}")
            if not is_psd(e):
                raise ValueError(f"element {i} is not PSD (min eigenvalue {min_eig(e):.3e})")
            elems.append(_freeze(e))
        total = sum(elems)
        if np.max(np.abs(total - np.eye(n))) > PSD_TOL:
            raise ValueError("POVM elements do not sum to the identity")
        corr = self.corrections
        if corr is not None:
            if len(corr) != len(elems):
                raise ValueError("one correction per outcome is required")
            fixed = []
            for i, u in enumerate(corr):
                u = as_cmatrix(u)
                if np.max(np.abs(u @ dagger(u) - np.eye(u.shape[0]))) > PSD_TOL:
                    raise ValueError(f"correction {i} is not unitary")
                fixed.append(_freeze(u))
            corr = tuple(fixed)
        object.__setattr__(self, "elements", tuple(elems))
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "corrections", corr)

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class InputEnsemble:
    """Finite set of verifier input states, all of dimension d."""

    states: tuple[CMatrix, ...]
    d: int = field(default=0)

    def __post_init__(self):
        if not self.states:
            raise ValueError("ensemble must contain at least one state")
        d = int(self.d) if self.d else as_cmatrix(self.states[0]).shape[0]
        fixed = []
        for i, w in enumerate(self.states):
            DensityMatrix(w, (d,))  # validation only
            fixed.append(_freeze(as_cmatrix(w)))
        object.__setattr__(self, "states", tuple(fixed))
        object.__setattr__(self, "d", d)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)


# ---------------------------------------------------------------- constructors

def max_entangled(d: int) -> DensityMatrix:
    """Maximally entangled state sum_ij |ii><jj| / d on two d-level systems."""
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return DensityMatrix(np.outer(v, v.conj()), (d, d))


def shift_clock(d: int) -> tuple[CMatrix, CMatrix]:
    """Generalized-Pauli shift X (|i> -> |i+1 mod d>) and clock Z (phases e^{2pi i j/d})."""
    x = np.zeros((d, d), dtype=complex)
    for i in range(d):
        x[(i + 1) % d, i] = 1.0
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


def weyl_unitary(d: int, a: int) -> CMatrix:
    """Outcome-indexed unitary X^j Z^k with a = j*d + k."""
    x, z = shift_clock(d)
    j, k = divmod(int(a), d)
    return np.linalg.matrix_power(x, j) @ np.linalg.matrix_power(z, k)


def bell_measurement(d: int) -> Povm:
    """Full d²-outcome measurement in the maximally entangled basis.

    Element a projects onto (U_a ⊗ I)|phi+>, U_a = X^j Z^k, a = j*d + k; the
    matching correction unitary is U_a itself.
    """
    phi = max_entangled(d).mat
    elements, corrections = [], []
    for a in range(d * d):
        u = weyl_unitary(d, a)
        ui = kron(u, np.eye(d))
        elements.append(ui @ phi @ dagger(ui))
        corrections.append(u)
    return Povm(tuple(elements), (d, d), tuple(corrections))


def partial_bell_measurement(d: int) -> Povm:
    """Two-outcome coarse graining {phi+ projector, rest}; no correction needed."""
    phi = max_entangled(d).mat
    eye = np.eye(d * d, dtype=complex)
    return Povm((phi, eye - phi), (d, d), (np.eye(d, dtype=complex),) * 2)


_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1j], [1j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def pauli_eigenstate_ensemble(axes: str = "xyz") -> InputEnsemble:
    """Qubit ensemble of +/- eigenstates of the chosen Pauli axes, in axis order."""
    states = []
    for ax in axes:
        p = _PAULI[ax.lower()]
        states.append((np.eye(2) + p) / 2.0)
        states.append((np.eye(2) - p) / 2.0)
    return InputEnsemble(tuple(states), 2)


def random_tomo_complete_ensemble(d: int, seed: int, n_states: int | None = None) -> InputEnsemble:
    """d² Haar-random pure states, redrawn (up to 16 times) until they span
    the full operator space."""
    n = d * d if n_states is None else int(n_states)
    for attempt in range(16):
        g = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(attempt,))))
        states = []
        for _ in range(n):
            v = g.standard_normal(d) + 1j * g.standard_normal(d)
            v /= np.linalg.norm(v)
            states.append(np.outer(v, v.conj()))
        ens = InputEnsemble(tuple(states), d)
        if is_tomographically_complete(ens):
            return ens
    raise RuntimeError(f"no tomographically complete ensemble found for d={d}, seed={seed}")


def is_tomographically_complete(ensemble: InputEnsemble, tol: float = 1e-8) -> bool:
    """True when the input states span the d² dimensional operator space.

    Checked as the rank of the Hilbert-Schmidt Gram matrix of the inputs.
    """
    n = len(ensemble)
    gram = np.empty((n, n))
    for i, wi in enumerate(ensemble):
        for j, wj in enumerate(ensemble):
            gram[i, j] = np.real(np.trace(wi @ wj))
    w = np.linalg.eigvalsh((gram + gram.T) / 2.0)
    rank = int(np.sum(w > tol * max(1.0, float(w[-1]))))
    return rank == ensemble.d ** 2


def flag_state(p: float) -> DensityMatrix:
    """Two-qubit mixture p·phi+ + (1-p)·|01><01|."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing parameter p={p} outside [0, 1]")
    rho = p * max_entangled(2).mat.copy()
    rho[1, 1] += 1.0 - p
    return DensityMatrix(rho, (2, 2))


def isotropic_state(p: float, d: int = 2) -> DensityMatrix:
    """Mixture p·phi+ + (1-p)·I/d² of the maximally entangled and maximally mixed states."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing parameter p={p} outside [0, 1]")
    rho = p * max_entangled(d).mat + (1.0 - p) * np.eye(d * d) / (d * d)
    return DensityMatrix(rho, (d, d))


def horodecki_state(a: float) -> DensityMatrix:
    """Two-qutrit PPT-entangled family, parametrized by a in [0, 1].

    Entangled for every a strictly between 0 and 1 even though the partial
    transpose stays PSD, so it is invisible to plain PPT tests.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"parameter a={a} outside [0, 1]")
    m = np.zeros((9, 9))
    for i in (0, 4, 8):
        for j in (0, 4, 8):
            m[i, j] = a
    for i in (1, 2, 3, 5, 7):
        m[i, i] = a
    b = np.sqrt(1.0 - a * a) / 2.0
    m[6, 6] = m[8, 8] = (1.0 + a) / 2.0
    m[6, 8] = m[8, 6] = b
    return DensityMatrix(m / (8.0 * a + 1.0), (3, 3))


def upb_pyramid_state() -> DensityMatrix:
    """Two-qutrit bound entangled state from the pyramid unextendible product basis.

    Five product vectors v_j ⊗ v_{2j mod 5} built from the regular-pentagon
    frame v_j = N (cos(2πj/5), sin(2πj/5), h) span an orthonormal set with no
    product vector in its complement; the normalized projector onto that
    complement is entangled with PSD partial transpose.
    """
    h = np.sqrt(1.0 + np.sqrt(5.0)) / 2.0
    nrm = 2.0 / np.sqrt(5.0 + np.sqrt(5.0))
    vs = [nrm * np.array([np.cos(2 * np.pi * j / 5), np.sin(2 * np.pi * j / 5), h]) for j in range(5)]
    proj = np.zeros((9, 9), dtype=complex)
    for j in range(5):
        psi = np.kron(vs[j], vs[(2 * j) % 5])
        proj += np.outer(psi, psi)
    return DensityMatrix((np.eye(9) - proj) / 4.0, (3, 3))
