"""Teleportation data: assemblages, channel operators, fidelity, and interchange."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from telecert.linalg import (
    CMatrix,
    PSD_TOL,
    as_cmatrix,
    assert_hermitian,
    dagger,
    fidelity,
    kron,
    min_eig,
    partial_trace,
)
from telecert.states import DensityMatrix, InputEnsemble, Povm, max_entangled

NO_SIGNALLING_TOL = 1e-8


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TeleportationAssemblage:
    """Conditional output states sigma[a][x] on the receiver, one per
    (measurement outcome a, input state x) pair.

    Entries are subnormalized: tr sigma[a][x] is the outcome probability
    p(a|x). Construction enforces positivity, unit total probability, and
    x-independence of the outcome-summed state (no signalling to the
    receiver).
    """

    sigma: tuple[tuple[CMatrix, ...], ...]
    ensemble: InputEnsemble
    d_B: int

    def __post_init__(self):
        n_a = len(self.sigma)
        if n_a == 0:
            raise ValueError("assemblage needs at least one outcome")
        n_x = len(self.ensemble)
        rows = []
        for a, row in enumerate(self.sigma):
            if len(row) != n_x:
                raise ValueError(f"outcome {a} has {len(row)} entries, expected {n_x}")
            fixed = []
            for x, s in enumerate(row):
                s = assert_hermitian(as_cmatrix(s), what=f"sigma[{a}][{x}]")
                if s.shape[0] != self.d_B:
                    raise ValueError(f"sigma[{a}][{x}] has size {s.shape[0]}, expected {self.d_B}")
                if min_eig(s) < -PSD_TOL:
                    raise ValueError(f"sigma[{a}][{x}] has negative eigenvalue {min_eig(s):.3e}")
                fixed.append(_freeze(s))
            rows.append(tuple(fixed))
        marginals = [sum(rows[a][x] for a in range(n_a)) for x in range(n_x)]
        for x in range(n_x):
            if abs(np.trace(marginals[x]).real - 1.0) > NO_SIGNALLING_TOL:
                raise ValueError(f"outcome probabilities for input {x} sum to {np.trace(marginals[x]).real}")
            if np.max(np.abs(marginals[x] - marginals[0])) > NO_SIGNALLING_TOL:
                raise ValueError("outcome-summed receiver state depends on the input (signalling)")
        object.__setattr__(self, "sigma", tuple(rows))

    @property
    def n_outcomes(self) -> int:
        return len(self.sigma)

    @property
    def d_V(self) -> int:
        return self.ensemble.d

    def receiver_marginal(self) -> CMatrix:
        """Outcome-summed receiver state (input independent by construction)."""
        return sum(self.sigma[a][0] for a in range(self.n_outcomes))

    def probability(self, a: int, x: int) -> float:
        return float(np.trace(self.sigma[a][x]).real)


@dataclass(frozen=True)
class ChannelOperators:
    """Operators on verifier ⊗ receiver that reproduce an assemblage by
    sigma[a][x] = tr_V[ops[a] (omega_x ⊗ I)].

    Their sum is I ⊗ rho_B with rho_B the receiver marginal; each operator is
    Hermitian but need not be PSD (that is what classicality tests decide).
    """

    ops: tuple[CMatrix, ...]
    d_V: int
    d_B: int

    def __post_init__(self):
        fixed = []
        n = self.d_V * self.d_B
        for a, op in enumerate(self.ops):
            op = assert_hermitian(as_cmatrix(op), what=f"channel operator {a}")
            if op.shape[0] != n:
                raise ValueError(f"channel operator {a} has size {op.shape[0]}, expected {n}")
            fixed.append(_freeze(op))
        total = sum(fixed)
        rho_b = partial_trace(total, (self.d_V, self.d_B), [1]) / self.d_V
        if np.max(np.abs(total - kron(np.eye(self.d_V), rho_b))) > NO_SIGNALLING_TOL:
            raise ValueError("channel operators do not sum to I ⊗ rho_B")
        if abs(np.trace(rho_b).real - 1.0) > NO_SIGNALLING_TOL:
            raise ValueError(f"receiver marginal has trace {np.trace(rho_b).real}")
        object.__setattr__(self, "ops", tuple(fixed))

    @property
    def n_outcomes(self) -> int:
        return len(self.ops)

    def receiver_marginal(self) -> CMatrix:
        return partial_trace(sum(self.ops), (self.d_V, self.d_B), [1]) / self.d_V


def channel_output(op: CMatrix, omega: CMatrix, d_V: int, d_B: int) -> CMatrix:
    """Receiver-side output tr_V[op (omega ⊗ I_B)] of one channel operator."""
    return partial_trace(as_cmatrix(op) @ kron(omega, np.eye(d_B)), (d_V, d_B), [1])


def generate_assemblage(rho: DensityMatrix, m: Povm, e: InputEnsemble) -> TeleportationAssemblage:
    """Assemblage produced by measuring m across (input ⊗ sender half of rho).

    rho lives on sender ⊗ receiver, m on verifier ⊗ sender, inputs on the
    verifier; sigma[a][x] = tr_VA[(M_a ⊗ I_B)(omega_x ⊗ rho)].
    """
    d_a, d_b = rho.dims
    d_v = e.d
    if m.dims != (d_v, d_a):
        raise ValueError(f"measurement acts on {m.dims}, scenario needs ({d_v}, {d_a})")
    eye_b = np.eye(d_b)
    rows = []
    for ma in m.elements:
        big = kron(ma, eye_b)
        row = [partial_trace(big @ kron(wx, rho.mat), (d_v, d_a, d_b), [2]) for wx in e]
        rows.append(tuple(row))
    return TeleportationAssemblage(tuple(rows), e, d_b)


def channel_operators(rho: DensityMatrix, m: Povm) -> ChannelOperators:
    """Verifier ⊗ receiver operators tr_A[(M_a ⊗ I_B)(I_V ⊗ rho)] of the
    teleportation channel realized by measuring m on shared state rho."""
    d_a, d_b = rho.dims
    d_v = m.dims[0]
    if m.dims[1] != d_a:
        raise ValueError(f"measurement acts on {m.dims}, state sender side is {d_a}")
    eye_b = np.eye(d_b)
    eye_v = np.eye(d_v)
    ops = tuple(
        partial_trace(kron(ma, eye_b) @ kron(eye_v, rho.mat), (d_v, d_a, d_b), [0, 2])
        for ma in m.elements
    )
    return ChannelOperators(ops, d_v, d_b)


def assemblage_from_channel(ops: ChannelOperators, e: InputEnsemble) -> TeleportationAssemblage:
    """Assemblage obtained by feeding every ensemble input through the channel operators."""
    if e.d != ops.d_V:
        raise ValueError(f"ensemble dimension {e.d} does not match channel input {ops.d_V}")
    rows = tuple(
        tuple(channel_output(op, wx, ops.d_V, ops.d_B) for wx in e) for op in ops.ops
    )
    return TeleportationAssemblage(rows, e, ops.d_B)


def average_fidelity(asm: TeleportationAssemblage, corrections=None, zero_tol: float = 1e-12) -> float:
    """Input-averaged squared fidelity between corrected conditional states and
    the inputs they should reproduce.

    corrections is one unitary per outcome (identity when omitted); outcomes
    with vanishing probability contribute nothing. Requires d_B == d_V. The
    classical (unentangled) ceiling for qubit inputs is 2/3.
    """
    if asm.d_B != asm.d_V:
        raise ValueError("average fidelity needs matching input and receiver dimensions")
    n_a, n_x = asm.n_outcomes, len(asm.ensemble)
    if corrections is None:
        corrections = [np.eye(asm.d_B)] * n_a
    if len(corrections) != n_a:
        raise ValueError("one correction per outcome is required")
    total = 0.0
    for x, wx in enumerate(asm.ensemble):
        for a in range(n_a):
            p = asm.probability(a, x)
            if p <= zero_tol:
                continue
            u = as_cmatrix(corrections[a])
            out = u @ (asm.sigma[a][x] / p) @ dagger(u)
            total += p * fidelity(out, wx) ** 2
    return total / n_x


def bsm_normal_form(rho: DensityMatrix, m: Povm) -> list[tuple[float, DensityMatrix | None]]:
    """Rewrite a (state, measurement) pair as outcome-weighted effective states.

    Every scenario is equivalent to one where the measurement is the
    maximally entangled projection: outcome a occurs with probability p_a and
    the parties then share the returned verifier ⊗ receiver state. Zero
    probability outcomes return (0.0, None).
    """
    d_a, d_b = rho.dims
    d_v = m.dims[0]
    if m.dims[1] != d_a:
        raise ValueError(f"measurement acts on {m.dims}, state sender side is {d_a}")
    phi = max_entangled(d_v).mat
    joint = kron(phi, rho.mat)  # factors V, V1, A, B
    dims = (d_v, d_v, d_a, d_b)
    out: list[tuple[float, DensityMatrix | None]] = []
    for ma in m.elements:
        big = kron(np.eye(d_v), ma, np.eye(d_b))
        p = float(np.trace(big @ joint).real)
        if p <= 1e-12:
            out.append((0.0, None))
            continue
        eff = partial_trace(big @ joint, dims, [0, 3]) / p
        out.append((p, DensityMatrix(eff, (d_v, d_b))))
    return out


# ---------------------------------------------------------------- interchange

def _mat_to_json(m: CMatrix) -> list:
    m = as_cmatrix(m)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def _mat_from_json(rows) -> CMatrix:
    try:
        return np.array([[complex(c[0], c[1]) for c in row] for row in rows])
    except (TypeError, ValueError, IndexError) as exc:
        raise ValueError(f"malformed matrix entry: {exc}") from None


def assemblage_to_json(asm: TeleportationAssemblage) -> dict:
    """JSON-ready dict with d_B, n_outcomes, the input ensemble, and sigma[a][x]."""
    return {
        "d_B": asm.d_B,
        "n_outcomes": asm.n_outcomes,
        "ensemble": [_mat_to_json(w) for w in asm.ensemble],
        "sigma": [[_mat_to_json(s) for s in row] for row in asm.sigma],
    }


class AssemblageSchemaError(ValueError):
    """Structurally malformed assemblage document.

    Distinguishes documents that cannot even be decoded from ones that decode
    fine but violate a physical invariant (the latter raise plain ValueError).
    """


def assemblage_from_json(data: dict) -> TeleportationAssemblage:
    """Inverse of assemblage_to_json.

    Raises AssemblageSchemaError when the document structure is wrong, plain
    ValueError when the decoded assemblage breaks an invariant.
    """
    if not isinstance(data, dict):
        raise AssemblageSchemaError("assemblage document must be a JSON object")
    for key in ("d_B", "n_outcomes", "ensemble", "sigma"):
        if key not in data:
            raise AssemblageSchemaError(f"assemblage document is missing {key!r}")
    try:
        omegas = tuple(_mat_from_json(w) for w in data["ensemble"])
        sigma = tuple(tuple(_mat_from_json(s) for s in row) for row in data["sigma"])
        n_outcomes, d_b = int(data["n_outcomes"]), int(data["d_B"])
    except (TypeError, ValueError) as exc:
        raise AssemblageSchemaError(f"malformed assemblage document: {exc}") from None
    if len(sigma) != n_outcomes:
        raise AssemblageSchemaError("n_outcomes does not match the sigma table")
    return TeleportationAssemblage(sigma, InputEnsemble(omegas), d_b)
