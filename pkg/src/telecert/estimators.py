"""Certification and entanglement bounds from teleportation data.

Every function here assembles one conic program and interprets its solution.
`classicality` decides whether an assemblage admits a classical channel model
at a chosen relaxation of the separable cone, returning either the model or a
violated witness. The remaining functions compute entanglement quantifiers:
negativity, three robustness variants, teleportation weight, and the best
separable approximation, either from a density matrix directly or as a
certified lower bound from teleportation data alone.

All data-driven bounds are sound for any state and measurement compatible
with the assemblage. They are tight when the measurement is a full Bell
measurement and the input ensemble is tomographically complete; reports carry
a `bound_direction` flag recording whether that regime applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, sdp, sepcone, states, teleport
from .linalg import CMatrix
from .sdp import SolveStatus
from .sepcone import SeparabilityRelaxation
from .states import DensityMatrix, InputEnsemble
from .teleport import ChannelOperators, TeleportationAssemblage

GENERALIZED = "generalized"
SEPARABLE = "separable"
CLASSICAL = "classical"
RANDOM = "random"

LOWER_BOUND = "lower-bound-on-entanglement"
EXACT_AT_RELAXATION = "exact-at-relaxation"

# Feasibility slack below this multiple of the solver tolerance counts as zero.
CLASSICAL_GATE = 10.0


@dataclass(frozen=True)
class Witness:
    """Linear functional on assemblages that is nonnegative on classical data.

    `value` evaluates sum_(a,x) tr[fs[a][x] sigma[a][x]] + offset; a strictly
    negative result certifies nonclassical teleportation.
    """

    fs: tuple[tuple[CMatrix, ...], ...]
    offset: float

    def __post_init__(self):
        rows = tuple(tuple(_frozen_hermitian(f) for f in row) for row in self.fs)
        if not rows or not rows[0]:
            raise ValueError("witness table must be non-empty")
        object.__setattr__(self, "fs", rows)

    @property
    def n_outcomes(self) -> int:
        return len(self.fs)

    @property
    def n_inputs(self) -> int:
        return len(self.fs[0])

    def value(self, asm: TeleportationAssemblage) -> float:
        if (asm.n_outcomes, len(asm.ensemble)) != (self.n_outcomes, self.n_inputs):
            raise ValueError("witness and assemblage are indexed differently")
        acc = sum(np.trace(self.fs[a][x] @ asm.sigma[a][x]).real
                  for a in range(self.n_outcomes) for x in range(self.n_inputs))
        return float(acc) + self.offset


@dataclass(frozen=True)
class ClassicalityResult:
    """Outcome of the classical-model search.

    Exactly one of `channel` (a reproducing classical model) and `witness`
    (a functional violated by the data) is set. `slack` is the smallest
    uniform shift that brings the channel operators into the relaxed cone;
    classicality means it vanishes up to the solver tolerance.
    """

    is_classical: bool
    slack: float
    relaxation: SeparabilityRelaxation
    tolerance: float
    channel: ChannelOperators | None = None
    witness: Witness | None = None


@dataclass(frozen=True)
class QuantifierReport:
    quantifier: str
    value: float
    status: SolveStatus
    relaxation: SeparabilityRelaxation | None
    bound_direction: str
    parameters: dict = field(default_factory=dict)
    certificate: dict | None = None

    def to_json(self, include_certificate: bool = False) -> dict:
        """JSON-serializable summary; matrices appear only when requested."""
        out = {
            "quantifier": self.quantifier,
            "value": None if math.isnan(self.value) else self.value,
            "status": self.status.name.lower(),
            "relaxation": self.relaxation.name if self.relaxation else None,
            "bound_direction": self.bound_direction,
            "parameters": dict(self.parameters),
        }
        if include_certificate and self.certificate is not None:
            out["certificate"] = {
                k: teleport._mat_to_json(v) if isinstance(v, np.ndarray) else v
                for k, v in self.certificate.items()}
        return out


def _frozen_hermitian(m):
    m = linalg.hermitian_part(linalg.as_cmatrix(m))
    m.setflags(write=False)
    return m


def _bipartite_dims(rho: DensityMatrix) -> tuple[int, int]:
    if len(rho.dims) != 2:
        raise ValueError(f"need a bipartite state, got {len(rho.dims)} factors")
    return rho.dims


def _cone_is_exact(d_left: int, d_right: int, r: SeparabilityRelaxation) -> bool:
    # On product dimension <= 6 the partial-transpose test decides
    # separability, so any relaxation containing a PPT cut is exact there.
    return d_left * d_right <= 6 and (r.kind == sepcone.PPT or r.with_ppt)


def _assemblage_direction(asm: TeleportationAssemblage,
                          r: SeparabilityRelaxation | None) -> str:
    tight = (states.is_tomographically_complete(asm.ensemble)
             and asm.n_outcomes == asm.d_V ** 2
             and (r is None or _cone_is_exact(asm.d_V, asm.d_B, r)))
    return EXACT_AT_RELAXATION if tight else LOWER_BOUND


def _finish(name: str, sol: sdp.SdpSolution, relaxation, direction, parameters,
            certificate=None) -> QuantifierReport:
    ok = sol.status is SolveStatus.OPTIMAL
    return QuantifierReport(
        quantifier=name,
        value=float(sol.objective_value) if ok else float("nan"),
        status=sol.status, relaxation=relaxation, bound_direction=direction,
        parameters=parameters,
        certificate=certificate() if ok and certificate is not None else None)


def _repaired_channel(mats, d_V, d_B) -> ChannelOperators:
    """Snap solver output onto the exact channel-operator manifold."""
    mats = [linalg.hermitian_part(m) for m in mats]
    total = sum(mats)
    rho_b = linalg.partial_trace(total, (d_V, d_B), [1]) / d_V
    drift = (total - linalg.kron(np.eye(d_V), rho_b)) / len(mats)
    scale = np.trace(rho_b).real
    return ChannelOperators(tuple((m - drift) / scale for m in mats), d_V, d_B)


# ------------------------------------------------------------- classicality


def classicality(asm: TeleportationAssemblage,
                 relaxation: SeparabilityRelaxation | None = None,
                 tol: float = sdp.DEFAULT_TOL) -> ClassicalityResult:
    """Search for channel operators in the relaxed separable cone that
    reproduce the assemblage.

    Solved as slack minimization: the smallest t with M_a + t·I in the cone
    for all outcomes, subject to the data-matching and normalization
    equalities. t ≈ 0 yields the classical model; t > 0 is a certified
    violation whose equality duals form the returned witness.
    """
    d_V, d_B = asm.d_V, asm.d_B
    relaxation = relaxation or sepcone.default_relaxation(d_V, d_B)
    n_a, n_x = asm.n_outcomes, len(asm.ensemble)
    eye = np.eye(d_V * d_B)

    p = sdp.SdpProblem()
    ops = [p.declare_hermitian(d_V * d_B, f"M{a}") for a in range(n_a)]
    rho_b = p.declare_hermitian(d_B, "rho_B")
    slack = p.declare_hermitian(1, "t")
    for a in range(n_a):
        for x, omega in enumerate(asm.ensemble):
            p.add_equality(
                lambda v, m=ops[a], w=omega: teleport.channel_output(v[m], w, d_V, d_B),
                rhs=asm.sigma[a][x], vars=[ops[a]], tag=f"data:{a}:{x}")
    p.add_equality(
        lambda v: sum(v[m] for m in ops) - linalg.kron(np.eye(d_V), v[rho_b]),
        vars=[*ops, rho_b], tag="norm")
    p.add_equality(lambda v: np.trace(v[rho_b]), rhs=1.0, vars=[rho_b], tag="unit")
    for a in range(n_a):
        sepcone.constrain_in_relaxed_cone(
            p, lambda v, m=ops[a]: v[m] + v[slack][0, 0] * eye, relaxation,
            dims=(d_V, d_B), vars=[ops[a], slack])
    p.minimize(lambda v: v[slack][0, 0].real, vars=[slack])

    sol = sdp.solve(p, tol=tol)
    if sol.status is not SolveStatus.OPTIMAL:
        raise RuntimeError(f"classicality program ended with status {sol.status.name}")
    t_star = float(sol.objective_value)
    if t_star <= CLASSICAL_GATE * tol:
        channel = _repaired_channel([sol.value(m) for m in ops], d_V, d_B)
        return ClassicalityResult(True, t_star, relaxation, tol, channel=channel)
    fs = tuple(tuple(sol.equality_dual(f"data:{a}:{x}") for x in range(n_x))
               for a in range(n_a))
    offset = float(sol.equality_dual("unit").real.item())
    return ClassicalityResult(False, t_star, relaxation, tol,
                              witness=Witness(fs=fs, offset=offset))


# --------------------------------------------------------------- negativity


def negativity(rho: DensityMatrix, tol: float = sdp.DEFAULT_TOL) -> QuantifierReport:
    """Negativity of a bipartite state: the least total weight of the
    negative part in a decomposition with both parts PPT."""
    dims = _bipartite_dims(rho)
    n = dims[0] * dims[1]
    p = sdp.SdpProblem()
    rp = p.declare_hermitian(n, "rho_plus")
    rm = p.declare_hermitian(n, "rho_minus")
    p.add_equality(lambda v: v[rp] - v[rm], rhs=rho.mat, vars=[rp, rm], tag="split")
    p.add_psd(lambda v: linalg.partial_transpose(v[rp], dims, [0]), vars=[rp])
    p.add_psd(lambda v: linalg.partial_transpose(v[rm], dims, [0]), vars=[rm])
    p.minimize(lambda v: np.trace(v[rm]).real, vars=[rm])
    sol = sdp.solve(p, tol=tol)
    return _finish(
        "negativity", sol, None, EXACT_AT_RELAXATION, {"dims": list(dims)},
        lambda: {"positive_part": sol.value(rp), "negative_part": sol.value(rm)})


def negativity_from_teleportation(asm: TeleportationAssemblage,
                                  tol: float = sdp.DEFAULT_TOL) -> QuantifierReport:
    """Lower bound on the negativity of any state able to produce the
    assemblage, from the data alone.

    Splits the channel operators into a difference of two PSD families whose
    outputs reproduce the data; the bound is the trace of the negative
    family's receiver marginal.
    """
    d_V, d_B = asm.d_V, asm.d_B
    n_a = asm.n_outcomes
    p = sdp.SdpProblem()
    mp = [p.declare_hermitian(d_V * d_B, f"Mp{a}") for a in range(n_a)]
    mm = [p.declare_hermitian(d_V * d_B, f"Mm{a}") for a in range(n_a)]
    rho_p = p.declare_hermitian(d_B, "rho_plus")
    rho_m = p.declare_hermitian(d_B, "rho_minus")
    for a in range(n_a):
        for x, omega in enumerate(asm.ensemble):
            p.add_equality(
                lambda v, pa=mp[a], ma=mm[a], w=omega:
                    teleport.channel_output(v[pa] - v[ma], w, d_V, d_B),
                rhs=asm.sigma[a][x], vars=[mp[a], mm[a]], tag=f"data:{a}:{x}")
    p.add_equality(lambda v: sum(v[m] for m in mp) - linalg.kron(np.eye(d_V), v[rho_p]),
                   vars=[*mp, rho_p], tag="norm+")
    p.add_equality(lambda v: sum(v[m] for m in mm) - linalg.kron(np.eye(d_V), v[rho_m]),
                   vars=[*mm, rho_m], tag="norm-")
    for m in (*mp, *mm):
        p.add_psd(lambda v, m=m: v[m], vars=[m])
    p.minimize(lambda v: np.trace(v[rho_m]).real, vars=[rho_m])
    sol = sdp.solve(p, tol=tol)
    return _finish(
        "negativity_from_teleportation", sol, None, _assemblage_direction(asm, None),
        {"n_outcomes": n_a, "n_inputs": len(asm.ensemble)},
        lambda: {"positive_marginal": sol.value(rho_p),
                 "negative_marginal": sol.value(rho_m)})


def negativity_from_witness(wit: Witness, w: float, e: InputEnsemble,
                            n_outcomes: int | None = None,
                            tol: float = sdp.DEFAULT_TOL) -> QuantifierReport:
    """Least negativity compatible with an observed witness value alone.

    Weaker than `negativity_from_teleportation` (a single scalar replaces the
    full data table) but needs no tomography of the teleported states. `w` is
    the witness value including its offset; infeasible values are reported
    with the corresponding status.
    """
    if n_outcomes is None:
        n_outcomes = wit.n_outcomes
    if n_outcomes != wit.n_outcomes or len(e) != wit.n_inputs:
        raise ValueError("witness indexing does not match the ensemble/outcome count")
    d_V = e.d
    d_B = wit.fs[0][0].shape[0]
    p = sdp.SdpProblem()
    mp = [p.declare_hermitian(d_V * d_B, f"Mp{a}") for a in range(n_outcomes)]
    mm = [p.declare_hermitian(d_V * d_B, f"Mm{a}") for a in range(n_outcomes)]
    rho_p = p.declare_hermitian(d_B, "rho_plus")
    rho_m = p.declare_hermitian(d_B, "rho_minus")
    probes = [[linalg.kron(omega, wit.fs[a][x]) for x, omega in enumerate(e)]
              for a in range(n_outcomes)]

    def attained(v):
        return sum(np.trace(probes[a][x] @ (v[mp[a]] - v[mm[a]]))
                   for a in range(n_outcomes) for x in range(len(e)))

    p.add_equality(attained, rhs=w - wit.offset, vars=[*mp, *mm], tag="violation")
    p.add_equality(lambda v: sum(v[m] for m in mp) - linalg.kron(np.eye(d_V), v[rho_p]),
                   vars=[*mp, rho_p], tag="norm+")
    p.add_equality(lambda v: sum(v[m] for m in mm) - linalg.kron(np.eye(d_V), v[rho_m]),
                   vars=[*mm, rho_m], tag="norm-")
    p.add_equality(lambda v: np.trace(v[rho_p]) - np.trace(v[rho_m]), rhs=1.0,
                   vars=[rho_p, rho_m], tag="unit")
    for m in (*mp, *mm):
        p.add_psd(lambda v, m=m: v[m], vars=[m])
    p.minimize(lambda v: np.trace(v[rho_m]).real, vars=[rho_m])
    sol = sdp.solve(p, tol=tol)
    return _finish(
        "negativity_from_witness", sol, None, LOWER_BOUND,
        {"witness_value": w, "n_outcomes": n_outcomes, "n_inputs": len(e)},
        lambda: {"negative_marginal": sol.value(rho_m)})


# --------------------------------------------------------------- robustness


def ent_robustness(rho: DensityMatrix, variant: str = GENERALIZED,
                   relaxation: SeparabilityRelaxation | None = None,
                   tol: float = sdp.DEFAULT_TOL) -> QuantifierReport:
    """Least mixing ratio r such that (rho + r·noise)/(1+r) is separable at
    the relaxation, with the noise a state (generalized), separable
    (separable), or maximally mixed (random)."""
    if variant not in (GENERALIZED, SEPARABLE, RANDOM):
        raise ValueError(f"unknown robustness variant {variant!r}")
    dims = _bipartite_dims(rho)
    n = dims[0] * dims[1]
    relaxation = relaxation or sepcone.default_relaxation(*dims)
    p = sdp.SdpProblem()
    if variant == RANDOM:
        q = p.declare_hermitian(1, "scale")
        p.add_nonneg(lambda v: v[q][0, 0].real, vars=[q])
        noise_vars = [q]
        noise = lambda v: v[q][0, 0] * np.eye(n) / n
    else:
        ns = p.declare_hermitian(n, "noise")
        if variant == GENERALIZED:
            p.add_psd(lambda v: v[ns], vars=[ns])
        else:
            sepcone.constrain_in_relaxed_cone(p, ns, relaxation, dims=dims)
        noise_vars = [ns]
        noise = lambda v: v[ns]
    sepcone.constrain_in_relaxed_cone(
        p, lambda v: rho.mat + noise(v), relaxation, dims=dims, vars=noise_vars)
    p.minimize(lambda v: np.trace(noise(v)).real, vars=noise_vars)
    sol = sdp.solve(p, tol=tol)
    direction = (EXACT_AT_RELAXATION if _cone_is_exact(*dims, relaxation)
                 else LOWER_BOUND)

    def certificate():
        shift = noise({v: sol.value(v) for v in noise_vars})
        r = float(np.trace(shift).real)
        return {"noise": shift, "separable_mix": (rho.mat + shift) / (1.0 + r)}

    return _finish("ent_robustness", sol, relaxation, direction,
                   {"variant": variant, "dims": list(dims)}, certificate)


def tel_robustness(asm: TeleportationAssemblage, variant: str = GENERALIZED,
                   relaxation: SeparabilityRelaxation | None = None,
                   tol: float = sdp.DEFAULT_TOL) -> QuantifierReport:
    """Least amount of noise assemblage that makes the data classical at the
    relaxation. The admissible noise is any quantum-realizable assemblage
    (generalized), a classically generated one (classical), or outcome-wise
    white noise (random); each variant lower-bounds the matching entanglement
    robustness of the shared state."""
    if variant not in (GENERALIZED, CLASSICAL, RANDOM):
        raise ValueError(f"unknown robustness variant {variant!r}")
    d_V, d_B = asm.d_V, asm.d_B
    n_a = asm.n_outcomes
    relaxation = relaxation or sepcone.default_relaxation(d_V, d_B)
    p = sdp.SdpProblem()
    ms = [p.declare_hermitian(d_V * d_B, f"M{a}") for a in range(n_a)]
    for a in range(n_a):
        sepcone.constrain_in_relaxed_cone(p, ms[a], relaxation, dims=(d_V, d_B))

    if variant == RANDOM:
        qs = [p.declare_hermitian(1, f"q{a}") for a in range(n_a)]
        for q in qs:
            p.add_nonneg(lambda v, q=q: v[q][0, 0].real, vars=[q])
        noise_out = lambda v, a, x: v[qs[a]][0, 0] * np.eye(d_B) / d_B
        noise_marginal = lambda v: sum(v[q][0, 0] for q in qs) * np.eye(d_B) / d_B
        r_expr = lambda v: sum(v[q][0, 0] for q in qs).real
        noise_vars = qs
    else:
        bars = [p.declare_hermitian(d_V * d_B, f"N{a}") for a in range(n_a)]
        rho_bar = p.declare_hermitian(d_B, "rho_bar")
        if variant == GENERALIZED:
            # Quantum-realizable noise: channel operators with PSD transpose
            # on the input side, no positivity of the operators themselves.
            for b in bars:
                p.add_psd(lambda v, b=b: linalg.partial_transpose(v[b], (d_V, d_B), [0]),
                          vars=[b])
        else:
            for b in bars:
                p.add_psd(lambda v, b=b: v[b], vars=[b])
                sepcone.constrain_in_relaxed_cone(p, b, relaxation, dims=(d_V, d_B))
        p.add_equality(
            lambda v: sum(v[b] for b in bars) - linalg.kron(np.eye(d_V), v[rho_bar]),
            vars=[*bars, rho_bar], tag="noise-norm")
        noise_out = lambda v, a, x: teleport.channel_output(
            v[bars[a]], asm.ensemble.states[x], d_V, d_B)
        noise_marginal = lambda v: v[rho_bar]
        r_expr = lambda v: np.trace(v[rho_bar]).real
        noise_vars = [*bars, rho_bar]

    for a in range(n_a):
        for x in range(len(asm.ensemble)):
            data_vars = [ms[a]] + ([qs[a]] if variant == RANDOM else [bars[a]])
            p.add_equality(
                lambda v, a=a, x=x: teleport.channel_output(
                    v[ms[a]], asm.ensemble.states[x], d_V, d_B) - noise_out(v, a, x),
                rhs=asm.sigma[a][x], vars=data_vars, tag=f"data:{a}:{x}")
    p.add_equality(
        lambda v: sum(v[m] for m in ms) - linalg.kron(np.eye(d_V), noise_marginal(v)),
        rhs=linalg.kron(np.eye(d_V), asm.receiver_marginal()),
        vars=[*ms, *noise_vars], tag="norm")
    p.minimize(r_expr, vars=noise_vars)
    sol = sdp.solve(p, tol=tol)
    return _finish(
        "tel_robustness", sol, relaxation, _assemblage_direction(asm, relaxation),
        {"variant": variant, "n_outcomes": n_a, "n_inputs": len(asm.ensemble)},
        lambda: {"robustness": float(sol.objective_value)})


# ------------------------------------------------------- weight and mixture


def teleportation_weight(asm: TeleportationAssemblage,
                         relaxation: SeparabilityRelaxation | None = None,
                         tol: float = sdp.DEFAULT_TOL) -> QuantifierReport:
    """Least weight of a genuinely nonclassical component in any splitting of
    the data into a nonclassical and a classical part.

    The nonclassical component is constrained only by positivity of the
    input-side transpose and by producing an input-independent total output;
    the classical component must come from cone-member channel operators.
    Lower-bounds the best separable approximation of the shared state.
    """
    d_V, d_B = asm.d_V, asm.d_B
    n_a = asm.n_outcomes
    relaxation = relaxation or sepcone.default_relaxation(d_V, d_B)
    omegas = asm.ensemble.states
    p = sdp.SdpProblem()
    nt = [p.declare_hermitian(d_V * d_B, f"Nt{a}") for a in range(n_a)]
    mb = [p.declare_hermitian(d_V * d_B, f"Mb{a}") for a in range(n_a)]
    for a in range(n_a):
        p.add_psd(lambda v, a=a: linalg.partial_transpose(v[nt[a]], (d_V, d_B), [0]),
                  vars=[nt[a]])
        p.add_psd(lambda v, a=a: v[mb[a]], vars=[mb[a]])
        sepcone.constrain_in_relaxed_cone(p, mb[a], relaxation, dims=(d_V, d_B))
        for x in range(len(omegas)):
            p.add_equality(
                lambda v, a=a, x=x: teleport.channel_output(
                    v[nt[a]] + v[mb[a]], omegas[x], d_V, d_B),
                rhs=asm.sigma[a][x], vars=[nt[a], mb[a]], tag=f"data:{a}:{x}")

    def total_out(v, x):
        return sum(teleport.channel_output(v[m], omegas[x], d_V, d_B) for m in nt)

    for x in range(1, len(omegas)):
        p.add_equality(lambda v, x=x: total_out(v, x) - total_out(v, 0),
                       vars=nt, tag=f"uniform:{x}")
    p.minimize(lambda v: np.trace(total_out(v, 0)).real, vars=nt)
    sol = sdp.solve(p, tol=tol)
    return _finish(
        "teleportation_weight", sol, relaxation, _assemblage_direction(asm, relaxation),
        {"n_outcomes": n_a, "n_inputs": len(omegas)},
        lambda: {"weight": float(sol.objective_value)})


def best_separable_approx(rho: DensityMatrix,
                          relaxation: SeparabilityRelaxation | None = None,
                          tol: float = sdp.DEFAULT_TOL) -> QuantifierReport:
    """Least weight p in rho = p·(anything) + (1-p)·(separable at the
    relaxation); zero exactly on cone members."""
    dims = _bipartite_dims(rho)
    n = dims[0] * dims[1]
    relaxation = relaxation or sepcone.default_relaxation(*dims)
    p = sdp.SdpProblem()
    rest = p.declare_hermitian(n, "entangled_part")
    p.add_psd(lambda v: v[rest], vars=[rest])
    sepcone.constrain_in_relaxed_cone(
        p, lambda v: rho.mat - v[rest], relaxation, dims=dims, vars=[rest])
    p.minimize(lambda v: np.trace(v[rest]).real, vars=[rest])
    sol = sdp.solve(p, tol=tol)
    direction = (EXACT_AT_RELAXATION if _cone_is_exact(*dims, relaxation)
                 else LOWER_BOUND)
    return _finish(
        "best_separable_approx", sol, relaxation, direction, {"dims": list(dims)},
        lambda: {"entangled_part": sol.value(rest),
                 "separable_part": rho.mat - sol.value(rest)})
