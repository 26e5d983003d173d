"""Outer relaxations of the separable cone as attachable SDP constraints.

Separable operators on a bipartite space V ⊗ B form a cone that is hard to
describe exactly, so optimization problems replace it with a tractable outer
approximation. Two families are provided: positivity of the partial transpose,
and symmetric extension to k copies of B with optional partial-transpose cuts
on every V | copies split. Feasibility under the (k+1)-copy relaxation implies
feasibility under the k-copy one, which implies the partial-transpose test, so
tightening the relaxation can only shrink the feasible set.

`constrain_in_relaxed_cone` appends the membership constraints for one
operator to an existing `SdpProblem` and returns whatever auxiliary variables
it introduced. The operator may be a declared variable or any affine
expression of declared variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg, sdp

PPT = "ppt"
SYMMETRIC_EXTENSION = "symext"


@dataclass(frozen=True)
class SeparabilityRelaxation:
    """Which outer approximation of the separable cone to impose.

    `kind` is PPT or SYMMETRIC_EXTENSION; `k` counts the copies of the B
    factor in the extension (at least 2, ignored for PPT); `with_ppt` adds
    partial-transpose cuts on every V | copies split of the extension; `cut`
    optionally pins the (d_V, d_B) bipartition, otherwise the dimensions are
    supplied where the constraint is attached.
    """

    kind: str
    k: int = 0
    with_ppt: bool = True
    cut: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in (PPT, SYMMETRIC_EXTENSION):
            raise ValueError(f"unknown relaxation kind {self.kind!r}")
        if self.kind == SYMMETRIC_EXTENSION and self.k < 2:
            raise ValueError("symmetric extension needs k >= 2")

    @classmethod
    def ppt(cls, cut: tuple[int, int] | None = None) -> "SeparabilityRelaxation":
        return cls(kind=PPT, cut=cut)

    @classmethod
    def symmetric_extension(cls, k: int, with_ppt: bool = True,
                            cut: tuple[int, int] | None = None) -> "SeparabilityRelaxation":
        return cls(kind=SYMMETRIC_EXTENSION, k=k, with_ppt=with_ppt, cut=cut)

    @classmethod
    def from_name(cls, name: str) -> "SeparabilityRelaxation":
        """Parse a CLI-style relaxation name: "ppt" or "sym<k>" (PPT cuts implied)."""
        if name == "ppt":
            return cls.ppt()
        if name.startswith("sym"):
            try:
                k = int(name[3:])
            except ValueError:
                k = 0
            if k >= 2:
                return cls.symmetric_extension(k, with_ppt=True)
        raise ValueError(f"unknown relaxation name {name!r}")

    @property
    def name(self) -> str:
        if self.kind == PPT:
            return "ppt"
        return f"sym{self.k}"


def default_relaxation(d_V: int, d_B: int) -> SeparabilityRelaxation:
    """PPT where it is exact (product dimension at most 6), sym2 + PPT beyond."""
    if d_V * d_B <= 6:
        return SeparabilityRelaxation.ppt(cut=(d_V, d_B))
    return SeparabilityRelaxation.symmetric_extension(2, with_ppt=True, cut=(d_V, d_B))


def _permute_factors(m: np.ndarray, dims: tuple[int, ...], perm: list[int]) -> np.ndarray:
    """Apply the same tensor-factor permutation to rows and columns."""
    n = len(dims)
    t = m.reshape(dims + dims)
    return t.transpose([*perm, *(n + p for p in perm)]).reshape(m.shape)


def _swap_adapted_isometries(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Isometries embedding the symmetric and antisymmetric subspaces of
    C^d ⊗ C^d, i.e. the +1 and -1 eigenspaces of the swap."""
    s = 1.0 / np.sqrt(2.0)
    sym = np.zeros((d * d, d * (d + 1) // 2))
    anti = np.zeros((d * d, d * (d - 1) // 2))
    col_s = col_a = 0
    for i in range(d):
        sym[i * d + i, col_s] = 1.0
        col_s += 1
    for i in range(d):
        for j in range(i + 1, d):
            sym[i * d + j, col_s] = sym[j * d + i, col_s] = s
            col_s += 1
            anti[i * d + j, col_a], anti[j * d + i, col_a] = s, -s
            col_a += 1
    return sym, anti


def constrain_in_relaxed_cone(problem: sdp.SdpProblem, expr, relaxation: SeparabilityRelaxation,
                              dims: tuple[int, int] | None = None, vars=None,
                              tag: str | None = None) -> list[sdp.HermitianVar]:
    """Require an operator on V ⊗ B to lie in the relaxed separable cone.

    `expr` is a declared Hermitian variable or an affine callable of the
    assignment; `dims` gives the (d_V, d_B) split and falls back to the
    relaxation's `cut`. Returns the auxiliary variables added to `problem`:
    the extension operator for symmetric-extension relaxations (its two swap
    blocks when k = 2), nothing for PPT. `vars` narrows coefficient extraction
    to the variables `expr` actually touches; auxiliary variables are appended
    automatically.
    """
    dims = dims or relaxation.cut
    if dims is None:
        raise ValueError("bipartition dimensions required (dims argument or relaxation.cut)")
    d_V, d_B = dims
    if isinstance(expr, sdp.HermitianVar):
        if expr.dim != d_V * d_B:
            raise ValueError(f"variable dimension {expr.dim} does not factor as {d_V}x{d_B}")
        var = expr
        expr = lambda v: v[var]
        vars = [var]
    label = tag or "sep"

    if relaxation.kind == PPT:
        problem.add_psd(expr, vars=vars, tag=f"{label}:psd" if tag else None)
        problem.add_psd(lambda v: linalg.partial_transpose(expr(v), (d_V, d_B), [0]),
                        vars=vars, tag=f"{label}:ppt" if tag else None)
        return []

    k = relaxation.k
    if k == 2:
        return _constrain_two_copy(problem, expr, relaxation, (d_V, d_B), vars, label,
                                   tagged=tag is not None)
    ext_dims = (d_V,) + (d_B,) * k
    ext = problem.declare_hermitian(d_V * d_B ** k, name=f"{label}:ext")
    ext_vars = None if vars is None else [*vars, ext]

    problem.add_psd(lambda v: v[ext], vars=[ext], tag=f"{label}:extpsd" if tag else None)
    # Invariance under swapping copy 1 with copy j generates all copy swaps.
    for j in range(2, k + 1):
        perm = list(range(k + 1))
        perm[1], perm[j] = perm[j], perm[1]
        problem.add_equality(
            lambda v, p=perm: _permute_factors(v[ext], ext_dims, p) - v[ext],
            vars=[ext], tag=f"{label}:swap{j}" if tag else None)
    problem.add_equality(
        lambda v: linalg.partial_trace(v[ext], ext_dims, [0, 1]) - expr(v),
        vars=ext_vars, tag=f"{label}:marginal" if tag else None)
    if relaxation.with_ppt:
        # Transposing the last j copies realizes every V | copies cut once,
        # given the swap invariance above.
        for j in range(1, k + 1):
            subs = list(range(k + 1 - j, k + 1))
            problem.add_psd(
                lambda v, s=subs: linalg.partial_transpose(v[ext], ext_dims, s),
                vars=[ext], tag=f"{label}:cut{j}" if tag else None)
    return [ext]


def _constrain_two_copy(problem: sdp.SdpProblem, expr, relaxation: SeparabilityRelaxation,
                        dims: tuple[int, int], vars, label: str,
                        tagged: bool) -> list[sdp.HermitianVar]:
    """Two-copy extension in the swap eigenbasis.

    A swap-invariant extension commutes with the copy exchange, so it is block
    diagonal over V ⊗ Sym²(B) and V ⊗ Λ²(B). Declaring the blocks directly
    removes the swap equalities and shrinks the extension's PSD constraint;
    the both-copies transpose cut equals partial transposition on V, which
    respects the blocks. Same feasible set as the generic encoding, smaller.
    """
    d_V, d_B = dims
    u_sym, u_anti = _swap_adapted_isometries(d_B)
    w_sym = linalg.kron(np.eye(d_V), u_sym)
    w_anti = linalg.kron(np.eye(d_V), u_anti)
    m_sym, m_anti = u_sym.shape[1], u_anti.shape[1]
    xs = problem.declare_hermitian(d_V * m_sym, name=f"{label}:sym")
    xa = problem.declare_hermitian(d_V * m_anti, name=f"{label}:anti") if m_anti else None
    blocks = [xs] if xa is None else [xs, xa]

    def ext(v):
        full = w_sym @ v[xs] @ w_sym.T
        if xa is not None:
            full = full + w_anti @ v[xa] @ w_anti.T
        return full

    for blk, part in zip(blocks, ("sym", "anti")):
        problem.add_psd(lambda v, b=blk: v[b], vars=[blk],
                        tag=f"{label}:extpsd:{part}" if tagged else None)
    problem.add_equality(
        lambda v: linalg.partial_trace(ext(v), (d_V, d_B, d_B), [0, 1]) - expr(v),
        vars=None if vars is None else [*vars, *blocks],
        tag=f"{label}:marginal" if tagged else None)
    if relaxation.with_ppt:
        problem.add_psd(lambda v: linalg.partial_transpose(ext(v), (d_V, d_B, d_B), [2]),
                        vars=blocks, tag=f"{label}:cut1" if tagged else None)
        for blk, m, part in zip(blocks, (m_sym, m_anti), ("sym", "anti")):
            problem.add_psd(
                lambda v, b=blk, mm=m: linalg.partial_transpose(v[b], (d_V, mm), [0]),
                vars=[blk], tag=f"{label}:cut2:{part}" if tagged else None)
    return blocks
