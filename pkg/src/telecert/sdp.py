"""Hermitian semidefinite programs compiled onto a real symmetric-cone solver.

Variables are complex Hermitian matrices and constraints are affine
expressions of them, written as plain functions of a {variable: matrix}
assignment. Compilation maps each n-dimensional Hermitian variable to n²
real parameters, emits equality constraints entrywise, realifies every PSD
block H -> [[Re H, -Im H], [Im H, Re H]] (doubling its size), and hands the
real cone program to the cvxopt interior-point cone LP solver. Problems
whose feasible set has empty interior (rank-deficient data makes every
feasible cone block singular) can defeat that solver; a homogeneous
self-dual backend (Clarabel) serves as the rescue attempt.

Equality duals come back as Hermitian matrices F normalized so that the dual
functional equals tr[F · expr] on Hermitian-valued expressions; this is the
object witness extraction consumes. Cone duals Z are normalized so that
tr[Z · expr] equals the real pairing against the realified slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import clarabel
import numpy as np
import scipy.linalg
import scipy.sparse
from cvxopt import matrix as _cvxmat
from cvxopt import solvers as _cvxsolvers
from cvxopt import spmatrix as _cvxspmat

from telecert.linalg import CMatrix, hermitian_part, hermiticity_defect, realify_hermitian

DEFAULT_TOL = 1e-8

# Equality systems are declared linearly inconsistent beyond this residual.
LINEAR_FEAS_TOL = 1e-7
# Relative threshold on pivoted-QR diagonals when pruning redundant rows.
RANK_TOL = 1e-10


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class HermitianVar:
    """Handle for a dim × dim complex Hermitian matrix variable."""

    vid: int
    dim: int
    name: str

    def __repr__(self):
        return f"HermitianVar({self.name or self.vid}, dim={self.dim})"


@dataclass
class _Equality:
    fn: object
    rhs: np.ndarray
    vars: tuple[HermitianVar, ...]
    tag: object


@dataclass
class _Psd:
    fn: object
    vars: tuple[HermitianVar, ...]
    tag: object


@dataclass
class _Nonneg:
    fn: object
    vars: tuple[HermitianVar, ...]
    tag: object


class SdpProblem:
    """Collects Hermitian variables, affine constraints, and a linear objective.

    Constraint functions receive a dict mapping HermitianVar handles to
    matrices and must be affine in them. `vars` may list the variables a
    function actually touches; compilation only differentiates along those.
    """

    def __init__(self):
        self._vars: list[HermitianVar] = []
        self._eq: list[_Equality] = []
        self._psd: list[_Psd] = []
        self._nonneg: list[_Nonneg] = []
        self._objective = None  # (sense, fn, vars); sense +1 = minimize
        self._tags: set = set()

    def declare_hermitian(self, dim: int, name: str = "") -> HermitianVar:
        if dim < 1:
            raise ValueError(f"variable dimension must be positive, got {dim}")
        v = HermitianVar(len(self._vars), int(dim), name or f"H{len(self._vars)}")
        self._vars.append(v)
        return v

    @property
    def variables(self) -> tuple[HermitianVar, ...]:
        return tuple(self._vars)

    def _check_tag(self, tag):
        if tag is not None:
            if tag in self._tags:
                raise ValueError(f"duplicate constraint tag {tag!r}")
            self._tags.add(tag)

    def add_equality(self, fn, rhs=0.0, vars=None, tag=None) -> int:
        """Constrain fn(assignment) == rhs (matrix or scalar). Returns the constraint index."""
        self._check_tag(tag)
        rhs = np.atleast_2d(np.asarray(rhs, dtype=complex))
        self._eq.append(_Equality(fn, rhs, self._vars_or_all(vars), tag))
        return len(self._eq) - 1

    def add_psd(self, fn, vars=None, tag=None) -> int:
        """Constrain the Hermitian-valued fn(assignment) to be PSD."""
        self._check_tag(tag)
        self._psd.append(_Psd(fn, self._vars_or_all(vars), tag))
        return len(self._psd) - 1

    def add_nonneg(self, fn, vars=None, tag=None) -> int:
        """Constrain the real scalar fn(assignment) to be nonnegative."""
        self._check_tag(tag)
        self._nonneg.append(_Nonneg(fn, self._vars_or_all(vars), tag))
        return len(self._nonneg) - 1

    def minimize(self, fn, vars=None) -> None:
        self._objective = (1, fn, self._vars_or_all(vars))

    def maximize(self, fn, vars=None) -> None:
        self._objective = (-1, fn, self._vars_or_all(vars))

    def _vars_or_all(self, vars) -> tuple[HermitianVar, ...]:
        return tuple(self._vars) if vars is None else tuple(dict.fromkeys(vars))


# ---------------------------------------------------------------- parametrization

def hermitian_param_count(dim: int) -> int:
    return dim * dim


def _hermitian_basis(dim: int):
    """Yield the n² Hermitian basis elements in a fixed row-major order:
    for each i, the diagonal unit E_ii, then for each j > i the real part
    E_ij + E_ji and imaginary part i(E_ij - E_ji)."""
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1.0
        yield e
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = e[j, i] = 1.0
            yield e
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1j
            e[j, i] = -1j
            yield e


def params_to_hermitian(dim: int, p: np.ndarray) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    k = 0
    for i in range(dim):
        m[i, i] = p[k]
        k += 1
        for j in range(i + 1, dim):
            m[i, j] = p[k] + 1j * p[k + 1]
            m[j, i] = p[k] - 1j * p[k + 1]
            k += 2
    return m


def hermitian_to_params(m: np.ndarray) -> np.ndarray:
    dim = m.shape[0]
    p = np.empty(dim * dim)
    k = 0
    for i in range(dim):
        p[k] = m[i, i].real
        k += 1
        for j in range(i + 1, dim):
            p[k] = m[i, j].real
            p[k + 1] = m[i, j].imag
            k += 2
    return p


# ---------------------------------------------------------------- compilation

@dataclass
class _EqBlock:
    index: int
    tag: object
    dim: int
    hermitian: bool
    row_start: int
    n_rows: int


@dataclass
class _PsdBlock:
    index: int
    tag: object
    dim: int          # complex dimension m
    real_dim: int     # realified dimension 2m
    row_start: int    # within the G/h stack


@dataclass
class CompiledProblem:
    n_params: int
    var_offset: dict[HermitianVar, int]
    c: np.ndarray
    obj_offset: float
    sense: int
    a_coo: tuple          # (vals, rows, cols, n_rows)
    b: np.ndarray
    g_coo: tuple          # (vals, rows, cols, n_rows)
    h: np.ndarray
    n_lin: int
    eq_blocks: list[_EqBlock]
    psd_blocks: list[_PsdBlock]

    @property
    def psd_block_dims(self) -> list[tuple[int, int]]:
        """(complex dim, realified dim) for every PSD block, in declaration order."""
        return [(blk.dim, blk.real_dim) for blk in self.psd_blocks]


def _scalar(value) -> float:
    a = np.asarray(value)
    if a.size != 1:
        raise ValueError(f"expected a scalar expression, got shape {a.shape}")
    v = complex(a.reshape(()))
    if abs(v.imag) > 1e-9 * max(1.0, abs(v)):
        raise ValueError(f"expected a real scalar, got {v}")
    return float(v.real)


def compile_problem(problem: SdpProblem) -> CompiledProblem:
    """Differentiate every constraint along the Hermitian basis and assemble
    the sparse real cone program."""
    all_vars = problem.variables
    var_offset: dict[HermitianVar, int] = {}
    n_params = 0
    for v in all_vars:
        var_offset[v] = n_params
        n_params += hermitian_param_count(v.dim)

    zero_assign = {v: np.zeros((v.dim, v.dim), dtype=complex) for v in all_vars}

    def coefficients(fn, vars_hint):
        """Yield (param index, coefficient) plus the constant term fn(0)."""
        const = np.atleast_2d(np.asarray(fn(zero_assign), dtype=complex))
        coefs = []
        for v in vars_hint:
            base = var_offset[v]
            for k, basis in enumerate(_hermitian_basis(v.dim)):
                zero_assign[v] = basis
                val = np.atleast_2d(np.asarray(fn(zero_assign), dtype=complex)) - const
                zero_assign[v] = np.zeros((v.dim, v.dim), dtype=complex)
                if np.any(val):
                    coefs.append((base + k, val))
        return const, coefs

    # ---- objective
    if problem._objective is None:
        sense, c, obj_offset = 1, np.zeros(n_params), 0.0
    else:
        sense, fn, vars_hint = problem._objective
        const, coefs = coefficients(lambda v, fn=fn: np.atleast_2d(complex(_scalar(fn(v)))), vars_hint)
        c = np.zeros(n_params)
        for k, val in coefs:
            c[k] = _scalar(val)
        obj_offset = _scalar(const)

    # ---- equalities
    a_vals, a_rows, a_cols, b_list = [], [], [], []
    eq_blocks: list[_EqBlock] = []
    row = 0
    for idx, eq in enumerate(problem._eq):
        const, coefs = coefficients(eq.fn, eq.vars)
        m = const.shape[0]
        if const.shape != (m, m):
            raise ValueError(f"equality {eq.tag or idx} is not square: shape {const.shape}")
        rhs = eq.rhs
        if rhs.shape != (m, m):
            if rhs.shape == (1, 1) and rhs[0, 0] == 0.0:
                rhs = np.zeros((m, m), dtype=complex)
            else:
                raise ValueError(f"equality {eq.tag or idx} rhs shape {rhs.shape} != {(m, m)}")
        resid = const - rhs  # constraint ⇔ Σ x_k C_k = rhs - const
        tol = 1e-11 * max(1.0, float(np.max(np.abs(resid))) if resid.size else 0.0)
        hermitian = hermiticity_defect(resid) <= tol and all(
            hermiticity_defect(cv) <= 1e-11 * max(1.0, float(np.max(np.abs(cv)))) for _, cv in coefs
        )
        if hermitian:
            n_rows = m * m

            def emit(mat, put):
                r = 0
                for i in range(m):
                    put(r, mat[i, i].real)
                    r += 1
                    for j in range(i + 1, m):
                        put(r, mat[i, j].real)
                        put(r + 1, mat[i, j].imag)
                        r += 2
        else:
            n_rows = 2 * m * m

            def emit(mat, put):
                flat = mat.reshape(-1)
                for r, v in enumerate(flat):
                    put(r, v.real)
                    put(m * m + r, v.imag)

        for k, cv in coefs:
            def put(r, x, k=k):
                if x != 0.0:
                    a_vals.append(x)
                    a_rows.append(row + r)
                    a_cols.append(k)
            emit(cv, put)
        b_block = np.zeros(n_rows)

        def put_b(r, x):
            b_block[r] = x
        emit(-resid, put_b)
        b_list.append(b_block)
        eq_blocks.append(_EqBlock(idx, eq.tag, m, hermitian, row, n_rows))
        row += n_rows
    b = np.concatenate(b_list) if b_list else np.zeros(0)
    a_coo = (np.array(a_vals), np.array(a_rows, dtype=int), np.array(a_cols, dtype=int), row)

    # ---- cones: 'l' rows first, then realified PSD blocks
    g_vals, g_rows, g_cols, h_list = [], [], [], []
    n_lin = len(problem._nonneg)
    for i, nn in enumerate(problem._nonneg):
        const, coefs = coefficients(lambda v, fn=nn.fn: np.atleast_2d(complex(_scalar(fn(v)))), nn.vars)
        for k, val in coefs:
            g_vals.append(-_scalar(val))
            g_rows.append(i)
            g_cols.append(k)
        h_list.append(np.array([_scalar(const)]))

    grow = n_lin
    psd_blocks: list[_PsdBlock] = []
    for idx, ps in enumerate(problem._psd):
        const, coefs = coefficients(ps.fn, ps.vars)
        m = const.shape[0]
        if const.shape != (m, m):
            raise ValueError(f"PSD constraint {ps.tag or idx} is not square: shape {const.shape}")
        if hermiticity_defect(const) > 1e-9 * max(1.0, float(np.max(np.abs(const))) if const.size else 0.0):
            raise ValueError(f"PSD constraint {ps.tag or idx} has a non-Hermitian constant term")
        two_m = 2 * m
        for k, cv in coefs:
            if hermiticity_defect(cv) > 1e-9 * max(1.0, float(np.max(np.abs(cv)))):
                raise ValueError(f"PSD constraint {ps.tag or idx} is not Hermitian-valued")
            r = realify_hermitian(hermitian_part(cv))
            nz_i, nz_j = np.nonzero(r)
            for ii, jj in zip(nz_i, nz_j):
                g_vals.append(-r[ii, jj])
                g_rows.append(grow + jj * two_m + ii)  # column-major within the block
                g_cols.append(k)
        h_block = realify_hermitian(hermitian_part(const))
        h_list.append(h_block.reshape(-1, order="F"))
        psd_blocks.append(_PsdBlock(idx, ps.tag, m, two_m, grow))
        grow += two_m * two_m
    h = np.concatenate(h_list) if h_list else np.zeros(0)
    g_coo = (np.array(g_vals), np.array(g_rows, dtype=int), np.array(g_cols, dtype=int), grow)

    return CompiledProblem(
        n_params=n_params, var_offset=var_offset, c=c, obj_offset=obj_offset, sense=sense,
        a_coo=a_coo, b=b, g_coo=g_coo, h=h, n_lin=n_lin,
        eq_blocks=eq_blocks, psd_blocks=psd_blocks,
    )


# ---------------------------------------------------------------- solutions

@dataclass
class SdpSolution:
    status: SolveStatus
    objective_value: float | None
    primal: dict[HermitianVar, np.ndarray]
    eq_duals: list[np.ndarray | None]
    eq_tags: list
    psd_duals: list[np.ndarray | None]
    nonneg_duals: np.ndarray | None
    is_certificate: bool
    solver_tolerance: float
    psd_block_dims: list[tuple[int, int]]
    info: dict = field(default_factory=dict)

    def value(self, var: HermitianVar) -> np.ndarray:
        return self.primal[var]

    def equality_dual(self, tag) -> np.ndarray:
        for t, d in zip(self.eq_tags, self.eq_duals):
            if t == tag:
                if d is None:
                    raise ValueError(f"no dual available for constraint {tag!r}")
                return d
        raise KeyError(f"no equality constraint tagged {tag!r}")


def dual_witness(solution: SdpSolution, tags) -> list[np.ndarray]:
    """Hermitian dual matrices for the tagged equality constraints.

    Available for OPTIMAL solutions (Lagrange multipliers) and INFEASIBLE
    ones (Farkas certificate); the pairing is tr[F · expr] in both cases.
    """
    if solution.status not in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE):
        raise ValueError(f"duals unavailable for status {solution.status.value}")
    return [solution.equality_dual(t) for t in tags]


def _eq_duals_from_y(compiled: CompiledProblem, y: np.ndarray) -> list[np.ndarray]:
    """Reassemble per-constraint Hermitian dual matrices from stacked row duals."""
    out = []
    for blk in compiled.eq_blocks:
        yb = y[blk.row_start: blk.row_start + blk.n_rows]
        m = blk.dim
        f = np.zeros((m, m), dtype=complex)
        if blk.hermitian:
            r = 0
            for i in range(m):
                f[i, i] = yb[r]
                r += 1
                for j in range(i + 1, m):
                    f[i, j] = (yb[r] + 1j * yb[r + 1]) / 2.0
                    f[j, i] = np.conj(f[i, j])
                    r += 2
        else:
            re = yb[: m * m].reshape(m, m)
            im = yb[m * m:].reshape(m, m)
            y_c = re + 1j * im
            # functional Re tr[E Y†] equals tr[F E] on Hermitian-valued E
            f = (y_c + y_c.conj().T) / 2.0
        out.append(f)
    return out


def _psd_duals_from_z(compiled: CompiledProblem, z: np.ndarray) -> list[np.ndarray]:
    """Complex cone duals Z with tr[Z·E] = <z_block, realify(E)> for Hermitian E."""
    out = []
    for blk in compiled.psd_blocks:
        two_m = blk.real_dim
        zb = z[blk.row_start: blk.row_start + two_m * two_m].reshape(two_m, two_m, order="F")
        m = blk.dim
        p, q, r = zb[:m, :m], zb[:m, m:], zb[m:, m:]
        out.append((p + r) + 1j * (q.T - q))
    return out


def _svec_operator(m: int) -> scipy.sparse.csr_matrix:
    """Map from a column-major m×m matrix to its packed upper triangle.

    Upper triangle in column-major order with off-diagonal entries scaled by
    √2, the layout the triangular PSD cone expects; symmetrizes as it packs.
    """
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    s = np.sqrt(0.5)
    idx = 0
    for j in range(m):
        for i in range(j):
            rows += [idx, idx]
            cols += [j * m + i, i * m + j]
            vals += [s, s]
            idx += 1
        rows.append(idx)
        cols.append(j * m + j)
        vals.append(1.0)
        idx += 1
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(m * (m + 1) // 2, m * m))


def _unsvec(packed: np.ndarray, m: int) -> np.ndarray:
    """Packed upper triangle back to a full matrix, raveled column-major."""
    full = np.zeros((m, m))
    s = np.sqrt(0.5)
    idx = 0
    for j in range(m):
        for i in range(j):
            full[i, j] = full[j, i] = packed[idx] * s
            idx += 1
        full[j, j] = packed[idx]
        idx += 1
    return full.ravel(order="F")


# ---------------------------------------------------------------- solving

def _extract_primal(compiled: CompiledProblem, x: np.ndarray) -> dict[HermitianVar, np.ndarray]:
    out = {}
    for v, off in compiled.var_offset.items():
        out[v] = params_to_hermitian(v.dim, x[off: off + v.dim * v.dim])
    return out


def _prune_rows(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Select a maximal independent subset of equality rows (pivoted QR of Aᵀ).

    Also returns a defect vector that is zero iff the dropped rows are
    consistent with the kept ones: interpolate the kept rows exactly, then
    evaluate the dependent rows. This detects inconsistency but is not an
    orthogonal residual; Farkas directions are recomputed by the caller.
    """
    _, r, piv = scipy.linalg.qr(a.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(diag > RANK_TOL * diag[0]))
    keep = np.sort(piv[:rank])
    pb = b[piv]
    defect_perm = -pb.copy()
    if rank:
        u = scipy.linalg.solve_triangular(r[:rank, :rank].T, pb[:rank], lower=True)
        defect_perm[:rank] = 0.0
        defect_perm[rank:] = r[:rank, rank:].T @ u - pb[rank:]
    defect = np.zeros_like(b)
    defect[piv] = defect_perm
    return keep, defect


def solve(problem: SdpProblem, tol: float = DEFAULT_TOL, retries: int = 2) -> SdpSolution:
    """Compile and solve.

    On numerical failure, retries on the homogeneous self-dual backend
    (robust when every feasible point has singular cone blocks, where the
    primary solver's Cholesky factorization breaks down or diverges), then
    once more on the primary with an indefinite KKT factorization at 10×
    looser tolerance.
    """
    compiled = compile_problem(problem)
    attempts = [(tol, "conelp", None), (tol, "clarabel", None), (10.0 * tol, "conelp", "ldl")]
    sol = _solve_compiled(compiled, tol)
    for atol, backend, kkt in attempts[1:retries + 1]:
        if sol.status is not SolveStatus.NUMERICAL_FAILURE:
            break
        sol = _solve_compiled(compiled, atol, kktsolver=kkt, backend=backend)
    return sol


def _solve_compiled(compiled: CompiledProblem, tol: float, kktsolver: str | None = None,
                    backend: str = "conelp") -> SdpSolution:
    n = compiled.n_params
    av, ar, ac, a_nrows = compiled.a_coo
    gv, gr, gc, g_nrows = compiled.g_coo

    def make_solution(status, obj=None, primal=None, eq_duals=None, psd_duals=None,
                      nonneg_duals=None, cert=False, info=None):
        return SdpSolution(
            status=status, objective_value=obj, primal=primal or {},
            eq_duals=eq_duals if eq_duals is not None else [None] * len(compiled.eq_blocks),
            eq_tags=[blk.tag for blk in compiled.eq_blocks],
            psd_duals=psd_duals if psd_duals is not None else [None] * len(compiled.psd_blocks),
            nonneg_duals=nonneg_duals, is_certificate=cert, solver_tolerance=tol,
            psd_block_dims=compiled.psd_block_dims, info=info or {},
        )

    # Parameters that no constraint touches: unbounded if the objective sees
    # them, otherwise fixed to zero and removed.
    used = np.zeros(n, dtype=bool)
    used[ac] = True
    used[gc] = True
    c_full = compiled.sense * compiled.c
    if np.any(~used & (np.abs(c_full) > 0)):
        return make_solution(SolveStatus.UNBOUNDED)
    keep_cols = np.flatnonzero(used)
    col_map = -np.ones(n, dtype=int)
    col_map[keep_cols] = np.arange(keep_cols.size)
    n_red = int(keep_cols.size)

    def expand(x_red: np.ndarray) -> np.ndarray:
        x = np.zeros(n)
        x[keep_cols] = x_red
        return x

    if n_red == 0:
        # Constant problem: feasibility is decided by the constant terms.
        if (a_nrows and np.max(np.abs(compiled.b)) > LINEAR_FEAS_TOL):
            return make_solution(SolveStatus.INFEASIBLE, cert=True)
        feasible = True
        for blk in compiled.psd_blocks:
            hb = compiled.h[blk.row_start: blk.row_start + blk.real_dim ** 2]
            w = np.linalg.eigvalsh(hb.reshape(blk.real_dim, blk.real_dim, order="F"))
            feasible &= bool(w[0] >= -1e-9)
        feasible &= bool(np.all(compiled.h[: compiled.n_lin] >= -1e-9))
        if not feasible:
            return make_solution(SolveStatus.INFEASIBLE, cert=True)
        return make_solution(
            SolveStatus.OPTIMAL, obj=compiled.obj_offset,
            primal=_extract_primal(compiled, np.zeros(n)),
            eq_duals=[np.zeros((blk.dim, blk.dim), dtype=complex) for blk in compiled.eq_blocks],
            psd_duals=[np.zeros((blk.dim, blk.dim), dtype=complex) for blk in compiled.psd_blocks],
        )

    # Equality pruning and linear-consistency gate.
    y_scatter = None
    if a_nrows:
        a_dense = np.zeros((a_nrows, n_red))
        np.add.at(a_dense, (ar, col_map[ac]), av)
        keep_rows, defect = _prune_rows(a_dense, compiled.b)
        scale = max(1.0, float(np.max(np.abs(compiled.b))) if compiled.b.size else 0.0)
        if float(np.max(np.abs(defect))) > LINEAR_FEAS_TOL * scale:
            # Farkas direction from the orthogonal least-squares residual:
            # r = A x_ls - b has Aᵀr = 0 and rᵀb = -|r|², so y = -r/(rᵀb)
            # annuls A while pairing to bᵀy = -1.
            x_ls = np.linalg.lstsq(a_dense, compiled.b, rcond=None)[0]
            resid = a_dense @ x_ls - compiled.b
            y = -resid / float(resid @ compiled.b)
            eq_duals = _eq_duals_from_y(compiled, y)
            return make_solution(SolveStatus.INFEASIBLE, eq_duals=eq_duals,
                                 psd_duals=[np.zeros((blk.dim, blk.dim), dtype=complex)
                                            for blk in compiled.psd_blocks],
                                 cert=True, info={"linear_residual": float(np.max(np.abs(resid)))})
        a_kept = a_dense[keep_rows]
        b_kept = compiled.b[keep_rows]
        y_scatter = keep_rows
    else:
        a_kept = np.zeros((0, n_red))
        b_kept = np.zeros(0)

    def scatter_y(y_red):
        y = np.zeros(a_nrows)
        if y_scatter is not None and y_red is not None:
            y[y_scatter] = np.asarray(y_red).ravel()
        return y

    g_red_cols = col_map[gc]
    if backend == "clarabel":
        return _solve_clarabel(compiled, tol, c_full[keep_cols], a_kept, b_kept,
                               (gv, gr, g_red_cols, g_nrows), n_red,
                               make_solution, expand, scatter_y)

    dims = {"l": compiled.n_lin, "q": [], "s": [blk.real_dim for blk in compiled.psd_blocks]}
    cvx_c = _cvxmat(c_full[keep_cols])
    cvx_g = _cvxspmat(gv.tolist(), gr.tolist(), g_red_cols.tolist(), (g_nrows, n_red)) \
        if gv.size else _cvxspmat([], [], [], (g_nrows, n_red))
    cvx_h = _cvxmat(compiled.h)
    cvx_a = _cvxmat(a_kept) if a_kept.shape[0] else None
    cvx_b = _cvxmat(b_kept) if a_kept.shape[0] else None

    options = {
        "show_progress": False,
        "abstol": tol,
        "reltol": max(tol, 1e-9),
        "feastol": tol,
        "maxiters": 30,
    }
    try:
        raw = _cvxsolvers.conelp(cvx_c, cvx_g, cvx_h, dims, cvx_a, cvx_b,
                                 kktsolver=kktsolver, options=options)
    except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
        return make_solution(SolveStatus.NUMERICAL_FAILURE, info={"error": str(exc)})

    status = raw["status"]
    info = {k: raw.get(k) for k in ("iterations", "gap", "relative gap",
                                    "primal infeasibility", "dual infeasibility")}

    if status == "unknown":
        pinf, dinf = raw.get("primal infeasibility"), raw.get("dual infeasibility")
        relgap = raw.get("relative gap")
        near = (pinf is not None and dinf is not None
                and pinf <= 100 * tol and dinf <= 100 * tol
                and (relgap is None or relgap <= max(1e3 * tol, 1e-6)))
        if near and raw["x"] is not None:
            status = "optimal"
            info["loosened"] = max(float(pinf), float(dinf))
        else:
            return make_solution(SolveStatus.NUMERICAL_FAILURE, info=info)

    if status == "optimal":
        x = expand(np.asarray(raw["x"]).ravel())
        y = scatter_y(raw["y"])
        z = np.asarray(raw["z"]).ravel() if raw["z"] is not None else np.zeros(g_nrows)
        obj = compiled.sense * (float(c_full[keep_cols] @ np.asarray(raw["x"]).ravel())) + compiled.obj_offset
        return make_solution(
            SolveStatus.OPTIMAL, obj=obj, primal=_extract_primal(compiled, x),
            eq_duals=_eq_duals_from_y(compiled, compiled.sense * y),
            psd_duals=_psd_duals_from_z(compiled, compiled.sense * z),
            nonneg_duals=compiled.sense * z[: compiled.n_lin] if compiled.n_lin else None,
            info=info)

    if status == "primal infeasible":
        y = scatter_y(raw["y"])
        z = np.asarray(raw["z"]).ravel()
        return make_solution(
            SolveStatus.INFEASIBLE, eq_duals=_eq_duals_from_y(compiled, y),
            psd_duals=_psd_duals_from_z(compiled, z),
            nonneg_duals=z[: compiled.n_lin] if compiled.n_lin else None,
            cert=True, info=info)

    if status == "dual infeasible":
        x = expand(np.asarray(raw["x"]).ravel())
        return make_solution(SolveStatus.UNBOUNDED,
                             primal=_extract_primal(compiled, x), info=info)

    return make_solution(SolveStatus.NUMERICAL_FAILURE, info=info)


def _solve_clarabel(compiled: CompiledProblem, tol: float, c_red: np.ndarray,
                    a_kept: np.ndarray, b_kept: np.ndarray, g_coo_red: tuple,
                    n_red: int, make_solution, expand, scatter_y) -> SdpSolution:
    """Rescue backend: the same reduced cone program on Clarabel.

    Everything (equalities, nonnegative rows, PSD rows) stacks into one
    `Ax + s = b, s ∈ K` system; PSD rows are repacked from full column-major
    layout to the scaled-triangle form its cone uses. Duals come back in
    the stacked slack order with the same orientation as the primary
    solver's (y, z), so the downstream normalization is shared.
    """
    gv, gr, g_red_cols, g_nrows = g_coo_red
    g_sp = scipy.sparse.csr_matrix((gv, (gr, g_red_cols)), shape=(g_nrows, n_red))
    p_rows = a_kept.shape[0]
    n_lin = compiled.n_lin

    rows = [scipy.sparse.csr_matrix(a_kept), g_sp[:n_lin]]
    rhs = [b_kept, compiled.h[:n_lin]]
    cones = []
    if p_rows:
        cones.append(clarabel.ZeroConeT(p_rows))
    if n_lin:
        cones.append(clarabel.NonnegativeConeT(n_lin))
    for blk in compiled.psd_blocks:
        pack = _svec_operator(blk.real_dim)
        sl = slice(blk.row_start, blk.row_start + blk.real_dim ** 2)
        rows.append(pack @ g_sp[sl])
        rhs.append(pack @ compiled.h[sl])
        cones.append(clarabel.PSDTriangleConeT(blk.real_dim))

    a_cl = scipy.sparse.vstack(rows, format="csc")
    b_cl = np.concatenate(rhs)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = max(tol, 1e-9)
    settings.tol_feas = tol
    try:
        solver = clarabel.DefaultSolver(
            scipy.sparse.csc_matrix((n_red, n_red)), c_red, a_cl, b_cl, cones, settings)
        res = solver.solve()
    except Exception as exc:
        return make_solution(SolveStatus.NUMERICAL_FAILURE,
                             info={"solver": "clarabel", "error": str(exc)})

    st = res.status
    stat = clarabel.SolverStatus
    info = {"solver": "clarabel", "iterations": res.iterations}

    z_all = np.asarray(res.z, dtype=float)
    y_red = z_all[:p_rows]
    z_full = np.zeros(g_nrows)
    z_full[:n_lin] = z_all[p_rows: p_rows + n_lin]
    off = p_rows + n_lin
    for blk in compiled.psd_blocks:
        m = blk.real_dim
        width = m * (m + 1) // 2
        z_full[blk.row_start: blk.row_start + m * m] = _unsvec(z_all[off: off + width], m)
        off += width

    if st in (stat.Solved, stat.AlmostSolved):
        if st == stat.AlmostSolved:
            info["loosened"] = True
        x_red = np.asarray(res.x, dtype=float)
        x = expand(x_red)
        y = scatter_y(y_red)
        obj = compiled.sense * float(c_red @ x_red) + compiled.obj_offset
        return make_solution(
            SolveStatus.OPTIMAL, obj=obj, primal=_extract_primal(compiled, x),
            eq_duals=_eq_duals_from_y(compiled, compiled.sense * y),
            psd_duals=_psd_duals_from_z(compiled, compiled.sense * z_full),
            nonneg_duals=compiled.sense * z_full[:n_lin] if n_lin else None,
            info=info)

    if st in (stat.PrimalInfeasible, stat.AlmostPrimalInfeasible):
        # Farkas certificate: Aᵀz = 0 with bᵀz < 0; rescale to pair to -1.
        pairing = float(b_cl @ z_all)
        scale = -1.0 / pairing if pairing < 0 else 1.0
        return make_solution(
            SolveStatus.INFEASIBLE, eq_duals=_eq_duals_from_y(compiled, scale * scatter_y(y_red)),
            psd_duals=_psd_duals_from_z(compiled, scale * z_full),
            nonneg_duals=scale * z_full[:n_lin] if n_lin else None,
            cert=True, info=info)

    if st in (stat.DualInfeasible, stat.AlmostDualInfeasible):
        x = expand(np.asarray(res.x, dtype=float))
        return make_solution(SolveStatus.UNBOUNDED,
                             primal=_extract_primal(compiled, x), info=info)

    info["status"] = str(st)
    return make_solution(SolveStatus.NUMERICAL_FAILURE, info=info)


# ---------------------------------------------------------------- text dump

def write_sdpa(problem: SdpProblem, path: str) -> None:
    """Dump the compiled realified problem in sparse SDPA (.dat-s) layout.

    Equality rows become paired ± entries in a diagonal block, since the
    format has no equality section. Debugging aid; not used by the solver.
    """
    compiled = compile_problem(problem)
    av, ar, ac, a_nrows = compiled.a_coo
    gv, gr, gc, g_nrows = compiled.g_coo
    n = compiled.n_params

    blocks: list[int] = []
    if compiled.n_lin:
        blocks.append(-compiled.n_lin)
    for blk in compiled.psd_blocks:
        blocks.append(blk.real_dim)
    if a_nrows:
        blocks.append(-2 * a_nrows)
    if not blocks:
        blocks.append(1)

    lines = [f'"generated by telecert: {n} parameters"', f"{n}", f"{len(blocks)}",
             " ".join(str(bdim) for bdim in blocks),
             " ".join(f"{compiled.sense * ci:.17g}" for ci in compiled.c)]

    entries: list[str] = []

    def add(mat_no, blk_no, i, j, v):
        if v != 0.0:
            entries.append(f"{mat_no} {blk_no} {i + 1} {j + 1} {v:.17g}")

    lin_block = 1 if compiled.n_lin else 0
    psd_block_start = lin_block + 1
    eq_block = len(blocks)

    # constraint sense in SDPA: Σ x_i F_i - F_0 ⪰ 0, so F_0 = -h-part, F_i = -G-part
    for v, r, k in zip(gv, gr, gc):
        if r < compiled.n_lin:
            add(k + 1, lin_block, int(r), int(r), -v)
        else:
            for bi, blk in enumerate(compiled.psd_blocks):
                if blk.row_start <= r < blk.row_start + blk.real_dim ** 2:
                    local = int(r - blk.row_start)
                    jj, ii = divmod(local, blk.real_dim)
                    if ii <= jj:
                        add(k + 1, psd_block_start + bi, ii, jj, -v)
                    break
    for r in range(compiled.n_lin):
        add(0, lin_block, r, r, -compiled.h[r])
    for bi, blk in enumerate(compiled.psd_blocks):
        hb = compiled.h[blk.row_start: blk.row_start + blk.real_dim ** 2]
        mat = hb.reshape(blk.real_dim, blk.real_dim, order="F")
        for ii in range(blk.real_dim):
            for jj in range(ii, blk.real_dim):
                add(0, psd_block_start + bi, ii, jj, -mat[ii, jj])
    if a_nrows:
        for v, r, k in zip(av, ar, ac):
            add(k + 1, eq_block, int(r), int(r), v)
            add(k + 1, eq_block, int(a_nrows + r), int(a_nrows + r), -v)
        for r, bv in enumerate(compiled.b):
            add(0, eq_block, r, r, bv)
            add(0, eq_block, a_nrows + r, a_nrows + r, -bv)

    with open(path, "w") as fh:
        fh.write("\n".join(lines + entries) + "\n")
