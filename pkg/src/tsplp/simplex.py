"""Revised simplex for ``min c.x, A x = b`` with nonnegative or free variables.

The basis is held as a sparse LU factorization (SuperLU through scipy) plus a
product-form eta file that is folded back in every ``refactor_interval``
pivots.  Phase 1 starts from an artificial (or unit-slack) basis.  Artificials
still basic after phase 1 belong to redundant rows and are pinned at zero in
phase 2 by letting them block any pivot that would move them.

Two entry points solve a :class:`~tsplp.model.SparseLpModel`:

* :func:`solve_primal` runs the simplex on the model itself;
* :func:`solve_dual` forms the dual LP explicitly (free row multipliers,
  one inequality per column) and runs the same simplex on it, then maps the
  result back to primal values.

``arithmetic="exact"`` re-solves the final basis in rational arithmetic and
continues with exact Bland pivots if the floating basis was not truly optimal.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Hashable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .model import SparseLpModel

log = logging.getLogger(__name__)

POLISH_PIVOTS = 500

NONNEG, FREE, ARTIFICIAL = 0, 1, 2


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


class NumericalFailure(RuntimeError):
    pass


class NotOptimalError(ValueError):
    pass


@dataclass
class SolverOptions:
    form: str = "primal"
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    pivot_rule: str = "dantzig"     # "dantzig" (falls back to Bland) or "bland"
    max_iter: int = 1_000_000
    refactor_interval: int = 64
    arithmetic: str = "float"       # or "exact"
    degenerate_fallback: int = 50
    log_every: int = 1000
    count_tours: bool = True

    def __post_init__(self):
        if self.form not in ("primal", "dual"):
            raise ValueError(f"form must be primal or dual, got {self.form!r}")
        if self.pivot_rule not in ("dantzig", "bland"):
            raise ValueError(f"unknown pivot rule {self.pivot_rule!r}")
        if self.arithmetic not in ("float", "exact"):
            raise ValueError(f"unknown arithmetic {self.arithmetic!r}")
        if self.feas_tol <= 0 or self.opt_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter <= 0 or self.refactor_interval <= 0:
            raise ValueError("iteration cap and refactorization interval must be positive")


@dataclass
class LpSolution:
    status: Status
    form: str
    x: np.ndarray | None = None
    objective: float | Fraction | None = None
    duals: np.ndarray | None = None
    basis: list[int] = field(default_factory=list)
    iterations: int = 0
    phase1_iterations: int = 0
    tours_examined: int | None = None
    tours_seen: list = field(default_factory=list)
    exact: bool = False
    exact_pivots: int = 0
    wall_time: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


# -- core ---------------------------------------------------------------------

@dataclass
class _CoreResult:
    status: Status
    x: np.ndarray          # structural values
    y: np.ndarray          # row multipliers for the caller's row signs
    basis: np.ndarray      # column indices; >= n_struct means artificial of row (j - n_struct)
    iterations: int
    phase1_iterations: int


def _peel(B: sp.csc_matrix):
    """Row/column orders putting ``B`` in block upper-triangular form.

    Column singletons are pivoted first and row singletons last; what is
    left is the bump, the only part that needs a general LU.  Singletons are
    removed in rounds: the pivots found in one round never share a row or a
    column, so each round can be taken in any order.
    """
    m = B.shape[0]
    Bc = B.tocsc()
    ent_col = np.repeat(np.arange(m), np.diff(Bc.indptr))
    ent_row = Bc.indices
    row_on = np.ones(m, dtype=bool)
    col_on = np.ones(m, dtype=bool)
    front_r, front_c, back_r, back_c = [], [], [], []

    def rounds(pivot_side, other_side, on_p, on_o, out_p, out_o):
        while True:
            live = row_on[ent_row] & col_on[ent_col]
            cnt = np.bincount(pivot_side[live], minlength=m)
            single = on_p & (cnt == 1)
            if not single.any():
                return
            sel = live & single[pivot_side]
            p_ids, o_ids = pivot_side[sel], other_side[sel]
            o_ids, first = np.unique(o_ids, return_index=True)  # one pivot per partner
            p_ids = p_ids[first]
            on_p[p_ids] = False
            on_o[o_ids] = False
            out_p.append(p_ids)
            out_o.append(o_ids)

    rounds(ent_col, ent_row, col_on, row_on, front_c, front_r)
    rounds(ent_row, ent_col, row_on, col_on, back_r, back_c)

    if np.count_nonzero(row_on) != np.count_nonzero(col_on):
        raise NumericalFailure("basis is structurally singular")
    empty = [np.zeros(0, dtype=np.int64)]
    pr = np.concatenate(empty + front_r + [np.flatnonzero(row_on)] + back_r[::-1]).astype(np.int64)
    pc = np.concatenate(empty + front_c + [np.flatnonzero(col_on)] + back_c[::-1]).astype(np.int64)
    k1 = sum(len(a) for a in front_r)
    return pr, pc, k1, k1 + int(np.count_nonzero(row_on))


def _lu(M: sp.csc_matrix, ordering: str):
    try:
        return splu(M, permc_spec=ordering, options={"SymmetricMode": False})
    except RuntimeError as exc:  # exactly singular
        raise NumericalFailure(f"basis factorization failed: {exc}") from exc


class _Factor:
    """``B^{-1}`` as a block-triangular LU followed by product-form etas.

    After singleton peeling the permuted basis reads
    ``[[T1, X, Y], [0, K, Z], [0, 0, T3]]`` with ``T1`` and ``T3`` triangular,
    so only the bump ``K`` is given a fill-reducing ordering.
    """

    def __init__(self, B: sp.csc_matrix):
        pr, pc, k1, k2 = _peel(B)
        self.m = B.shape[0]
        self.pr, self.pc, self.k1, self.k2 = pr, pc, k1, k2
        M = sp.csc_matrix(B[pr][:, pc])
        s1, sk, s3 = slice(0, k1), slice(k1, k2), slice(k2, self.m)
        self.blocks = []
        for s, ordering in ((s1, "NATURAL"), (sk, "COLAMD"), (s3, "NATURAL")):
            n = s.stop - s.start
            self.blocks.append(_lu(sp.csc_matrix(M[s, s]), ordering) if n else None)
        self.X = sp.csr_matrix(M[s1, k1:])   # coupling of T1 rows to later columns
        self.Z = sp.csr_matrix(M[sk, s3])    # coupling of K rows to T3 columns
        self.XT = self.X.T.tocsr()
        self.ZT = self.Z.T.tocsr()
        self.etas: list[tuple[int, np.ndarray, np.ndarray, float]] = []

    def _solve(self, v: np.ndarray) -> np.ndarray:
        k1, k2 = self.k1, self.k2
        vp = v[self.pr]
        x = np.empty(self.m)
        f1, fk, f3 = self.blocks
        if f3 is not None:
            x[k2:] = f3.solve(vp[k2:])
        if fk is not None:
            x[k1:k2] = fk.solve(vp[k1:k2] - self.Z @ x[k2:])
        if f1 is not None:
            x[:k1] = f1.solve(vp[:k1] - self.X @ x[k1:])
        out = np.empty(self.m)
        out[self.pc] = x
        return out

    def _solve_t(self, v: np.ndarray) -> np.ndarray:
        k1, k2 = self.k1, self.k2
        vp = v[self.pc]
        u = np.empty(self.m)
        f1, fk, f3 = self.blocks
        if f1 is not None:
            u[:k1] = f1.solve(vp[:k1], trans="T")
        rest = vp[k1:] - self.XT @ u[:k1]
        if fk is not None:
            u[k1:k2] = fk.solve(rest[: k2 - k1], trans="T")
        if f3 is not None:
            u[k2:] = f3.solve(rest[k2 - k1:] - self.ZT @ u[k1:k2], trans="T")
        out = np.empty(self.m)
        out[self.pr] = u
        return out

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self._solve(v)
        for p, idx, vals, dp in self.etas:
            wp = w[p] / dp
            if wp != 0.0:
                w[idx] -= wp * vals
            w[p] = wp
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        u = v.copy()
        for p, idx, vals, dp in reversed(self.etas):
            u[p] = (u[p] - vals @ u[idx]) / dp
        return self._solve_t(u)

    def push(self, p: int, d: np.ndarray) -> None:
        """Record the pivot on row ``p`` with entering column ``d = B^{-1} a_q``."""
        idx = np.flatnonzero(d)
        idx = idx[idx != p]
        self.etas.append((p, idx, d[idx].copy(), float(d[p])))


def _simplex(A: sp.csc_matrix, b: np.ndarray, c: np.ndarray, kinds: np.ndarray,
             opts: SolverOptions, vertex_hook: Callable[[np.ndarray], None] | None = None,
             tag: str = "") -> _CoreResult:
    m, n = A.shape
    A = sp.csc_matrix(A, dtype=float)
    sign = np.where(b < 0, -1.0, 1.0)
    As = sp.csc_matrix(sp.diags(sign) @ A)
    bs = b * sign

    # initial basis: a positive unit column of a nonnegative variable where
    # one exists, otherwise the row's artificial
    basis = np.full(m, -1, dtype=np.int64)
    As_coo = As.tocoo()
    col_count = np.bincount(As_coo.col, minlength=n)
    for r, j, v in zip(As_coo.row, As_coo.col, As_coo.data):
        if col_count[j] == 1 and kinds[j] == NONNEG and v > 0 and basis[r] < 0:
            basis[r] = j
    art_rows = np.flatnonzero(basis < 0)
    basis[art_rows] = n + art_rows

    Afull = sp.hstack([As, sp.identity(m, format="csc")], format="csc")
    AfullT = Afull.T.tocsr()
    N = n + m
    kind = np.concatenate([kinds, np.full(m, ARTIFICIAL)])
    in_basis = np.full(N, -1, dtype=np.int64)
    in_basis[basis] = np.arange(m)
    dead = np.zeros(N, dtype=bool)  # artificials that left the basis
    dead[n:] = True
    dead[basis[basis >= n]] = False

    c1 = np.zeros(N)
    c1[n:] = 1.0
    c2 = np.concatenate([c, np.zeros(m)])
    bscale = max(1.0, float(np.abs(bs).max(initial=0.0)))
    cscale = max(1.0, float(np.abs(c).max(initial=0.0)))

    def factor():
        B = Afull[:, basis]
        f = _Factor(sp.csc_matrix(B))
        return f, f.ftran(bs)

    def refined_duals(cb):
        # bases here can be ill-conditioned; two refinement steps bring the
        # reduced costs down to round-off before they are trusted
        BT = Afull[:, basis].T.tocsr()
        y = fac.btran(cb)
        for _ in range(2):
            y += fac.btran(cb - BT @ y)
        return y

    def refined_primal():
        Bm = Afull[:, basis]
        x = fac.ftran(bs)
        x += fac.ftran(bs - Bm @ x)
        return x

    fac, xB = factor()
    it = 0
    p1_its = 0
    phase = 1
    degenerate_run = 0
    bland = opts.pivot_rule == "bland"
    t0 = time.perf_counter()

    def infeasibility():
        arts = basis >= n
        return float(np.abs(xB[arts]).sum())

    def values() -> np.ndarray:
        x = np.zeros(N)
        x[basis] = xB
        return x

    status = None
    need_price = True
    devex = np.ones(N)
    # columns whose pricing turned out to be round-off; cleared on refactorization
    rejected = np.zeros(N, dtype=bool)
    # after phase 2 converges at the cost-scaled tolerance, pricing switches to
    # refined duals and the absolute tolerance for at most POLISH_PIVOTS pivots
    polishing = False
    polish_left = POLISH_PIVOTS
    while True:
        cost = c1 if phase == 1 else c2
        if need_price:
            y = refined_duals(cost[basis]) if polishing else fac.btran(cost[basis])
            d = cost - AfullT @ y
            d[basis] = 0.0
            need_price = False
        tol = opts.opt_tol * (1.0 if phase == 1 or polishing else cscale)
        elig = (in_basis < 0) & ~dead & ~rejected
        if phase == 2:
            elig &= kind != ARTIFICIAL
        cand_neg = elig & (d < -tol)
        cand_free = elig & (kind == FREE) & (d > tol)
        cand = cand_neg | cand_free
        feasible = phase == 1 and infeasibility() <= opts.feas_tol * bscale
        if feasible or not cand.any():
            # confirm with freshly computed reduced costs before stopping
            if not feasible and len(fac.etas) > 0:
                fac, xB = factor()
                need_price = True
                continue
            if phase == 1:
                if not feasible:
                    if rejected.any():
                        raise NumericalFailure("phase 1 stalled on round-off reduced costs")
                    status = Status.INFEASIBLE
                    break
                phase = 2
                p1_its = it
                degenerate_run = 0
                bland = opts.pivot_rule == "bland"
                need_price = True
                devex[:] = 1.0
                if vertex_hook is not None:
                    vertex_hook(values()[:n])
                continue
            if not polishing:
                polishing = True
                need_price = True
                continue
            status = Status.OPTIMAL
            break
        if polishing:
            if polish_left == 0:
                log.warning("%s: reduced costs below -%.1e remain after %d polishing pivots",
                            tag, tol, POLISH_PIVOTS)
                status = Status.OPTIMAL
                break
            polish_left -= 1
        if it >= opts.max_iter:
            status = Status.ITERATION_LIMIT
            break

        # pricing: devex-weighted Dantzig, or Bland's smallest index
        if bland:
            q = int(np.flatnonzero(cand)[0])
        else:
            q = int(np.argmax(np.where(cand, d * d / devex, 0.0)))
        direction = 1.0 if d[q] < 0 else -1.0
        col = Afull[:, q].toarray().ravel()
        w = fac.ftran(col)
        alpha = direction * w

        # ratio test (Harris two-pass; Bland tie-breaking in Bland mode)
        ptol = 1e-7
        bkind = kind[basis]
        blocking = ((bkind == NONNEG) | ((bkind == ARTIFICIAL) & (phase == 1))) & (alpha > ptol)
        pinned = (bkind == ARTIFICIAL) & (phase == 2) & (np.abs(alpha) > ptol)
        if not blocking.any() and not pinned.any():
            if phase == 1:
                # the phase 1 objective is bounded below, so d[q] is round-off:
                # reprice from a fresh factor, then set the column aside
                if len(fac.etas) > 0:
                    fac, xB = factor()
                    rejected[:] = False
                else:
                    rejected[q] = True
                need_price = True
                continue
            status = Status.UNBOUNDED
            break
        if pinned.any():
            idx = np.flatnonzero(pinned)
            p = int(idx[np.argmax(np.abs(alpha[idx]))]) if not bland else int(idx[np.argmin(basis[idx])])
            theta = 0.0
        else:
            idx = np.flatnonzero(blocking)
            xb = np.maximum(xB[idx], 0.0)
            ratios = xb / alpha[idx]
            if bland:
                tmin = ratios.min()
                ties = idx[ratios <= tmin + 1e-12]
                p = int(ties[np.argmin(basis[ties])])
            else:
                bound = ((xb + opts.feas_tol) / alpha[idx]).min()
                sel = idx[ratios <= bound]
                p = int(sel[np.argmax(alpha[sel])])
            theta = max(float(xB[p]), 0.0) / alpha[p]

        # pivot row of B^{-1} A, for the reduced-cost and devex updates
        e = np.zeros(m)
        e[p] = 1.0
        row = AfullT @ fac.btran(e)
        piv = w[p]
        leaving = basis[p]
        step = d[q] / piv
        d -= step * row
        d[q] = 0.0
        wq = devex[q]
        np.maximum(devex, (row / piv) ** 2 * wq, out=devex)
        devex[leaving] = max(wq / (piv * piv), 1.0)
        if devex.max() > 1e8:
            devex[:] = 1.0
        if not np.isfinite(step) or abs(step) > 1e12:
            need_price = True

        if theta > 0.0:
            xB -= theta * alpha
        xB[p] = direction * theta
        in_basis[leaving] = -1
        if kind[leaving] == ARTIFICIAL:
            dead[leaving] = True
        basis[p] = q
        in_basis[q] = p
        fac.push(p, w)
        it += 1
        if polishing:
            need_price = True

        if theta * abs(alpha[p]) <= 1e-12:
            degenerate_run += 1
            if not bland and degenerate_run >= opts.degenerate_fallback:
                bland = True
        else:
            degenerate_run = 0
            bland = opts.pivot_rule == "bland"

        if len(fac.etas) >= opts.refactor_interval:
            fac, xB = factor()
            rejected[:] = False
            need_price = True
            resid = np.abs(Afull[:, basis] @ xB - bs).max(initial=0.0)
            if resid > 1e-6 * bscale:
                raise NumericalFailure(f"basis residual {resid:.3e} after refactorization")

        if vertex_hook is not None and phase == 2:
            vertex_hook(values()[:n])
        if opts.log_every and it % opts.log_every == 0:
            obj = float(cost[basis] @ xB)
            log.info("iter=%d phase=%d obj=%.12g infeas=%.3e elapsed=%.2f %s",
                     it, phase, obj, infeasibility(), time.perf_counter() - t0, tag)

    fac, _ = factor()
    xB = refined_primal()
    cost = c1 if phase == 1 else c2
    y = refined_duals(cost[basis])
    x = np.zeros(N)
    x[basis] = xB
    return _CoreResult(status, x[:n], y * sign, basis.copy(), it, p1_its if phase == 2 else it)


# -- model-level solves -----------------------------------------------------

def _tour_counter(model: SparseLpModel, opts: SolverOptions):
    from .decomposition import InconsistentPathError, decode_integral

    seen: dict[Hashable, None] = {}
    tol = 1e-7

    def hook(x: np.ndarray) -> None:
        if np.any(np.minimum(np.abs(x), np.abs(x - 1.0)) > tol):
            return
        try:
            tour = decode_integral(model, x, tol)
        except InconsistentPathError as exc:
            log.warning("integral vertex does not decode to a tour: %s", exc)
            return
        seen.setdefault(tour.order, None)

    return hook, seen


def solve_primal(model: SparseLpModel, opts: SolverOptions | None = None) -> LpSolution:
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    hook, seen = (None, {})
    if opts.count_tours:
        hook, seen = _tour_counter(model, opts)
    kinds = np.full(model.n_cols, NONNEG)
    core = _simplex(model.A.tocsc(), model.b, model.c, kinds, opts, hook, tag=f"{model.label} primal")
    sol = LpSolution(
        status=core.status, form="primal", x=core.x, duals=core.y,
        basis=[int(j) for j in core.basis], iterations=core.iterations,
        phase1_iterations=core.phase1_iterations,
        tours_examined=len(seen) if opts.count_tours else None,
        tours_seen=list(seen),
    )
    if core.status == Status.OPTIMAL:
        sol.objective = float(model.c @ core.x)
        if opts.arithmetic == "exact":
            _exactify(model, sol, opts)
    sol.wall_time = time.perf_counter() - t0
    return sol


def dual_program(model: SparseLpModel):
    """``max b.pi s.t. A^T pi <= c`` as ``min -b.pi, A^T pi + s = c, s >= 0``."""
    m, n = model.A.shape
    D = sp.hstack([model.A.T.tocsc(), sp.identity(n, format="csc")], format="csc")
    f = np.concatenate([-model.b, np.zeros(n)])
    kinds = np.concatenate([np.full(m, FREE), np.full(n, NONNEG)])
    return D, model.c.copy(), f, kinds


def solve_dual(model: SparseLpModel, opts: SolverOptions | None = None) -> LpSolution:
    opts = opts or SolverOptions(form="dual")
    t0 = time.perf_counter()
    D, g, f, kinds = dual_program(model)
    core = _simplex(D, g, f, kinds, opts, None, tag=f"{model.label} dual")
    m = model.n_rows
    sol = LpSolution(status=core.status, form="dual", iterations=core.iterations,
                     phase1_iterations=core.phase1_iterations)
    # a bounded dual means an optimal primal; map the statuses across
    if core.status == Status.UNBOUNDED:
        sol.status = Status.INFEASIBLE
    elif core.status == Status.INFEASIBLE:
        sol.status = Status.UNBOUNDED
    if core.status == Status.OPTIMAL:
        pi = core.x[:m]
        x = -core.y
        x[np.abs(x) < 1e-13] = 0.0
        sol.x = x
        sol.duals = pi
        sol.objective = float(model.b @ pi)
        # primal basis: columns whose dual slack is nonbasic
        basic_dual = set(int(j) for j in core.basis)
        sol.basis = [j for j in range(model.n_cols) if (m + j) not in basic_dual]
        if opts.arithmetic == "exact":
            _exactify(model, sol, opts)
    sol.wall_time = time.perf_counter() - t0
    return sol


def solve_lp(A, b, c, free=None, opts: SolverOptions | None = None) -> LpSolution:
    """``min c.x  s.t.  A x = b`` over a plain matrix; ``free`` marks unrestricted columns."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    A = sp.csc_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    kinds = np.full(A.shape[1], NONNEG)
    if free is not None:
        kinds[np.asarray(free)] = FREE
    core = _simplex(A, b, c, kinds, opts)
    sol = LpSolution(status=core.status, form="primal", x=core.x, duals=core.y,
                     basis=[int(j) for j in core.basis], iterations=core.iterations,
                     phase1_iterations=core.phase1_iterations)
    if core.status == Status.OPTIMAL:
        sol.objective = float(c @ core.x)
    sol.wall_time = time.perf_counter() - t0
    return sol


def solve(model: SparseLpModel, opts: SolverOptions | None = None) -> LpSolution:
    opts = opts or SolverOptions()
    return solve_dual(model, opts) if opts.form == "dual" else solve_primal(model, opts)


# -- exact re-solve -------------------------------------------------------------

def _qq_solve(cols: dict[int, dict[int, Fraction]], size: int, rhs: list, transpose: bool = False):
    """Solve ``B v = rhs`` (or ``B^T v = rhs``) over the rationals, B given by columns."""
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    rows: dict[int, dict[int, object]] = {}
    for j, col in cols.items():
        for i, v in col.items():
            if transpose:
                rows.setdefault(j, {})[i] = QQ(v.numerator, v.denominator)
            else:
                rows.setdefault(i, {})[j] = QQ(v.numerator, v.denominator)
    B = DomainMatrix(rows, (size, size), QQ)
    r = DomainMatrix({i: {0: QQ(v.numerator, v.denominator)} for i, v in enumerate(rhs) if v != 0},
                     (size, 1), QQ)
    try:
        sol = B.lu_solve(r)
    except Exception as exc:  # NonInvertibleMatrixError and friends
        raise NumericalFailure(f"exact basis solve failed: {exc}") from exc
    out = [Fraction(0)] * size
    for i, row in sol.to_sdm().items():
        v = row.get(0)
        if v is not None:
            out[i] = Fraction(int(v.numerator), int(v.denominator))
    return out


def _exact_columns(model: SparseLpModel):
    A = model.A_int.tocsc()
    cols: list[dict[int, Fraction]] = []
    for j in range(model.n_cols):
        lo, hi = A.indptr[j], A.indptr[j + 1]
        cols.append({int(i): Fraction(int(v)) for i, v in zip(A.indices[lo:hi], A.data[lo:hi])})
    return cols


def _exactify(model: SparseLpModel, sol: LpSolution, opts: SolverOptions) -> None:
    """Recompute the optimal basic solution exactly; repair with exact Bland pivots."""
    m, n = model.n_rows, model.n_cols
    cols = _exact_columns(model)
    art = [{i: Fraction(1)} for i in range(m)]
    cost = [Fraction(model.objective.get(j, 0)) for j in range(n)]
    b = [Fraction(int(v)) for v in model.rhs]

    def column(j):
        return cols[j] if j < n else art[j - n]

    basis = list(sol.basis)
    if sol.form == "dual":
        # complete the primal basis with artificials of rows it leaves uncovered
        basis = _complete_basis(model, basis)
    pivots = 0
    while True:
        bcols = {k: column(j) for k, j in enumerate(basis)}
        xB = _qq_solve(bcols, m, b)
        cB = [cost[j] if j < n else Fraction(0) for j in basis]
        y = _qq_solve(bcols, m, cB, transpose=True)
        in_b = set(basis)
        entering = None
        for j in range(n):
            if j in in_b:
                continue
            dj = cost[j] - sum(v * y[i] for i, v in cols[j].items())
            if dj < 0:
                entering = j
                break
        bad_rows = [k for k, j in enumerate(basis)
                    if xB[k] < 0 or (j >= n and xB[k] != 0)]
        if entering is None and not bad_rows:
            break
        if bad_rows:
            raise NumericalFailure("floating basis is not primal feasible in exact arithmetic")
        if pivots >= opts.max_iter:
            raise NumericalFailure("exact repair did not terminate")
        w = _qq_solve(bcols, m, [column(entering).get(i, Fraction(0)) for i in range(m)])
        best = None
        for k, wk in enumerate(w):
            j = basis[k]
            if j >= n and wk != 0:
                ratio = Fraction(0)
            elif wk > 0:
                ratio = xB[k] / wk
            else:
                continue
            key = (ratio, j)
            if best is None or key < best[0]:
                best = (key, k)
        if best is None:
            sol.status = Status.UNBOUNDED
            return
        basis[best[1]] = entering
        pivots += 1

    x = np.array([Fraction(0)] * n, dtype=object)
    for k, j in enumerate(basis):
        if j < n:
            x[j] = xB[k]
    sol.x = x
    sol.duals = np.array(y, dtype=object)
    sol.objective = sum((cost[j] * x[j] for j in range(n) if x[j] != 0), Fraction(0))
    sol.basis = basis
    sol.exact = True
    sol.exact_pivots = pivots


def _complete_basis(model: SparseLpModel, cols: list[int]) -> list[int]:
    """Pick a nonsingular basis among ``cols`` plus artificials (float rank test)."""
    m, n = model.n_rows, model.n_cols
    A = model.A.tocsc()
    chosen: list[int] = []
    # greedy: start with artificials everywhere, swap in structurals while
    # the basis stays nonsingular
    basis = [n + i for i in range(m)]
    Afull = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
    fac = _Factor(sp.csc_matrix(Afull[:, basis]))
    for j in cols:
        w = fac.ftran(A[:, j].toarray().ravel())
        cand = [k for k in range(m) if basis[k] >= n and abs(w[k]) > 1e-7]
        if not cand:
            continue
        k = max(cand, key=lambda k: abs(w[k]))
        basis[k] = j
        fac.push(k, w)
        chosen.append(j)
        if len(fac.etas) >= 64:
            fac = _Factor(sp.csc_matrix(Afull[:, basis]))
    return basis


# -- certification ------------------------------------------------------------------

@dataclass
class Certificate:
    primal_residual: float | Fraction
    negativity: float | Fraction
    dual_residual: float | Fraction
    complementarity: float | Fraction
    duality_gap: float | Fraction
    tol: float
    exact: bool

    @property
    def violations(self) -> list[str]:
        names = ("primal_residual", "negativity", "dual_residual", "complementarity", "duality_gap")
        return [k for k in names if getattr(self, k) > self.tol]

    @property
    def certified(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        conv = str if self.exact else float
        return {
            "certified": self.certified,
            "violations": self.violations,
            "primal_residual": conv(self.primal_residual),
            "negativity": conv(self.negativity),
            "dual_residual": conv(self.dual_residual),
            "complementarity": conv(self.complementarity),
            "duality_gap": conv(self.duality_gap),
            "tol": self.tol,
        }


def certify_optimality(model: SparseLpModel, sol: LpSolution, tol: float = 1e-8) -> Certificate:
    """Check primal feasibility, reduced-cost signs, complementarity and the gap."""
    if sol.status != Status.OPTIMAL or sol.x is None or sol.duals is None:
        raise NotOptimalError(f"cannot certify a {sol.status.value} solution")
    x, y = sol.x, sol.duals
    if x.dtype == object or y.dtype == object:
        return _certify_exact(model, x, y, tol)
    x = x.astype(float)
    y = y.astype(float)
    r = model.A @ x - model.b
    d = model.c - model.A.T @ y
    return Certificate(
        primal_residual=float(np.abs(r).max(initial=0.0)),
        negativity=float(max(0.0, -x.min(initial=0.0))),
        dual_residual=float(max(0.0, -d.min(initial=0.0))),
        complementarity=float(np.abs(x * d).max(initial=0.0)),
        duality_gap=float(abs(model.c @ x - model.b @ y)),
        tol=tol, exact=False,
    )


def _certify_exact(model, x, y, tol):
    x = [Fraction(v) for v in x]
    y = [Fraction(v) for v in y]
    pr = Fraction(0)
    for tag_row in range(model.n_rows):
        _, terms, rhs = model.row(tag_row)
        pr = max(pr, abs(sum((c * x[j] for j, c in terms), Fraction(0)) - rhs))
    At = model.A_int.T.tocsr()
    dr = comp = Fraction(0)
    for j in range(model.n_cols):
        lo, hi = At.indptr[j], At.indptr[j + 1]
        dj = Fraction(model.objective.get(j, 0)) - sum(
            (int(v) * y[int(i)] for i, v in zip(At.indices[lo:hi], At.data[lo:hi])), Fraction(0))
        dr = max(dr, -dj)
        comp = max(comp, abs(x[j] * dj))
    primal = sum((Fraction(v) * x[j] for j, v in model.objective.items()), Fraction(0))
    dual = sum((int(model.rhs[i]) * y[i] for i in range(model.n_rows)), Fraction(0))
    return Certificate(pr, max(Fraction(0), -min(x, default=Fraction(0))), dr, comp,
                       abs(primal - dual), tol, exact=True)
