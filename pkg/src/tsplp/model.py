"""Sparse equality-constrained LP over the lifted y/z variable space.

Rows come in ten families (see :data:`FAMILIES`).  Every row is an equality,
every variable is bounded below by zero only.  Coefficients are small
integers and the objective keeps the instance's exact costs, so the model can
be evaluated in exact arithmetic as well as in floating point.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from math import comb
from typing import Iterator, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .indexing import Arc, VariableSpace, variable_space
from .instance import Tour, TspInstance, stage_cost

FAMILIES = (
    "FlowInit",   # unit flow leaves stage 1
    "FlowCons",   # flow on a later arc comes from stage 1
    "LayerA",     # y(a1,a2) split over the arcs of a later stage
    "LayerB",     # y(a1,a3) split over the arcs of an intermediate stage
    "LayerC",     # y(a2,a3) split over the arcs of an earlier stage
    "ConnY",      # node conservation inside a y flow layer
    "ConnZpre",   # node conservation of z, swept stage before both fixed arcs
    "ConnZmid",   # ... swept stage between the fixed arcs
    "ConnZpost",  # ... swept stage after both fixed arcs
    "Visit",      # each flow layer visits every remaining city once
)


class ModelConsistencyError(RuntimeError):
    """A row referenced a column that the index space eliminated."""


class DimensionMismatchError(ValueError):
    pass


class RowTag(NamedTuple):
    family: str
    index: tuple[int, ...]

    def name(self) -> str:
        return "_".join([self.family, *map(str, self.index)])

    @classmethod
    def parse(cls, name: str) -> "RowTag":
        family, *idx = name.split("_")
        if family not in FAMILIES:
            raise ValueError(f"unknown row family in {name!r}")
        return cls(family, tuple(int(v) for v in idx))


Term = tuple[int, int]  # (column, coefficient)


class _RowBuilder:
    """Enumerates the rows of every family for one variable space."""

    def __init__(self, space: VariableSpace):
        self.s = space
        n = space.n
        self.last = n - 2
        self.stage = [a.r for a in space.arcs]
        self.later = [frozenset(space.later(k)) for k in range(len(space.arcs))]
        self.aid = space.arc_id

    # strict column lookups: a miss here is a transcription bug, never skipped
    def y(self, k: int, m: int) -> int:
        try:
            return self.s.y_col[(k, m)]
        except KeyError:
            raise ModelConsistencyError(f"eliminated y column {(k, m)} referenced") from None

    def z(self, k: int, m: int, q: int) -> int:
        try:
            return self.s.z_col[(k, m, q)]
        except KeyError:
            raise ModelConsistencyError(f"eliminated z column {(k, m, q)} referenced") from None

    def ok(self, k: int, m: int) -> bool:
        return m in self.later[k]

    def ok3(self, k: int, m: int, q: int) -> bool:
        return m in self.later[k] and q in self.later[k] and q in self.later[m]

    def arc(self, i: int, r: int, j: int) -> int | None:
        return self.aid.get((i, r, j))

    def offdiag_pairs(self) -> Iterator[tuple[int, int]]:
        for k, m in self.s.y_ids:
            if k != m:
                yield k, m

    def z_sorted(self, ids: Sequence[int]) -> int | None:
        k, m, q = sorted(ids, key=self.stage.__getitem__)
        return self.z(k, m, q) if self.ok3(k, m, q) else None

    # -- families -------------------------------------------------------------
    def rows(self) -> Iterator[tuple[RowTag, list[Term], int]]:
        for fam in FAMILIES:
            yield from getattr(self, "_" + fam)()

    def _FlowInit(self):
        yield RowTag("FlowInit", ()), [(self.y(k, k), 1) for k in self.s.arcs_by_stage[1]], 1

    def _FlowCons(self):
        first = self.s.arcs_by_stage[1]
        for r in self.s.stages:
            if r < 2:
                continue
            for m in self.s.arcs_by_stage[r]:
                terms = [(self.y(m, m), 1)]
                terms += [(self.y(k, m), -1) for k in first if self.ok(k, m)]
                yield RowTag("FlowCons", tuple(self.s.arcs[m])), terms, 0

    def _split_row(self, fam, lhs_col, idx, stage, combo):
        terms = [(lhs_col, 1)]
        for x in self.s.arcs_by_stage[stage]:
            col = combo(x)
            if col is not None:
                terms.append((col, -1))
        return RowTag(fam, idx + (stage,)), terms, 0

    def _LayerA(self):
        arcs = self.s.arcs
        for k, m in self.offdiag_pairs():
            p = self.stage[m]
            for s in range(p + 1, self.last + 1):
                yield self._split_row(
                    "LayerA", self.y(k, m), (*arcs[k], *arcs[m]), s,
                    lambda q: self.z(k, m, q) if self.ok3(k, m, q) else None)

    def _LayerB(self):
        arcs = self.s.arcs
        for k, q in self.offdiag_pairs():
            r, s = self.stage[k], self.stage[q]
            for p in range(r + 1, s):
                yield self._split_row(
                    "LayerB", self.y(k, q), (*arcs[k], *arcs[q]), p,
                    lambda m: self.z(k, m, q) if self.ok3(k, m, q) else None)

    def _LayerC(self):
        arcs = self.s.arcs
        for m, q in self.offdiag_pairs():
            p = self.stage[m]
            for r in range(1, p):
                yield self._split_row(
                    "LayerC", self.y(m, q), (*arcs[m], *arcs[q]), r,
                    lambda k: self.z(k, m, q) if self.ok3(k, m, q) else None)

    def _ConnY(self):
        cities = self.s.cities
        for k, a in enumerate(self.s.arcs):
            if a.r > self.last - 1:
                continue
            for t in cities:
                for s in range(a.r, self.last):
                    terms = []
                    for c in cities:
                        x = self.arc(c, s, t)
                        if x is not None and (x == k or self.ok(k, x)):
                            terms.append((self.y(k, x), 1))
                        x = self.arc(t, s + 1, c)
                        if x is not None and self.ok(k, x):
                            terms.append((self.y(k, x), -1))
                    if terms:
                        yield RowTag("ConnY", (*a, t, s)), terms, 0

    def _conn_z(self, fam, fixed, p_range):
        arcs = self.s.arcs
        cities = self.s.cities
        for u in cities:
            for p in p_range:
                terms = []
                for v in cities:
                    x = self.arc(v, p, u)
                    if x is not None:
                        col = self.z_sorted((*fixed, x))
                        if col is not None:
                            terms.append((col, 1))
                    x = self.arc(u, p + 1, v)
                    if x is not None:
                        col = self.z_sorted((*fixed, x))
                        if col is not None:
                            terms.append((col, -1))
                if terms:
                    yield RowTag(fam, (*arcs[fixed[0]], *arcs[fixed[1]], u, p)), terms, 0

    def _ConnZpre(self):
        for b, c in self.offdiag_pairs():
            yield from self._conn_z("ConnZpre", (b, c), range(1, self.stage[b] - 1))

    def _ConnZmid(self):
        for a, c in self.offdiag_pairs():
            yield from self._conn_z("ConnZmid", (a, c), range(self.stage[a] + 1, self.stage[c] - 1))

    def _ConnZpost(self):
        for a, b in self.offdiag_pairs():
            yield from self._conn_z("ConnZpost", (a, b), range(self.stage[b] + 1, self.last))

    def _Visit(self):
        arcs = self.s.arcs
        cities = self.s.cities
        for k, q in self.offdiag_pairs():
            a1, a3 = arcs[k], arcs[q]
            used = {a1.i, a1.j, a3.i, a3.j}
            lhs = self.y(k, q)
            for u in cities:
                if u in used:
                    continue
                terms = [(lhs, 1)]
                # u visited at stage st <= n-2: tail of the stage-st arc
                for st in self.s.stages:
                    if st in (a1.r, a3.r):
                        continue
                    for v in cities:
                        x = self.arc(u, st, v)
                        if x is not None:
                            col = self.z_sorted((k, q, x))
                            if col is not None:
                                terms.append((col, -1))
                # u visited at stage n-1: head of the last-stage arc
                if a3.r < self.last:
                    for v in cities:
                        x = self.arc(v, self.last, u)
                        if x is not None:
                            col = self.z_sorted((k, q, x))
                            if col is not None:
                                terms.append((col, -1))
                yield RowTag("Visit", (*a1, *a3, u)), terms, 0


def count_rows(space: VariableSpace) -> dict[str, int]:
    counts = {f: 0 for f in FAMILIES}
    for tag, _, _ in _RowBuilder(space).rows():
        counts[tag.family] += 1
    return counts


@dataclass(eq=False)
class SparseLpModel:
    """``min c.x  s.t.  A x = b, x >= 0`` with tagged rows and named columns.

    ``A`` is kept in CSR form (``indptr``/``indices``/``data``, integer
    coefficients).  ``objective`` maps column -> exact cost and is supported on
    diagonal y columns only.
    """

    space: VariableSpace
    tags: list[RowTag]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    rhs: np.ndarray
    objective: dict[int, int | Fraction]
    label: str = ""
    instance: TspInstance | None = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return len(self.tags)

    @property
    def n_cols(self) -> int:
        return self.space.n_cols

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    @cached_property
    def A(self) -> sp.csr_matrix:
        """Float CSR constraint matrix."""
        return sp.csr_matrix((self.data.astype(float), self.indices, self.indptr),
                             shape=(self.n_rows, self.n_cols))

    @cached_property
    def A_int(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr),
                             shape=(self.n_rows, self.n_cols))

    @cached_property
    def b(self) -> np.ndarray:
        return self.rhs.astype(float)

    @cached_property
    def c(self) -> np.ndarray:
        out = np.zeros(self.n_cols)
        for col, v in self.objective.items():
            out[col] = float(v)
        return out

    @cached_property
    def row_of_tag(self) -> dict[RowTag, int]:
        return {t: k for k, t in enumerate(self.tags)}

    def row(self, k: int) -> tuple[RowTag, list[Term], int]:
        lo, hi = self.indptr[k], self.indptr[k + 1]
        return self.tags[k], list(zip(self.indices[lo:hi].tolist(), self.data[lo:hi].tolist())), int(self.rhs[k])

    def rows(self) -> Iterator[tuple[RowTag, list[Term], int]]:
        for k in range(self.n_rows):
            yield self.row(k)

    def family_counts(self) -> dict[str, int]:
        counts = {f: 0 for f in FAMILIES}
        for t in self.tags:
            counts[t.family] += 1
        return counts

    def summary(self) -> dict:
        return {
            "format": "tsplp-model-summary/1",
            "label": self.label,
            "n": self.space.n,
            "columns": {"y": self.space.n_y, "z": self.space.n_z, "total": self.n_cols},
            "rows": self.family_counts(),
            "total_rows": self.n_rows,
            "nnz": self.nnz,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)

    def same_as(self, other: "SparseLpModel") -> bool:
        """Structural equality: rows, coefficients, right-hand sides, objective."""
        return (
            self.space.n == other.space.n
            and self.tags == other.tags
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
            and np.array_equal(self.rhs, other.rhs)
            and {k: v for k, v in self.objective.items() if v != 0}
            == {k: v for k, v in other.objective.items() if v != 0}
        )


def assemble(space: VariableSpace, rows, objective, label="", instance=None) -> SparseLpModel:
    tags, indptr, indices, data, rhs = [], [0], [], [], []
    for tag, terms, b in rows:
        merged: dict[int, int] = {}
        for col, coef in terms:
            if not 0 <= col < space.n_cols:
                raise ModelConsistencyError(f"row {tag.name()} references column {col}")
            merged[col] = merged.get(col, 0) + coef
        merged = {c: v for c, v in merged.items() if v != 0}
        if not merged:
            if b != 0:
                raise ModelConsistencyError(f"row {tag.name()} reads 0 = {b}")
            continue
        tags.append(tag)
        for col in sorted(merged):
            indices.append(col)
            data.append(merged[col])
        indptr.append(len(indices))
        rhs.append(b)
    return SparseLpModel(
        space=space,
        tags=tags,
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        data=np.asarray(data, dtype=np.int64),
        rhs=np.asarray(rhs, dtype=np.int64),
        objective=dict(objective),
        label=label,
        instance=instance,
    )


def build_model(inst: TspInstance) -> SparseLpModel:
    space = variable_space(inst.n)
    objective = {}
    for k, a in enumerate(space.arcs):
        objective[space.diag_col(k)] = stage_cost(inst, a.i, a.r, a.j)
    return assemble(space, _RowBuilder(space).rows(), objective, inst.label, inst)


# -- tour lift ------------------------------------------------------------------

def lift_support(n: int, tour: Tour) -> list[int]:
    """Columns equal to one in the lift of ``tour``, in increasing order."""
    tour.validate(n)
    space = variable_space(n)
    ids = [space.arc_id[Arc(*a)] for a in tour.arcs()]
    cols = [space.y_col[(k, k)] for k in ids]
    cols += [space.y_col[p] for p in combinations(ids, 2)]
    cols += [space.z_col[t] for t in combinations(ids, 3)]
    return sorted(cols)


def lift_tour(n: int, tour: Tour | Sequence[int]) -> np.ndarray:
    """0/1 integer vector of the y/z variables switched on by ``tour``."""
    if not isinstance(tour, Tour):
        tour = Tour(tuple(tour))
    x = np.zeros(variable_space(n).n_cols, dtype=np.int64)
    x[lift_support(n, tour)] = 1
    return x


def lift_nonzero_count(n: int) -> int:
    stages = n - 2
    return stages + comb(stages, 2) + comb(stages, 3)


# -- evaluation -----------------------------------------------------------------

def _is_exact(x: np.ndarray) -> bool:
    return x.dtype == object or np.issubdtype(x.dtype, np.integer)


def _check_dim(model: SparseLpModel, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (model.n_cols,):
        raise DimensionMismatchError(f"vector has shape {x.shape}, model has {model.n_cols} columns")
    return x


def row_activity(model: SparseLpModel, x) -> np.ndarray:
    """``A x`` computed exactly for integer/object vectors, in floats otherwise."""
    x = _check_dim(model, x)
    if np.issubdtype(x.dtype, np.integer):
        return model.A_int @ x
    if x.dtype == object:
        out = np.empty(model.n_rows, dtype=object)
        ind, dat, ptr = model.indices, model.data.tolist(), model.indptr
        xs = x.tolist()
        for k in range(model.n_rows):
            acc = 0
            for p in range(ptr[k], ptr[k + 1]):
                acc += dat[p] * xs[ind[p]]
            out[k] = acc
        return out
    return model.A @ x.astype(float)


@dataclass
class ResidualReport:
    max_abs: dict[str, object]
    worst: dict[str, RowTag | None]
    exact: bool

    @property
    def overall(self):
        return max(self.max_abs.values(), default=0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(v <= tol for v in self.max_abs.values())

    def nonzero_rows(self):
        return self._nonzero

    def as_dict(self) -> dict:
        return {
            "exact": self.exact,
            "families": {f: {"max_abs": str(v) if self.exact else float(v),
                             "worst": None if self.worst[f] is None else self.worst[f].name()}
                         for f, v in self.max_abs.items()},
        }


def residual_vector(model: SparseLpModel, x) -> np.ndarray:
    act = row_activity(model, x)
    if act.dtype == object or np.issubdtype(act.dtype, np.integer):
        return act - model.rhs.astype(object) if act.dtype == object else act - model.rhs
    return act - model.b


def residuals(model: SparseLpModel, x) -> ResidualReport:
    """Per-family worst absolute row residual ``|A x - b|``."""
    x = _check_dim(model, x)
    res = residual_vector(model, x)
    exact = _is_exact(x)
    max_abs: dict[str, object] = {f: (0 if exact else 0.0) for f in FAMILIES}
    worst: dict[str, RowTag | None] = {f: None for f in FAMILIES}
    for k, tag in enumerate(model.tags):
        v = abs(res[k])
        if v > max_abs[tag.family]:
            max_abs[tag.family] = v
            worst[tag.family] = tag
    rep = ResidualReport(max_abs, worst, exact)
    rep._nonzero = [model.tags[k] for k in np.flatnonzero(np.asarray(res != 0))]
    return rep


def objective_value(model: SparseLpModel, x):
    """``c . x``; exact for integer/object vectors."""
    x = _check_dim(model, x)
    if _is_exact(x):
        return sum((v * x[col] for col, v in model.objective.items()), 0)
    return float(model.c @ x.astype(float))


def marginal_residual(model: SparseLpModel, x) -> float:
    """Worst violation of ``y(a,a) = sum_{b at stage s} y(a,b)`` over ``s > r(a)``
    and of ``y(a,a) = sum z(a,b,c)`` over stage pairs ``r(a) < s < t``.

    These identities are implied by the rows; they are checked, never added.
    """
    x = _check_dim(model, x)
    space = model.space
    worst = 0
    for k, a in enumerate(space.arcs):
        d = x[space.y_col[(k, k)]]
        by_stage: dict[int, object] = {}
        for m in space.later(k):
            s = space.arcs[m].r
            by_stage[s] = by_stage.get(s, 0) + x[space.y_col[(k, m)]]
        for s in range(a.r + 1, space.n - 1):
            worst = max(worst, abs(d - by_stage.get(s, 0)))
    zsum: dict[tuple[int, int, int], object] = {}
    for (k, m, q), col in space.z_col.items():
        key = (k, space.arcs[m].r, space.arcs[q].r)
        zsum[key] = zsum.get(key, 0) + x[col]
    for k, a in enumerate(space.arcs):
        d = x[space.y_col[(k, k)]]
        for s, t in combinations(range(a.r + 1, space.n - 1), 2):
            worst = max(worst, abs(d - zsum.get((k, s, t), 0)))
    return worst
