"""Arcs of the layered city/stage graph and the admissible y/z index spaces.

An arc ``(i, r, j)`` means city ``i`` is visited at stage ``r`` and city ``j``
at stage ``r + 1``.  Variables are keyed by arc pairs (``y``) and arc triples
(``z``) ordered by stage.  Keys that no tour can ever switch on are removed
from the index space up front instead of being pinned to zero by rows:

* two arcs on the same stage must be the same arc,
* arcs on adjacent stages must chain head-to-tail and visit three distinct
  cities,
* arcs further apart must visit four distinct cities.

A triple is admissible when each of its three pairs is.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from typing import NamedTuple

MIN_CITIES = 5


class UnsupportedSizeError(ValueError):
    pass


class Arc(NamedTuple):
    i: int
    r: int
    j: int

    def __str__(self) -> str:
        return f"({self.i},{self.r},{self.j})"


class YKey(NamedTuple):
    a1: Arc
    a2: Arc

    @property
    def is_diagonal(self) -> bool:
        return self.a1 == self.a2

    def name(self) -> str:
        return "Y_%d_%d_%d_%d_%d_%d" % (*self.a1, *self.a2)


class ZKey(NamedTuple):
    a1: Arc
    a2: Arc
    a3: Arc

    def name(self) -> str:
        return "Z_%d_%d_%d_%d_%d_%d_%d_%d_%d" % (*self.a1, *self.a2, *self.a3)


def _check_size(n: int) -> None:
    if n < MIN_CITIES:
        raise UnsupportedSizeError(
            f"the lifted formulation needs n >= {MIN_CITIES} cities (got n={n})"
        )


def admissible_arcs(n: int) -> list[Arc]:
    """All stage arcs, ordered by ``(r, i, j)``."""
    _check_size(n)
    cities = range(2, n + 1)
    return [Arc(i, r, j) for r in range(1, n - 1) for i in cities for j in cities if i != j]


def pair_admissible(a1: Arc, a2: Arc) -> bool:
    """Whether ``y(a1, a2)`` survives elimination (requires ``a1.r <= a2.r``)."""
    if a1.r > a2.r:
        raise ValueError("pair must be ordered by stage")
    gap = a2.r - a1.r
    if gap == 0:
        return a1 == a2
    if gap == 1:
        return a2.i == a1.j and a2.j != a1.i and a2.j != a1.j
    return len({a1.i, a1.j, a2.i, a2.j}) == 4


def triple_admissible(a1: Arc, a2: Arc, a3: Arc) -> bool:
    if not (a1.r < a2.r < a3.r):
        return False
    return pair_admissible(a1, a2) and pair_admissible(a1, a3) and pair_admissible(a2, a3)


class VariableSpace:
    """Canonical column layout: every admissible y key, then every z key.

    Internally keys are tuples of arc ids (positions in :attr:`arcs`); the
    lexicographic order of id tuples is the canonical column order.
    """

    def __init__(self, n: int):
        _check_size(n)
        self.n = n
        self.stages = range(1, n - 1)
        self.cities = range(2, n + 1)
        self.arcs: list[Arc] = admissible_arcs(n)
        self.arc_id: dict[Arc, int] = {a: k for k, a in enumerate(self.arcs)}
        self.arcs_by_stage: dict[int, list[int]] = {r: [] for r in self.stages}
        for k, a in enumerate(self.arcs):
            self.arcs_by_stage[a.r].append(k)

        # later[k]: ids of arcs at strictly later stages admissible with arc k
        later: list[list[int]] = []
        for k, a in enumerate(self.arcs):
            later.append([m for m in range(k + 1, len(self.arcs))
                          if self.arcs[m].r > a.r and pair_admissible(a, self.arcs[m])])
        later_sets = [frozenset(x) for x in later]
        self._later = later

        self.y_ids: list[tuple[int, int]] = []
        for k in range(len(self.arcs)):
            self.y_ids.append((k, k))
            self.y_ids.extend((k, m) for m in later[k])
        self.z_ids: list[tuple[int, int, int]] = []
        for k in range(len(self.arcs)):
            lk = later_sets[k]
            for m in later[k]:
                self.z_ids.extend((k, m, q) for q in later[m] if q in lk)

        self.y_col: dict[tuple[int, int], int] = {key: c for c, key in enumerate(self.y_ids)}
        ny = len(self.y_ids)
        self.z_col: dict[tuple[int, int, int], int] = {key: ny + c for c, key in enumerate(self.z_ids)}

    # -- sizes ----------------------------------------------------------------
    @property
    def n_y(self) -> int:
        return len(self.y_ids)

    @property
    def n_z(self) -> int:
        return len(self.z_ids)

    @property
    def n_cols(self) -> int:
        return self.n_y + self.n_z

    def later(self, k: int) -> list[int]:
        """Arc ids at later stages pair-admissible with arc id ``k``."""
        return self._later[k]

    # -- key <-> column -------------------------------------------------------
    def column_of(self, key: YKey | ZKey) -> int:
        ids = tuple(self.arc_id[a] for a in key)
        try:
            return self.y_col[ids] if len(ids) == 2 else self.z_col[ids]
        except KeyError:
            raise KeyError(f"{key} is not an admissible key") from None

    def key_of(self, col: int) -> YKey | ZKey:
        if not 0 <= col < self.n_cols:
            raise IndexError(col)
        if col < self.n_y:
            return YKey(*(self.arcs[k] for k in self.y_ids[col]))
        return ZKey(*(self.arcs[k] for k in self.z_ids[col - self.n_y]))

    def column_name(self, col: int) -> str:
        return self.key_of(col).name()

    def column_names(self) -> list[str]:
        return [self.column_name(c) for c in range(self.n_cols)]

    def diag_col(self, arc: Arc | int) -> int:
        k = arc if isinstance(arc, int) else self.arc_id[arc]
        return self.y_col[(k, k)]

    @property
    def diag_cols(self) -> list[int]:
        return [self.y_col[(k, k)] for k in range(len(self.arcs))]

    def y_keys(self) -> list[YKey]:
        return [YKey(self.arcs[a], self.arcs[b]) for a, b in self.y_ids]

    def z_keys(self) -> list[ZKey]:
        return [ZKey(self.arcs[a], self.arcs[b], self.arcs[c]) for a, b, c in self.z_ids]


@lru_cache(maxsize=8)
def variable_space(n: int) -> VariableSpace:
    """Shared, cached :class:`VariableSpace` (treat as read-only)."""
    return VariableSpace(n)


def admissible_y(n: int) -> list[YKey]:
    return variable_space(n).y_keys()


def admissible_z(n: int) -> list[ZKey]:
    return variable_space(n).z_keys()


def parse_column_name(name: str) -> YKey | ZKey:
    kind, *nums = name.split("_")
    v = [int(x) for x in nums]
    if kind == "Y" and len(v) == 6:
        return YKey(Arc(*v[:3]), Arc(*v[3:]))
    if kind == "Z" and len(v) == 9:
        return ZKey(Arc(*v[:3]), Arc(*v[3:6]), Arc(*v[6:]))
    raise ValueError(f"not a column name: {name!r}")


def stage_triples(n: int) -> list[tuple[int, int, int]]:
    return list(combinations(range(1, n - 1), 3))


def dimensions(n: int) -> dict:
    """Exact variable and per-family row counts, by enumeration."""
    from .model import count_rows

    space = variable_space(n)
    rows = count_rows(space)
    return {
        "n": n,
        "arcs": len(space.arcs),
        "y": space.n_y,
        "y_diagonal": len(space.arcs),
        "z": space.n_z,
        "columns": space.n_cols,
        "rows": rows,
        "total_rows": sum(rows.values()),
    }
