"""TSP instances, generators, stage-indexed costs and closed-tour costs.

Cities are labelled ``1..n`` with city 1 the fixed start/end of every tour.
Stages are labelled ``1..n-2`` (the arc stages of the layered graph); the
city visited at stage ``s`` (``1 <= s <= n-1``) is ``order[s-1]`` of a
:class:`Tour`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np


class InvalidInstanceError(ValueError):
    pass


class InvalidTourError(ValueError):
    pass


class _Forbidden:
    """Diagonal marker. Refuses to take part in arithmetic."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def _refuse(self, *args):
        raise TypeError("forbidden (diagonal) travel cost used in arithmetic")

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _refuse
    __truediv__ = __rtruediv__ = __neg__ = __float__ = __lt__ = __gt__ = _refuse


INF = _Forbidden()

Cost = int | Fraction


def _exact(v) -> Cost:
    if isinstance(v, bool):
        raise InvalidInstanceError("boolean is not a cost")
    if isinstance(v, int):
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, Rational):
        f = Fraction(v)
        return f.numerator if f.denominator == 1 else f
    if isinstance(v, (float, np.floating, str)):
        if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
            raise InvalidInstanceError("infinite off-diagonal cost")
        f = Fraction(str(v)) if isinstance(v, str) else Fraction(float(v))
        return f.numerator if f.denominator == 1 else f
    raise InvalidInstanceError(f"unsupported cost value {v!r}")


@dataclass(frozen=True)
class TspInstance:
    """An ``n``-city instance with exact (int / Fraction) travel costs.

    ``t`` is an ``n x n`` tuple of rows, 0-based internally; use
    :meth:`cost` for 1-based city access.  Diagonal entries are :data:`INF`.
    """

    n: int
    t: tuple[tuple[Cost, ...], ...]
    label: str = ""

    def __post_init__(self):
        if self.n < 3:
            raise InvalidInstanceError(f"need at least 3 cities, got n={self.n}")
        if len(self.t) != self.n or any(len(row) != self.n for row in self.t):
            raise InvalidInstanceError("cost matrix must be n x n")
        for i, row in enumerate(self.t):
            for j, v in enumerate(row):
                if i == j:
                    if v is not INF:
                        raise InvalidInstanceError("diagonal must be the INF sentinel")
                elif v is INF or not isinstance(v, (int, Fraction)):
                    raise InvalidInstanceError(f"bad off-diagonal cost at ({i + 1},{j + 1})")

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence], label: str = "") -> "TspInstance":
        """Build from any square nested sequence; the diagonal is ignored."""
        n = len(matrix)
        rows = []
        for i in range(n):
            if len(matrix[i]) != n:
                raise InvalidInstanceError("cost matrix must be square")
            rows.append(tuple(INF if i == j else _exact(matrix[i][j]) for j in range(n)))
        return cls(n, tuple(rows), label)

    @property
    def cities(self) -> range:
        """The non-depot cities ``M = {2..n}``."""
        return range(2, self.n + 1)

    @property
    def stages(self) -> range:
        """Arc stages ``R = {1..n-2}``."""
        return range(1, self.n - 1)

    def cost(self, i: int, j: int) -> Cost:
        if i == j:
            raise IndexError(f"no travel cost from city {i} to itself")
        return self.t[i - 1][j - 1]

    def to_float_matrix(self) -> np.ndarray:
        """Dense float copy with ``inf`` on the diagonal (display/export only)."""
        out = np.full((self.n, self.n), np.inf)
        for i in range(self.n):
            for j in range(self.n):
                if i != j:
                    out[i, j] = float(self.t[i][j])
        return out

    def relabel(self, perm: Sequence[int], label: str | None = None) -> "TspInstance":
        """Rename cities: city ``c`` of ``self`` becomes ``perm[c - 2]`` (city 1 fixed)."""
        if sorted(perm) != list(self.cities):
            raise InvalidInstanceError("relabelling must permute cities 2..n")
        new = {1: 1, **{c: p for c, p in zip(self.cities, perm)}}
        m = [[0] * self.n for _ in range(self.n)]
        for i in range(1, self.n + 1):
            for j in range(1, self.n + 1):
                if i != j:
                    m[new[i] - 1][new[j] - 1] = self.cost(i, j)
        return TspInstance.from_matrix(m, self.label if label is None else label)


@dataclass(frozen=True)
class Tour:
    """Visiting order of cities ``2..n``; city 1 is implicit at both ends."""

    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(c) for c in self.order))

    @property
    def n(self) -> int:
        return len(self.order) + 1

    def validate(self, n: int) -> None:
        if len(self.order) != n - 1 or sorted(self.order) != list(range(2, n + 1)):
            raise InvalidTourError(f"{self.order} is not a permutation of 2..{n}")

    def arcs(self) -> list[tuple[int, int, int]]:
        """The stage arcs ``(l_r, r, l_{r+1})`` for ``r = 1..n-2``."""
        o = self.order
        return [(o[r - 1], r, o[r]) for r in range(1, len(o))]

    def closed(self) -> tuple[int, ...]:
        return (1, *self.order, 1)

    def __str__(self) -> str:
        return "-".join(map(str, self.closed()))


def generate_random(n: int, seed: int, symmetric: bool = False, label: str | None = None) -> TspInstance:
    """Uniform integer costs in ``[1, 300]``.

    Draws use ``numpy.random.Generator(PCG64(seed))``: the full ``n x n``
    matrix is sampled row-major with ``integers(1, 301)`` and, for symmetric
    instances, the upper triangle is mirrored onto the lower one.
    """
    if n < 3:
        raise InvalidInstanceError(f"need at least 3 cities, got n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    m = rng.integers(1, 301, size=(n, n)).tolist()
    if symmetric:
        for i in range(n):
            for j in range(i):
                m[i][j] = m[j][i]
    if label is None:
        label = f"{'stsp' if symmetric else 'atsp'}{n}_s{seed}"
    return TspInstance.from_matrix(m, label)


_EXTREME = {
    # kind: (cost everywhere, cost on t12 and t21)
    "x71": (-1, 1),
    "x72": (1, -100),
    "x73": (0, 1),
}


def generate_extreme(kind: str, n: int = 7) -> TspInstance:
    """The "extreme symmetry" instances ``x71``, ``x72`` and ``x73``.

    ``kind`` may also be spelled ``xtsp71`` etc.
    """
    key = kind.lower().replace("xtsp", "x")
    if key not in _EXTREME:
        raise ValueError(f"unknown extreme instance kind {kind!r}")
    base, special = _EXTREME[key]
    m = [[base] * n for _ in range(n)]
    m[0][1] = m[1][0] = special
    label = "xtsp" + key[1:]
    return TspInstance.from_matrix(m, label if n == 7 else f"{label}_n{n}")


def stage_cost(inst: TspInstance, i: int, r: int, j: int) -> Cost:
    """Cost of visiting ``i`` at stage ``r`` then ``j`` at stage ``r+1``.

    The depot legs are folded into the first and last stages.  With ``n = 3``
    the single stage carries both corrections.
    """
    last = inst.n - 2
    if i == j or not (1 <= r <= last):
        raise IndexError(f"invalid stage arc ({i}, {r}, {j})")
    if not (2 <= i <= inst.n and 2 <= j <= inst.n):
        raise IndexError(f"cities of a stage arc must lie in 2..{inst.n}")
    c = inst.cost(i, j)
    if r == 1:
        c += inst.cost(1, i)
    if r == last:
        c += inst.cost(j, 1)
    return c


def tour_cost(inst: TspInstance, tour: Tour | Sequence[int]) -> Cost:
    if not isinstance(tour, Tour):
        tour = Tour(tuple(tour))
    tour.validate(inst.n)
    seq = tour.closed()
    return sum(inst.cost(a, b) for a, b in zip(seq, seq[1:]))


# -- plain-text instance files ------------------------------------------------

def _fmt(v: Cost) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def format_instance(inst: TspInstance) -> str:
    lines = [str(inst.n)]
    for i in range(inst.n):
        lines.append(" ".join("inf" if i == j else _fmt(inst.t[i][j]) for j in range(inst.n)))
    return "\n".join(lines) + "\n"


def parse_instance(text: str, label: str = "") -> TspInstance:
    """Inverse of :func:`format_instance`; blank lines and ``#`` comments skipped."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InvalidInstanceError("empty instance file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise InvalidInstanceError(f"first line must be n, got {lines[0]!r}") from exc
    if len(lines) != n + 1:
        raise InvalidInstanceError(f"expected {n} cost rows, got {len(lines) - 1}")
    m = []
    for i, ln in enumerate(lines[1:]):
        cells = ln.split()
        if len(cells) != n:
            raise InvalidInstanceError(f"row {i + 1} has {len(cells)} entries, expected {n}")
        row = []
        for j, cell in enumerate(cells):
            if i == j:
                if cell.lower() not in ("inf", "+inf", "infinity"):
                    raise InvalidInstanceError(f"diagonal entry ({i + 1},{i + 1}) must be inf")
                row.append(None)
            else:
                try:
                    row.append(_exact(cell))
                except (ValueError, ZeroDivisionError) as exc:
                    raise InvalidInstanceError(f"bad cost {cell!r}") from exc
        m.append(row)
    return TspInstance.from_matrix(m, label)


def read_instance(path) -> TspInstance:
    from pathlib import Path

    p = Path(path)
    return parse_instance(p.read_text(), label=p.stem)


def write_instance(inst: TspInstance, path) -> None:
    from pathlib import Path

    Path(path).write_text(format_instance(inst))


def iter_costs(inst: TspInstance) -> Iterable[tuple[int, int, Cost]]:
    for i in range(1, inst.n + 1):
        for j in range(1, inst.n + 1):
            if i != j:
                yield i, j, inst.cost(i, j)
