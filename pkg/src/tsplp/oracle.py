"""Exhaustive TSP enumeration, the exactness reference for every LP result."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterator

from .instance import Cost, Tour, TspInstance, tour_cost

MAX_ENUM_CITIES = 10


class EnumerationGuardError(ValueError):
    pass


@dataclass
class OracleResult:
    best_tour: Tour
    best_cost: Cost
    tours_enumerated: int
    histogram: Counter | None = field(default=None, repr=False)
    optimal_tours: list[Tour] = field(default_factory=list, repr=False)


def _guard(n: int) -> None:
    if n > MAX_ENUM_CITIES:
        raise EnumerationGuardError(f"refusing to enumerate {n - 1}! tours (n > {MAX_ENUM_CITIES})")
    if n < 3:
        raise EnumerationGuardError(f"need at least 3 cities, got {n}")


def all_tours(n: int) -> Iterator[Tour]:
    """Every tour from city 1, as permutations of ``2..n`` in lexicographic order."""
    _guard(n)
    for p in permutations(range(2, n + 1)):
        yield Tour(p)


def brute_force_opt(inst: TspInstance, histogram: bool = False) -> OracleResult:
    """Exact optimum by full enumeration; ties keep the lexicographically first tour."""
    _guard(inst.n)
    best = None
    best_cost = None
    optimal: list[Tour] = []
    hist: Counter | None = Counter() if histogram else None
    count = 0
    for t in all_tours(inst.n):
        c = tour_cost(inst, t)
        count += 1
        if hist is not None:
            hist[c] += 1
        if best_cost is None or c < best_cost:
            best, best_cost, optimal = t, c, [t]
        elif c == best_cost:
            optimal.append(t)
    return OracleResult(best, best_cost, count, hist, optimal)
