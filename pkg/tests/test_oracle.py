from itertools import permutations
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from tsplp.instance import TspInstance, generate_extreme, generate_random, tour_cost
from tsplp.oracle import EnumerationGuardError, all_tours, brute_force_opt


def test_tour_enumeration_order():
    ts = list(all_tours(5))
    assert len(ts) == 24
    assert [t.order for t in ts] == list(permutations(range(2, 6)))


@pytest.mark.parametrize("n", [5, 6, 7])
def test_counts_and_histogram(n):
    res = brute_force_opt(generate_random(n, 4), histogram=True)
    assert res.tours_enumerated == factorial(n - 1)
    assert sum(res.histogram.values()) == factorial(n - 1)
    assert min(res.histogram) == res.best_cost
    assert res.histogram[res.best_cost] == len(res.optimal_tours)


def test_extreme_optima():
    expect = {"x71": -7, "x72": -94, "x73": 0}
    for kind, value in expect.items():
        res = brute_force_opt(generate_extreme(kind))
        assert res.best_cost == value


def test_small_known_instance():
    # a 5-city ring 1-2-3-4-5-1 of cost 1 per leg, everything else 10
    m = [[10] * 5 for _ in range(5)]
    for a in range(5):
        m[a][(a + 1) % 5] = 1
    res = brute_force_opt(TspInstance.from_matrix(m))
    assert res.best_cost == 5
    assert res.best_tour.order == (2, 3, 4, 5)
    assert len(res.optimal_tours) == 1


def test_ties_keep_first_tour():
    res = brute_force_opt(generate_extreme("x73", 6))
    assert res.best_cost == 0
    assert res.best_tour == res.optimal_tours[0]
    assert tour_cost(generate_extreme("x73", 6), res.best_tour) == 0


def test_guard():
    with pytest.raises(EnumerationGuardError):
        brute_force_opt(generate_random(11, 0))
    with pytest.raises(EnumerationGuardError):
        next(all_tours(2))


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.permutations([2, 3, 4, 5, 6]))
def test_relabel_invariance(seed, perm):
    inst = generate_random(6, seed)
    assert brute_force_opt(inst.relabel(perm)).best_cost == brute_force_opt(inst).best_cost


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_optimum_bounds_every_tour(seed):
    inst = generate_random(5, seed, symmetric=True)
    res = brute_force_opt(inst)
    assert all(res.best_cost <= tour_cost(inst, t) for t in all_tours(5))
    # a symmetric instance has the reversed tour as a tied optimum
    assert tour_cost(inst, res.best_tour.order[::-1]) == res.best_cost
