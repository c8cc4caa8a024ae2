import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsplp.decomposition import (InconsistentPathError, NonIntegralError, PathExplosion,
                                 certificate_json, decode_integral, decompose, solution_hash,
                                 support_graph, tours_in_solution)
from tsplp.indexing import Arc, variable_space
from tsplp.instance import Tour
from tsplp.model import lift_tour


def disjoint_tours(n, k, rng):
    """``k`` tours whose stage arcs are pairwise disjoint, by rejection."""
    while True:
        chosen, used = [], set()
        for _ in range(200):
            order = list(range(2, n + 1))
            rng.shuffle(order)
            arcs = set(Tour(tuple(order)).arcs())
            if arcs & used:
                continue
            chosen.append(tuple(order))
            used |= arcs
            if len(chosen) == k:
                return chosen


def mixture(n, orders, weights):
    x = np.zeros(variable_space(n).n_cols)
    for o, w in zip(orders, weights):
        x += w * lift_tour(n, o)
    return x


def test_single_lifted_tour():
    x = lift_tour(6, (4, 2, 6, 3, 5))
    dec = decompose(6, x)
    assert dec.verdict == "Reconstructed"
    assert dec.weights() == {(4, 2, 6, 3, 5): 1.0}
    assert dec.certificate is None
    assert all(v == 0 for v in dec.residuals.values())


@settings(max_examples=40)
@given(st.integers(5, 7), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_disjoint_mixtures_round_trip(n, k, seed):
    rng = random.Random(seed)
    orders = disjoint_tours(n, k, rng)
    w = np.array([rng.random() + 0.05 for _ in orders])
    w /= w.sum()
    dec = decompose(n, mixture(n, orders, w))
    assert dec.reconstructed
    got = dec.weights()
    assert set(got) == set(orders)
    for o, wi in zip(orders, w):
        assert abs(got[o] - wi) <= 1e-9
    assert dec.flow_total == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30)
@given(st.permutations([2, 3, 4, 5, 6]), st.permutations([2, 3, 4, 5, 6]),
       st.floats(0.05, 0.95))
def test_two_overlapping_tours_round_trip(o1, o2, a):
    o1, o2 = tuple(o1), tuple(o2)
    if o1 == o2:
        return
    dec = decompose(6, mixture(6, [o1, o2], [a, 1 - a]))
    assert dec.reconstructed
    got = dec.weights()
    assert got[o1] == pytest.approx(a, abs=1e-12)
    assert got[o2] == pytest.approx(1 - a, abs=1e-12)


def test_support_graph_lists_positive_arcs():
    x = mixture(5, [(2, 3, 4, 5), (5, 4, 3, 2)], [0.25, 0.75])
    g = support_graph(5, x)
    assert g.arc_count() == 6
    assert g.stages[1] == [Arc(2, 1, 3), Arc(5, 1, 4)]
    assert g.values[Arc(5, 1, 4)] == 0.75
    assert support_graph(5, x, eps=0.5).arc_count() == 3


def test_path_budget():
    x = mixture(7, disjoint_tours(7, 3, random.Random(1)), [0.2, 0.3, 0.5])
    with pytest.raises(PathExplosion) as err:
        tours_in_solution(7, x, budget=3)
    assert err.value.budget == 3 and err.value.explored > 3


def test_stray_mass_fails_with_certificate():
    space = variable_space(5)
    x = lift_tour(5, (2, 3, 4, 5)).astype(float)
    off_path = space.diag_col(Arc(4, 1, 5))
    x[off_path] = 0.5
    dec = decompose(space, x, instance_label="probe")
    assert dec.verdict == "Failed"
    cert = json.loads(certificate_json(dec))
    assert cert["instance"] == "probe"
    assert cert["violated_identity"]["family"] == "y_diagonal"
    assert cert["violated_identity"]["column"] == space.column_name(off_path)
    assert cert["violated_identity"]["lhs"] == 0.5 and cert["violated_identity"]["rhs"] == 0
    assert cert["solution_hash"] == solution_hash(x)
    assert cert["tours"] == [[[2, 3, 4, 5], 1.0]]


def test_decode_integral():
    t = (3, 6, 2, 5, 4)
    assert decode_integral(6, lift_tour(6, t)).order == t
    x = lift_tour(6, t).astype(float)
    x[0] = 0.5
    with pytest.raises(NonIntegralError):
        decode_integral(6, x)
    with pytest.raises(InconsistentPathError):
        decode_integral(6, lift_tour(6, t) + lift_tour(6, (2, 3, 4, 5, 6)))
    with pytest.raises(InconsistentPathError):
        decode_integral(6, np.zeros(variable_space(6).n_cols))


def test_wrong_length_vector():
    with pytest.raises(ValueError):
        decompose(5, np.zeros(7))
