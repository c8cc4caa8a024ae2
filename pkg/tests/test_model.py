import json
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cached_model
from tsplp.indexing import Arc, dimensions, variable_space
from tsplp.instance import Tour, TspInstance, generate_extreme, generate_random, tour_cost
from tsplp.model import (FAMILIES, DimensionMismatchError, ModelConsistencyError, RowTag,
                         _RowBuilder, build_model, marginal_residual, lift_nonzero_count,
                         lift_support, lift_tour, objective_value, residuals)
from tsplp.simplex import SolverOptions, solve


def tours(n):
    return [Tour(p) for p in permutations(range(2, n + 1))]


def test_flow_init_row(model5):
    tag, terms, rhs = model5.row(0)
    assert tag == RowTag("FlowInit", ())
    assert len(terms) == 12 and rhs == 1
    assert all(coef == 1 for _, coef in terms)


def test_rows_are_well_formed(model6):
    assert len(set(model6.tags)) == model6.n_rows
    assert model6.indices.max() < model6.n_cols
    assert np.all(model6.data != 0)
    # the objective lives on diagonal y columns only
    diag = set(model6.space.diag_cols)
    assert set(model6.objective) <= diag


@pytest.mark.parametrize("n", [5, 6])
def test_row_counts_match_dimensions(n):
    model = cached_model(n)
    assert model.family_counts() == dimensions(n)["rows"]
    assert model.n_rows == dimensions(n)["total_rows"]


@pytest.mark.parametrize("n", [5, 6, 7])
def test_layer_row_counts_by_stage_pattern(n):
    # one split row per off-diagonal pair and per stage of the swept position
    space = variable_space(n)
    R = n - 2
    expect = {"LayerA": 0, "LayerB": 0, "LayerC": 0}
    for a, b in space.y_keys():
        if a == b:
            continue
        expect["LayerA"] += R - b.r
        expect["LayerB"] += b.r - a.r - 1
        expect["LayerC"] += a.r - 1
    got = dimensions(n)["rows"]
    assert {k: got[k] for k in expect} == expect
    assert got["FlowCons"] == (n - 1) * (n - 2) * (R - 1)
    assert got["FlowInit"] == 1


def test_eliminated_column_reference_aborts():
    b = _RowBuilder(variable_space(5))
    with pytest.raises(ModelConsistencyError):
        b.y(0, 1)        # two stage-1 arcs
    with pytest.raises(ModelConsistencyError):
        b.z(0, 0, 0)


def test_row_tag_names_round_trip(model5):
    for tag in model5.tags:
        assert RowTag.parse(tag.name()) == tag
    with pytest.raises(ValueError):
        RowTag.parse("Bogus_1_2")


@pytest.mark.parametrize("n", [5, 6])
def test_every_tour_lifts_to_a_feasible_point(n):
    model = cached_model(n)
    for t in tours(n):
        rep = residuals(model, lift_tour(n, t))
        assert rep.exact and rep.is_zero(), (t, rep.as_dict())


@settings(max_examples=25)
@given(st.permutations(list(range(2, 8))))
def test_random_tours_lift_at_seven(order):
    model = cached_model(7)
    x = lift_tour(7, order)
    assert residuals(model, x).is_zero()
    assert objective_value(model, x) == tour_cost(model.instance, order)


def test_lift_structure():
    t = Tour((3, 5, 2, 7, 6, 4))
    x = lift_tour(7, t)
    space = variable_space(7)
    assert x.sum() == 25 == lift_nonzero_count(7)
    on = {space.key_of(c) for c in np.flatnonzero(x)}
    arcs = [Arc(*a) for a in t.arcs()]
    assert sum(k.is_diagonal for k in on if len(k) == 2) == 5
    assert all(set(k) <= set(arcs) for k in on)
    assert lift_support(7, t) == list(np.flatnonzero(x))


def test_distinct_tours_lift_to_distinct_vectors():
    vecs = {tuple(lift_support(6, t)) for t in tours(6)}
    assert len(vecs) == 120


def test_lift_rejects_bad_tours():
    with pytest.raises(ValueError):
        lift_tour(6, (2, 3, 4, 5))


@pytest.mark.parametrize("seed", [0, 1])
def test_objective_telescopes(seed):
    model = cached_model(6, seed, True)
    for t in tours(6):
        assert objective_value(model, lift_tour(6, t)) == tour_cost(model.instance, t)


def test_extreme_lift_objective():
    model = build_model(generate_extreme("x72"))
    x = lift_tour(7, (2, 3, 4, 5, 6, 7))
    assert objective_value(model, x) == -94
    assert objective_value(model, np.zeros(model.n_cols, dtype=np.int64)) == 0


@given(st.permutations([2, 3, 4, 5, 6]), st.permutations([2, 3, 4, 5, 6]),
       st.fractions(0, 1))
def test_convex_mix_is_feasible(o1, o2, alpha):
    model = cached_model(6)
    x = (alpha * lift_tour(6, o1).astype(object)
         + (1 - alpha) * lift_tour(6, o2).astype(object))
    assert residuals(model, x).is_zero()


@given(st.integers(0, 131), st.fractions(-3, 3).filter(lambda v: v != 0))
def test_perturbation_hits_exactly_the_touching_rows(col, eps):
    model = cached_model(5)
    x = lift_tour(5, (4, 2, 5, 3)).astype(object)
    x[col] += eps
    rep = residuals(model, x)
    A = model.A_int.tocsc()
    touched = {int(i): abs(int(v)) for i, v in
               zip(A.indices[A.indptr[col]:A.indptr[col + 1]], A.data[A.indptr[col]:A.indptr[col + 1]])}
    assert {model.row_of_tag[t] for t in rep.nonzero_rows()} == set(touched)
    for fam in FAMILIES:
        rows = [i for i in touched if model.tags[i].family == fam]
        expect = max((abs(eps) * touched[i] for i in rows), default=0)
        assert rep.max_abs[fam] == expect


def test_float_residuals_report_worst_row(model5):
    x = lift_tour(5, (2, 3, 4, 5)).astype(float)
    col = model5.space.diag_col(Arc(2, 1, 3))
    x[col] = 1.25
    rep = residuals(model5, x)
    assert not rep.exact
    assert rep.max_abs["FlowInit"] == pytest.approx(0.25)
    assert rep.worst["FlowInit"] == RowTag("FlowInit", ())


def test_dimension_mismatch(model5):
    with pytest.raises(DimensionMismatchError):
        residuals(model5, np.zeros(3))
    with pytest.raises(DimensionMismatchError):
        objective_value(model5, np.zeros(model5.n_cols + 1))


def test_marginal_identities_hold():
    model = cached_model(6)
    for t in tours(6)[:30]:
        assert marginal_residual(model, lift_tour(6, t)) == 0
    sol = solve(model, SolverOptions(form="dual", log_every=0))
    assert marginal_residual(model, sol.x) < 1e-9


def test_summary_json(model5):
    s = json.loads(model5.summary_json())
    assert s["format"] == "tsplp-model-summary/1"
    assert s["columns"] == {"y": 108, "z": 24, "total": 132}
    assert s["total_rows"] == 193
    assert s["nnz"] == model5.nnz == 444
    assert s["rows"] == model5.family_counts()


def test_model_construction_is_deterministic():
    a = build_model(generate_random(6, 9))
    b = build_model(generate_random(6, 9))
    assert a.same_as(b)
    assert not a.same_as(build_model(generate_random(6, 10)))


def test_exact_costs_survive():
    inst = generate_random(5, 0)
    m = [[inst.cost(i, j) if i != j else 0 for j in range(1, 6)] for i in range(1, 6)]
    m[0][1] = Fraction(1, 3)
    model = build_model(TspInstance.from_matrix(m))
    x = lift_tour(5, (2, 3, 4, 5))
    assert objective_value(model, x) == tour_cost(model.instance, (2, 3, 4, 5))
    assert isinstance(objective_value(model, x), Fraction)
