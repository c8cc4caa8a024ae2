from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tsplp.instance import (INF, InvalidInstanceError, InvalidTourError, Tour, TspInstance,
                            format_instance, generate_extreme, generate_random, parse_instance,
                            read_instance, stage_cost, tour_cost, write_instance)


def cost_matrices(n_min=3, n_max=7):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(st.lists(st.integers(-300, 300), min_size=n, max_size=n),
                           min_size=n, max_size=n))


def test_random_costs_in_range():
    for seed in range(5):
        inst = generate_random(7, seed)
        for i in range(1, 8):
            for j in range(1, 8):
                if i != j:
                    assert 1 <= inst.cost(i, j) <= 300


def test_random_matches_documented_generator():
    # the instance is the row-major draw of a PCG64 stream, diagonal ignored
    draw = np.random.Generator(np.random.PCG64(11)).integers(1, 301, size=(6, 6))
    inst = generate_random(6, 11)
    assert all(inst.cost(i + 1, j + 1) == draw[i, j] for i in range(6) for j in range(6) if i != j)


def test_symmetric_mirrors_upper_triangle():
    draw = np.random.Generator(np.random.PCG64(3)).integers(1, 301, size=(7, 7))
    inst = generate_random(7, 3, symmetric=True)
    for i in range(1, 8):
        for j in range(i + 1, 8):
            assert inst.cost(i, j) == inst.cost(j, i) == draw[i - 1, j - 1]


def test_random_is_deterministic():
    assert generate_random(7, 42) == generate_random(7, 42)
    assert generate_random(7, 42) != generate_random(7, 43)
    assert generate_random(7, 42).label == "atsp7_s42"
    assert generate_random(7, 42, symmetric=True).label == "stsp7_s42"


def test_too_few_cities():
    with pytest.raises(InvalidInstanceError):
        generate_random(2, 0)
    with pytest.raises(InvalidInstanceError):
        TspInstance.from_matrix([[0, 1], [1, 0]])


def test_extreme_patterns():
    x71, x72, x73 = (generate_extreme(k) for k in ("x71", "x72", "x73"))
    assert x71.cost(3, 5) == -1 and x71.cost(1, 2) == 1 and x71.cost(2, 1) == 1
    assert x72.cost(2, 1) == -100 and x72.cost(1, 2) == -100 and x72.cost(4, 6) == 1
    assert x73.cost(1, 2) == 1 and x73.cost(2, 1) == 1
    for inst, base in ((x71, -1), (x72, 1), (x73, 0)):
        for i in range(1, 8):
            for j in range(1, 8):
                if i != j and {i, j} != {1, 2}:
                    assert inst.cost(i, j) == base
    assert [x.label for x in (x71, x72, x73)] == ["xtsp71", "xtsp72", "xtsp73"]
    assert generate_extreme("xtsp72") == x72
    with pytest.raises(ValueError):
        generate_extreme("x74")


def test_diagonal_sentinel_refuses_arithmetic():
    inst = generate_random(5, 0)
    assert inst.t[2][2] is INF
    with pytest.raises(TypeError):
        INF + 1
    with pytest.raises(IndexError):
        inst.cost(3, 3)
    assert np.isinf(inst.to_float_matrix()[0, 0])


def test_stage_cost_first_stage():
    m = [[0] * 5 for _ in range(5)]
    m[0][2] = 5   # t_13
    m[2][3] = 7   # t_34
    inst = TspInstance.from_matrix(m)
    assert stage_cost(inst, 3, 1, 4) == 12


def test_stage_cost_cases():
    inst = generate_random(7, 1)
    for i in range(2, 8):
        for j in range(2, 8):
            if i == j:
                continue
            assert stage_cost(inst, i, 1, j) == inst.cost(i, j) + inst.cost(1, i)
            for r in (2, 3, 4):
                assert stage_cost(inst, i, r, j) == inst.cost(i, j)
            assert stage_cost(inst, i, 5, j) == inst.cost(i, j) + inst.cost(j, 1)
    with pytest.raises(IndexError):
        stage_cost(inst, 2, 1, 2)
    with pytest.raises(IndexError):
        stage_cost(inst, 2, 6, 3)


def test_stage_cost_zero_matrix():
    zero = TspInstance.from_matrix([[0] * 6 for _ in range(6)])
    assert all(stage_cost(zero, i, r, j) == 0
               for r in range(1, 5) for i in range(2, 7) for j in range(2, 7) if i != j)


def test_three_city_stage_is_whole_tour():
    inst = TspInstance.from_matrix([[0, 2, 3], [5, 0, 7], [11, 13, 0]])
    assert stage_cost(inst, 2, 1, 3) == 2 + 7 + 11
    assert stage_cost(inst, 2, 1, 3) == tour_cost(inst, (2, 3))


def test_tour_cost_extremes():
    x72 = generate_extreme("x72")
    x71 = generate_extreme("x71")
    for p in permutations(range(3, 8)):
        assert tour_cost(x72, (2, *p)) == -94
        assert tour_cost(x71, (*p[:2], 2, *p[2:])) == -7
    zero = TspInstance.from_matrix([[0] * 6 for _ in range(6)])
    assert tour_cost(zero, (3, 2, 6, 5, 4)) == 0


def test_invalid_tour():
    inst = generate_random(5, 0)
    with pytest.raises(InvalidTourError):
        tour_cost(inst, (2, 3, 4))
    with pytest.raises(InvalidTourError):
        tour_cost(inst, (2, 3, 3, 5))
    with pytest.raises(InvalidTourError):
        tour_cost(inst, (1, 3, 4, 5))


@given(cost_matrices(), st.randoms(use_true_random=False))
def test_stage_costs_telescope(matrix, rnd):
    inst = TspInstance.from_matrix(matrix)
    order = list(range(2, inst.n + 1))
    rnd.shuffle(order)
    t = Tour(tuple(order))
    assert sum(stage_cost(inst, *a) for a in t.arcs()) == tour_cost(inst, t)


@given(cost_matrices(5, 7), st.randoms(use_true_random=False))
def test_relabel_preserves_tour_costs(matrix, rnd):
    inst = TspInstance.from_matrix(matrix)
    perm = list(range(2, inst.n + 1))
    rnd.shuffle(perm)
    other = inst.relabel(perm)
    rename = {1: 1, **dict(zip(range(2, inst.n + 1), perm))}
    order = list(range(2, inst.n + 1))
    rnd.shuffle(order)
    assert tour_cost(other, [rename[c] for c in order]) == tour_cost(inst, order)


@given(cost_matrices())
def test_instance_text_round_trip(matrix):
    inst = TspInstance.from_matrix(matrix)
    assert parse_instance(format_instance(inst)) == inst


def test_instance_file_fractions_and_comments(tmp_path):
    text = "# three cities\n3\ninf 1/2 3\n4 inf -5\n0.25 7 inf\n"
    inst = parse_instance(text)
    assert inst.cost(1, 2) == Fraction(1, 2)
    assert inst.cost(3, 1) == Fraction(1, 4)
    assert isinstance(inst.cost(2, 3), int)
    write_instance(inst, tmp_path / "a.txt")
    again = read_instance(tmp_path / "a.txt")
    assert again.t == inst.t and again.label == "a"


@pytest.mark.parametrize("text", [
    "", "x\n", "3\ninf 1 2\n3 inf 4\n", "3\ninf 1 2\n3 0 4\n5 6 inf\n",
    "3\ninf 1 2\n3 inf 4\n5 six inf\n", "3\ninf 1\n3 inf 4\n5 6 inf\n",
])
def test_malformed_instance_files(text):
    with pytest.raises(InvalidInstanceError):
        parse_instance(text)
