import pytest

from conftest import cached_model
from tsplp.instance import generate_extreme
from tsplp.model import build_model
from tsplp.mps import MpsFormatError, export_mps, import_mps, read_mps, write_mps


@pytest.mark.parametrize("n", [5, 6])
def test_round_trip(n):
    model = cached_model(n)
    back = import_mps(export_mps(model))
    assert back.same_as(model)
    assert back.label == model.label
    assert export_mps(back) == export_mps(model)


def test_byte_identical_across_builds():
    a = export_mps(build_model(generate_extreme("x71", 6)))
    b = export_mps(build_model(generate_extreme("x71", 6)))
    assert a == b


def test_layout(model5):
    text = export_mps(model5).decode()
    lines = text.splitlines()
    assert lines[0].split() == ["NAME", "atsp5_s0"]
    heads = [ln for ln in lines if ln and not ln[0].isspace()]
    assert heads[1:] == ["ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]
    assert " E  FlowInit" in lines
    assert " E  Visit_2_1_3_3_2_4_5" in lines
    # all fields of a COLUMNS entry line up
    start = lines.index("COLUMNS") + 1
    entries = lines[start: lines.index("RHS")]
    assert len({ln.index(ln.split()[1]) for ln in entries}) == 1
    assert sum(1 for ln in entries if ln.split()[1] != "COST") == model5.nnz
    rhs = lines[lines.index("RHS") + 1: lines.index("BOUNDS")]
    assert [ln.split()[1:] for ln in rhs] == [["FlowInit", "1"]]


def test_file_helpers(tmp_path, model5):
    path = write_mps(model5, tmp_path / "m.mps")
    assert read_mps(path).same_as(model5)


def test_objective_signs_survive():
    model = build_model(generate_extreme("x72", 5))
    back = import_mps(export_mps(model))
    assert back.objective == model.objective
    assert min(model.objective.values()) < 0


def test_comments_and_blank_lines_are_ignored(model5):
    text = export_mps(model5).decode().replace("ROWS\n", "* a comment\n\nROWS\n", 1)
    assert import_mps(text).same_as(model5)


@pytest.mark.parametrize("edit", [
    lambda t: t.replace(" E  FlowInit", " L  FlowInit", 1),
    lambda t: t.replace("RHS\n    RHS", "RHS\n    RHS  Nowhere_1  1\n    RHS", 1),
    lambda t: t.replace("BOUNDS\n", "BOUNDS\n UP BND Y_2_1_3_2_1_3 1\n", 1),
    lambda t: t.replace("ROWS", "FOO", 1),
])
def test_unsupported_input_is_rejected(edit, model5):
    with pytest.raises(MpsFormatError):
        import_mps(edit(export_mps(model5).decode()))
