"""MPS export and import for :class:`~tsplp.model.SparseLpModel`.

Row names are ``RowTag`` names (``LayerB_3_7``) and column names follow the
``Y_i_r_j_k_s_t`` / ``Z_...`` scheme, so they run past the classic
8-character fields.  The writer keeps the fixed-column layout but widens
each name field to the longest name in the model; every field is separated
by at least two spaces and no name contains a blank, so the reader splits
on whitespace.  Output is a pure function of the model: rows in model order,
columns in column order, entries within a column by row.
"""
from __future__ import annotations

import io
from fractions import Fraction
from pathlib import Path

import numpy as np

from .indexing import parse_column_name, variable_space
from .model import RowTag, SparseLpModel, assemble

OBJ_ROW = "COST"
RHS_SET = "RHS"


class MpsFormatError(ValueError):
    pass


def _num(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def _parse_num(tok: str):
    try:
        return int(tok)
    except ValueError:
        return Fraction(tok)


def export_mps(model: SparseLpModel) -> bytes:
    """The model as MPS text (ASCII bytes, LF line endings)."""
    space = model.space
    row_names = [t.name() for t in model.tags]
    col_names = space.column_names()
    wr = max(len(OBJ_ROW), *(len(r) for r in row_names))
    wc = max(len(RHS_SET), *(len(c) for c in col_names))

    A = model.A_int.tocsc()
    A.sort_indices()
    out = io.StringIO()
    out.write(f"NAME          {model.label or 'tsplp'}\n")
    out.write("ROWS\n")
    out.write(f" N  {OBJ_ROW}\n")
    for r in row_names:
        out.write(f" E  {r}\n")
    out.write("COLUMNS\n")
    for j, cname in enumerate(col_names):
        cost = model.objective.get(j, 0)
        if cost != 0:
            out.write(f"    {cname:<{wc}}  {OBJ_ROW:<{wr}}  {_num(cost)}\n")
        for k in range(A.indptr[j], A.indptr[j + 1]):
            out.write(f"    {cname:<{wc}}  {row_names[A.indices[k]]:<{wr}}  {_num(A.data[k])}\n")
    out.write("RHS\n")
    for r, b in zip(row_names, model.rhs):
        if b != 0:
            out.write(f"    {RHS_SET:<{wc}}  {r:<{wr}}  {_num(b)}\n")
    out.write("BOUNDS\n")  # every column keeps the default bound x >= 0
    out.write("ENDATA\n")
    return out.getvalue().encode("ascii")


def write_mps(model: SparseLpModel, path) -> Path:
    path = Path(path)
    path.write_bytes(export_mps(model))
    return path


def import_mps(data: bytes | str) -> SparseLpModel:
    """Rebuild a model from :func:`export_mps` output.

    The variable space is recovered from the largest city index in the column
    names; every column name must belong to that space.
    """
    text = data.decode("ascii") if isinstance(data, bytes) else data
    label = ""
    section = None
    row_order: list[str] = []
    obj_row = None
    entries: dict[str, dict[str, object]] = {}
    rhs: dict[str, object] = {}
    cost: dict[str, object] = {}
    col_seen: list[str] = []

    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("*"):
            continue
        if not line[0].isspace():
            head = line.split()
            section = head[0]
            if section == "NAME":
                label = head[1] if len(head) > 1 else ""
                label = "" if label == "tsplp" else label
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES"):
                raise MpsFormatError(f"line {lineno}: unknown section {section!r}")
            continue
        tok = line.split()
        if section == "ROWS":
            kind, name = tok
            if kind == "N":
                if obj_row is None:
                    obj_row = name
            elif kind == "E":
                row_order.append(name)
                entries[name] = {}
            else:
                raise MpsFormatError(f"line {lineno}: only equality rows are supported, got {kind}")
        elif section == "COLUMNS":
            col = tok[0]
            if not col_seen or col_seen[-1] != col:
                col_seen.append(col)
            for rname, val in zip(tok[1::2], tok[2::2]):
                v = _parse_num(val)
                if rname == obj_row:
                    cost[col] = v
                elif rname in entries:
                    entries[rname][col] = v
                else:
                    raise MpsFormatError(f"line {lineno}: unknown row {rname!r}")
        elif section == "RHS":
            for rname, val in zip(tok[1::2], tok[2::2]):
                if rname not in entries:
                    raise MpsFormatError(f"line {lineno}: unknown row {rname!r}")
                rhs[rname] = _parse_num(val)
        elif section == "BOUNDS":
            kind, _, col, *val = tok
            if kind != "LO" or _parse_num(val[0]) != 0:
                raise MpsFormatError(f"line {lineno}: only the default bound x >= 0 is supported")
        elif section == "RANGES":
            raise MpsFormatError(f"line {lineno}: RANGES are not supported")

    if not col_seen:
        raise MpsFormatError("no columns")
    n = max(max(parse_column_name(c)[0][::2] + parse_column_name(c)[-1][::2]) for c in col_seen)
    space = variable_space(n)

    def column(name: str) -> int:
        try:
            return space.column_of(parse_column_name(name))
        except KeyError:
            raise MpsFormatError(f"column {name!r} is not in the n={n} variable space") from None

    rows = []
    for rname in row_order:
        terms = sorted((column(c), v) for c, v in entries[rname].items())
        rows.append((RowTag.parse(rname), terms, rhs.get(rname, 0)))
    objective = {column(c): v for c, v in cost.items()}
    return assemble(space, rows, objective, label=label)


def read_mps(path) -> SparseLpModel:
    return import_mps(Path(path).read_bytes())
