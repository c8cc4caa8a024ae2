"""Batch experiments: LP vs brute force on generated instances.

:func:`run_experiment` produces one :class:`ExperimentRecord` per instance
and solver form, with per-class averages in the layout of a small results
table.  :func:`search_gap` is the randomized audit: every instance whose LP
optimum falls short of the tour optimum, or whose solution does not
decompose into tours, is written out as a JSON counterexample certificate.

Errors raised while handling one instance are attached to its record and
the batch carries on.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from statistics import fmean

import numpy as np

from .decomposition import PathExplosion, decompose, solution_hash
from .indexing import UnsupportedSizeError
from .instance import TspInstance, format_instance, generate_extreme, generate_random
from .model import build_model
from .oracle import brute_force_opt
from .simplex import SolverOptions, Status, solve

log = logging.getLogger(__name__)

OUT_ENV = "TSPLP_OUT"
CSV_FORMAT = "tsplp-experiment/1"
CERT_FORMAT = "tsplp-gap-certificate/1"
GAP_TOL = 1e-6
CLASSES = ("atsp", "stsp", "xtsp")
EXTREME_KINDS = ("x71", "x72", "x73")
MIN_N, MAX_N = 5, 8


def default_out_dir() -> Path:
    """``$TSPLP_OUT`` if set, else ``./tsplp-out``."""
    return Path(os.environ.get(OUT_ENV, "tsplp-out"))


@dataclass
class ExperimentRecord:
    label: str
    cls: str
    n: int
    form: str
    seed: int | None
    status: str = ""
    lp_objective: float | None = None
    oracle_objective: float | None = None
    gap: float | None = None
    iterations: int | None = None
    wall_time: float | None = None
    tours_examined: int | None = None
    verdict: str = ""
    error: str = ""

    @property
    def lp_equals_oracle(self) -> bool:
        return self.gap is not None and abs(self.gap) <= GAP_TOL


def _check_n(n: int) -> None:
    if not MIN_N <= n <= MAX_N:
        raise UnsupportedSizeError(f"experiments run for {MIN_N} <= n <= {MAX_N}, got n={n}")


def class_instances(cls: str, n: int, count: int | None, seed: int) -> list[tuple[TspInstance, int | None]]:
    """The instances of one class; random classes use seeds ``seed, seed+1, ...``."""
    if cls == "xtsp":
        kinds = EXTREME_KINDS[: count] if count else EXTREME_KINDS
        return [(generate_extreme(k, n), None) for k in kinds]
    if cls not in ("atsp", "stsp"):
        raise ValueError(f"unknown instance class {cls!r}; expected one of {CLASSES}")
    count = 3 if count is None else count
    return [(generate_random(n, seed + k, symmetric=cls == "stsp"), seed + k) for k in range(count)]


def _decomposition_verdict(model, x) -> tuple[str, object]:
    try:
        dec = decompose(model, x, instance_label=model.label)
    except PathExplosion as exc:
        return "PathExplosion", exc
    return dec.verdict, dec


def evaluate(inst: TspInstance, cls: str, seed: int | None, forms=("primal", "dual"),
             opts: SolverOptions | None = None, with_decomposition: bool = True):
    """Records for one instance, plus the solutions and decompositions behind them."""
    oracle = brute_force_opt(inst)
    model = build_model(inst)
    records, details = [], []
    for form in forms:
        rec = ExperimentRecord(inst.label, cls, inst.n, form, seed,
                               oracle_objective=float(oracle.best_cost))
        sol = dec = None
        try:
            o = SolverOptions(**{**asdict(opts), "form": form}) if opts else SolverOptions(form=form)
            sol = solve(model, o)
            rec.status = sol.status.value
            rec.iterations = sol.iterations
            rec.wall_time = sol.wall_time
            rec.tours_examined = sol.tours_examined
            if sol.status == Status.OPTIMAL:
                rec.lp_objective = float(sol.objective)
                rec.gap = rec.oracle_objective - rec.lp_objective
                if with_decomposition:
                    rec.verdict, dec = _decomposition_verdict(model, sol.x)
        except Exception as exc:  # attach to the record, keep the batch going
            log.exception("instance %s (%s) failed", inst.label, form)
            rec.status = rec.status or "Error"
            rec.error = f"{type(exc).__name__}: {exc}"
        records.append(rec)
        details.append((model, oracle, sol, dec))
    return records, details


def run_experiment(cls: str, n: int, count: int | None = None, seed: int = 0,
                   forms=("primal", "dual"), opts: SolverOptions | None = None,
                   with_decomposition: bool = True) -> list[ExperimentRecord]:
    _check_n(n)
    records: list[ExperimentRecord] = []
    for inst, s in class_instances(cls, n, count, seed):
        recs, _ = evaluate(inst, cls, s, forms, opts, with_decomposition)
        records.extend(recs)
    return sorted(records, key=lambda r: (r.label, r.form))


def averages(records: list[ExperimentRecord]) -> list[dict]:
    """Per (class, n, form) means over the records that reached an optimum."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in records:
        groups.setdefault((r.cls, r.n, r.form), []).append(r)
    rows = []
    for (cls, n, form), rs in sorted(groups.items()):
        ok = [r for r in rs if r.lp_objective is not None]

        def mean(attr):
            vals = [getattr(r, attr) for r in ok if getattr(r, attr) is not None]
            return fmean(vals) if vals else None

        rows.append({
            "cls": cls, "n": n, "form": form, "instances": len(rs), "solved": len(ok),
            "lp_objective": mean("lp_objective"), "oracle_objective": mean("oracle_objective"),
            "iterations": mean("iterations"), "wall_time": mean("wall_time"),
            "tours_examined": mean("tours_examined"),
        })
    return rows


def records_csv(records: list[ExperimentRecord], with_time: bool = True) -> str:
    names = [f.name for f in fields(ExperimentRecord) if with_time or f.name != "wall_time"]
    buf = io.StringIO()
    buf.write(f"# {CSV_FORMAT}\n")
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in records:
        w.writerow({k: ("" if v is None else v) for k, v in asdict(r).items()})
    return buf.getvalue()


def write_records(records: list[ExperimentRecord], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(records_csv(records))
    return path


def _fmt(v, fmt):
    if v is None:
        return format("-", ">" + fmt.split(".")[0].rstrip("df"))
    return format(v, fmt)


def format_table(records: list[ExperimentRecord]) -> str:
    """Per-instance rows followed by class averages, as plain text."""
    head = f"{'instance':<14}{'form':<8}{'value':>12}{'oracle':>10}{'iter':>8}{'sec':>9}{'tours':>7}  verdict"
    lines = [head, "-" * len(head)]
    for r in records:
        lines.append(f"{r.label:<14}{r.form:<8}{_fmt(r.lp_objective, '12.4f')}"
                     f"{_fmt(r.oracle_objective, '10.0f')}{_fmt(r.iterations, '8d')}"
                     f"{_fmt(r.wall_time, '9.2f')}{_fmt(r.tours_examined, '7d')}  {r.verdict or r.error}")
    lines.append("")
    for a in averages(records):
        name = f"avg {a['cls']}{a['n']}"
        lines.append(f"{name:<14}{a['form']:<8}{_fmt(a['lp_objective'], '12.4f')}"
                     f"{_fmt(a['oracle_objective'], '10.1f')}{_fmt(a['iterations'], '8.0f')}"
                     f"{_fmt(a['wall_time'], '9.2f')}{_fmt(a['tours_examined'], '7.1f')}")
    lines.append("tours = distinct integral vertices decoded during the primal solve")
    return "\n".join(lines)


# -- gap search -------------------------------------------------------------

@dataclass
class GapReport:
    n: int
    symmetric: bool
    seed: int
    form: str
    records: list[ExperimentRecord]
    certificates: list[Path] = field(default_factory=list)

    @property
    def equality_rate(self) -> float:
        solved = [r for r in self.records if r.gap is not None]
        return sum(r.lp_equals_oracle for r in solved) / len(solved) if solved else 0.0

    @property
    def min_gap(self) -> float | None:
        gaps = [r.gap for r in self.records if r.gap is not None]
        return min(gaps) if gaps else None

    def summary(self) -> dict:
        return {
            "n": self.n, "symmetric": self.symmetric, "seed": self.seed, "form": self.form,
            "instances": len(self.records),
            "solved": sum(r.gap is not None for r in self.records),
            "equality_rate": self.equality_rate,
            "min_gap": self.min_gap,
            "max_gap": max((r.gap for r in self.records if r.gap is not None), default=None),
            "certificates": [str(p) for p in self.certificates],
        }


def counterexample(inst: TspInstance, rec: ExperimentRecord, model, oracle, sol, dec) -> dict:
    """Everything needed to re-check one suspicious instance by hand."""
    x = np.asarray(sol.x, dtype=float)
    support = np.flatnonzero(np.abs(x) > 1e-12)
    doc = {
        "format": CERT_FORMAT,
        "instance": {"label": inst.label, "n": inst.n, "seed": rec.seed,
                     "matrix": format_instance(inst)},
        "form": rec.form,
        "lp_objective": rec.lp_objective,
        "oracle_objective": rec.oracle_objective,
        "oracle_tour": list(oracle.best_tour.order),
        "gap": rec.gap,
        "verdict": rec.verdict,
        "solution_hash": solution_hash(x),
        "solution": {model.space.column_name(int(j)): float(x[j]) for j in support},
    }
    if dec is not None and not isinstance(dec, Exception):
        doc["tours"] = [[list(t.order), lam] for t, lam in dec.tours]
        if dec.certificate is not None:
            doc["decomposition_failure"] = dec.certificate
    elif dec is not None:
        doc["decomposition_failure"] = {"error": str(dec)}
    return doc


def search_gap(n: int, count: int, seed: int = 0, symmetric: bool = False, form: str = "dual",
               out_dir=None, opts: SolverOptions | None = None) -> GapReport:
    _check_n(n)
    out = Path(out_dir) if out_dir is not None else default_out_dir()
    report = GapReport(n, symmetric, seed, form, [])
    cls = "stsp" if symmetric else "atsp"
    for inst, s in class_instances(cls, n, count, seed):
        recs, details = evaluate(inst, cls, s, (form,), opts)
        rec, (model, oracle, sol, dec) = recs[0], details[0]
        report.records.append(rec)
        suspicious = rec.gap is not None and (rec.gap > GAP_TOL or rec.verdict != "Reconstructed")
        if suspicious:
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"counterexample_{inst.label}_{form}.json"
            path.write_text(json.dumps(counterexample(inst, rec, model, oracle, sol, dec), indent=2))
            report.certificates.append(path)
            log.warning("counterexample candidate %s: gap=%.6g verdict=%s", inst.label, rec.gap, rec.verdict)
    return report
