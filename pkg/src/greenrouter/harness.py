"""Benchmark harness: run records, the best-known registry, result tables
and the parallel batch runner."""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from .errors import ValidationError
from .orchestrator import SearchParams, solve


@dataclass
class RunRecord:
    """One solver run distilled for reporting."""

    instance: str
    problem: str
    seed: int
    mode: str
    cost: float
    routes: int
    cpu_seconds: float
    gap_percent: Optional[float] = None
    percent_dist_other: Optional[float] = None
    distance: Optional[float] = None
    feasible: bool = True
    group: str = ""


class BksRegistry:
    """Best-known costs and route counts, keyed by (problem, instance)."""

    def __init__(self, rows=None):
        self._data = {}
        for row in rows or []:
            self.add(row["instance"], row["problem"], float(row["cost"]),
                     int(row["routes"]), row.get("source", ""))

    @classmethod
    def bundled(cls) -> "BksRegistry":
        text = (resources.files("greenrouter.data") / "bks.csv").read_text()
        return cls(csv.DictReader(io.StringIO(text)))

    @classmethod
    def from_file(cls, path) -> "BksRegistry":
        with open(path) as fh:
            return cls(csv.DictReader(fh))

    def add(self, instance, problem, cost, routes, source=""):
        if cost <= 0:
            raise ValidationError(f"nonpositive reference cost for {instance}")
        self._data[(problem.upper(), instance)] = (cost, routes, source)

    def lookup(self, instance: str, problem: str):
        return self._data.get((problem.upper(), instance))

    def gap(self, instance: str, problem: str, cost: float) -> Optional[float]:
        ref = self.lookup(instance, problem)
        if ref is None:
            return None
        return 100.0 * (cost - ref[0]) / ref[0]

    def __len__(self):
        return len(self._data)


def run_once(inst, seed: int, mode: str = "dynamic",
             params: Optional[SearchParams] = None,
             registry: Optional[BksRegistry] = None,
             name: Optional[str] = None, progress=None) -> RunRecord:
    """Solve one instance once and distill the result."""
    params = params or SearchParams.for_problem(inst.problem_kind, seed=seed)
    if params.rng_seed != seed:
        params = SearchParams(**{**params.__dict__, "rng_seed": seed})
    t0 = time.monotonic()
    result, trace = solve(inst, params, mode=mode, progress=progress)
    cpu = time.monotonic() - t0
    label = name or inst.name
    gap = registry.gap(label, inst.problem_kind, result.cost) if registry else None
    return RunRecord(
        instance=label, problem=inst.problem_kind, seed=seed, mode=mode,
        cost=result.cost, routes=result.n_routes, cpu_seconds=cpu,
        gap_percent=gap, percent_dist_other=trace.percent_dist_other,
        distance=result.total_distance(inst), feasible=result.feasible,
        group=_group_of(label),
    )


def _group_of(name: str) -> str:
    base = name.split("_")[0]
    if "-" in name:
        return f"{base}-{name.rsplit('-', 1)[1]}"
    return base


CSV_COLUMNS = ("instance", "group", "problem", "seed", "mode", "cost",
               "distance", "routes", "cpu_seconds", "gap_percent",
               "percent_dist_other", "feasible")


def _fmt_cell(rec: RunRecord, col: str) -> str:
    v = getattr(rec, col)
    if v is None:
        return "-"
    if col in ("cost", "distance", "gap_percent", "percent_dist_other"):
        return f"{v:.2f}"
    if col == "cpu_seconds":
        return f"{v:.2f}"
    return str(v)


def emit_csv(records: Sequence[RunRecord], sink) -> None:
    """Stable-order CSV with two-decimal cost formatting."""
    sink.write(",".join(CSV_COLUMNS) + "\n")
    for rec in sorted(records, key=lambda r: (r.group, r.instance, r.seed)):
        sink.write(",".join(_fmt_cell(rec, c) for c in CSV_COLUMNS) + "\n")


def emit_table(records: Sequence[RunRecord], sink) -> None:
    """Aligned text table with per-group average rows."""
    if not records:
        raise ValidationError("no records to report")
    header = ("Instance", "Seed", "Mode", "Cost", "Dist.", "|R|",
              "CPU (s)", "Gap (%)", "%Dist")
    rows = []
    groups: dict[str, list[RunRecord]] = {}
    for rec in sorted(records, key=lambda r: (r.group, r.instance, r.seed)):
        groups.setdefault(rec.group, []).append(rec)
    for group in groups.values():
        for r in group:
            rows.append((r.instance, str(r.seed), r.mode,
                         f"{r.cost:.2f}",
                         "-" if r.distance is None else f"{r.distance:.2f}",
                         str(r.routes), f"{r.cpu_seconds:.2f}",
                         "-" if r.gap_percent is None else f"{r.gap_percent:.2f}",
                         "-" if r.percent_dist_other is None
                         else f"{r.percent_dist_other:.2f}"))
        rows.append(_group_average_row(group))
    widths = [max(len(h), *(len(r[i]) for r in rows))
              for i, h in enumerate(header)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    sink.write(line.rstrip() + "\n")
    sink.write("-" * len(line) + "\n")
    for row in rows:
        sink.write("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n")


def _group_average_row(group: Sequence[RunRecord]):
    n = len(group)
    avg_cost = sum(r.cost for r in group) / n
    avg_cpu = sum(r.cpu_seconds for r in group) / n
    gaps = [r.gap_percent for r in group if r.gap_percent is not None]
    avg_gap = f"{sum(gaps) / len(gaps):.2f}" if gaps else "-"
    return (f"avg {group[0].group}", "-", "-", f"{avg_cost:.2f}", "-", "-",
            f"{avg_cpu:.2f}", avg_gap, "-")


def aggregate_gap(records: Sequence[RunRecord]) -> Optional[float]:
    """Unweighted mean of per-instance mean gaps."""
    per_instance: dict[str, list[float]] = {}
    for r in records:
        if r.gap_percent is not None:
            per_instance.setdefault(r.instance, []).append(r.gap_percent)
    if not per_instance:
        return None
    means = [sum(v) / len(v) for v in per_instance.values()]
    return sum(means) / len(means)


def worker_count(jobs: int) -> int:
    cap = os.environ.get("GREEN_ROUTER_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, jobs))


def _bench_job(args):
    path, format, problem, mode, seed, params_kw, fleet = args
    from .instance import parse_instance
    inst = parse_instance(path, format=format, problem_kind=problem,
                          fleet_size=fleet)
    params = SearchParams.for_problem(inst.problem_kind, seed=seed, **params_kw)
    registry = BksRegistry.bundled()
    name = os.path.splitext(os.path.basename(path))[0]
    return run_once(inst, seed, mode=mode, params=params, registry=registry,
                    name=name)


def run_bench(paths: Sequence[str], format: str, problem: Optional[str],
              mode: str, seeds: Sequence[int], params_kw=None,
              fleet: Optional[int] = None, parallel: bool = True):
    """Fan instance x seed jobs across processes, merge deterministically."""
    params_kw = params_kw or {}
    jobs = [(str(p), format, problem, mode, s, params_kw, fleet)
            for p in paths for s in seeds]
    nproc = worker_count(len(jobs))
    if parallel and nproc > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(nproc) as pool:
            records = pool.map(_bench_job, jobs)
    else:
        records = [_bench_job(j) for j in jobs]
    records.sort(key=lambda r: (r.instance, r.seed))
    return records
