"""Failure detection, failure diversity, run comparison and report files."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import _kernels
from .objective import ObjectiveScore
from .search import EvaluationRecord, SearchResult

__all__ = [
    "EvaluationRecord", "DiversityStats", "detect_failures", "diversity", "summarize",
    "compare_runs", "emit_reports", "record_to_json", "record_from_json", "read_evaluations",
]


@dataclass(frozen=True)
class DiversityStats:
    """Pairwise genotype distances among failures.

    ``sufficient`` is False when fewer than two failures exist; the matrix is
    then empty and ``range`` is None.
    """

    pairwise_matrix: np.ndarray
    avg_pairwise_per_case: np.ndarray
    range: tuple[float, float] | None

    @property
    def sufficient(self) -> bool:
        return self.range is not None

    @property
    def mean(self) -> float:
        return float(np.mean(self.avg_pairwise_per_case)) if self.sufficient else math.nan


def detect_failures(records: Iterable[EvaluationRecord]) -> list[EvaluationRecord]:
    return [r for r in records if r.score.acc >= 1]


def diversity(failures: Sequence[EvaluationRecord] | np.ndarray) -> DiversityStats:
    if isinstance(failures, np.ndarray):
        genotypes = np.ascontiguousarray(failures, dtype=np.float64)
    else:
        genotypes = np.array([f.genotype for f in failures], dtype=np.float64)
    n = len(genotypes)
    if n < 2:
        return DiversityStats(np.zeros((n, n)), np.zeros(n), None)
    genotypes = genotypes.reshape(n, -1)
    matrix = _kernels.pairwise_distances(np.ascontiguousarray(genotypes))
    avgs = np.empty(n)
    for i in range(n):
        total = 0.0
        for j in range(n):
            if j != i:
                total += matrix[i, j]
        avgs[i] = total / (n - 1)
    return DiversityStats(matrix, avgs, (float(avgs.min()), float(avgs.max())))


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def summarize(result: SearchResult) -> dict[str, Any]:
    records = result.evaluations
    scored = [r for r in records if r.error is None]
    failures = detect_failures(records)
    stats = diversity(failures)
    return {
        "strategy": result.strategy_name,
        "evaluations": len(records),
        "failed_evaluations": len(records) - len(scored),
        "failures": len(failures),
        "total_journey_distance": sum(r.score.journey_distance for r in scored),
        "total_ego_agents_distance": sum(r.score.ego_agents_distance for r in scored),
        "avg_journey_distance_all": _mean([r.score.journey_distance for r in scored]),
        "avg_ego_agents_distance_all": _mean([r.score.ego_agents_distance for r in scored]),
        "failure_total_journey_distance": sum(r.score.journey_distance for r in failures),
        "failure_total_ego_agents_distance": sum(r.score.ego_agents_distance for r in failures),
        "avg_journey_distance_failures": _mean([r.score.journey_distance for r in failures]),
        "avg_ego_agents_distance_failures": _mean([r.score.ego_agents_distance for r in failures]),
        "diversity_min": stats.range[0] if stats.sufficient else None,
        "diversity_max": stats.range[1] if stats.sufficient else None,
        "diversity_mean": stats.mean if stats.sufficient else None,
        "best_e_value": _finite_or_none(result.best.score.e_value) if result.best else None,
        "config": result.config,
    }


SUMMARY_FIELDS = [
    "strategy", "evaluations", "failed_evaluations", "failures",
    "total_journey_distance", "total_ego_agents_distance",
    "avg_journey_distance_all", "avg_ego_agents_distance_all",
    "failure_total_journey_distance", "failure_total_ego_agents_distance",
    "avg_journey_distance_failures", "avg_ego_agents_distance_failures",
    "diversity_min", "diversity_max", "diversity_mean", "best_e_value",
]


def compare_runs(run_a: SearchResult, run_b: SearchResult) -> dict[str, Any]:
    """Per-strategy summaries plus ``a - b`` deltas for every numeric field."""
    a, b = summarize(run_a), summarize(run_b)
    delta = {}
    for key in SUMMARY_FIELDS[1:]:
        va, vb = a[key], b[key]
        delta[key] = va - vb if va is not None and vb is not None else None
    return {"runs": [a, b], "delta": delta}


# --------------------------------------------------------------------------
# serialization


def _finite_or_none(x: float) -> float | None:
    return x if math.isfinite(x) else None


def record_to_json(r: EvaluationRecord) -> str:
    return json.dumps({
        "eval_index": r.eval_index,
        "strategy": r.strategy_name,
        "genotype": list(r.genotype),
        "ego_agents_distance": r.score.ego_agents_distance,
        "journey_distance": r.score.journey_distance,
        "acc": r.score.acc,
        "e_value": _finite_or_none(r.score.e_value),
        "is_failure": r.is_failure,
        "collisions": [list(c) for c in r.collisions],
        "error": r.error,
    })


def record_from_json(line: str) -> EvaluationRecord:
    d = json.loads(line)
    e_value = d["e_value"]
    score = ObjectiveScore(float(d["ego_agents_distance"]), float(d["journey_distance"]),
                           int(d["acc"]), math.inf if e_value is None else float(e_value))
    return EvaluationRecord(
        int(d["eval_index"]), d["strategy"], tuple(float(x) for x in d["genotype"]), score,
        tuple((int(i), str(a)) for i, a in d.get("collisions", [])), d.get("error"),
    )


def read_evaluations(path: str | Path) -> list[EvaluationRecord]:
    with open(path, encoding="utf-8") as fh:
        return [record_from_json(line) for line in fh if line.strip()]


def _csv_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_reports(summary: dict[str, Any], records: Sequence[EvaluationRecord],
                 out_dir: str | Path) -> list[Path]:
    """Write evaluations.jsonl, summary.json, diversity.csv and comparison.csv."""
    out = Path(out_dir)
    paths = [out / name for name in ("evaluations.jsonl", "summary.json", "diversity.csv",
                                     "comparison.csv")]
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(paths[0], "w", encoding="utf-8", newline="\n") as fh:
            for r in records:
                fh.write(record_to_json(r) + "\n")

        with open(paths[1], "w", encoding="utf-8", newline="\n") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

        strategies: list[str] = []
        for r in records:
            if r.strategy_name not in strategies:
                strategies.append(r.strategy_name)
        with open(paths[2], "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["strategy", "eval_index", "avg_pairwise_distance"])
            for name in strategies:
                failures = detect_failures(r for r in records if r.strategy_name == name)
                stats = diversity(failures)
                if stats.sufficient:
                    for rec, avg in zip(failures, stats.avg_pairwise_per_case):
                        w.writerow([name, rec.eval_index, repr(float(avg))])

        runs = summary.get("runs", [summary] if "strategy" in summary else [])
        with open(paths[3], "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_FIELDS)
            for run in runs:
                w.writerow([_csv_value(run.get(k)) for k in SUMMARY_FIELDS])
    except OSError as exc:
        raise OSError(f"cannot write reports to {out}: {exc}") from exc
    return paths
