"""Null-versus-structured tests and community recovery.

Three statistics are compared: the second eigenvalue of the powered
graph, the normalized second nonbacktracking modulus, and the closed
nonbacktracking walk count. All are computed on the largest component.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from powerlab.config import ExperimentConfig
from powerlab.graph import Graph, largest_component
from powerlab.models import ModelParams, apply_perturbation, gen_adversary_clique
from powerlab.seeding import derive_seed, make_rng
from powerlab.spectral import nb_top_two, powered_matrix, top_eigs_sym, trace_nonbacktracking

log = logging.getLogger(__name__)

NULL, STRUCTURED = "null", "structured"
CSV_COLUMNS = ("trial", "truth", "method", "statistic", "threshold", "decision", "correct", "overlap", "seed", "wall_ms")

# stream keys for derive_seed
_TRIAL_STREAM, _CALIBRATION_STREAM = 0, 1


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    threshold: float
    decision: str
    method: str
    r_or_m: float
    truth: str | None = None

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "threshold": self.threshold,
            "decision": self.decision,
            "method": self.method,
            "r_or_m": self.r_or_m,
            "truth": self.truth,
        }


@dataclass(frozen=True)
class OverlapReport:
    overlap: float
    n_classified: int


def decide(statistic: float, threshold: float) -> str:
    return STRUCTURED if statistic > threshold else NULL


# ---------------------------------------------------------------------------
# Statistics


def _powered_pair(g: Graph, r: int, seed=0):
    """Second eigenpair of the powered largest component, plus the component's vertex ids."""
    comp, idx = largest_component(g)
    if comp.n < 2:
        raise ValueError("largest component has fewer than two vertices")
    res = top_eigs_sym(powered_matrix(comp, r), k=2, seed=seed)
    return float(res.eigenvalues[1]), res.eigenvectors[:, 1], idx


def powered_statistic(g: Graph, r: int, seed=0) -> float:
    return _powered_pair(g, r, seed)[0]


def nb_statistic(g: Graph, seed=0) -> float:
    comp, _ = largest_component(g)
    return nb_top_two(comp, seed=seed).ratio


def cycle_statistic(g: Graph, m: int) -> float:
    """``tr(B^m) / (2m)``, the closed nonbacktracking walk proxy for ``m``-cycles."""
    comp, _ = largest_component(g)
    return trace_nonbacktracking(comp, m) / (2 * m)


def powered_test(g: Graph, r: int, threshold: float, truth: str | None = None, seed=0) -> TestOutcome:
    stat = powered_statistic(g, r, seed)
    return TestOutcome(stat, threshold, decide(stat, threshold), "powered", r, truth)


def nb_test(g: Graph, threshold_factor: float = 1.2, truth: str | None = None, seed=0) -> TestOutcome:
    """Structured iff ``|lambda_2(B)| > threshold_factor * sqrt(lambda_1(B))``."""
    stat = nb_statistic(g, seed)
    return TestOutcome(stat, threshold_factor, decide(stat, threshold_factor), "nonbacktracking", threshold_factor, truth)


def cycle_count_test(g: Graph, m: int, threshold: float, truth: str | None = None) -> TestOutcome:
    if m < 3:
        raise ValueError(f"cycle length must be >= 3, got {m}")
    stat = cycle_statistic(g, m)
    return TestOutcome(stat, threshold, decide(stat, threshold), "cycle_count", m, truth)


# ---------------------------------------------------------------------------
# Community recovery


def overlap(pred, truth) -> float:
    """Fraction of agreeing labels, maximized over the global flip."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if len(pred) == 0:
        raise ValueError("no labels to compare")
    agree = float(np.mean(pred == truth))
    return max(agree, 1.0 - agree)


def recover_communities(g: Graph, r: int, seed=0) -> tuple[np.ndarray, OverlapReport | None]:
    """Label vertices 1/2 by the sign of the powered second eigenvector.

    Vertices outside the largest component get label 0. The overlap
    report is ``None`` when ``g`` has no planted labels.
    """
    _, vec, idx = _powered_pair(g, r, seed)
    labels = np.zeros(g.n, dtype=np.int8)
    labels[idx] = np.where(vec >= 0, 1, 2)
    if g.labels is None:
        return labels, None
    return labels, OverlapReport(overlap(labels[idx], g.labels[idx]), len(idx))


# ---------------------------------------------------------------------------
# Calibration


def _draw(params: ModelParams, seed: int, c: int, adversary: str) -> Graph:
    rng = make_rng(seed)
    g = params.generate(int(rng.integers(2**63)))
    if c > 0:
        h = gen_adversary_clique(g, c, int(rng.integers(2**63)), adversary)
        g = apply_perturbation(g, h)
    return g


def calibrate_threshold(
    null_params: ModelParams,
    r: int,
    trials: int = 50,
    quantile: float = 0.95,
    seed: int = 0,
    c: int = 0,
    adversary: str = "targeted",
) -> float:
    """Empirical ``quantile`` of the powered statistic over seeded null draws.

    With ``c > 0`` every null draw carries the same kind of adversarial
    clique as the graphs under test.
    """
    if trials < 10:
        raise ValueError(f"need at least 10 calibration trials, got {trials}")
    if not 0 < quantile < 1:
        raise ValueError(f"quantile must lie in (0, 1), got {quantile}")
    stats = [
        powered_statistic(_draw(null_params, derive_seed(seed, _CALIBRATION_STREAM, i), c, adversary), r)
        for i in range(trials)
    ]
    return float(np.quantile(stats, quantile))


def _calibration_job(args):
    cfg, i = args
    c = cfg.c if cfg.calibrate_adversary else 0
    g = _draw(cfg.null_params(), derive_seed(cfg.master_seed, _CALIBRATION_STREAM, i), c, cfg.adversary)
    out = {}
    if "powered" in cfg.methods:
        out["powered"] = powered_statistic(g, cfg.r)
    if "cycle_count" in cfg.methods:
        out["cycle_count"] = cycle_statistic(g, cfg.cycle_m)
    return out


def _map(fn, jobs, threads):
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))


def calibrate_thresholds(cfg: ExperimentConfig) -> dict[str, float]:
    thresholds = {}
    if "nonbacktracking" in cfg.methods:
        thresholds["nonbacktracking"] = cfg.nb_factor
    if {"powered", "cycle_count"} & set(cfg.methods):
        draws = _map(_calibration_job, [(cfg, i) for i in range(cfg.calibration_trials)], cfg.threads)
        for method in ("powered", "cycle_count"):
            if method in cfg.methods:
                thresholds[method] = float(np.quantile([d[method] for d in draws], cfg.quantile))
    return thresholds


# ---------------------------------------------------------------------------
# Experiment


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    thresholds: dict[str, float]
    rows: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def accuracy(self, method: str) -> float:
        rows = [row for row in self.rows if row["method"] == method]
        return float(np.mean([row["correct"] for row in rows])) if rows else float("nan")

    def mean_statistic(self, method: str, truth: str) -> float:
        vals = [row["statistic"] for row in self.rows if row["method"] == method and row["truth"] == truth]
        return float(np.mean(vals)) if vals else float("nan")

    def summary(self) -> dict:
        out = {}
        for method in self.config.methods:
            out[method] = {
                "accuracy": self.accuracy(method),
                "threshold": self.thresholds.get(method),
                "mean_statistic": {t: self.mean_statistic(method, t) for t in (NULL, STRUCTURED)},
            }
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(row[col]) for col in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config.echo(),
                "thresholds": self.thresholds,
                "summary": self.summary(),
                "errors": self.errors,
            },
            indent=2,
            sort_keys=True,
        )

    def write(self) -> None:
        if self.config.output:
            Path(self.config.output).write_text(self.to_csv())
        if self.config.json_output:
            Path(self.config.json_output).write_text(self.to_json() + "\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run_trial(cfg: ExperimentConfig, trial: int, thresholds: dict[str, float], seed: int | None = None) -> list[dict]:
    """All method rows for one trial; ``seed`` replays a recorded trial seed."""
    seed = derive_seed(cfg.master_seed, _TRIAL_STREAM, trial) if seed is None else seed
    rng = make_rng(seed)
    truth = STRUCTURED if rng.random() < 0.5 else NULL
    params = cfg.alt_params() if truth == STRUCTURED else cfg.null_params()
    g = _draw(params, int(rng.integers(2**63)), cfg.c, cfg.adversary)
    rows = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        ov = None
        if method == "powered":
            stat, vec, idx = _powered_pair(g, cfg.r)
            if g.labels is not None:
                ov = overlap(np.where(vec >= 0, 1, 2), g.labels[idx])
        elif method == "nonbacktracking":
            stat = nb_statistic(g)
        else:
            stat = cycle_statistic(g, cfg.cycle_m)
        wall = (time.perf_counter() - t0) * 1000 if cfg.record_timing else None
        threshold = thresholds[method]
        decision = decide(stat, threshold)
        rows.append(
            {
                "trial": trial,
                "truth": truth,
                "method": method,
                "statistic": float(stat),
                "threshold": float(threshold),
                "decision": decision,
                "correct": decision == truth,
                "overlap": ov,
                "seed": seed,
                "wall_ms": round(wall, 3) if wall is not None else None,
            }
        )
    return rows


def _trial_job(args):
    cfg, trial, thresholds = args
    try:
        return run_trial(cfg, trial, thresholds), None
    except (ValueError, RuntimeError) as exc:
        return [], {"trial": trial, "error": f"{type(exc).__name__}: {exc}"}


def run_distinguish_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Calibrate thresholds on null draws, then run ``cfg.trials`` coin-flip trials."""
    log.info("calibrating on %d null draws", cfg.calibration_trials)
    thresholds = calibrate_thresholds(cfg)
    log.info("thresholds %s", thresholds)
    results = _map(_trial_job, [(cfg, t, thresholds) for t in range(cfg.trials)], cfg.threads)
    report = ExperimentReport(cfg, thresholds)
    for rows, err in results:
        report.rows.extend(rows)
        if err:
            report.errors.append(err)
    for method, stats in report.summary().items():
        log.info("%s accuracy %.3f", method, stats["accuracy"])
    if write:
        report.write()
    return report
