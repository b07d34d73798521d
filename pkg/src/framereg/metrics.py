"""Evaluation against ground truth and seeded trial batches."""

import time
from dataclasses import dataclass, replace

import numpy as np

from .engine import EngineConfig, register
from .synth import SceneSpec, generate


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    true_pos: int
    false_pos: int
    false_neg: int
    iterations: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class BatchSummary:
    """Mean/variance aggregates over a batch of seeded trials."""

    trial_count: int
    failures: int
    f1_mean: float
    f1_var: float
    precision_mean: float
    precision_var: float
    recall_mean: float
    recall_var: float
    iters_mean: float
    iters_var: float
    time_mean: float
    spec: SceneSpec = None
    config: EngineConfig = None


def evaluate(found, truth) -> EvalReport:
    """Precision/recall/F1 of found (model, data) pairs against the truth set.

    `found` entries may carry a trailing posterior; only the index pair counts.
    Zero denominators yield 0 by convention.
    """
    found_pairs = {(c[0], c[1]) for c in found}
    truth = set(truth)
    tp = len(found_pairs & truth)
    fp = len(found_pairs) - tp
    fn = len(truth) - tp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / len(truth) if truth else 0.0
    f1 = (2.0 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return EvalReport(precision=precision, recall=recall, f1=f1,
                      true_pos=tp, false_pos=fp, false_neg=fn)


def run_trial(spec: SceneSpec, cfg: EngineConfig):
    """Generate one scene, register it and score the reported matches.

    Returns (EvalReport, MatchResult)."""
    scene = generate(spec)
    start = time.perf_counter()
    result = register(scene.data, scene.model, cfg)
    elapsed = time.perf_counter() - start
    report = evaluate(result.correspondences, scene.ground_truth)
    return replace(report, iterations=result.iterations, wall_time=elapsed), result


def run_batch(spec: SceneSpec, cfg: EngineConfig, trials: int) -> BatchSummary:
    """Run `trials` seeded scenes (seed = spec.seed + index) and aggregate.

    Degenerate registrations count as failures and are excluded from the
    metric aggregates; an all-failure batch reports zeros.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    reports = []
    failures = 0
    for i in range(trials):
        report, result = run_trial(replace(spec, seed=spec.seed + i), cfg)
        if result.degenerate:
            failures += 1
        else:
            reports.append(report)

    def agg(attr):
        vals = np.array([getattr(r, attr) for r in reports], dtype=float)
        if vals.size == 0:
            return 0.0, 0.0
        return float(vals.mean()), float(vals.var())

    f1_m, f1_v = agg("f1")
    p_m, p_v = agg("precision")
    r_m, r_v = agg("recall")
    it_m, it_v = agg("iterations")
    t_m, _ = agg("wall_time")
    return BatchSummary(trial_count=trials, failures=failures,
                        f1_mean=f1_m, f1_var=f1_v,
                        precision_mean=p_m, precision_var=p_v,
                        recall_mean=r_m, recall_var=r_v,
                        iters_mean=it_m, iters_var=it_v, time_mean=t_m,
                        spec=spec, config=cfg)
