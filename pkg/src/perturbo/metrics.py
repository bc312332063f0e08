"""Distortion, success-rate, universal-evasion, and budget-curve metrics."""

from __future__ import annotations

import numpy as np

from .core import Sample
from .errors import EmptyDataset, EmptyResultSet, EmptyTraceSet, MissingPrefix, PerturboError, ShapeMismatch
from .generators import Perturbation

# The conventional success threshold: 16/255 in L-infinity.
DEFAULT_LINF_THRESHOLD = 16.0 / 255.0


def compute_distortion(x0: Sample, adv: Sample) -> tuple[float, float]:
    """(L2, L-infinity) distance between the original and the adversarial."""
    if x0.shape != adv.shape:
        raise ShapeMismatch(f"{x0.shape} != {adv.shape}")
    diff = adv.values - x0.values
    return float(np.linalg.norm(diff)), float(np.max(np.abs(diff)))


def compute_asr(results, threshold: float = DEFAULT_LINF_THRESHOLD) -> float:
    """Fraction of results whose L-infinity distortion is within threshold."""
    results = list(results)
    if not results:
        raise EmptyResultSet("no attack results")
    hits = sum(1 for r in results if r.distance_linf <= threshold)
    return hits / len(results)


def compute_uar(perturbation: Perturbation, dataset, oracle, epsilon: float) -> float:
    """Universal evasion rate of one fixed perturbation over a dataset.

    The perturbation is rescaled into the L-infinity epsilon ball when it
    exceeds it (callers report the rescale). ``dataset`` is a sequence of
    (Sample, true_label) pairs.
    """
    dataset = list(dataset)
    if not dataset:
        raise EmptyDataset("no samples")
    s = perturbation.values
    linf = float(np.max(np.abs(s)))
    if linf > epsilon and linf > 0:
        s = s * (epsilon / linf)
    evaded = 0
    for sample, true_label in dataset:
        shifted = Sample(sample.values + s, sample.shape)
        if oracle.classify(shifted) != true_label:
            evaded += 1
    return evaded / len(dataset)


def uar_scale_factor(perturbation: Perturbation, epsilon: float) -> float:
    """The factor compute_uar applies to keep s inside the epsilon ball."""
    linf = float(np.max(np.abs(perturbation.values)))
    if linf > epsilon and linf > 0:
        return epsilon / linf
    return 1.0


def summarize_traces(traces, budget_grid) -> list[dict]:
    """Median and quartiles of best-so-far distance at each budget.

    Quartiles use linear interpolation between order statistics. Every
    trace must have a record at or below each requested budget.
    """
    traces = list(traces)
    if not traces:
        raise EmptyTraceSet("no traces")
    rows = []
    for budget in budget_grid:
        try:
            values = np.array([t.best_at_budget(budget) for t in traces])
        except PerturboError as exc:
            raise MissingPrefix(str(exc)) from exc
        q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0], method="linear")
        rows.append({
            "budget": int(budget),
            "median": float(med),
            "q1": float(q1),
            "q3": float(q3),
            "n": len(values),
        })
    return rows


def write_summary_csv(rows, path) -> None:
    import csv
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["budget", "median", "q1", "q3", "n"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
