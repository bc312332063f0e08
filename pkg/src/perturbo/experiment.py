"""Experiment driver: run every (task, seed) attack, persist traces,
write the summary table and the results manifest.

Trace files are written incrementally, so an interrupted experiment
leaves valid traces for every query made so far plus manifest entries
for completed runs.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from .config import (ExperimentConfig, build_bo_config, build_generator_spec,
                     build_oracle, build_search_params, build_task, load_origin)
from .engine import run_attack, run_random_baseline
from .errors import NoAdversarialFound
from .metrics import summarize_traces, write_summary_csv
from .trace import TraceWriter, load_trace


def run_experiment(cfg: ExperimentConfig, out_dir=None, seeds=None,
                   clock=time.perf_counter) -> dict:
    """Execute the configured experiment; returns the manifest dict.

    ``clock`` is injectable so tests can pin the elapsed_ms column; real
    runs use the wall clock.
    """
    out = Path(out_dir) if out_dir is not None else cfg.out_dir
    trace_dir = out / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)
    seeds = list(seeds) if seeds is not None else cfg.seeds

    manifest = {"config_hash": cfg.config_hash, "attack": cfg.attack_kind, "runs": []}
    manifest_path = out / "manifest.json"
    trace_paths = []

    try:
        for task_idx, task_table in enumerate(cfg.task_tables):
            for seed in seeds:
                entry = _run_one(cfg, task_idx, task_table, seed, trace_dir, clock)
                manifest["runs"].append(entry)
                trace_paths.append(out / entry["trace"])
    finally:
        # Keep whatever completed even if a run blew up mid-experiment.
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    traces = [load_trace(p) for p in trace_paths]
    rows = summarize_traces(traces, cfg.summary_budgets)
    write_summary_csv(rows, out / "summary.csv")
    return manifest


def _run_one(cfg: ExperimentConfig, task_idx: int, task_table: dict, seed: int,
             trace_dir: Path, clock) -> dict:
    # The oracle may depend on the task origin (halfspace bias, sphere center).
    origin = load_origin(cfg, task_table)
    oracle = build_oracle(cfg, origin)
    task = build_task(cfg, task_table, oracle)
    gen_spec = build_generator_spec(cfg, task.origin.shape)
    search = build_search_params(cfg, task.origin.dim)

    trace_path = trace_dir / f"task{task_idx}_seed{seed}.jsonl"
    header = {"config_hash": cfg.config_hash, "seed": seed, "task": task_idx}
    writer = TraceWriter(trace_path, header)
    try:
        try:
            if cfg.attack_kind == "bo":
                result = run_attack(task, gen_spec, build_bo_config(cfg, seed),
                                    search, clock=clock, trace_header=header,
                                    record_hook=writer.write)
            else:
                result = run_random_baseline(task, gen_spec, search, seed=seed,
                                             clock=clock, trace_header=header,
                                             record_hook=writer.write)
            found = result.found_adversarial
        except NoAdversarialFound as exc:
            result = exc.result
            found = False
    finally:
        writer.close()

    return {
        "task": task_idx,
        "seed": seed,
        "trace": str(trace_path.relative_to(trace_dir.parent)),
        "distance_l2": result.distance_l2,
        "distance_linf": result.distance_linf,
        "queries_used": result.queries_used,
        "converged": result.converged,
        "found_adversarial": found,
    }
