"""The ``attack`` command line: run experiments, summarize traces,
compute metrics, and measure universal evasion rates."""

from __future__ import annotations

import argparse
import glob
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .config import ExperimentConfig, build_oracle, config_hash, load_config
from .core import LowDimPoint, Sample
from .errors import PerturboError
from .experiment import run_experiment
from .generators import GeneratorSpec, generate
from .metrics import (DEFAULT_LINF_THRESHOLD, compute_asr, compute_uar,
                      summarize_traces, uar_scale_factor, write_summary_csv)
from .trace import load_trace


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attack",
        description="Query-efficient hard-label black-box attacks via "
                    "Bayesian optimization over perturbation directions.",
    )
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's seed list with one seed")
    parser.add_argument("--out-dir", default=None, help="override output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment described by a config file")
    p_run.add_argument("--config", required=True, help="TOML experiment config")

    p_sum = sub.add_parser("summarize", help="median/quartile distance vs budget")
    p_sum.add_argument("--traces", required=True, help="glob of trace JSONL files")
    p_sum.add_argument("--budgets", required=True,
                       help="comma-separated query budgets, e.g. 50,100,200,300")
    p_sum.add_argument("--out", default=None, help="also write the table as CSV")

    p_met = sub.add_parser("metrics", help="attack success rate over a results manifest")
    p_met.add_argument("--results", required=True, help="manifest.json from a run")
    p_met.add_argument("--threshold", type=float, default=DEFAULT_LINF_THRESHOLD,
                       help="L-inf success threshold (default 16/255)")

    p_uar = sub.add_parser("uar", help="universal evasion rate of one perturbation")
    p_uar.add_argument("--generator", required=True,
                       help="TOML file with [generator] (kind, seed, coords) and [oracle]")
    p_uar.add_argument("--dataset", required=True,
                       help=".npz with 'samples' (n, d) and 'labels' (n,) arrays")
    p_uar.add_argument("--epsilon", type=float, default=DEFAULT_LINF_THRESHOLD)
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    seeds = [args.seed] if args.seed is not None else None
    manifest = run_experiment(cfg, out_dir=args.out_dir, seeds=seeds)
    out = Path(args.out_dir) if args.out_dir else cfg.out_dir
    print(f"{len(manifest['runs'])} runs complete; results in {out}")
    return 0


def _cmd_summarize(args) -> int:
    paths = sorted(glob.glob(args.traces))
    if not paths:
        print(f"no traces match {args.traces!r}", file=sys.stderr)
        return 1
    budgets = [int(b) for b in args.budgets.split(",") if b.strip()]
    traces = [load_trace(p) for p in paths]
    rows = summarize_traces(traces, budgets)
    print("budget,median,q1,q3,n")
    for row in rows:
        print(f"{row['budget']},{row['median']:.6g},{row['q1']:.6g},"
              f"{row['q3']:.6g},{row['n']}")
    if args.out:
        write_summary_csv(rows, args.out)
    return 0


class _ManifestResult:
    def __init__(self, entry):
        self.distance_l2 = entry["distance_l2"]
        self.distance_linf = entry["distance_linf"]


def _cmd_metrics(args) -> int:
    with open(args.results, encoding="utf-8") as fh:
        manifest = json.load(fh)
    results = [_ManifestResult(e) for e in manifest["runs"]]
    asr = compute_asr(results, args.threshold)
    l2s = [r.distance_l2 for r in results]
    linfs = [r.distance_linf for r in results]
    print(f"runs: {len(results)}")
    print(f"asr@{args.threshold:.6g}: {asr:.4f}")
    print(f"mean_l2: {np.mean(l2s):.6g}  median_l2: {np.median(l2s):.6g}")
    print(f"mean_linf: {np.mean(linfs):.6g}  median_linf: {np.median(linfs):.6g}")
    return 0


def _cmd_uar(args) -> int:
    spec_path = Path(args.generator)
    raw = tomllib.loads(spec_path.read_text(encoding="utf-8"))
    gtable = raw["generator"]
    ocfg = ExperimentConfig(raw=raw, base_dir=spec_path.parent,
                            config_hash=config_hash(raw))

    data = np.load(args.dataset)
    samples = np.asarray(data["samples"], dtype=np.float64)
    labels = [int(v) for v in data["labels"]]

    shape = tuple(int(v) for v in gtable["shape"]) if "shape" in gtable else None
    if shape is None:
        raise PerturboError("generator table needs a shape = [h, w, c] entry")
    dataset = [(Sample(row, shape), label) for row, label in zip(samples, labels)]
    oracle = build_oracle(ocfg, dataset[0][0])

    gen_spec = GeneratorSpec.make(gtable["kind"], shape, seed=int(gtable.get("seed", 0)))
    point = LowDimPoint(np.asarray(gtable["coords"], dtype=np.float64))
    pert = generate(gen_spec, point)
    scale = uar_scale_factor(pert, args.epsilon)
    rate = compute_uar(pert, dataset, oracle, args.epsilon)
    if scale < 1.0:
        print(f"perturbation rescaled by {scale:.6g} into the eps={args.epsilon:.6g} ball")
    print(f"uar: {rate:.4f} over {len(dataset)} samples")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "summarize": _cmd_summarize,
        "metrics": _cmd_metrics,
        "uar": _cmd_uar,
    }
    try:
        return handlers[args.command](args)
    except PerturboError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
