"""TOML experiment configuration: parsing, validation, object construction.

A config names the oracle, the generator family, the attack kind, the
task list (samples, labels, mode), search/BO parameters, the query
budget, seeds, and output paths. Referenced files must exist at load
time. The canonical-JSON hash of the parsed config goes into every trace
header so traces are traceable to the exact configuration.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .boundary import SearchParams
from .core import AttackTask, Sample
from .engine import BOConfig
from .errors import ConfigError
from .generators import GENERATOR_KINDS, GeneratorSpec
from .oracles import HalfspaceOracle, MlpOracle, RemoteOracle, SphereOracle, SqueezeWrapper

ORACLE_KINDS = ("halfspace", "sphere", "mlp", "remote")
ATTACK_KINDS = ("bo", "random")


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path
    config_hash: str

    @property
    def budget(self) -> int:
        return int(self.raw["budget"])

    @property
    def seeds(self) -> list[int]:
        return [int(s) for s in self.raw.get("seeds", [0])]

    @property
    def out_dir(self) -> Path:
        return self.base_dir / self.raw.get("out_dir", "results")

    @property
    def attack_kind(self) -> str:
        return self.raw["attack"].get("kind", "bo")

    @property
    def task_tables(self) -> list[dict]:
        return self.raw["tasks"]

    @property
    def summary_budgets(self) -> list[int]:
        if "summary_budgets" in self.raw:
            return [int(b) for b in self.raw["summary_budgets"]]
        b = self.budget
        return sorted({max(1, b // 4), max(1, b // 2), max(1, 3 * b // 4), b})


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = ExperimentConfig(raw=raw, base_dir=path.parent, config_hash=config_hash(raw))
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    raw = cfg.raw
    for key in ("budget", "oracle", "generator", "attack", "tasks"):
        if key not in raw:
            raise ConfigError(f"missing required config key: {key}")
    if int(raw["budget"]) < 1:
        raise ConfigError("budget must be >= 1")
    okind = raw["oracle"].get("kind")
    if okind not in ORACLE_KINDS:
        raise ConfigError(f"oracle.kind must be one of {ORACLE_KINDS}, got {okind!r}")
    gkind = raw["generator"].get("kind")
    if gkind not in GENERATOR_KINDS:
        raise ConfigError(f"generator.kind must be one of {GENERATOR_KINDS}, got {gkind!r}")
    akind = raw["attack"].get("kind", "bo")
    if akind not in ATTACK_KINDS:
        raise ConfigError(f"attack.kind must be one of {ATTACK_KINDS}, got {akind!r}")
    if not raw["tasks"]:
        raise ConfigError("at least one [[tasks]] entry required")
    if okind == "mlp":
        wpath = cfg.base_dir / raw["oracle"]["weights"]
        if not wpath.exists():
            raise ConfigError(f"weights file not found: {wpath}")
    for i, task in enumerate(raw["tasks"]):
        if "shape" not in task or len(task["shape"]) != 3:
            raise ConfigError(f"tasks[{i}].shape must be [h, w, c]")
        if "origin_npy" in task:
            opath = cfg.base_dir / task["origin_npy"]
            if not opath.exists():
                raise ConfigError(f"origin file not found: {opath}")
        elif "origin" not in task:
            raise ConfigError(f"tasks[{i}] needs origin (constant) or origin_npy (file)")
        if "label" not in task:
            raise ConfigError(f"tasks[{i}] needs a label")


def load_origin(cfg: ExperimentConfig, task: dict) -> Sample:
    shape = tuple(int(v) for v in task["shape"])
    if "origin_npy" in task:
        values = np.load(cfg.base_dir / task["origin_npy"])
        return Sample(values, shape)
    h, w, c = shape
    return Sample(np.full(h * w * c, float(task["origin"])), shape)


def build_oracle(cfg: ExperimentConfig, origin: Sample):
    """Instantiate the configured oracle (halfspace b is margin above w.x0)."""
    table = cfg.raw["oracle"]
    kind = table["kind"]
    shape = origin.shape
    if kind == "halfspace":
        rng = np.random.default_rng(int(table.get("seed", 0)))
        w = rng.standard_normal(origin.dim)
        w /= np.linalg.norm(w)
        b = float(w @ origin.values) + float(table.get("margin", 1.0))
        oracle = HalfspaceOracle(w, b, shape)
    elif kind == "sphere":
        oracle = SphereOracle(origin.values, float(table.get("radius", 1.0)), shape)
    elif kind == "mlp":
        oracle = MlpOracle.from_file(cfg.base_dir / table["weights"])
    else:
        oracle = RemoteOracle.connect(table["endpoint"],
                                      timeout=float(table.get("timeout", 10.0)))
    bits = table.get("squeeze_bits")
    if bits is not None:
        oracle = SqueezeWrapper(oracle, int(bits))
    return oracle


def build_generator_spec(cfg: ExperimentConfig, shape) -> GeneratorSpec:
    table = cfg.raw["generator"]
    return GeneratorSpec.make(table["kind"], tuple(shape), seed=int(table.get("seed", 0)))


def build_search_params(cfg: ExperimentConfig, dim: int) -> SearchParams:
    table = cfg.raw.get("search", {})
    base = SearchParams.defaults(dim)
    return SearchParams(
        eta=float(table.get("eta", base.eta)),
        epsilon_bin=float(table.get("epsilon_bin", base.epsilon_bin)),
        delta_max=float(table.get("delta_max", base.delta_max)),
    )


def build_bo_config(cfg: ExperimentConfig, seed: int) -> BOConfig:
    table = cfg.raw["attack"]
    return BOConfig(
        init_samples=int(table.get("init_samples", 5)),
        max_iterations=int(table.get("max_iterations", 10_000)),
        stop_tolerance=float(table.get("stop_tolerance", 0.0)),
        rng_seed=seed,
    )


def build_task(cfg: ExperimentConfig, task_table: dict, oracle) -> AttackTask:
    origin = load_origin(cfg, task_table)
    return AttackTask(
        origin=origin,
        true_label=int(task_table["label"]),
        oracle=oracle,
        budget=cfg.budget,
        target_label=(int(task_table["target"]) if "target" in task_table else None),
    )
