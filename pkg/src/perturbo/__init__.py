"""Query-efficient hard-label black-box adversarial attacks driven by
Bayesian optimization over perturbation directions."""

from .acquisition import AcquisitionConfig, expected_improvement, maximize_acquisition
from .boundary import BoundaryDistance, SearchParams, evaluate_distance
from .core import (AttackTask, Direction, LowDimPoint, QueryCounter, Sample,
                   counted_query, make_decision_rule, normalize_direction)
from .engine import AttackResult, BOConfig, run_attack, run_random_baseline
from .generators import GeneratorSpec, Perturbation, gabor, generate, perlin, upsample
from .gp import GPModel, KernelParams, ObservationSet, fit, matern52, posterior
from .metrics import compute_asr, compute_distortion, compute_uar, summarize_traces
from .oracles import (HalfspaceOracle, MlpOracle, MlpWeights, RemoteOracle,
                      SphereOracle, SqueezeWrapper, read_weights, write_weights)
from .trace import AttackTrace, TraceRecord, load_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig", "expected_improvement", "maximize_acquisition",
    "BoundaryDistance", "SearchParams", "evaluate_distance",
    "AttackTask", "Direction", "LowDimPoint", "QueryCounter", "Sample",
    "counted_query", "make_decision_rule", "normalize_direction",
    "AttackResult", "BOConfig", "run_attack", "run_random_baseline",
    "GeneratorSpec", "Perturbation", "gabor", "generate", "perlin", "upsample",
    "GPModel", "KernelParams", "ObservationSet", "fit", "matern52", "posterior",
    "compute_asr", "compute_distortion", "compute_uar", "summarize_traces",
    "HalfspaceOracle", "MlpOracle", "MlpWeights", "RemoteOracle",
    "SphereOracle", "SqueezeWrapper", "read_weights", "write_weights",
    "AttackTrace", "TraceRecord", "load_trace", "write_trace",
    "__version__",
]
