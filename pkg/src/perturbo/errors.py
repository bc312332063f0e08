"""Exception types shared across the attack toolkit."""


class PerturboError(Exception):
    """Base class for all toolkit errors."""


class BudgetExhausted(PerturboError):
    """Raised when an oracle query is attempted past the query budget.

    When raised mid distance-evaluation, ``partial`` carries the best
    bracket upper bound found so far as a capped result (or None if the
    evaluation produced nothing usable).
    """

    def __init__(self, message="query budget exhausted", partial=None):
        super().__init__(message)
        self.partial = partial


class InsufficientBudget(PerturboError):
    """Budget ran out before a single distance evaluation completed."""


class NoAdversarialFound(PerturboError):
    """Every evaluated direction was capped without crossing the boundary.

    ``result`` carries the attack result with the best capped distance,
    flagged as non-adversarial.
    """

    def __init__(self, message="no adversarial example found", result=None):
        super().__init__(message)
        self.result = result


class ZeroPerturbation(PerturboError):
    """A perturbation with (numerically) zero norm cannot define a direction."""


class DimensionMismatch(PerturboError):
    """Input dimensionality disagrees with what the generator expects."""


class InvalidParams(PerturboError):
    """Generator parameters outside their admissible ranges."""


class SingularKernel(PerturboError):
    """Kernel matrix not positive definite even after jitter escalation."""


class MalformedWeights(PerturboError):
    """Weights file fails structural validation."""


class ShapeMismatch(PerturboError):
    """Sample shape disagrees with the consumer's expected shape."""


class TransportError(PerturboError):
    """Remote oracle endpoint unreachable or timed out."""


class ProtocolViolation(PerturboError):
    """Remote oracle response does not conform to the wire protocol."""


class EmptyResultSet(PerturboError):
    """Metric requested over zero attack results."""


class EmptyDataset(PerturboError):
    """Metric requested over zero samples."""


class EmptyTraceSet(PerturboError):
    """Summary requested over zero traces."""


class MissingPrefix(PerturboError):
    """A trace has no record at or below the requested budget."""


class ConfigError(PerturboError):
    """Experiment configuration file is invalid."""
