"""Exception hierarchy shared across the solver modules."""

from __future__ import annotations

from typing import Any


class XCurveError(Exception):
    """Base class. ``details`` is merged into structured CLI error output."""

    code = "error"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"error": self.code, "message": str(self)}
        for key, value in self.details.items():
            out[key] = _jsonable(value)
        return out


def _jsonable(value: Any) -> Any:
    try:
        import numpy as np

        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, np.generic):
            return value.item()
    except ImportError:  # pragma: no cover
        pass
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


# algebra
class NotPositiveDefinite(XCurveError):
    code = "not_positive_definite"


class SingularEinstein(XCurveError):
    code = "singular_einstein"


class NotPositiveCrossTensor(XCurveError):
    code = "not_positive_cross_tensor"


class NonPositiveMetric(XCurveError):
    code = "non_positive_metric"


class PositivityLost(XCurveError):
    code = "positivity_lost"


# numerics
class StepUnderflow(XCurveError):
    code = "step_underflow"


class NoContraction(XCurveError):
    code = "no_contraction"


class NoConvergence(XCurveError):
    code = "no_convergence"

    def __init__(self, message: str, best: Any = None, residual: float = float("nan"), **details: Any) -> None:
        super().__init__(message, residual=residual, **details)
        self.best = best
        self.residual = residual


class ZeroOnBoundary(XCurveError):
    code = "zero_on_boundary"


class RefinementExhausted(XCurveError):
    code = "refinement_exhausted"


class ZeroAtEndpoint(XCurveError):
    code = "zero_at_endpoint"


class PathLost(XCurveError):
    code = "path_lost"

    def __init__(self, message: str, last_point: Any = None, **details: Any) -> None:
        super().__init__(message, **details)
        self.last_point = last_point


# cohomogeneity-one solvers
class ProfileInvalid(XCurveError):
    code = "profile_invalid"

    def __init__(self, message: str, defects: list[str] | None = None, **details: Any) -> None:
        super().__init__(message, defects=defects or [], **details)
        self.defects = defects or []


class DegenerateProfile(XCurveError):
    code = "degenerate_profile"


class DegenerateEndpoint(XCurveError):
    code = "degenerate_endpoint"


class MonitorViolated(XCurveError):
    code = "monitor_violated"


class ConstructionFailed(XCurveError):
    code = "construction_failed"


class InfeasibleBound(XCurveError):
    code = "infeasible_bound"


class NoSignChange(XCurveError):
    code = "no_sign_change"


class GluingDefect(XCurveError):
    code = "gluing_defect"


class OddnessDefect(XCurveError):
    code = "oddness_defect"


class ResidualTooLarge(XCurveError):
    code = "residual_too_large"


class ObstructionDegenerate(XCurveError):
    code = "obstruction_degenerate"
