"""Problem definition: parameters, initial data and the boundary compatibility check."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInitialData, NonFiniteParameter, NonPositiveParameter
from .geometry import Domain, normal_derivative
from .kernel import KernelSpec, boundary_flux

logger = logging.getLogger(__name__)

PARAM_NAMES = ("a", "b", "q", "m", "l")
MAX_DIFFERENCE_QUOTIENT = 1e8


@dataclass(frozen=True)
class Parameters:
    """Memory coefficient a, absorption b and the exponents q (memory), m (absorption), l (boundary)."""

    a: float
    b: float
    q: float
    m: float
    l: float

    def as_dict(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def replace(self, **kw) -> "Parameters":
        d = self.as_dict()
        d.update(kw)
        return validate_parameters(d)


def validate_parameters(p) -> Parameters:
    """Accept a Parameters, a mapping or a 5-sequence (a, b, q, m, l)."""
    if isinstance(p, Parameters):
        raw = p.as_dict()
    elif isinstance(p, dict):
        raw = {n: p[n] for n in PARAM_NAMES}
    else:
        raw = dict(zip(PARAM_NAMES, p, strict=True))
    out = {}
    for name in PARAM_NAMES:
        v = float(raw[name])
        if not math.isfinite(v):
            raise NonFiniteParameter(name, v)
        if v <= 0:
            raise NonPositiveParameter(name, v)
        out[name] = v
    return Parameters(**out)


@dataclass(frozen=True)
class InitialData:
    values: np.ndarray
    description: str = ""

    @classmethod
    def from_values(cls, values, d: Domain, description: str = "") -> "InitialData":
        v = np.array(values, dtype=float)
        if v.shape != (d.n_points,):
            raise InvalidInitialData(f"expected {d.n_points} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInitialData("initial data must be finite")
        if np.any(v < 0):
            raise InvalidInitialData("initial data must be nonnegative")
        dq = np.max(np.abs(np.diff(v))) / d.h if v.size > 1 else 0.0
        if dq > MAX_DIFFERENCE_QUOTIENT:
            raise InvalidInitialData(f"difference quotient {dq:.3g} is not bounded on the grid")
        v.setflags(write=False)
        return cls(v, description)

    @classmethod
    def constant(cls, value: float, d: Domain) -> "InitialData":
        return cls.from_values(np.full(d.n_points, float(value)), d, f"constant {value!r}")

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values > 0)


@dataclass(frozen=True)
class CompatibilityReport:
    max_residual: float
    residuals: tuple
    passed: bool
    tolerance: float

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "passed": self.passed, "tolerance": self.tolerance}


def check_compatibility(u0: InitialData, k: KernelSpec, d: Domain, l: float,
                        tol: float = 1e-6) -> CompatibilityReport:
    """Residual of du0/dnu = int k(x, y, 0) u0^l dy at every boundary point.

    Report only: a violation is logged as a warning, the solver may still run.
    """
    lhs = normal_derivative(u0.values, d)
    rhs = boundary_flux(u0.values, k, 0.0, d, l)
    res = np.abs(lhs - rhs)
    worst = float(np.max(res))
    passed = worst <= tol
    if not passed:
        logger.warning("initial data violates the boundary compatibility condition (residual %.3g)", worst)
    return CompatibilityReport(worst, tuple(float(r) for r in res), passed, tol)
