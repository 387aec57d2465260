"""Explicit supersolutions for the global regimes and their discrete certification.

Two families are built:

* exponential: ``C exp(mu t) / (c phi(x) + 1)`` with phi the sup-normalised
  principal Dirichlet eigenfunction, for max(q, l) <= 1 (case "A") and for
  l <= 1 < q <= m (case "A2");
* boundary layer: ``([(s + eps)^-gamma - omega^-gamma]_+^(beta/gamma) + A) exp(r t)``
  in the distance s to the boundary, for 1 < l < m, q <= m.

A certificate is checked by evaluating the three supersolution inequalities
(interior operator, boundary flux, initial dominance) on a space-time grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .core import InitialData, Parameters
from .errors import GridMismatch, NoAdmissibleEpsilon, WrongRegime
from .functionals import kernel_condition_flags
from .geometry import Domain, Eigenpair, centered_laplacian, normal_derivative, sup_grad_ratio
from .kernel import KernelSpec, boundary_flux, powp

HEADROOM = 1.1
BISECTION_ITERATIONS = 60
A_CAP = 2.0**60
EPS_BACKOFF = 0.9  # keeps the boundary margin away from the bisection edge
DEFAULT_TIMES = 101


@dataclass(frozen=True)
class ExponentialSuperSpec:
    C: float
    mu: float
    c: float
    lambda1: float
    phi: np.ndarray = field(repr=False)
    case_tag: str  # "A" | "A2"
    K: float
    horizon: float
    c_required: float
    C_required: float
    mu_required: float

    def value(self, phi, t):
        return self.C * np.exp(self.mu * t) / (self.c * np.asarray(phi) + 1.0)

    def grid_values(self, d: Domain, t) -> np.ndarray:
        return self.value(self.phi, t)

    def time_factor(self, t):
        return np.exp(self.mu * np.asarray(t, dtype=float))

    @property
    def rate(self) -> float:
        return self.mu

    def profile(self, d: Domain) -> np.ndarray:
        return self.C / (self.c * self.phi + 1.0)

    def normal_derivative(self, d: Domain, t) -> np.ndarray:
        """Outward normal derivative at the boundary points (where phi = 0)."""
        dphi = normal_derivative(self.phi, d)
        return -self.C * self.c * dphi / (self.c * self.phi[d.boundary_points] + 1.0) ** 2 * np.exp(self.mu * t)

    def to_dict(self) -> dict:
        return {"family": "exponential", "case": self.case_tag, "C": self.C, "mu": self.mu, "c": self.c,
                "lambda1": self.lambda1, "K": self.K, "horizon": self.horizon,
                "c_required": self.c_required, "C_required": self.C_required, "mu_required": self.mu_required}


@dataclass(frozen=True)
class BoundaryLayerSuperSpec:
    epsilon: float
    omega: float
    beta: float
    gamma: float
    r: float
    A: float
    delta: float
    epsbar: float
    sbar: float
    cbar: float
    Jbar: float
    K: float
    horizon: float
    beta_window: tuple

    def bracket(self, s):
        s = np.asarray(s, dtype=float)
        return np.maximum((s + self.epsilon) ** (-self.gamma) - self.omega ** (-self.gamma), 0.0)

    def layer(self, s):
        """The boundary-layer part [.]_+^(beta/gamma), zero outside the collar."""
        s = np.asarray(s, dtype=float)
        out = self.bracket(s) ** (self.beta / self.gamma)
        return np.where(s <= self.delta, out, 0.0)

    def value(self, s, t):
        return (self.layer(s) + self.A) * np.exp(self.r * t)

    def grid_values(self, d: Domain, t) -> np.ndarray:
        return self.value(d.distance, t)

    def time_factor(self, t):
        return np.exp(self.r * np.asarray(t, dtype=float))

    @property
    def rate(self) -> float:
        return self.r

    def profile(self, d: Domain) -> np.ndarray:
        return self.layer(d.distance) + self.A

    def D(self, s):
        s = np.asarray(s, dtype=float)
        x = (s + self.epsilon) ** (-self.gamma)
        return x / (x - self.omega ** (-self.gamma))

    def dvds(self, s, t):
        s = np.asarray(s, dtype=float)
        inner = (s + self.epsilon) ** (-self.gamma - 1)
        return -self.beta * inner * self.bracket(s) ** ((self.beta - self.gamma) / self.gamma) * np.exp(self.r * t)

    def normal_derivative(self, d: Domain, t) -> np.ndarray:
        """dv/dnu = -dv/ds at s = 0, in closed form."""
        return np.full(d.boundary_points.size, -float(self.dvds(0.0, t)))

    def to_dict(self) -> dict:
        return {"family": "boundary_layer", "epsilon": self.epsilon, "omega": self.omega, "beta": self.beta,
                "gamma": self.gamma, "r": self.r, "A": self.A, "delta": self.delta, "epsbar": self.epsbar,
                "sbar": self.sbar, "cbar": self.cbar, "Jbar": self.Jbar, "K": self.K,
                "horizon": self.horizon, "beta_window": list(self.beta_window)}


SuperSpec = Union[ExponentialSuperSpec, BoundaryLayerSuperSpec]


def exponential_case(p: Parameters) -> str:
    if max(p.q, p.l) <= 1:
        return "A"
    if p.l <= 1 < p.q <= p.m:
        return "A2"
    raise WrongRegime("exponential supersolution needs max(q, l) <= 1 or l <= 1 < q <= m")


def build_exponential(p: Parameters, e: Eigenpair, k: KernelSpec, u0: InitialData, d: Domain,
                      horizon: float) -> ExponentialSuperSpec:
    """Constants (c, C, mu) from their lower bounds; 10% headroom on each non-trivial bound."""
    case = exponential_case(p)
    K = kernel_condition_flags(k, d, 0.0, horizon).K
    phi = e.phi
    integral = d.integrate(1.0 / (phi + 1.0) ** p.l)
    flux_term = K * integral / e.dphi_dnu_min
    c = max(HEADROOM * flux_term, 1.0)
    sup_term = float(np.max((c * phi + 1.0) * u0.values))
    C = max(HEADROOM * sup_term, 1.0)
    mu_req = e.lambda1 + 2 * c**2 * sup_grad_ratio(e, c, d)
    if case == "A":
        mu_req += p.a * (c + 1) ** (1 - p.q) + 1 / p.q
    else:
        mu_req += p.a * (c + 1) ** (p.m - p.q) / (p.q * p.b)
    return ExponentialSuperSpec(C, HEADROOM * mu_req, c, e.lambda1, phi, case, K, float(horizon),
                                max(flux_term, 1.0), max(sup_term, 1.0), mu_req)


def beta_window(p: Parameters) -> tuple:
    if not p.m > 1:
        raise WrongRegime("boundary-layer supersolution needs m > 1")
    lo = max(1 / p.l, 2 / (p.m - 1))
    hi = 2 / (p.l - 1) if p.l > 1 else math.inf
    return lo, hi


def _layer_spec(p, d, K, horizon, beta, gamma, r, omega, eps, A, window):
    x = (eps / omega) ** gamma
    epsbar = 2 * x / (1 - x)
    sbar = (epsbar / (1 + epsbar)) ** (1 / gamma) * omega - eps
    return BoundaryLayerSuperSpec(eps, omega, beta, gamma, r, A, d.collar_width, epsbar, sbar,
                                  d.curvature_bound, 1.0, K, float(horizon), window)


def build_boundary_layer(p: Parameters, d: Domain, u0: InitialData, k: KernelSpec, horizon: float,
                         n_times: int = DEFAULT_TIMES) -> BoundaryLayerSuperSpec:
    """Boundary-layer certificate for 1 < l < m, q <= m.

    beta sits at the middle of its window, gamma = beta / 4, r = 2a / (bq) and
    omega = min(delta, 1) / 2.  For each A (doubling from max(1, sup u0)) the
    largest eps with a nonnegative boundary margin is located by halving then
    bisection; A is accepted once the interior residual is nonnegative.
    """
    if not (1 < p.l < p.m and p.q <= p.m):
        raise WrongRegime("boundary-layer supersolution needs 1 < l < m and q <= m")
    window = beta_window(p)
    beta = 0.5 * (window[0] + window[1])
    gamma = beta / 4
    r = 2 * p.a / (p.b * p.q)
    omega = min(d.collar_width, 1.0) / 2
    K = kernel_condition_flags(k, d, 0.0, horizon).K
    t_grid = np.linspace(0.0, horizon, n_times)
    A = max(1.0, float(np.max(u0.values)))

    def make(eps, A):
        return _layer_spec(p, d, K, horizon, beta, gamma, r, omega, eps, A, window)

    while A <= A_CAP:
        margin = lambda e: boundary_margin(make(e, A), p, k, d, t_grid)  # noqa: E731
        eps = _admissible_epsilon(margin, omega)
        if margin(EPS_BACKOFF * eps) >= 0:
            eps *= EPS_BACKOFF
        spec = make(eps, A)
        rep = residual_field(spec, p, k, d, u0, t_grid, tolerance=0.0)
        if rep.min_interior >= 0 and rep.min_boundary >= 0:
            return spec
        A *= 2
    raise NoAdmissibleEpsilon(f"no admissible (eps, A) with A up to {A_CAP:g}")


def _admissible_epsilon(margin, omega: float) -> float:
    hi = omega * (1 - 1e-9)
    if margin(hi) >= 0:
        return hi
    lo = hi / 2
    used = 1
    while margin(lo) < 0:
        hi, lo = lo, lo / 2
        used += 1
        if used >= BISECTION_ITERATIONS:
            raise NoAdmissibleEpsilon("no eps with a nonnegative boundary margin")
    while used < BISECTION_ITERATIONS and hi - lo > 1e-12 * hi:
        mid = math.sqrt(lo * hi)
        if margin(mid) >= 0:
            lo = mid
        else:
            hi = mid
        used += 1
    return lo


def evaluate_super(spec: SuperSpec, d: Domain, t) -> np.ndarray:
    """Supersolution values on the grid of ``d`` at time t."""
    return spec.grid_values(d, t)


def boundary_margin(spec: SuperSpec, p: Parameters, k: KernelSpec, d: Domain, t_grid) -> float:
    worst = math.inf
    prof = spec.profile(d)
    for t in np.atleast_1d(t_grid):
        v = prof * spec.time_factor(t)
        m = spec.normal_derivative(d, t) - boundary_flux(v, k, float(t), d, p.l)
        worst = min(worst, float(np.min(m)))
    return worst


@dataclass(frozen=True)
class ResidualReport:
    min_interior: float
    min_boundary: float
    min_initial: float
    passed: bool
    tolerance: float
    worst_interior_at: tuple  # (t, node index)
    n_space: int
    n_time: int
    spec: dict

    def to_dict(self) -> dict:
        return {"min_interior_residual": self.min_interior, "min_boundary_margin": self.min_boundary,
                "initial_margin": self.min_initial, "passed": self.passed, "tolerance": self.tolerance,
                "worst_interior_at": list(self.worst_interior_at), "grid": [self.n_space, self.n_time],
                "constants": self.spec}


def interior_residual(spec: SuperSpec, p: Parameters, d: Domain, t_grid) -> np.ndarray:
    """L v on the (time, node) grid; boundary columns are NaN."""
    t_grid = np.asarray(t_grid, dtype=float)
    prof = spec.profile(d)
    tf = spec.time_factor(t_grid)
    V = tf[:, None] * prof[None, :]
    lap = tf[:, None] * centered_laplacian(prof, d)[None, :]
    mem = cumulative_trapezoid(powp(V, p.q), t_grid, axis=0, initial=0.0)
    return spec.rate * V - lap - p.a * mem + p.b * powp(V, p.m)


def residual_field(spec: SuperSpec, p: Parameters, k: KernelSpec, d: Domain, u0: InitialData,
                   t_grid=None, tolerance: float = 1e-8) -> ResidualReport:
    """Evaluate L v = v_t - Lap v - a int_0^t v^q + b v^m and the boundary/initial margins.

    v_t is exact (pure exponential time factor), the Laplacian is the centred
    (collar form) difference and the memory integral is a cumulative
    trapezoid over ``t_grid``.
    """
    if t_grid is None:
        t_grid = np.linspace(0.0, spec.horizon, DEFAULT_TIMES)
    t_grid = np.asarray(t_grid, dtype=float)
    Lv = interior_residual(spec, p, d, t_grid)
    V0 = spec.grid_values(d, 0.0)
    inner = Lv[:, d.interior]
    j = np.unravel_index(int(np.argmin(inner)), inner.shape)
    min_int = float(inner[j])
    node = int(np.flatnonzero(d.interior)[j[1]])
    min_b = boundary_margin(spec, p, k, d, t_grid)
    min_0 = float(np.min(V0 - u0.values))
    passed = min(min_int, min_b, min_0) >= -tolerance
    return ResidualReport(min_int, min_b, min_0, passed, tolerance, (float(t_grid[j[0]]), node),
                          d.n_points, t_grid.size, spec.to_dict())


@dataclass(frozen=True)
class OrderingReport:
    times: np.ndarray
    margins: np.ndarray  # per-snapshot min of (upper - lower)
    min_margin: float
    passed: bool
    tolerance: float

    def to_dict(self) -> dict:
        return {"min_margin": self.min_margin, "passed": self.passed, "tolerance": self.tolerance,
                "snapshots": int(self.times.size)}


def compare_trajectories(lower, upper, d: Domain = None, tol: float = 1e-6) -> OrderingReport:
    """Per-snapshot min of (upper - lower); ``upper`` is a Trajectory or a supersolution spec."""
    times = np.array([s.t for s in lower.snapshots])
    if hasattr(upper, "snapshots"):
        ut = np.array([s.t for s in upper.snapshots])
        if ut.shape != times.shape or not np.array_equal(ut, times):
            raise GridMismatch("trajectories have different snapshot times")
        if any(a.u.shape != b.u.shape for a, b in zip(lower.snapshots, upper.snapshots)):
            raise GridMismatch("trajectories live on different grids")
        margins = np.array([float(np.min(b.u - a.u)) for a, b in zip(lower.snapshots, upper.snapshots)])
    else:
        if d is None:
            raise ValueError("a domain is needed to evaluate a supersolution certificate")
        if lower.snapshots[0].u.shape != (d.n_points,):
            raise GridMismatch("trajectory does not live on the given domain")
        margins = np.array([float(np.min(evaluate_super(upper, d, s.t) - s.u)) for s in lower.snapshots])
    mn = float(np.min(margins))
    return OrderingReport(times, margins, mn, mn >= -tol, tol)
