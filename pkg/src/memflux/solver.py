"""Time integration with implicit diffusion and explicit memory, absorption and boundary flux.

Each step is a two-stage IMEX scheme: Crank-Nicolson on the (conservative,
finite-volume) Laplacian, with the explicit source ``a M - b u^m`` plus the
nonlocal boundary flux treated by Heun's predictor-corrector.  Both stages
solve the same tridiagonal system.  The memory ``M = int_0^t u^q`` is a
running trapezoid accumulator, so no history is stored.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import minimize_scalar

from .core import InitialData, Parameters
from .errors import LinearSolveFailure
from .geometry import Domain, apply_bands, neumann_laplacian_bands
from .kernel import KernelSpec, boundary_flux, powp

logger = logging.getLogger(__name__)

U_BLOW = 1e8
GROW_BELOW = 0.01
SHRINK_ABOVE = 0.10
UNDERFLOW_FACTOR = 1e-12
MIN_TAIL = 5


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray
    memory: np.ndarray
    dt_last: float = 0.0
    clipped: int = 0  # negative undershoots removed in the step that produced this state

    @classmethod
    def initial(cls, u0) -> "State":
        u = np.array(getattr(u0, "values", u0), dtype=float)
        return cls(0.0, u, np.zeros_like(u))


@dataclass(frozen=True)
class Problem:
    params: Parameters
    domain: Domain
    kernel: KernelSpec
    initial: InitialData


@dataclass(frozen=True)
class SolverOptions:
    blowup_threshold: float = U_BLOW
    dt_max: Optional[float] = None  # default: half the grid spacing
    dt0: Optional[float] = None  # default: dt_max / 16
    dt_fixed: Optional[float] = None  # disables adaptivity
    max_steps: int = 5_000_000
    tail: int = 30


@dataclass(frozen=True)
class Snapshot:
    t: float
    dt: float
    u: np.ndarray
    memory: np.ndarray

    @property
    def u_max(self) -> float:
        return float(np.max(self.u))


@dataclass(frozen=True)
class BlowUpEstimate:
    t_blowup: float
    alpha: float
    residual: float
    coefficient: float


@dataclass(frozen=True)
class Outcome:
    tag: str  # "reached_horizon" | "blow_up" | "step_underflow"
    t: float  # time at which integration stopped
    u_max: float
    t_estimate: Optional[float] = None
    alpha: Optional[float] = None
    fit_residual: Optional[float] = None

    @property
    def blew_up(self) -> bool:
        return self.tag == "blow_up"


@dataclass
class Trajectory:
    snapshots: list
    final: State
    outcome: Outcome
    clip_count: int
    steps: int
    rejected: int
    history_t: np.ndarray = field(repr=False)
    history_umax: np.ndarray = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def u_max(self) -> np.ndarray:
        return np.array([s.u_max for s in self.snapshots])


def accumulate_memory(state: State, u_new, dt: float, q: float) -> np.ndarray:
    """Trapezoid increment M + dt/2 (u_old^q + u_new^q)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return state.memory + 0.5 * dt * (powp(state.u, q) + powp(u_new, q))


def apply_nonlocal_bc(u, k: KernelSpec, t: float, d: Domain, l: float) -> np.ndarray:
    """Boundary flux values g(x, t) = int k(x, y, t) u^l dy at each boundary point."""
    return boundary_flux(u, k, t, d, l)


def ghost_values(u, g, d: Domain) -> np.ndarray:
    """Interval ghost nodes u_inner + 2 h g making the centred normal difference equal g.

    The finite-volume boundary row used by the stepper is algebraically the
    same as eliminating these ghosts from the centred second difference.
    """
    if d.kind != "interval":
        raise ValueError("ghost nodes are only defined for the interval")
    u = np.asarray(u, dtype=float)
    return np.array([u[1] + 2 * d.h * g[0], u[-2] + 2 * d.h * g[1]])


class _Stepper:
    def __init__(self, p: Parameters, k: KernelSpec, d: Domain):
        self.p, self.k, self.d = p, k, d
        self.A = neumann_laplacian_bands(d)
        self.bscale = d.boundary_areas / d.quad_weights[d.boundary_points]

    def source(self, u, memory, t):
        p = self.p
        f = p.a * memory - p.b * powp(u, p.m)
        if not self.k.is_zero:
            g = boundary_flux(u, self.k, t, self.d, p.l)
            f[self.d.boundary_points] += self.bscale * g
        return f

    def solve(self, lhs, rhs):
        try:
            out = solve_banded((1, 1), lhs, rhs, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise LinearSolveFailure(str(exc)) from exc
        return out

    def advance(self, state: State, dt: float) -> State:
        p = self.p
        u, M, t = state.u, state.memory, state.t
        lhs = -0.5 * dt * self.A
        lhs[1] += 1.0
        base = u + 0.5 * dt * apply_bands(self.A, u)
        f0 = self.source(u, M, t)
        pred = np.maximum(self.solve(lhs, base + dt * f0), 0.0)
        m_pred = M + 0.5 * dt * (powp(u, p.q) + powp(pred, p.q))
        f1 = self.source(pred, m_pred, t + dt)
        new = self.solve(lhs, base + 0.5 * dt * (f0 + f1))
        neg = int(np.count_nonzero(new < 0))
        new = np.maximum(new, 0.0)
        mem = accumulate_memory(state, new, dt, p.q)
        return State(t + dt, new, mem, dt, neg)


def step(state: State, p: Parameters, k: KernelSpec, d: Domain, dt: float) -> State:
    """Advance one step of size dt; negative undershoots are clipped and counted in ``clipped``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return _Stepper(p, k, d).advance(state, dt)


def detect_blowup(times, values, threshold: float = U_BLOW, tail: int = 30) -> Optional[BlowUpEstimate]:
    """Fit values ~ C (T - t)^-alpha to the tail of a growing series that crossed ``threshold``.

    T is found by scanning the gap T - t_last on a log grid and refining the
    best bracket; for each T the fit is linear least squares of log values
    against log(T - t).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < MIN_TAIL or not np.max(v) > threshold:
        return None
    # last strictly increasing run
    start = t.size - 1
    while start > 0 and v[start - 1] < v[start]:
        start -= 1
    t, v = t[start:][-tail:], v[start:][-tail:]
    if t.size < MIN_TAIL:
        return None
    logv = np.log(v)
    back = t[-1] - t  # distance to the last sample, computed before adding the gap
    span = back[0]
    if not span > 0:
        return None

    def fit(gaps):
        x = np.log(back[None, :] + np.atleast_1d(gaps)[:, None])
        xm = x.mean(axis=1, keepdims=True)
        ym = logv.mean()
        slope = np.sum((x - xm) * (logv - ym), axis=1) / np.sum((x - xm) ** 2, axis=1)
        icpt = ym - slope * xm[:, 0]
        r = logv[None, :] - (slope[:, None] * x + icpt[:, None])
        return np.sum(r**2, axis=1), slope, icpt

    log_gaps = np.linspace(math.log(span * 1e-10), math.log(span * 1e3), 1301)
    sse = fit(np.exp(log_gaps))[0]
    j = int(np.argmin(sse))
    lo, hi = log_gaps[max(j - 1, 0)], log_gaps[min(j + 1, log_gaps.size - 1)]
    res = minimize_scalar(lambda g: float(fit(math.exp(g))[0][0]), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    best = res.x if res.fun <= sse[j] else log_gaps[j]
    gap = math.exp(best)
    err, slope, icpt = (float(a[0]) for a in fit(gap))
    return BlowUpEstimate(float(t[-1] + gap), -slope, err, math.exp(icpt))


def _monotone_growth(hist: list, n: int = MIN_TAIL) -> bool:
    if len(hist) < n:
        return False
    tail = np.array(hist[-n:])
    return bool(np.all(np.diff(tail) >= 0) and tail[-1] > tail[0])


def simulate(problem: Problem, horizon: float, snapshot_stride: int = 1,
             options: SolverOptions = SolverOptions()) -> Trajectory:
    """Integrate from t = 0 to ``horizon`` or until blow-up / step underflow.

    Adaptive control: a step whose maximal relative change of u exceeds 10% is
    rejected and retried with dt/2; after a step with change below 1% the next
    dt doubles, capped at ``dt_max``.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    p, d, k = problem.params, problem.domain, problem.kernel
    stepper = _Stepper(p, k, d)
    dt_max = options.dt_max if options.dt_max is not None else 0.5 * d.h
    dt_max = min(dt_max, horizon)
    fixed = options.dt_fixed
    dt = fixed if fixed is not None else (options.dt0 if options.dt0 is not None else dt_max / 16)
    dt_min = UNDERFLOW_FACTOR * horizon
    thr = options.blowup_threshold

    state = State.initial(problem.initial)
    snaps = [Snapshot(0.0, 0.0, state.u, state.memory)]
    hist_t, hist_u = [0.0], [float(np.max(state.u))]
    clips = steps = rejected = 0
    outcome = None

    while outcome is None:
        remaining = horizon - state.t
        dt_try = min(dt, remaining)
        if remaining - dt_try < 1e-9 * dt_try:
            dt_try = remaining
        try:
            new = stepper.advance(state, dt_try)
            ok = bool(np.all(np.isfinite(new.u)))
        except (LinearSolveFailure, FloatingPointError):
            if fixed is not None:
                raise
            ok = False
        if ok and fixed is None:
            scale = max(float(np.max(np.abs(state.u))), float(np.max(np.abs(new.u))), 1e-300)
            change = float(np.max(np.abs(new.u - state.u))) / scale
            ok = change <= SHRINK_ABOVE
        if not ok:
            if fixed is not None:
                raise LinearSolveFailure(f"non-finite state at t={state.t}")
            rejected += 1
            dt = dt_try / 2
            if dt < dt_min:
                umax = float(np.max(state.u))
                if _monotone_growth(hist_u):
                    est = detect_blowup(hist_t, hist_u, threshold=0.0, tail=options.tail)
                    outcome = _blowup_outcome(state, est)
                else:
                    outcome = Outcome("step_underflow", state.t, umax)
            continue

        state = new
        steps += 1
        clips += new.clipped
        umax = float(np.max(state.u))
        hist_t.append(state.t)
        hist_u.append(umax)
        if fixed is None and change < GROW_BELOW:
            dt = min(2 * dt, dt_max)

        if umax > thr or d.integrate(state.u) > thr:
            est = detect_blowup(hist_t, hist_u, threshold=min(thr, umax * 0.999), tail=options.tail)
            outcome = _blowup_outcome(state, est)
        elif state.t >= horizon:
            outcome = Outcome("reached_horizon", state.t, umax)
        elif steps >= options.max_steps:
            outcome = Outcome("step_underflow", state.t, umax)
        if outcome is not None or steps % snapshot_stride == 0:
            snaps.append(Snapshot(state.t, state.dt_last, state.u, state.memory))

    if clips:
        logger.warning("%d negative undershoots clipped to zero", clips)
    return Trajectory(snaps, state, outcome, clips, steps, rejected,
                      np.array(hist_t), np.array(hist_u))


def _blowup_outcome(state: State, est: Optional[BlowUpEstimate]) -> Outcome:
    umax = float(np.max(state.u))
    if est is None or not np.isfinite(est.t_blowup) or est.t_blowup < state.t:
        return Outcome("blow_up", state.t, umax, t_estimate=state.t)
    return Outcome("blow_up", state.t, umax, t_estimate=est.t_blowup, alpha=est.alpha,
                   fit_residual=est.residual)


def with_initial(problem: Problem, u0: InitialData) -> Problem:
    return replace(problem, initial=u0)
