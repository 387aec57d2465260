"""Integral functionals of a trajectory and the inequalities driving the blow-up argument.

J1 = int u dx (mass), J2 = int_0^t int u^q dx dtau (= int M dx), J3 = int u^l dx.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Parameters
from .geometry import Domain, boundary_integral
from .kernel import KernelSpec, boundary_flux, powp

HOLDER_SLACK = 1e-3
MASS_FLOOR = 1e-3
KERNEL_TOL = 1e-12


@dataclass(frozen=True)
class FunctionalSeries:
    times: np.ndarray
    dt: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    J3: np.ndarray
    Jq: np.ndarray  # int u^q dx, the time derivative of J2
    u_max: np.ndarray
    mass_residual: np.ndarray

    def rows(self):
        for i in range(self.times.size):
            yield (self.times[i], self.dt[i], self.J1[i], self.J2[i], self.J3[i], self.u_max[i],
                   self.mass_residual[i])


def compute_functionals(snapshot, p: Parameters, d: Domain) -> tuple:
    """(J1, J2, J3) of one snapshot holding ``u`` and ``memory``."""
    u = snapshot.u
    return d.integrate(u), d.integrate(snapshot.memory), d.integrate(powp(u, p.l))


def time_derivative(times, values) -> np.ndarray:
    """Centred differences at interior samples, second-order one-sided at the ends."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 2:
        return np.zeros_like(v)
    if t.size == 2:
        return np.full_like(v, (v[1] - v[0]) / (t[1] - t[0]))
    return np.gradient(v, t, edge_order=2)


def mass_rhs(snapshot, p: Parameters, k: KernelSpec, d: Domain) -> float:
    """Right-hand side of the integrated equation: boundary inflow + a int M - b int u^m."""
    u = snapshot.u
    inflow = 0.0 if k.is_zero else boundary_integral(boundary_flux(u, k, snapshot.t, d, p.l), d)
    return inflow + p.a * d.integrate(snapshot.memory) - p.b * d.integrate(powp(u, p.m))


def mass_residuals(traj, p: Parameters, k: KernelSpec, d: Domain) -> np.ndarray:
    snaps = traj.snapshots
    t = np.array([s.t for s in snaps])
    J1 = np.array([d.integrate(s.u) for s in snaps])
    rhs = np.array([mass_rhs(s, p, k, d) for s in snaps])
    return np.abs(time_derivative(t, J1) - rhs)


def check_mass_identity(traj, p: Parameters, k: KernelSpec, d: Domain) -> float:
    """Max over snapshots of |dJ1/dt - (boundary inflow + a int M - b int u^m)|."""
    if len(traj.snapshots) < 2:
        raise ValueError("need at least two snapshots")
    return float(np.max(mass_residuals(traj, p, k, d)))


def functional_series(traj, p: Parameters, k: KernelSpec, d: Domain) -> FunctionalSeries:
    snaps = traj.snapshots
    J = np.array([compute_functionals(s, p, d) for s in snaps]).reshape(-1, 3)
    res = mass_residuals(traj, p, k, d) if len(snaps) >= 2 else np.zeros(len(snaps))
    return FunctionalSeries(
        times=np.array([s.t for s in snaps]),
        dt=np.array([s.dt for s in snaps]),
        J1=J[:, 0], J2=J[:, 1], J3=J[:, 2],
        Jq=np.array([d.integrate(powp(s.u, p.q)) for s in snaps]),
        u_max=np.array([s.u_max for s in snaps]),
        mass_residual=res,
    )


def verify_mass_lower_bound(traj, d: Domain, rho: float = MASS_FLOOR) -> tuple:
    """(smallest observed J1, J1 never dropped below rho * J1(0)); vacuous for zero data."""
    J1 = np.array([d.integrate(s.u) for s in traj.snapshots])
    if J1[0] <= 0:
        return float(np.min(J1)), True
    c1 = float(np.min(J1))
    return c1, bool(c1 >= rho * J1[0])


@dataclass
class HolderReport:
    checked: dict = field(default_factory=dict)  # inequality -> number of snapshots checked
    violations: dict = field(default_factory=dict)  # inequality -> list of (time, lhs, rhs)
    skipped: dict = field(default_factory=dict)  # inequality -> reason
    slack: float = HOLDER_SLACK

    @property
    def passed(self) -> bool:
        return not any(self.violations.values())

    def to_dict(self) -> dict:
        return {"checked": self.checked, "violations": self.violations, "skipped": self.skipped,
                "slack": self.slack, "passed": self.passed}


def _below(lhs, rhs, slack):
    return lhs < rhs - slack * np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1.0)


def verify_holder_chain(series: FunctionalSeries, p: Parameters, d: Domain,
                        slack: float = HOLDER_SLACK) -> HolderReport:
    """Check, per snapshot, the three lower bounds used by the blow-up argument.

    * ``mass-rate``:  J1' >= a J2 - b |Omega|^((q-m)/q) (J2')^(m/q), needs q > m
    * ``q-moment``:   J2' = int u^q >= |Omega|^(1-q) J1^q, needs q >= 1
    * ``l-moment``:   J3 >= |Omega|^(1-l) J1^l, needs l >= 1

    Inequalities whose exponent hypothesis fails are reported as skipped.  J1'
    comes from differencing the snapshot series, so the mass-rate check also
    allows the measured mass-identity residual, which is exactly the error of
    that difference quotient.
    """
    rep = HolderReport(slack=slack)
    vol = d.measure
    t = series.times

    def record(name, lhs, rhs, allowance=0.0):
        bad = _below(lhs + allowance, rhs, slack)
        rep.checked[name] = int(lhs.size)
        rep.violations[name] = [(float(t[i]), float(lhs[i]), float(rhs[i])) for i in np.flatnonzero(bad)]

    if p.q >= 1:
        record("q-moment", series.Jq, vol ** (1 - p.q) * series.J1**p.q)
    else:
        rep.skipped["q-moment"] = "q < 1"
    if p.l >= 1:
        record("l-moment", series.J3, vol ** (1 - p.l) * series.J1**p.l)
    else:
        rep.skipped["l-moment"] = "l < 1"
    if p.q > p.m and t.size >= 3:
        dJ1 = time_derivative(t, series.J1)
        rhs = p.a * series.J2 - p.b * vol ** ((p.q - p.m) / p.q) * series.Jq ** (p.m / p.q)
        record("mass-rate", dJ1, rhs, series.mass_residual)
    else:
        rep.skipped["mass-rate"] = "q <= m" if p.q <= p.m else "fewer than 3 snapshots"
    return rep


def holder_check_field(u, p: Parameters, d: Domain, slack: float = HOLDER_SLACK) -> dict:
    """The two pure Hoelder bounds for a single nonnegative grid function."""
    vol = d.measure
    J1 = d.integrate(u)
    out = {}
    if p.q >= 1:
        lhs, rhs = d.integrate(powp(u, p.q)), vol ** (1 - p.q) * J1**p.q
        out["q-moment"] = not bool(_below(lhs, rhs, slack))
    if p.l >= 1:
        lhs, rhs = d.integrate(powp(u, p.l)), vol ** (1 - p.l) * J1**p.l
        out["l-moment"] = not bool(_below(lhs, rhs, slack))
    return out


# -- kernel bounds -----------------------------------------------------------------

def boundary_kernel_integrals(k: KernelSpec, d: Domain, t: float) -> np.ndarray:
    """int over the boundary of k(x, y, t) dS_x, one value per node y."""
    return d.boundary_areas @ k.matrix(d, t)


def kernel_lower_bound(k: KernelSpec, d: Domain, t: float) -> float:
    """Infimum over interior nodes y of the boundary integral of k(., y, t)."""
    return float(np.min(boundary_kernel_integrals(k, d, t)[d.interior]))


@dataclass(frozen=True)
class KernelBounds:
    K: float  # sup of k over boundary x domain x sampled [0, horizon]
    kbar0: float
    k0: float  # min of the lower bound on [0, T0]
    k1: float  # min of the boundary integral over [t1, horizon] x domain
    t1: float
    T0: float  # largest sampled time up to which the lower bound stays positive
    e9: bool
    e91: bool
    horizon: float

    def to_dict(self) -> dict:
        return {"K": self.K, "kbar0": self.kbar0, "k0": self.k0, "k1": self.k1, "t1": self.t1,
                "T0": self.T0, "positive_at_start": self.e9, "uniformly_positive": self.e91, "horizon": self.horizon}


def kernel_condition_flags(k: KernelSpec, d: Domain, t1: float = 0.0, horizon: float = 1.0,
                           n_times: int = 101, tol: float = KERNEL_TOL) -> KernelBounds:
    """Sample the kernel positivity conditions on a uniform time grid over [0, horizon].

    ``e9`` (positive at start): the lower bound at t = 0 exceeds ``tol``.
    ``e91`` (uniformly positive): the boundary integral stays above ``tol`` for
    every node and every sampled t in [t1, horizon].
    """
    if not horizon > t1 >= 0:
        raise ValueError("need horizon > t1 >= 0")
    times = np.linspace(0.0, horizon, n_times)
    if t1 > 0:
        times = np.union1d(times, [t1])
    if k.time_independent:
        M = k.matrix(d, 0.0)
        bi = d.boundary_areas @ M
        kmax = np.full(times.size, float(np.max(M)))
        kbar = np.full(times.size, float(np.min(bi[d.interior])))
        bmin = np.full(times.size, float(np.min(bi[d.interior])))
    else:
        kmax, kbar, bmin = [], [], []
        for t in times:
            M = k.matrix(d, t)
            bi = (d.boundary_areas @ M)[d.interior]
            kmax.append(float(np.max(M)))
            kbar.append(float(np.min(bi)))
            bmin.append(float(np.min(bi)))
        kmax, kbar, bmin = map(np.array, (kmax, kbar, bmin))
    e9 = bool(kbar[0] > tol)
    late = times >= t1
    k1 = float(np.min(bmin[late]))
    e91 = bool(k1 > tol)
    if e9:
        ok = kbar > tol
        last = int(np.argmin(ok)) - 1 if not np.all(ok) else times.size - 1
        T0 = float(times[last])
        k0 = float(np.min(kbar[: last + 1]))
    else:
        T0, k0 = 0.0, 0.0
    return KernelBounds(float(np.max(kmax)), float(kbar[0]), k0, k1, float(t1), T0, e9, e91, float(horizon))
