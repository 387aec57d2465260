import math

import numpy as np
import pytest

from helpers import integro_ode_rk4, problem, run
from memflux.core import InitialData, Parameters
from memflux.errors import LinearSolveFailure
from memflux.geometry import build_domain
from memflux.kernel import KernelSpec
from memflux.solver import (
    SolverOptions,
    State,
    accumulate_memory,
    apply_nonlocal_bc,
    detect_blowup,
    ghost_values,
    simulate,
    step,
)


def _integrate_memory(f, q, dt, T=1.0):
    n = round(T / dt)
    st = State(0.0, np.array([f(0.0)]), np.zeros(1))
    for i in range(1, n + 1):
        u = np.array([f(i * dt)])
        st = State(i * dt, u, accumulate_memory(st, u, dt, q))
    return float(st.memory[0])


def test_memory_trapezoid():
    assert _integrate_memory(lambda t: 1.0, 3.7, 0.1) == pytest.approx(1.0, abs=1e-14)
    assert _integrate_memory(lambda t: t, 1.0, 0.1) == pytest.approx(0.5, abs=1e-14)
    e1 = abs(_integrate_memory(lambda t: t, 2.0, 0.1) - 1 / 3)
    e2 = abs(_integrate_memory(lambda t: t, 2.0, 0.05) - 1 / 3)
    assert e1 < 0.01 and e1 / e2 == pytest.approx(4.0, rel=1e-6)


def test_nonlocal_bc():
    d = build_domain("interval", 101)
    assert np.all(apply_nonlocal_bc(np.ones(101), KernelSpec.constant(0.0), 0.0, d, 2.0) == 0)
    np.testing.assert_allclose(apply_nonlocal_bc(np.ones(101), KernelSpec.constant(1.0), 0.0, d, 0.7), 1.0)
    errs = []
    for n in (51, 101):
        d = build_domain("interval", n)
        g = apply_nonlocal_bc(d.nodes, KernelSpec.constant(1.0), 0.0, d, 2.0)
        errs.append(np.max(np.abs(g - 1 / 3)))
    assert errs[0] < 1e-3 and errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    # expression kernel uses boundary coordinate x and node coordinate y
    d = build_domain("interval", 101)
    g = apply_nonlocal_bc(np.ones(101), KernelSpec.expression("x + y"), 0.0, d, 1.0)
    np.testing.assert_allclose(g, [0.5, 1.5], rtol=1e-12)


def test_ghost_values_reproduce_flux():
    d = build_domain("interval", 11)
    u = d.nodes**2
    g = np.array([0.3, 0.7])
    gh = ghost_values(u, g, d)
    assert (gh[0] - u[1]) / (2 * d.h) == pytest.approx(0.3)
    assert (gh[1] - u[-2]) / (2 * d.h) == pytest.approx(0.7)


def test_zero_is_a_solution():
    p = problem(q=0.5, m=2.0, l=0.5, k=0.0, u0=0.0, n=41)
    st = State.initial(p.initial)
    for _ in range(10):
        st = step(st, p.params, p.kernel, p.domain, 0.01)
    assert np.all(st.u == 0)
    traj = simulate(p, 1.0)
    assert traj.outcome.tag == "reached_horizon"
    assert all(np.all(s.u == 0) for s in traj.snapshots)


@pytest.mark.parametrize("abqm", [(1, 1, 1, 1), (1, 1, 2, 1), (2, 1, 1, 2)])
def test_integro_ode_oracle(abqm):
    a, b, q, m = abqm
    prob = problem(a, b, q, m, 1.0, k=0.0, u0=1.0, n=201)
    traj = simulate(prob, 1.0)
    y, _ = integro_ode_rk4(a, b, q, m)
    assert traj.outcome.tag == "reached_horizon"
    assert np.max(np.abs(traj.final.u / y - 1)) <= 1e-3


def test_linear_memory_stays_bounded():
    prob = problem(1, 1, 1, 1, 1, k=0.0, u0=1.0, n=51)
    traj = simulate(prob, 5.0)
    y, _ = integro_ode_rk4(1, 1, 1, 1, T=5.0)
    lam = (-1 + math.sqrt(5)) / 2
    assert traj.outcome.tag == "reached_horizon"
    assert traj.final.u[0] == pytest.approx(y, rel=1e-3)
    assert y < 2 * math.exp(lam * 5.0)


def test_invariants_on_blowup_run():
    _, traj = run(2.0, 1.0, 1.0, 5.0)
    assert traj.outcome.tag == "blow_up"
    assert np.isfinite(traj.outcome.t_estimate)
    assert traj.clip_count == 0
    t = traj.times
    assert np.all(np.diff(t) > 0)
    mems = np.array([s.memory for s in traj.snapshots])
    assert np.all(np.diff(mems, axis=0) >= 0)
    assert all(np.all(s.u >= 0) for s in traj.snapshots)


def test_global_run_reaches_horizon():
    _, traj = run(0.5, 1.0, 0.5, 5.0)
    assert traj.outcome.tag == "reached_horizon"
    assert traj.outcome.u_max < 1e3
    assert traj.clip_count == 0


def test_positivity_after_one_step():
    d = build_domain("interval", 101)
    u0 = InitialData.from_values(np.maximum(0.0, np.sin(3 * np.pi * d.nodes)) ** 2, d)
    p = Parameters(1.0, 1.0, 1.0, 1.5, 1.0)
    st = step(State.initial(u0), p, KernelSpec.constant(0.0), d, 1e-3)
    assert st.clipped == 0
    assert np.all(st.u[d.interior] > 0)


def test_snapshot_stride():
    prob = problem(q=0.5, m=1.0, l=0.5, n=41)
    full = simulate(prob, 1.0)
    thin = simulate(prob, 1.0, snapshot_stride=10)
    assert len(thin.snapshots) < len(full.snapshots)
    assert thin.snapshots[0].t == 0.0 and thin.snapshots[-1].t == pytest.approx(1.0)
    np.testing.assert_array_equal(thin.final.u, full.final.u)


def test_step_refinement_order():
    """Fixed dt = h/2 on smooth compatible data: u(T) converges at second order."""
    T = 0.5
    sols = []
    for n in (21, 41, 81, 161):
        d = build_domain("interval", n)
        u0 = InitialData.from_values(2 + np.cos(np.pi * d.nodes), d)
        prob = problem(1.0, 1.0, 2.0, 2.0, 1.0, k=0.0, u0=u0, n=n)
        h = 1 / (n - 1)
        traj = simulate(prob, T, options=SolverOptions(dt_fixed=h / 2))
        sols.append(traj.final.u)
    diffs = [np.max(np.abs(sols[i] - sols[i + 1][::2])) for i in range(3)]
    orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    assert np.all(orders >= 1.8), orders


def test_detect_blowup_simple_pole():
    t = 1 - np.geomspace(0.5, 1e-10, 300)
    est = detect_blowup(t, 1 / (1 - t))
    assert est is not None
    assert est.t_blowup == pytest.approx(1.0, rel=0.02)
    assert est.alpha == pytest.approx(1.0, rel=0.05)


def test_detect_blowup_square_root_pole():
    # (2 - t)^(-1/2) only reaches 1e8 at 2 - t = 1e-16, below float64 resolution near t = 2
    t = 2 - np.geomspace(1.0, 1e-12, 300)
    est = detect_blowup(t, (2 - t) ** -0.5, threshold=1e5)
    assert est.t_blowup == pytest.approx(2.0, rel=0.05)
    assert est.alpha == pytest.approx(0.5, rel=0.05)


def test_detect_blowup_bounded_series():
    t = np.linspace(0, 1, 50)
    assert detect_blowup(t, 10 * np.ones(50) - t) is None


def test_blowup_estimate_stable_under_refinement_and_threshold():
    _, a = run(2.0, 1.0, 1.0, 5.0, n=101)
    _, b = run(2.0, 1.0, 1.0, 5.0, n=201)
    _, c = run(2.0, 1.0, 1.0, 5.0, n=101, threshold=1e10)
    ta, tb, tc = (x.outcome.t_estimate for x in (a, b, c))
    assert abs(tb / ta - 1) <= 0.1 and abs(tc / ta - 1) <= 0.1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_fixed_step_failure_raises():
    prob = problem(1.0, 1.0, 2.0, 1.0, 1.0, u0=1e150, n=21)
    with pytest.raises(LinearSolveFailure):
        simulate(prob, 1.0, options=SolverOptions(dt_fixed=0.01, blowup_threshold=math.inf))
