"""Shared problem builders, cached reference runs and independent oracles for the test suite."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0

from memflux.core import InitialData, Parameters
from memflux.geometry import build_domain
from memflux.kernel import KernelSpec
from memflux.solver import Problem, SolverOptions, simulate


def problem(a=1.0, b=1.0, q=1.0, m=1.0, l=1.0, k=1.0, u0=1.0, n=101, kind="interval", **geo):
    d = build_domain(kind, n, **geo)
    kern = k if isinstance(k, KernelSpec) else KernelSpec.constant(k)
    init = u0 if isinstance(u0, InitialData) else InitialData.constant(u0, d)
    return Problem(Parameters(a, b, q, m, l), d, kern, init)


@lru_cache(maxsize=None)
def run(q, m, l, horizon, n=101, k=1.0, u0=1.0, a=1.0, b=1.0, threshold=1e8):
    """Cached simulation on (0, 1) with constant kernel and initial data."""
    prob = problem(a, b, q, m, l, k=k, u0=u0, n=n)
    return prob, simulate(prob, horizon, options=SolverOptions(blowup_threshold=threshold))


# -- oracles -----------------------------------------------------------------------

def integro_ode_rk4(a, b, q, m, T=1.0, y0=1.0, n_steps=20000):
    """Fixed-step classical RK4 for y' = a z - b y^m, z' = y^q, z(0) = 0."""
    return _rk4(a, b, q, m, y0, 0.0, T, n_steps)


def integro_ode_series(a, b, q, m, dt, n_intervals, substeps=8, y0=1.0):
    """RK4 values of (y, z) at t = i dt, i = 0..n_intervals, with ``substeps`` RK4 steps per interval."""
    ys, zs = [y0], [0.0]
    y, z = y0, 0.0
    for _ in range(n_intervals):
        y, z = _rk4(a, b, q, m, y, z, dt, substeps)
        ys.append(y)
        zs.append(z)
    return np.array(ys), np.array(zs)


def _rk4(a, b, q, m, y, z, T, n_steps):
    def f(y, z):
        return a * z - b * y**m, y**q

    h = T / n_steps
    for _ in range(n_steps):
        k1 = f(y, z)
        k2 = f(y + h / 2 * k1[0], z + h / 2 * k1[1])
        k3 = f(y + h / 2 * k2[0], z + h / 2 * k2[1])
        k4 = f(y + h * k3[0], z + h * k3[1])
        y += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        z += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return y, z


def bessel_j0_first_root() -> float:
    return brentq(j0, 2.0, 3.0, xtol=1e-15)


def reference_eval(node, env):
    """Direct recursive scalar evaluation with the math module, independent of the compiled path."""
    from memflux import expr as E

    if isinstance(node, E.Num):
        return node.value
    if isinstance(node, E.Var):
        return env[node.name]
    if isinstance(node, E.Neg):
        return -reference_eval(node.operand, env)
    if isinstance(node, E.BinOp):
        x, y = reference_eval(node.left, env), reference_eval(node.right, env)
        if node.op == "+":
            return x + y
        if node.op == "-":
            return x - y
        if node.op == "*":
            return x * y
        if node.op == "/":
            return x / y
        return math.pow(x, y)
    args = [reference_eval(a, env) for a in node.args]
    if node.name in ("min", "max"):
        return (min if node.name == "min" else max)(args)
    return {"sin": math.sin, "cos": math.cos, "exp": math.exp, "abs": abs}[node.name](args[0])


def unparse(node) -> str:
    """Fully parenthesised source text for an AST."""
    from memflux import expr as E

    if isinstance(node, E.Num):
        return repr(node.value)
    if isinstance(node, E.Var):
        return node.name
    if isinstance(node, E.Neg):
        return f"(-{unparse(node.operand)})"
    if isinstance(node, E.BinOp):
        return f"({unparse(node.left)}{node.op}{unparse(node.right)})"
    return f"{node.name}({','.join(unparse(a) for a in node.args)})"


def sup_ratio_scan(c: float, n: int = 200001) -> float:
    """Dense scan of pi^2 cos^2(pi x) / (c sin(pi x) + 1)^2 over [0, 1]."""
    x = np.linspace(0.0, 1.0, n)
    return float(np.max(np.pi**2 * np.cos(np.pi * x) ** 2 / (c * np.sin(np.pi * x) + 1) ** 2))


# (criterion number, passed, detail) rows collected by the acceptance module
ACCEPTANCE = []
