"""Boundary kernels k(x, y, t) >= 0 for the nonlocal flux condition."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .expr import Expression, parse_expression
from .geometry import Domain


@dataclass(frozen=True)
class KernelSpec:
    """A kernel given as a constant, an expression in (x, y, t, s) or a Python callable.

    ``x`` is the boundary point coordinate, ``y`` the node coordinate (radius on
    the disk), ``s`` the distance of ``y`` to the boundary.
    """

    kind: str  # "constant" | "expr" | "callable"
    value: float = 0.0
    text: str = ""
    func: Optional[Callable] = field(default=None, compare=False, repr=False)
    _expr: Optional[Expression] = field(default=None, compare=False, repr=False)

    @classmethod
    def constant(cls, value: float) -> "KernelSpec":
        if value < 0:
            raise ValueError("kernel must be nonnegative")
        return cls("constant", value=float(value))

    @classmethod
    def expression(cls, text: str) -> "KernelSpec":
        return cls("expr", text=text, _expr=parse_expression(text))

    @classmethod
    def from_callable(cls, func: Callable) -> "KernelSpec":
        return cls("callable", func=func)

    @property
    def is_zero(self) -> bool:
        return self.kind == "constant" and self.value == 0.0

    @property
    def time_independent(self) -> bool:
        if self.kind == "constant":
            return True
        if self.kind == "expr":
            return "t" not in self._expr.variables
        return False

    def matrix(self, d: Domain, t: float) -> np.ndarray:
        """Kernel values with shape (n_boundary, n_points)."""
        shape = (d.boundary_points.size, d.n_points)
        if self.kind == "constant":
            return np.full(shape, self.value)
        x = d.nodes[d.boundary_points][:, None]
        y = d.nodes[None, :]
        s = d.distance[None, :]
        if self.kind == "expr":
            vals = self._expr(x=x, y=y, t=t, s=s)
        else:
            vals = self.func(x, y, t)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), shape).copy()
        if np.any(vals < 0):
            raise ValueError("kernel evaluated to a negative value")
        return vals

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "expr":
            return {"kind": "expr", "text": self.text}
        raise ValueError("callable kernels are not serialisable")


def boundary_flux(u, k: KernelSpec, t: float, d: Domain, l: float) -> np.ndarray:
    """g(x, t) = integral over the domain of k(x, y, t) u(y)^l, one value per boundary point."""
    ul = powp(u, l)
    if k.kind == "constant":
        return np.full(d.boundary_points.size, k.value * d.integrate(ul))
    return k.matrix(d, t) @ (d.quad_weights * ul)


def powp(u, p: float) -> np.ndarray:
    """u^p for u >= 0 with 0^p = 0 for every p > 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = u[pos] ** p
    return out
