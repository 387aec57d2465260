"""Discretised domains, quadrature, boundary geometry and the principal Dirichlet eigenpair.

Two geometries are supported, both reduced to a 1-D node line:

* ``interval``: vertex-centred nodes ``x_i = i h`` on ``[0, L]`` with
  trapezoidal weights; two boundary points with outward normals -1 and +1.
* ``disk``: radially symmetric ball of radius ``R`` in ``N`` space
  dimensions.  Interior nodes sit at half-cell offsets ``r_i = (i + 1/2) h``
  and the last node is the boundary ``r = R``; weights are exact shell
  volumes, so they sum to the ball volume to round-off.

Both share a finite-volume description (cell volumes, face areas, uniform
node spacing ``h``) which makes the discrete Neumann Laplacian exactly
conservative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import NoConvergence, TooFewPoints

MIN_POINTS = 8
EIGEN_TOL = 1e-12
EIGEN_MAXITER = 10_000


def ball_volume(R: float, N: int) -> float:
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1) * R**N


def sphere_area(R: float, N: int) -> float:
    return N * ball_volume(1.0, N) * R ** (N - 1)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Domain:
    kind: str  # "interval" | "disk"
    size: float  # L for the interval, R for the disk
    dimension: int
    n_points: int
    h: float
    nodes: np.ndarray
    quad_weights: np.ndarray
    face_areas: np.ndarray  # area of the face between node i and i+1
    boundary_points: np.ndarray  # node indices
    boundary_areas: np.ndarray  # surface measure carried by each boundary point
    inward: np.ndarray  # (n_boundary, 2): first and second inward neighbours
    outward_normals: np.ndarray
    curvature_bound: float
    collar_width: float
    distance: np.ndarray = field(repr=False)  # s: distance to the boundary per node

    @property
    def measure(self) -> float:
        return float(np.sum(self.quad_weights))

    @property
    def boundary_measure(self) -> float:
        return float(np.sum(self.boundary_areas))

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_points, dtype=bool)
        mask[self.boundary_points] = False
        return mask

    @property
    def diameter(self) -> float:
        return self.size if self.kind == "interval" else 2 * self.size

    def integrate(self, values) -> float:
        return float(np.dot(self.quad_weights, values))

    def curvature_sum(self, s) -> np.ndarray:
        """Sum of H_j / (1 - s H_j) over the principal curvatures at distance s."""
        s = np.asarray(s, dtype=float)
        if self.kind == "interval":
            return np.zeros_like(s)
        return (self.dimension - 1) / (self.size - s)


def build_domain(kind: str, n_points: int, *, length: float = 1.0, radius: float = 1.0,
                 dimension: int = 2) -> Domain:
    """Build a uniform grid on an interval ``(0, length)`` or a radial ball of ``radius``."""
    if n_points < MIN_POINTS:
        raise TooFewPoints(f"need at least {MIN_POINTS} points, got {n_points}")
    if kind == "interval":
        L = float(length)
        if not L > 0:
            raise ValueError("interval length must be positive")
        h = L / (n_points - 1)
        nodes = np.linspace(0.0, L, n_points)
        w = np.full(n_points, h)
        w[0] = w[-1] = h / 2
        faces = np.ones(n_points - 1)
        bpts = np.array([0, n_points - 1])
        barea = np.array([1.0, 1.0])
        inward = np.array([[1, 2], [n_points - 2, n_points - 3]])
        normals = np.array([-1.0, 1.0])
        dist = np.minimum(nodes, L - nodes)
        cbar = 0.0
        delta = min(0.25 * L, 1.0) / 2
        return Domain("interval", L, 1, n_points, h, _frozen(nodes), _frozen(w), _frozen(faces),
                      bpts, _frozen(barea), inward, _frozen(normals), cbar, delta, _frozen(dist))
    if kind == "disk":
        R = float(radius)
        N = int(dimension)
        if not R > 0 or N < 1:
            raise ValueError("disk needs positive radius and dimension >= 1")
        h = R / (n_points - 0.5)
        nodes = np.empty(n_points)
        nodes[:-1] = (np.arange(n_points - 1) + 0.5) * h
        nodes[-1] = R
        # cell edges: 0, h, 2h, ..., (n-1)h, R  -> last (boundary) cell is a half cell
        edges = np.empty(n_points + 1)
        edges[:-1] = np.arange(n_points) * h
        edges[-1] = R
        w = ball_volume(1.0, N) * np.diff(edges**N)
        faces = sphere_area(1.0, N) * edges[1:-1] ** (N - 1)
        bpts = np.array([n_points - 1])
        barea = np.array([sphere_area(R, N)])
        inward = np.array([[n_points - 2, n_points - 3]])
        normals = np.array([1.0])
        dist = R - nodes
        # 1 - s/R >= 1/2 on the collar, so the curvature sum is at most 2 (N-1) / R
        cbar = 2.0 * (N - 1) / R
        delta = min(0.25 * R, 1.0) / 2
        return Domain("disk", R, N, n_points, h, _frozen(nodes), _frozen(w), _frozen(faces),
                      bpts, _frozen(barea), inward, _frozen(normals), cbar, delta, _frozen(dist))
    raise ValueError(f"unknown domain kind {kind!r}")


def boundary_integral(f, d: Domain) -> float:
    """Integrate a boundary function (one value per boundary point) over the boundary."""
    f = np.broadcast_to(np.asarray(f, dtype=float), d.boundary_areas.shape)
    return float(np.dot(d.boundary_areas, f))


def normal_derivative(u, d: Domain) -> np.ndarray:
    """Outward normal derivative at each boundary point.

    Second-order one-sided stencil along the inward node line; falls back to
    first order if the grid has fewer than three interior points.
    """
    u = np.asarray(u, dtype=float)
    b = d.boundary_points
    i1, i2 = d.inward[:, 0], d.inward[:, 1]
    if int(np.sum(d.interior)) >= 3:
        return (3.0 * u[b] - 4.0 * u[i1] + u[i2]) / (2.0 * d.h)
    return (u[b] - u[i1]) / d.h


def neumann_laplacian_bands(d: Domain) -> np.ndarray:
    """Finite-volume Laplacian with zero boundary flux, as (3, n) banded storage.

    Row i reads ``(sum_faces area * (u_nb - u_i) / h) / volume_i``.  Band rows
    follow ``scipy.linalg.solve_banded`` layout: super, main, sub diagonal.
    """
    n = d.n_points
    c = d.face_areas / d.h  # conductance of face i+1/2
    vol = d.quad_weights
    ab = np.zeros((3, n))
    ab[0, 1:] = c / vol[:-1]  # A[i, i+1]
    ab[2, :-1] = c / vol[1:]  # A[i+1, i]
    main = np.zeros(n)
    main[:-1] -= c / vol[:-1]
    main[1:] -= c / vol[1:]
    ab[1] = main
    return ab


def apply_bands(ab: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = ab[1] * u
    out[:-1] += ab[0, 1:] * u[1:]
    out[1:] += ab[2, :-1] * u[:-1]
    return out


def centered_laplacian(values, d: Domain) -> np.ndarray:
    """Pointwise centred-difference Laplacian (radial form on the disk).

    Interval: plain second difference.  Disk:
    ``g_rr + (N-1)/r g_r`` with a mirror ghost at the centre, which equals the
    boundary-collar form ``g_ss - sum H/(1 - sH) g_s`` under ``s = R - r``.
    Boundary rows are returned as NaN: use the normal derivative there.
    """
    g = np.asarray(values, dtype=float)
    h = d.h
    out = np.full_like(g, np.nan)
    if d.kind == "interval":
        out[1:-1] = (g[:-2] - 2.0 * g[1:-1] + g[2:]) / h**2
        return out
    left = np.concatenate(([g[0]], g[:-2]))  # mirror ghost for r = h/2
    mid, right = g[:-1], g[1:]
    r = d.nodes[:-1]
    out[:-1] = (left - 2.0 * mid + right) / h**2 + (d.dimension - 1) / r * (right - left) / (2 * h)
    return out


def collar_laplacian(g, s, d: Domain) -> np.ndarray:
    """Laplacian of a profile g(s) sampled on a uniform grid in the boundary distance s.

    ``g_ss - curvature_sum(s) * g_s`` with centred differences; end rows are NaN.
    """
    g = np.asarray(g, dtype=float)
    s = np.asarray(s, dtype=float)
    ds = s[1] - s[0]
    out = np.full_like(g, np.nan)
    gss = (g[:-2] - 2.0 * g[1:-1] + g[2:]) / ds**2
    gs = (g[2:] - g[:-2]) / (2.0 * ds)
    out[1:-1] = gss - d.curvature_sum(s[1:-1]) * gs
    return out


@dataclass(frozen=True)
class Eigenpair:
    lambda1: float
    phi: np.ndarray
    dphi_dnu_max: float  # max over the boundary of -dphi/dnu
    dphi_dnu_min: float  # min over the boundary of -dphi/dnu
    iterations: int


@dataclass(frozen=True)
class BoundaryCollar:
    s: np.ndarray
    delta: float
    valid: bool


def boundary_collar(d: Domain) -> BoundaryCollar:
    valid = d.kind == "interval" or d.collar_width < d.size
    return BoundaryCollar(d.distance, d.collar_width, valid)


def _dirichlet_system(d: Domain):
    """Stiffness (upper banded) and mass for the Dirichlet problem on interior nodes."""
    keep = np.flatnonzero(d.interior)
    n = d.n_points
    c = d.face_areas / d.h
    diag = np.zeros(n)
    diag[:-1] += c
    diag[1:] += c
    diag = diag[keep]
    off = -c[keep[:-1]]  # couplings between consecutive kept nodes
    assert np.all(np.diff(keep) == 1)
    ab = np.zeros((2, keep.size))
    ab[0, 1:] = off
    ab[1] = diag
    return keep, ab, d.quad_weights[keep]


def principal_eigenpair(d: Domain, tol: float = EIGEN_TOL, maxiter: int = EIGEN_MAXITER) -> Eigenpair:
    """Smallest Dirichlet eigenvalue of -Laplacian by unshifted inverse power iteration."""
    keep, ab, mass = _dirichlet_system(d)
    chol = cholesky_banded(ab)

    def stiff(v):
        out = ab[1] * v
        out[:-1] += ab[0, 1:] * v[1:]
        out[1:] += ab[0, 1:] * v[:-1]
        return out

    x = np.ones(keep.size)
    lam_prev = np.inf
    for it in range(1, maxiter + 1):
        y = cho_solve_banded((chol, False), mass * x)
        y /= np.sqrt(np.dot(y, mass * y))
        lam = float(np.dot(y, stiff(y)))
        x = y
        if abs(lam - lam_prev) <= tol * abs(lam):
            break
        lam_prev = lam
    else:
        raise NoConvergence(maxiter)
    phi = np.zeros(d.n_points)
    x = np.abs(x)
    phi[keep] = x / np.max(x)
    phi[keep] = np.maximum(phi[keep], np.finfo(float).tiny)
    phi.setflags(write=False)
    dn = -normal_derivative(phi, d)
    return Eigenpair(lam, phi, float(np.max(dn)), float(np.min(dn)), it)


def gradient(values, d: Domain) -> np.ndarray:
    """Centred-difference gradient along the node line, second-order one-sided at the ends."""
    g = np.gradient(np.asarray(values, dtype=float), d.nodes, edge_order=2)
    if d.kind == "disk":
        g[0] = (values[1] - values[0]) / (2 * d.h)  # mirror ghost at the centre
    return g


def sup_grad_ratio(e: Eigenpair, c: float, d: Domain) -> float:
    """max over nodes of |grad phi|^2 / (c phi + 1)^2."""
    grad = gradient(e.phi, d)
    return float(np.max(grad**2 / (c * e.phi + 1.0) ** 2))
