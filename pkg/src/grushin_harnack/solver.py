"""Finite differences for Lu = a11 X²u + a22 Y²u + 2 a12 YXu = x1² f.

With X = ∂_x1 and Y = x1 ∂_x2 the operator reads

    Lu = a11 u_x1x1 + a22 x1² u_x2x2 + 2 a12 x1 u_x1x2 .

Second derivatives use centered differences and the mixed derivative the
4-point cross stencil, so quadratics are reproduced exactly.  Grid arrays
are indexed ``[i, j]`` with ``i`` along x1 and ``j`` along x2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import geometry as geo
from .barriers import InvalidEllipticityError, ellipticity_bounds


class SolverError(RuntimeError):
    pass


class RegionOutsideGridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    x1_range: tuple[float, float] = (-2.0, 2.0)
    x2_range: tuple[float, float] = (-2.0, 2.0)
    n1: int = 65
    n2: int = 65

    def __post_init__(self):
        if self.n1 < 9 or self.n2 < 9:
            raise ValueError("grids need at least 9 nodes per direction")
        if not (self.x1_range[0] < self.x1_range[1] and self.x2_range[0] < self.x2_range[1]):
            raise ValueError("empty grid window")

    @classmethod
    def from_window(cls, window, n1, n2=None) -> "Grid":
        a, b, c, d = window
        return cls((float(a), float(b)), (float(c), float(d)), int(n1), int(n2 or n1))

    @property
    def window(self):
        return (*self.x1_range, *self.x2_range)

    @property
    def h1(self) -> float:
        return (self.x1_range[1] - self.x1_range[0]) / (self.n1 - 1)

    @property
    def h2(self) -> float:
        return (self.x2_range[1] - self.x2_range[0]) / (self.n2 - 1)

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(*self.x1_range, self.n1)

    @property
    def x2(self) -> np.ndarray:
        return np.linspace(*self.x2_range, self.n2)

    def mesh(self):
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def points(self) -> np.ndarray:
        X1, X2 = self.mesh()
        return np.stack([X1, X2], axis=-1)

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros((self.n1, self.n2), dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask()

    def refine(self) -> "Grid":
        """Halve the spacing, keeping every old node."""
        return Grid(self.x1_range, self.x2_range, 2 * self.n1 - 1, 2 * self.n2 - 1)

    def evaluate(self, g):
        """Turn a callable g(x1, x2), a scalar or an array into a node array."""
        if callable(g):
            X1, X2 = self.mesh()
            return np.broadcast_to(np.asarray(g(X1, X2), dtype=float), (self.n1, self.n2)).copy()
        return np.broadcast_to(np.asarray(g, dtype=float), (self.n1, self.n2)).copy()


@dataclass(frozen=True)
class CoefficientField:
    """Node-sampled coefficients with ellipticity bounds λ ≤ eig(A) ≤ Λ."""

    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    lam: float
    Lam: float

    def __post_init__(self):
        lo, hi = ellipticity_bounds(self.a11, self.a12, self.a22)
        if not self.lam > 0:
            raise InvalidEllipticityError("lambda must be positive")
        if np.min(lo) < self.lam * (1 - 1e-12) or np.max(hi) > self.Lam * (1 + 1e-12):
            raise InvalidEllipticityError(
                f"eigenvalues span [{np.min(lo):.4g}, {np.max(hi):.4g}], "
                f"outside [{self.lam}, {self.Lam}]")

    @classmethod
    def constant(cls, grid: Grid, a11=1.0, a12=0.0, a22=1.0, lam=None, Lam=None):
        lo, hi = ellipticity_bounds(a11, a12, a22)
        arr = [grid.evaluate(v) for v in (a11, a12, a22)]
        return cls(*arr, lam=float(lo) if lam is None else lam, Lam=float(hi) if Lam is None else Lam)

    @classmethod
    def from_arrays(cls, a11, a12, a22):
        lo, hi = ellipticity_bounds(a11, a12, a22)
        return cls(np.asarray(a11, float), np.asarray(a12, float), np.asarray(a22, float),
                   float(np.min(lo)), float(np.max(hi)))

    def scaled(self, t: float) -> "CoefficientField":
        return CoefficientField(t * self.a11, t * self.a12, t * self.a22, t * self.lam, t * self.Lam)


class SmoothField:
    """Random sum of plane cosines rescaled into [0, 1], defined on all of R².

    The parameters are drawn once, so the same seed gives the same field on
    every grid (refinement studies compare like with like).
    """

    def __init__(self, rng: np.random.Generator, modes: int = 4, freq: float = 1.5):
        self.w = rng.normal(scale=freq, size=(modes, 2))
        self.amp = rng.normal(size=modes)
        self.phase = rng.uniform(0, 2 * np.pi, size=modes)

    def __call__(self, x1, x2):
        x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
        g = sum(a * np.cos(w[0] * x1 + w[1] * x2 + p)
                for a, w, p in zip(self.amp, self.w, self.phase))
        return 0.5 + 0.5 * g / np.sum(np.abs(self.amp))


class BlockField:
    """Independent uniform constants on a k×k partition of a window."""

    def __init__(self, rng: np.random.Generator, window, k: int = 4):
        self.window = window
        self.k = k
        self.values = rng.uniform(size=(k, k))

    def __call__(self, x1, x2):
        a, b, c, d = self.window
        i = np.clip(np.floor(self.k * (np.asarray(x1) - a) / (b - a)).astype(int), 0, self.k - 1)
        j = np.clip(np.floor(self.k * (np.asarray(x2) - c) / (d - c)).astype(int), 0, self.k - 1)
        return self.values[i, j]


def random_coefficient_field(grid: Grid, rng: np.random.Generator, lo: float = 1.0,
                             hi: float = 2.0, cross: float = 0.4,
                             kind: str = "smooth") -> CoefficientField:
    """Random admissible field: a11, a22 in [lo, hi], |a12| <= cross·min(a11, a22).

    ``kind="piecewise"`` draws independent constants on a 4×4 partition of
    the window, a stand-in for merely measurable coefficients.
    """
    if kind == "smooth":
        u = [SmoothField(rng) for _ in range(3)]
    elif kind == "piecewise":
        u = [BlockField(rng, grid.window) for _ in range(3)]
    else:
        raise ValueError(f"unknown coefficient kind {kind!r}")
    u = [grid.evaluate(g) for g in u]
    a11 = lo + (hi - lo) * u[0]
    a22 = lo + (hi - lo) * u[1]
    a12 = cross * np.minimum(a11, a22) * (2.0 * u[2] - 1.0)
    return CoefficientField.from_arrays(a11, a12, a22)


def apply_operator(u, grid: Grid, coeffs: CoefficientField) -> np.ndarray:
    """Discrete Lu at interior nodes; boundary entries are NaN."""
    u = np.asarray(u, dtype=float)
    h1, h2 = grid.h1, grid.h2
    x1 = grid.x1[1:-1, None]
    c = u[1:-1, 1:-1]
    d11 = (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / h1**2
    d22 = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / h2**2
    d12 = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h1 * h2)
    s = (slice(1, -1), slice(1, -1))
    out = np.full(u.shape, np.nan)
    out[s] = coeffs.a11[s] * d11 + coeffs.a22[s] * x1**2 * d22 + 2 * coeffs.a12[s] * x1 * d12
    return out


def assemble(grid: Grid, coeffs: CoefficientField) -> sp.csr_matrix:
    """Sparse matrix of the scheme; boundary rows are identity rows."""
    n1, n2 = grid.n1, grid.n2
    h1, h2 = grid.h1, grid.h2
    idx = np.arange(n1 * n2).reshape(n1, n2)
    I, J = np.meshgrid(np.arange(1, n1 - 1), np.arange(1, n2 - 1), indexing="ij")
    x1 = grid.x1[I]
    a11 = coeffs.a11[I, J]
    a22 = coeffs.a22[I, J] * x1**2
    a12 = 2 * coeffs.a12[I, J] * x1 / (4 * h1 * h2)
    rows, cols, vals = [], [], []

    def put(di, dj, v):
        rows.append(idx[I, J].ravel())
        cols.append(idx[I + di, J + dj].ravel())
        vals.append(np.broadcast_to(v, I.shape).ravel())

    put(0, 0, -2 * a11 / h1**2 - 2 * a22 / h2**2)
    put(1, 0, a11 / h1**2)
    put(-1, 0, a11 / h1**2)
    put(0, 1, a22 / h2**2)
    put(0, -1, a22 / h2**2)
    put(1, 1, a12)
    put(-1, -1, a12)
    put(1, -1, -a12)
    put(-1, 1, -a12)
    b = idx[grid.boundary_mask()]
    rows.append(b)
    cols.append(b)
    vals.append(np.ones(len(b)))
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n1 * n2, n1 * n2))
    return A.tocsr()


@dataclass
class Solution:
    values: np.ndarray
    residual_norm: float
    grid: Grid
    coeffs: CoefficientField
    meta: dict = field(default_factory=dict)

    def scaled(self, lam: float, shift: float = 0.0) -> "Solution":
        """The grid function shift + lam·u (same grid and coefficients)."""
        return Solution(shift + lam * self.values, self.residual_norm, self.grid, self.coeffs,
                        dict(self.meta))


def solve_dirichlet(grid: Grid, coeffs: CoefficientField, f, boundary, tol: float = 1e-10,
                    refine_steps: int = 2) -> Solution:
    """Solve Lu = x1² f inside, u = boundary on the edge, by sparse LU.

    ``f`` and ``boundary`` are callables of (x1, x2), scalars or node arrays.
    """
    F = grid.evaluate(f)
    G = grid.evaluate(boundary)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
        raise SolverError("right-hand side or boundary data is not finite")
    X1, _ = grid.mesh()
    rhs = np.where(grid.boundary_mask(), G, X1**2 * F).ravel()
    A = assemble(grid, coeffs)
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    u = lu.solve(rhs)
    bnorm = np.linalg.norm(rhs)
    scale = bnorm if bnorm > 0 else 1.0
    res = np.linalg.norm(A @ u - rhs) / scale
    for _ in range(refine_steps):
        if res <= tol:
            break
        u = u + lu.solve(rhs - A @ u)
        res = np.linalg.norm(A @ u - rhs) / scale
    if not np.isfinite(res) or res > tol:
        diag = np.abs(A.diagonal())
        raise SolverError(f"relative residual {res:.3e} above {tol:.1e}; "
                          f"|diag| range [{diag.min():.3e}, {diag.max():.3e}]")
    vals = u.reshape(grid.n1, grid.n2)
    vals[grid.boundary_mask()] = G[grid.boundary_mask()]
    return Solution(vals, float(res), grid, coeffs)


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact pair with L u* = x1² f for constant or variable coefficients."""

    name: str
    u: Callable
    f: Callable  # f(x1, x2, a11, a12, a22)

    def rhs(self, grid: Grid, coeffs: CoefficientField) -> np.ndarray:
        X1, X2 = grid.mesh()
        return np.broadcast_to(self.f(X1, X2, coeffs.a11, coeffs.a12, coeffs.a22), X1.shape).copy()


_CATALOG = {
    "const": ManufacturedCase("const", lambda x1, x2: np.ones_like(x1 + x2),
                              lambda x1, x2, a11, a12, a22: 0.0 * x1),
    "x2": ManufacturedCase("x2", lambda x1, x2: x2 + 0.0 * x1,
                           lambda x1, x2, a11, a12, a22: 0.0 * x1),
    "x2sq": ManufacturedCase("x2sq", lambda x1, x2: x2**2 + 0.0 * x1,
                             lambda x1, x2, a11, a12, a22: 2.0 * a22 + 0.0 * x1),
    "x1quartic": ManufacturedCase("x1quartic", lambda x1, x2: x1**4 / 12 + 0.0 * x2,
                                  lambda x1, x2, a11, a12, a22: a11 + 0.0 * x1),
    "mixed": ManufacturedCase("mixed", lambda x1, x2: x1**4 / 12 + x2**2,
                              lambda x1, x2, a11, a12, a22: a11 + 2.0 * a22 + 0.0 * x1),
    # exercises the cross term: u_x1x2 = x1³/3
    "cross": ManufacturedCase("cross", lambda x1, x2: x1**4 * x2 / 12,
                              lambda x1, x2, a11, a12, a22: a11 * x2 + (2.0 / 3.0) * a12 * x1**2),
}


def manufactured_case(case_id: str) -> ManufacturedCase:
    try:
        return _CATALOG[case_id]
    except KeyError:
        raise ValueError(f"unknown manufactured case {case_id!r}; "
                         f"choose from {sorted(_CATALOG)}") from None


def manufactured_error(case_id: str, grid: Grid, coeffs: CoefficientField) -> float:
    """Max nodal error of the scheme on a manufactured case."""
    case = manufactured_case(case_id)
    sol = solve_dirichlet(grid, coeffs, case.rhs(grid, coeffs), case.u)
    X1, X2 = grid.mesh()
    return float(np.max(np.abs(sol.values - case.u(X1, X2))))


def node_weights(grid: Grid) -> np.ndarray:
    """Trapezoid quadrature weights on the grid nodes."""
    w1 = np.full(grid.n1, grid.h1)
    w1[[0, -1]] *= 0.5
    w2 = np.full(grid.n2, grid.h2)
    w2[[0, -1]] *= 0.5
    return np.outer(w1, w2)


def region_mask(grid: Grid, region) -> np.ndarray:
    """Nodes inside ``region`` (all nodes when region is None)."""
    if region is None:
        return np.ones((grid.n1, grid.n2), dtype=bool)
    a, b, c, d = geo.bounding_box(region)
    (g1, g2), (g3, g4) = grid.x1_range, grid.x2_range
    eps = 1e-12
    if a < g1 - eps or b > g2 + eps or c < g3 - eps or d > g4 + eps:
        raise RegionOutsideGridError(f"region {region.kind} bbox {(a, b, c, d)} leaves the grid")
    return geo.contains(region, grid.points())


def region_diameter_on_grid(grid: Grid, region) -> float:
    if region is None:
        return math.hypot(grid.x1_range[1] - grid.x1_range[0], grid.x2_range[1] - grid.x2_range[0])
    return geo.region_diameter(region).value


@dataclass(frozen=True)
class ABPResult:
    margin: float
    sup_neg: float
    bound: float
    weighted_norm: float
    diameter: float


def abp_ratio_parts(sol: Solution, f, region=None):
    """(sup u⁻, diam·‖x1 f⁺‖_L²) over ``region``."""
    grid = sol.grid
    mask = region_mask(grid, region)
    if not np.any(mask):
        raise RegionOutsideGridError("no grid node inside the region")
    F = grid.evaluate(f)
    X1, _ = grid.mesh()
    w = node_weights(grid)
    integrand = (X1 * np.maximum(F, 0.0)) ** 2
    norm = math.sqrt(float(np.sum((w * integrand)[mask])))
    sup_neg = float(np.max(np.maximum(-sol.values[mask], 0.0)))
    return sup_neg, region_diameter_on_grid(grid, region) * norm, norm


def check_abp(sol: Solution, f, C_abp: float, region=None) -> ABPResult:
    """margin = C·diam(Ω)·‖x1 f⁺‖_L²(Ω) − sup_Ω u⁻ over the full region.

    The full-region integral dominates the contact-set integral, so the
    margin is nonnegative whenever the weighted ABP bound holds.
    """
    if region is None and np.min(sol.values[sol.grid.boundary_mask()]) < -1e-12:
        raise ValueError("ABP check needs u >= 0 on the boundary")
    sup_neg, dn, norm = abp_ratio_parts(sol, f, region)
    bound = C_abp * dn
    return ABPResult(bound - sup_neg, sup_neg, bound, norm, dn / norm if norm > 0 else math.nan)


def bump(center, width: float, amplitude: float):
    """Smooth Gaussian bump as a callable of (x1, x2)."""
    c1, c2 = center

    def g(x1, x2):
        return amplitude * np.exp(-((x1 - c1) ** 2 + (x2 - c2) ** 2) / (2 * width**2))
    return g


def write_grid_csv(path, grid: Grid, values) -> None:
    """CSV with columns i, j, x1, x2, value."""
    values = np.asarray(values, dtype=float)
    X1, X2 = grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x1", "x2", "value"])
        for i in range(grid.n1):
            for j in range(grid.n2):
                w.writerow([i, j, repr(float(X1[i, j])), repr(float(X2[i, j])),
                            repr(float(values[i, j]))])


@dataclass(frozen=True)
class SolverConfig:
    n1: int = 65
    n2: int = 65
    window: tuple = (-2.0, 2.0, -2.0, 2.0)
    coefficient_seed: int = 0
    case: str = "mixed"
    coefficients: str = "constant"  # constant | smooth | piecewise

    def grid(self) -> Grid:
        return Grid.from_window(self.window, self.n1, self.n2)

    def coefficient_field(self, grid: Grid | None = None) -> CoefficientField:
        grid = grid or self.grid()
        if self.coefficients == "constant":
            return CoefficientField.constant(grid)
        rng = np.random.default_rng(self.coefficient_seed)
        return random_coefficient_field(grid, rng, kind=self.coefficients)
