"""Closed-form geometry of the Grushin plane.

Points are arrays whose last axis has length 2, ``(x1, x2)``.  Every kernel
broadcasts over leading axes, so a single call can evaluate a whole grid.

Regions (``Box``, ``BTilde``, ``G``, ``H`` and the ring ``RingH``) have exact
membership tests.  Measures and diameters are estimated numerically: measures
by midpoint quadrature, diameters from traced boundary samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

REGION_KINDS = ("Box", "BTilde", "G", "H", "RingH")
STRUCTURE_KINDS = ("BTilde", "G", "H", "CC")
C_SEARCH_MAX = 64.0


class InvalidParameterError(ValueError):
    """Raised for out-of-range scalar parameters (radius, scale, ...)."""


class StructureViolationError(RuntimeError):
    """No constant in the search interval certifies the box inclusions."""


class Point2(NamedTuple):
    x1: float
    x2: float


def _xy(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1]


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------- kernels


def dtilde(x, y):
    """Hölder quasi distance |x1-y1| + sqrt(x1²+y1²+4|x2-y2|) - sqrt(x1²+y1²)."""
    x1, x2 = _xy(x)
    y1, y2 = _xy(y)
    s = x1 * x1 + y1 * y1
    return _out(np.abs(x1 - y1) + np.sqrt(s + 4.0 * np.abs(x2 - y2)) - np.sqrt(s))


def rho4(x, y):
    x1, x2 = _xy(x)
    y1, y2 = _xy(y)
    return (x1 * x1 - y1 * y1) ** 2 + 4.0 * (x2 - y2) ** 2


def sigma4(x, y):
    x1, x2 = _xy(x)
    y1, y2 = _xy(y)
    return (x1 * x1 - y1 * y1) ** 2 + 2.0 * y1 * y1 * (x1 - y1) ** 2 + 4.0 * (x2 - y2) ** 2


def rho(x, y):
    return _out(np.sqrt(np.sqrt(rho4(x, y))))


def sigma(x, y):
    """Non-symmetric kernel; the pole ``y`` is the second argument."""
    return _out(np.sqrt(np.sqrt(sigma4(x, y))))


def _check_radius(r):
    if not r > 0:
        raise InvalidParameterError(f"radius must be positive, got {r}")


def level_g(r, x, y):
    """Level function g_r(., y) whose r-sublevel set is G(y, r).

    On the overlap x1*y1 == 0 with |y1| >= r the finite branch is used.
    """
    _check_radius(r)
    x1, _ = _xy(x)
    y1, _ = _xy(y)
    rv = np.sqrt(rho4(x, y))  # rho squared
    ay = np.abs(y1)
    near = ay < r
    with np.errstate(divide="ignore", invalid="ignore"):
        far = np.where(x1 * y1 >= 0, rv / np.where(near, 1.0, ay), np.inf)
    return _out(np.where(near, np.sqrt(rv), far))


def level_h(r, x, y):
    """Level function h_r(., y) whose r-sublevel set is H(y, r)."""
    _check_radius(r)
    y1, _ = _xy(y)
    sv = np.sqrt(sigma4(x, y))  # sigma squared
    ay = np.abs(y1)
    near = ay < r
    return _out(np.where(near, np.sqrt(sv), sv / np.where(near, 1.0, ay)))


def box_gauge(center, p):
    """Smallest s with p in the closure of Box(center, s)."""
    c1, c2 = _xy(center)
    p1, p2 = _xy(p)
    a = np.abs(c1)
    d2 = np.abs(p2 - c2)
    # s(s + |c1|) = |dx2|  →  positive root, written to avoid cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        s2 = 2.0 * d2 / (a + np.sqrt(a * a + 4.0 * d2))
    s2 = np.where(d2 == 0, 0.0, s2)
    return _out(np.maximum(np.abs(p1 - c1), s2))


def dilate(t, p):
    """Anisotropic dilation (t x1, t² x2)."""
    if not t > 0:
        raise InvalidParameterError(f"dilation factor must be positive, got {t}")
    x1, x2 = _xy(p)
    out = np.stack([t * x1, t * t * x2], axis=-1)
    if out.ndim == 1:
        return Point2(float(out[0]), float(out[1]))
    return out


# ---------------------------------------------------------------- regions


@dataclass(frozen=True)
class RegionDescriptor:
    kind: str
    center: tuple[float, float]
    radius: float
    outer_radius: float | None = None

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise InvalidParameterError(f"unknown region kind {self.kind!r}")
        _check_radius(self.radius)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.kind == "RingH":
            if self.outer_radius is None or not self.outer_radius > self.radius:
                raise InvalidParameterError("RingH needs outer_radius > radius")

    @property
    def scale(self) -> float:
        """Largest radius that governs the extent of the region."""
        return self.outer_radius if self.kind == "RingH" else self.radius


def Box(center, r):
    return RegionDescriptor("Box", tuple(center), r)


def BTilde(center, r):
    return RegionDescriptor("BTilde", tuple(center), r)


def G(center, r):
    return RegionDescriptor("G", tuple(center), r)


def H(center, r):
    return RegionDescriptor("H", tuple(center), r)


def RingH(center, r, outer):
    return RegionDescriptor("RingH", tuple(center), r, outer)


def contains(region: RegionDescriptor, p):
    """Exact membership of point(s) ``p`` in ``region``."""
    c, r = region.center, region.radius
    k = region.kind
    if k == "Box":
        inside = np.asarray(box_gauge(c, p)) < r
    elif k == "BTilde":
        inside = np.asarray(dtilde(c, p)) < r
    elif k == "G":
        inside = np.asarray(level_g(r, p, c)) < r
    elif k == "H":
        inside = np.asarray(level_h(r, p, c)) < r
    else:
        R = region.outer_radius
        inside = (np.asarray(level_h(R, p, c)) < R) & (np.asarray(level_h(r, p, c)) > r)
    return bool(inside) if inside.ndim == 0 else inside


def bounding_box(region: RegionDescriptor) -> tuple[float, float, float, float]:
    """Axis-aligned rectangle (x1min, x1max, x2min, x2max) containing the region.

    B(y, r) lies in Box(y, r); G(y, r) and H(y, r) lie in Box(y, 3r).
    """
    factor = {"Box": 1.0, "BTilde": 1.0}.get(region.kind, 3.0)
    s = factor * region.scale
    c1, c2 = region.center
    w2 = s * (s + abs(c1))
    return (c1 - s, c1 + s, c2 - w2, c2 + w2)


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    error_bound: float
    cells: int


def _cell_grid(bbox, n1, n2):
    a, b, c, d = bbox
    h1, h2 = (b - a) / n1, (d - c) / n2
    m1 = a + h1 * (np.arange(n1) + 0.5)
    m2 = c + h2 * (np.arange(n2) + 0.5)
    return m1, m2, h1, h2


def region_measure(region: RegionDescriptor, resolution: int = 64) -> MeasureEstimate:
    """Lebesgue measure by midpoint quadrature on a uniform grid.

    ``resolution`` is the number of cells per radius along each axis of the
    region's natural box scale.  The error bound counts cells whose corners
    disagree about membership (a proxy for perimeter times cell size).
    """
    if resolution < 64:
        raise InvalidParameterError("resolution must be at least 64 cells per radius")
    bbox = bounding_box(region)
    factor = 1 if region.kind in ("Box", "BTilde") else 3
    n = 2 * resolution * factor
    m1, m2, h1, h2 = _cell_grid(bbox, n, n)
    X1, X2 = np.meshgrid(m1, m2, indexing="ij")
    inside = contains(region, np.stack([X1, X2], axis=-1))
    value = inside.sum() * h1 * h2

    e1 = np.linspace(bbox[0], bbox[1], n + 1)
    e2 = np.linspace(bbox[2], bbox[3], n + 1)
    E1, E2 = np.meshgrid(e1, e2, indexing="ij")
    corner = contains(region, np.stack([E1, E2], axis=-1)).astype(np.int8)
    s = corner[:-1, :-1] + corner[1:, :-1] + corner[:-1, 1:] + corner[1:, 1:]
    mixed = np.count_nonzero((s > 0) & (s < 4))
    return MeasureEstimate(float(value), float(mixed * h1 * h2), int(inside.sum()))


# ---------------------------------------------------------------- boundaries


@dataclass
class BoundarySamples:
    points: np.ndarray
    star_shaped: bool = True


def _box_perimeter(n):
    """n points on the boundary of [-1, 1]², corners included."""
    t = np.arange(n) * (8.0 / n)
    side = np.floor(t).astype(int) // 2
    u = t - 2 * side - 1.0
    pts = np.empty((n, 2))
    pts[side == 0] = np.column_stack([u[side == 0], -np.ones((side == 0).sum())])
    pts[side == 1] = np.column_stack([np.ones((side == 1).sum()), u[side == 1]])
    pts[side == 2] = np.column_stack([-u[side == 2], np.ones((side == 2).sum())])
    pts[side == 3] = np.column_stack([-np.ones((side == 3).sum()), -u[side == 3]])
    return pts


def box_points(center, s, unit_pts):
    """Map points of [-1,1]² onto Box(center, s)."""
    c1, c2 = center
    return np.column_stack(
        [c1 + s * unit_pts[:, 0], c2 + s * (s + abs(c1)) * unit_pts[:, 1]]
    )


def boundary_samples(region: RegionDescriptor, n: int = 512, iters: int = 64) -> BoundarySamples:
    """Boundary points traced by bisection along rays from the center.

    Boxes are sampled directly on their perimeter.  For other kinds, rays
    are spread in box-normalized directions; each ray is also probed at
    interior fractions and the result is flagged when the set is not
    star-shaped along it.
    """
    if region.kind == "Box":
        return BoundarySamples(box_points(region.center, region.radius, _box_perimeter(n)))
    if region.kind == "RingH":
        region = H(region.center, region.outer_radius)
    c = np.asarray(region.center)
    s = region.scale
    theta = 2 * np.pi * np.arange(n) / n
    dirs = np.column_stack([s * np.cos(theta), s * (s + abs(c[0])) * np.sin(theta)])
    lo = np.zeros(n)
    hi = np.full(n, 4.0)
    while np.any(contains(region, c + hi[:, None] * dirs)):
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ins = contains(region, c + mid[:, None] * dirs)
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    pts = c + lo[:, None] * dirs
    fr = np.linspace(0.0, 1.0, 17)[1:-1]
    probes = c + (lo[:, None, None] * fr[None, :, None]) * dirs[:, None, :]
    star = bool(np.all(contains(region, probes)))
    return BoundarySamples(pts, star)


@dataclass(frozen=True)
class DiameterEstimate:
    value: float
    degenerate: bool = False


def max_pairwise_distance(pts) -> float:
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return 0.0
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d * d).sum(-1)).max())


def region_diameter(region: RegionDescriptor, n_samples: int = 512) -> DiameterEstimate:
    """Euclidean diameter estimate (a lower bound) from boundary samples."""
    if n_samples < 2:
        return DiameterEstimate(0.0, degenerate=True)
    pts = boundary_samples(region, n_samples).points
    return DiameterEstimate(max_pairwise_distance(pts))


def euclidean_diameter(points) -> float:
    """Diameter of a point cloud, via its convex hull when it is large."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 64:
        from scipy.spatial import ConvexHull, QhullError

        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    return max_pairwise_distance(pts)


# ---------------------------------------------------------------- structure theorems


@dataclass
class StructureConstantReport:
    inner_kind: str
    outer_kind: str
    constant: float
    inner_constant: float
    outer_constant: float
    witnesses: list = field(default_factory=list)
    star_shaped: bool = True
    proxy: str | None = None

    def to_dict(self):
        return {
            "inner_kind": self.inner_kind,
            "outer_kind": self.outer_kind,
            "constant": self.constant,
            "inner_constant": self.inner_constant,
            "outer_constant": self.outer_constant,
            "witnesses": self.witnesses,
            "star_shaped": self.star_shaped,
            "proxy": self.proxy,
        }


_UNIT_INTERIOR = np.stack(
    np.meshgrid(np.linspace(-1, 1, 17)[1:-1], np.linspace(-1, 1, 17)[1:-1], indexing="ij"), -1
).reshape(-1, 2)


def _inner_constant(region, n_boundary, tol):
    """Least C in [1, 64] with Box(center, r/C) inside the region (bisection)."""
    unit = np.vstack([_box_perimeter(n_boundary), _UNIT_INTERIOR])
    c, r = region.center, region.radius

    def ok(C):
        return bool(np.all(contains(region, box_points(c, r / C, unit))))

    if ok(1.0):
        return 1.0
    if not ok(C_SEARCH_MAX):
        raise StructureViolationError(f"inner inclusion fails at C={C_SEARCH_MAX} for {region}")
    lo, hi = 1.0, C_SEARCH_MAX
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


def _interior_samples(region, n=48):
    bbox = bounding_box(region)
    m1, m2, _, _ = _cell_grid(bbox, n, n)
    P = np.stack(np.meshgrid(m1, m2, indexing="ij"), -1).reshape(-1, 2)
    return P[contains(region, P)]


def structure_constant(kind: str, centers: Sequence, radii: Sequence, n_boundary: int = 512,
                       tol: float = 1e-4) -> StructureConstantReport:
    """Least C with Box(x, r/C) ⊆ S(x, r) ⊆ Box(x, C r) on every sample.

    ``kind`` is one of BTilde, G, H, or CC.  The Carnot–Carathéodory ball is
    never computed; ``CC`` runs the d̃-ball sandwich and is marked as a proxy.
    """
    if kind not in STRUCTURE_KINDS:
        raise InvalidParameterError(f"unknown structure kind {kind!r}")
    region_kind = "BTilde" if kind == "CC" else kind
    if len(centers) != len(radii) or not len(centers):
        raise InvalidParameterError("centers and radii must be non-empty and of equal length")
    best_in, best_out = 1.0, 0.0
    w_in = w_out = None
    star = True
    for c, r in zip(centers, radii):
        region = RegionDescriptor(region_kind, tuple(c), float(r))
        bs = boundary_samples(region, n_boundary)
        star &= bs.star_shaped
        pts = np.vstack([bs.points, _interior_samples(region)])
        g = np.asarray(box_gauge(region.center, pts)) / region.radius
        i = int(np.argmax(g))
        if g[i] > best_out:
            best_out = float(g[i])
            w_out = {"center": list(region.center), "radius": region.radius,
                     "point": pts[i].tolist(), "side": "outer"}
        cin = _inner_constant(region, n_boundary, tol)
        if cin > best_in or w_in is None:
            best_in = max(best_in, cin)
            w_in = {"center": list(region.center), "radius": region.radius,
                    "C": cin, "side": "inner"}
    if best_out > C_SEARCH_MAX:
        raise StructureViolationError(f"outer inclusion needs C={best_out:.3g} > {C_SEARCH_MAX}")
    # outer inclusion of an open set in an open box: any C above the sup works
    outer = best_out * (1.0 + 1e-9)
    constant = max(best_in, outer, 1.0 + 1e-12)
    return StructureConstantReport(
        inner_kind="Box", outer_kind=region_kind, constant=constant,
        inner_constant=best_in, outer_constant=outer,
        witnesses=[w for w in (w_in, w_out) if w is not None], star_shaped=star,
        proxy="d-tilde ball stands in for the CC ball" if kind == "CC" else None,
    )


def box_area(center, r) -> float:
    """Closed-form |Box(center, r)| = 4 r² (r + |c1|)."""
    return 4.0 * r * r * (r + abs(center[0]))


def dump_region_csv(region: RegionDescriptor, path, n: int = 200) -> None:
    """Write x1,x2,inside rows sampled on the region's bounding box."""
    a, b, c, d = bounding_box(region)
    pad1, pad2 = 0.1 * (b - a), 0.1 * (d - c)
    X1, X2 = np.meshgrid(np.linspace(a - pad1, b + pad1, n), np.linspace(c - pad2, d + pad2, n),
                         indexing="ij")
    P = np.stack([X1, X2], -1).reshape(-1, 2)
    inside = contains(region, P).astype(int)
    with open(path, "w") as fh:
        fh.write("x1,x2,inside\n")
        for (p1, p2), v in zip(P, inside):
            fh.write(f"{p1:.10g},{p2:.10g},{v}\n")

