"""Explicit ring barrier Φ = M2·σ^α − M1 for the Grushin operator.

Φ depends on x only through σ(x, y), so it is constant on every level set
of h_r.  The constants (M1, M2) are tuned so that Φ = 1 on ∂H(y, r) and
Φ = 0 on ∂H(y, 3r); M3 is the value of Φ on ∂H(y, 2r).  Which boundary is
a σ-level and which is a σ²/|y1|-level depends on where |y1| sits relative
to r, 2r and 3r, giving four cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import geometry as geo


class SingularityError(ZeroDivisionError):
    """σ(x, y) vanished where a derivative or a negative power is needed."""


class InvalidEllipticityError(ValueError):
    pass


def barrier_alpha(lam: float, Lam: float) -> float:
    """Extremal admissible exponent α = 4 − 10Λ/λ."""
    if not lam > 0 or not Lam >= lam:
        raise InvalidEllipticityError(f"need 0 < lambda <= Lambda, got {lam}, {Lam}")
    return 4.0 - 10.0 * Lam / lam


def _sigma_checked(x, y):
    s = np.asarray(geo.sigma(x, y), dtype=float)
    if np.any(s <= 0):
        raise SingularityError("sigma(x, y) = 0: x lies on the pole y")
    return s


def sigma_derivatives(x, y):
    """(σ_x1, σ_x2, σ_x1x1, σ_x1x2, σ_x2x2) at x for the pole y.

    Vectorized over a leading axis of ``x``; scalars come back for a single point.
    """
    s = _sigma_checked(x, y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x1 = x[..., 0]
    p = x1**3 - y[..., 0] ** 3
    d2 = x[..., 1] - y[..., 1]
    s3 = s**-3
    s7 = s**-7
    out = (s3 * p,
           2.0 * s3 * d2,
           -3.0 * s7 * p * p + 3.0 * s3 * x1 * x1,
           -6.0 * s7 * p * d2,
           -12.0 * s7 * d2 * d2 + 2.0 * s3)
    if np.ndim(s) == 0:
        return tuple(float(v) for v in out)
    return out


@dataclass(frozen=True)
class BarrierSpec:
    center: geo.Point2
    r: float
    alpha: float
    case_id: str
    M1: float
    M2: float
    M3: float
    gamma_floor: float

    @property
    def inner_level(self) -> float:
        """σ-value of ∂H(y, r)."""
        return _sigma_level(self.center, self.r)

    @property
    def outer_level(self) -> float:
        """σ-value of ∂H(y, 3r)."""
        return _sigma_level(self.center, 3.0 * self.r)

    @property
    def scale(self) -> float:
        """Magnitude used to normalize subsolution tolerances."""
        return abs(self.M2) * self.r ** (self.alpha - 2.0)


def _sigma_level(y, rho):
    a = abs(float(y[0]))
    return rho if a < rho else math.sqrt(rho * a)


def classify_case(y1: float, r: float) -> str:
    """Ties go to the case listed first: I, II, III, IV."""
    a = abs(y1)
    if a < r:
        return "I"
    if a >= 3.0 * r:
        return "II"
    if a < 2.0 * r:
        return "III"
    return "IV"


def _m3_case(case, alpha, t):
    """Value of Φ on ∂H(y, 2r) as a function of t = |y1|/r."""
    if case == "I":
        return (2.0**alpha - 3.0**alpha) / (1.0 - 3.0**alpha)
    if case == "II":
        h = alpha / 2.0
        return (2.0**h - 3.0**h) / (1.0 - 3.0**h)
    den = t ** (alpha / 2.0) - 3.0**alpha
    if case == "III":
        return (2.0**alpha - 3.0**alpha) / den
    return ((2.0 * t) ** (alpha / 2.0) - 3.0**alpha) / den


def gamma_floor(alpha: float) -> float:
    """Smallest value M3 takes over the four cases and all |y1|/r.

    Cases I and II are closed forms; for III and IV the minimum over
    t = |y1|/r is found numerically (the two branches agree at t = 2).
    """
    cands = [_m3_case("I", alpha, 0.0), _m3_case("II", alpha, 3.0)]
    for case, (a, b) in (("III", (1.0, 2.0)), ("IV", (2.0, 3.0))):
        ts = np.linspace(a, b, 401)
        vals = np.array([_m3_case(case, alpha, t) for t in ts])
        i = int(np.argmin(vals))
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        res = minimize_scalar(lambda t: _m3_case(case, alpha, t), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        cands.append(min(float(vals[i]), float(res.fun)))
    return float(min(cands))


def db_barrier_constants(y, r: float, alpha: float) -> BarrierSpec:
    if not r > 0:
        raise geo.InvalidParameterError("r must be positive")
    if not alpha < 0:
        raise ValueError("alpha must be negative")
    y = geo.Point2(float(y[0]), float(y[1]))
    a = abs(y.x1)
    case = classify_case(y.x1, r)
    # 3^α/(1 − 3^α) is written as 1/(3^(−α) − 1), exact for integer α
    if case == "I":
        d = 3.0**-alpha - 1.0
        M1, M2 = 1.0 / d, 3.0**-alpha / (r**alpha * d)
    elif case == "II":
        h = alpha / 2.0
        d = 3.0**-h - 1.0
        M1, M2 = 1.0 / d, 3.0**-h / ((r * a) ** h * d)
    else:
        # inner boundary is a σ²/|y1| level, outer one a σ level
        t = a / r
        M1 = 3.0**alpha / (t ** (alpha / 2.0) - 3.0**alpha)
        M2 = 1.0 / ((r * a) ** (alpha / 2.0) - (3.0 * r) ** alpha)
    M3 = _m3_case(case, alpha, a / r)
    return BarrierSpec(center=y, r=float(r), alpha=float(alpha), case_id=case, M1=float(M1),
                       M2=float(M2), M3=float(M3), gamma_floor=gamma_floor(alpha))


def db_barrier_eval(spec: BarrierSpec, x):
    s = _sigma_checked(x, spec.center)
    out = spec.M2 * s**spec.alpha - spec.M1
    return float(out) if np.ndim(out) == 0 else out


def barrier_operator(spec: BarrierSpec, a11, a12, a22, x):
    """LΦ = a11Φ_x1x1 + a22x1²Φ_x2x2 + 2a12x1Φ_x1x2 via the chain rule."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    s = _sigma_checked(x, spec.center)
    s1, s2, s11, s12, s22 = sigma_derivatives(x, spec.center)
    al = spec.alpha
    f1 = spec.M2 * al * s ** (al - 1.0)
    f2 = spec.M2 * al * (al - 1.0) * s ** (al - 2.0)
    phi11 = f2 * s1 * s1 + f1 * s11
    phi12 = f2 * s1 * s2 + f1 * s12
    phi22 = f2 * s2 * s2 + f1 * s22
    x1 = x[:, 0]
    return a11 * phi11 + a22 * x1 * x1 * phi22 + 2.0 * a12 * x1 * phi12


def ellipticity_bounds(a11, a12, a22):
    """Eigenvalue range of [[a11, a12], [a12, a22]] (elementwise)."""
    a11, a12, a22 = (np.asarray(v, dtype=float) for v in (a11, a12, a22))
    m = 0.5 * (a11 + a22)
    d = np.sqrt(0.25 * (a11 - a22) ** 2 + a12 * a12)
    return m - d, m + d


def verify_subsolution(spec: BarrierSpec, a11, a12, a22, points, lam=None, Lam=None,
                       check_ring: bool = True) -> float:
    """Minimum of LΦ over ``points`` for constant coefficients."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if lam is not None and Lam is not None:
        lo, hi = ellipticity_bounds(a11, a12, a22)
        if np.any(lo < lam * (1 - 1e-12)) or np.any(hi > Lam * (1 + 1e-12)):
            raise InvalidEllipticityError("coefficients violate the ellipticity bounds")
    if check_ring:
        ring = geo.RingH(spec.center, spec.r, 3.0 * spec.r)
        if not np.all(geo.contains(ring, pts)):
            raise ValueError("some sample points lie outside the ring R(y, r, 3r)")
    return float(np.min(barrier_operator(spec, a11, a12, a22, pts)))


def ring_samples(y, r: float, outer: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform samples of H(y, outer) minus the closure of H(y, r), by rejection."""
    region = geo.RingH(y, r, outer)
    a, b, c, d = geo.bounding_box(region)
    out = []
    need = n
    while need > 0:
        m = max(4 * need, 256)
        p = np.column_stack([rng.uniform(a, b, m), rng.uniform(c, d, m)])
        p = p[geo.contains(region, p)]
        out.append(p[:need])
        need -= len(out[-1])
    return np.concatenate(out)


def random_constant_coefficients(rng: np.random.Generator, lam: float, Lam: float):
    """Constant (a11, a12, a22) with spectrum inside [λ, Λ] and both ends attained."""
    phi = rng.uniform(0.0, np.pi)
    c, s = math.cos(phi), math.sin(phi)
    a11 = lam * c * c + Lam * s * s
    a22 = lam * s * s + Lam * c * c
    a12 = (Lam - lam) * c * s
    return a11, a12, a22


def level_points(y, level: float, n: int) -> np.ndarray:
    """Points on the σ-level set {σ(·, y) = level}, closed form in x2."""
    y1, y2 = float(y[0]), float(y[1])
    s4 = level**4

    def A(x1):
        return (x1 - y1) ** 2 * (x1 * x1 + 2 * x1 * y1 + 3 * y1 * y1)

    # A is convex with minimum 0 at x1 = y1; bracket the two roots of A = s4
    step = level + abs(y1) + 1.0
    lo = brentq(lambda t: A(t) - s4, y1 - 2 * step, y1) if s4 > 0 else y1
    hi = brentq(lambda t: A(t) - s4, y1, y1 + 2 * step) if s4 > 0 else y1
    k = n // 2
    x1 = lo + (hi - lo) * 0.5 * (1 - np.cos(np.pi * np.arange(k + 1) / k))
    half = np.sqrt(np.maximum(s4 - A(x1), 0.0) / 4.0)
    top = np.column_stack([x1, y2 + half])
    bot = np.column_stack([x1[1:-1][::-1], y2 - half[1:-1][::-1]])
    return np.concatenate([top, bot])[:n]
