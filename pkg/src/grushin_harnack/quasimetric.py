"""Sampling estimators for quasi-metric measure spaces.

Every estimator here reports a sampled supremum, hence a lower bound for the
true structural constant.  None of them certify anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.stats import qmc

Distance = Callable[[np.ndarray, np.ndarray], np.ndarray]
BallMeasure = Callable[[Sequence[float], float], float]

# Empirical ceiling for the quasi-triangle constant of d̃ (sampled sup ≈ 1.10).
K_MAX_DTILDE = 1.5


class MetricAxiomError(ValueError):
    """A triple violated the metric axioms (zero detour, positive distance)."""


class InvalidMeasureError(ValueError):
    pass


@dataclass(frozen=True)
class QuasiMetricSpec:
    K: float
    alpha_h: float
    beta_h: float
    C_D: float
    delta_rd: float

    def __post_init__(self):
        if not self.K >= 1:
            raise ValueError("K must be >= 1")
        if not 0 < self.alpha_h <= 1:
            raise ValueError("alpha_h must lie in (0, 1]")
        if not self.beta_h > 0:
            raise ValueError("beta_h must be positive")
        if not self.C_D > 1:
            raise ValueError("C_D must exceed 1")
        if not 0 < self.delta_rd < 1:
            raise ValueError("delta_rd must lie in (0, 1)")

    @property
    def q(self) -> float:
        return math.log2(self.C_D)


@dataclass(frozen=True)
class RingModulus:
    eps: float
    omega: float


class Estimate(NamedTuple):
    """Sampled supremum; ``witness`` indexes the maximizing sample."""

    value: float
    witness: int
    n_effective: int


class DoublingEstimate(NamedTuple):
    C_D: float
    q: float
    witness: int


def euclidean(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return np.sqrt((d * d).sum(-1))


def halton_points(n: int, window=(-2.0, 2.0, -2.0, 2.0), skip: int = 0) -> np.ndarray:
    """Unscrambled Halton points (bases 2 and 3) mapped into ``window``."""
    sampler = qmc.Halton(d=2, scramble=False)
    if skip:
        sampler.fast_forward(skip)
    u = sampler.random(n)
    a, b, c, d = window
    return qmc.scale(u, [a, c], [b, d])


def halton_triples(n: int, window=(-2.0, 2.0, -2.0, 2.0), skip: int = 0) -> np.ndarray:
    """``n`` point triples, shape (n, 3, 2), from consecutive Halton points."""
    return halton_points(3 * n, window, skip).reshape(n, 3, 2)


def estimate_quasi_triangle_K(distance: Distance, samples) -> Estimate:
    """Max over triples (x, y, z) of d(x, y) / (d(x, z) + d(z, y)).

    Triples with zero numerator and zero detour (x = y = z) are skipped.
    """
    t = np.asarray(samples, dtype=float)
    x, y, z = t[:, 0], t[:, 1], t[:, 2]
    num = np.asarray(distance(x, y), dtype=float)
    den = np.asarray(distance(x, z), dtype=float) + np.asarray(distance(z, y), dtype=float)
    bad = (den == 0) & (num > 0)
    if np.any(bad):
        raise MetricAxiomError(f"triple {int(np.argmax(bad))} has zero detour but d(x,y) > 0")
    ok = den > 0
    if not np.any(ok):
        raise MetricAxiomError("no non-degenerate triple in the sample")
    ratio = np.full(len(t), -np.inf)
    ratio[ok] = num[ok] / den[ok]
    i = int(np.argmax(ratio))
    return Estimate(float(ratio[i]), i, int(ok.sum()))


def _holder_parts(distance, samples):
    t = np.asarray(samples, dtype=float)
    x, y, z = t[:, 0], t[:, 1], t[:, 2]
    dxy = np.asarray(distance(x, y), dtype=float)
    dxz = np.asarray(distance(x, z), dtype=float)
    dyz = np.asarray(distance(y, z), dtype=float)
    return dxy, dxz, dyz


def _check_holder(alpha_h, beta_h=1.0):
    if not 0 < alpha_h <= 1:
        raise ValueError("alpha_h must lie in (0, 1]")
    if not beta_h > 0:
        raise ValueError("beta_h must be positive")


def holder_defect(distance: Distance, alpha_h: float, beta_h: float, samples) -> float:
    """Max of |d(x,y) - d(x,z)| - β d(y,z)^α (d(x,y) + d(x,z))^(1-α).

    A value <= 0 means the Hölder inequality holds on every sampled triple.
    """
    _check_holder(alpha_h, beta_h)
    dxy, dxz, dyz = _holder_parts(distance, samples)
    with np.errstate(invalid="ignore"):
        bound = beta_h * dyz**alpha_h * (dxy + dxz) ** (1.0 - alpha_h)
    bound = np.nan_to_num(bound, nan=0.0)
    return float(np.max(np.abs(dxy - dxz) - bound))


def minimal_holder_beta(distance: Distance, alpha_h: float, samples) -> float:
    """Least β making :func:`holder_defect` non-positive on ``samples``."""
    _check_holder(alpha_h)
    dxy, dxz, dyz = _holder_parts(distance, samples)
    den = dyz**alpha_h * (dxy + dxz) ** (1.0 - alpha_h)
    ok = den > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(dxy - dxz)[ok] / den[ok]))


def _measure(measure_of_ball, center, r):
    m = float(measure_of_ball(center, r))
    if not m > 0:
        raise InvalidMeasureError(f"ball ({tuple(center)}, {r}) has measure {m}")
    return m


def doubling_ratios(measure_of_ball: BallMeasure, balls) -> np.ndarray:
    """Per-ball μ(B_2r)/μ(B_r)."""
    return np.array([_measure(measure_of_ball, c, 2 * r) / _measure(measure_of_ball, c, r)
                     for c, r in balls])


def doubling_constant(measure_of_ball: BallMeasure, balls) -> DoublingEstimate:
    """Max over ``balls`` of μ(B_2r(x))/μ(B_r(x)), with q = log₂ of it."""
    ratios = doubling_ratios(measure_of_ball, balls)
    i = int(np.argmax(ratios))
    return DoublingEstimate(float(ratios[i]), math.log2(ratios[i]), i)


def reverse_doubling(measure_of_ball: BallMeasure, balls) -> float:
    """Max over ``balls`` of μ(B_r)/μ(B_2r); reverse doubling needs this < 1."""
    return float(np.max(1.0 / doubling_ratios(measure_of_ball, balls)))


def ring_modulus(measure_of_ball: BallMeasure, ball, eps: float) -> RingModulus:
    """Measure fraction of the annulus B_r \\ B_(1-ε)r inside B_r.

    Balls are nested in the radius, so the annulus measure is a difference.
    """
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    center, r = ball
    full = _measure(measure_of_ball, center, r)
    if eps == 0:
        return RingModulus(0.0, 0.0)
    inner = float(measure_of_ball(center, (1.0 - eps) * r))
    return RingModulus(eps, min(1.0, max(0.0, (full - inner) / full)))
