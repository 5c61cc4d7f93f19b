"""Attenuation grids, dB/km conversions and security-bound crossings."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import model
from .errors import NoCrossingError
from .model import LinkParams, QberPoint, Scheme
from .simulate import mc_estimate

# QBER below which a key can still be distilled.
TWO_WAY_BOUND = 0.20  # with two-way classical post-processing
ONE_WAY_BOUND = 0.11  # one-way post-processing; comparison only

MIN_MC_SIFT = 1e-5
MAX_GRID_POINTS = 1_000_000
BRACKET_DB = (0.0, 200.0)
QBER_TOL = 1e-6
BISECT_WIDTH_DB = 1e-10


@dataclass(frozen=True)
class SweepSpec:
    schemes: Sequence[Scheme] = (Scheme.DIRECT, Scheme.RELAY)
    from_db: float = 0.0
    to_db: float = 80.0
    step_db: float = 0.5
    include_mc: bool = False
    mc_pulses: int = 10**6
    seed: int = 0
    shard_count: int = 1

    def __post_init__(self):
        if not self.step_db > 0:
            raise ValueError("step_db must be positive")
        if not (0 <= self.from_db <= self.to_db):
            raise ValueError("need 0 <= from_db <= to_db")
        if (self.to_db - self.from_db) / self.step_db > MAX_GRID_POINTS:
            raise ValueError(f"grid exceeds {MAX_GRID_POINTS} points")
        if self.include_mc and self.mc_pulses < 1:
            raise ValueError("mc_pulses must be at least 1")

    def grid(self) -> np.ndarray:
        # tolerate float steps that do not divide the span exactly
        n = int(math.floor((self.to_db - self.from_db) / self.step_db + 1e-9)) + 1
        return self.from_db + self.step_db * np.arange(n)


@dataclass(frozen=True)
class ThresholdResult:
    scheme: Scheme
    target_qber: float
    crossing_db: float
    crossing_km: float
    achieved_qber: float


def db_from_transmission(t: float) -> float:
    if not t > 0:
        raise ValueError(f"transmission must be positive, got {t!r}")
    return 0.0 - 10.0 * math.log10(t)  # no -0.0 at t = 1


def transmission_from_db(a: float) -> float:
    if a < 0:
        raise ValueError(f"attenuation must be non-negative, got {a!r}")
    return 10.0 ** (-a / 10.0)


def distance_km(a: float, alpha: float) -> float:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return a / alpha


def _point_seed(seed: int, scheme: Scheme, index: int) -> int:
    key = (0 if scheme is Scheme.DIRECT else 1, index)
    ss = np.random.SeedSequence(seed, spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])


def qber_point(scheme: Scheme, a: float, params: LinkParams) -> QberPoint:
    t = transmission_from_db(a)
    sift = model.p_sift(scheme, t, params)
    return QberPoint(
        scheme=scheme,
        attenuation_db=float(a),
        transmission=t,
        distance_km=distance_km(a, params.alpha_db_per_km),
        qber=model.qber(scheme, t, params),
        p_sift=sift,
        sift_rate_hz=params.rep_rate_hz * sift,
    )


def sweep_curve(spec: SweepSpec, params: LinkParams) -> list[QberPoint]:
    """QBER curve per scheme, scheme-major, ascending attenuation.

    MC columns are attached only where the sift probability is at least
    ``MIN_MC_SIFT``; each point gets its own seed derived from ``spec.seed``.
    """
    rows = []
    for scheme in sorted(set(spec.schemes), key=lambda s: s.value):
        for i, a in enumerate(spec.grid()):
            pt = qber_point(scheme, float(a), params)
            if spec.include_mc and pt.p_sift >= MIN_MC_SIFT:
                est = mc_estimate(
                    scheme, pt.transmission, params, spec.mc_pulses,
                    _point_seed(spec.seed, scheme, i), spec.shard_count,
                )
                pt = replace(pt, mc=est)
            rows.append(pt)
    return rows


def find_threshold(
    scheme: Scheme, target_qber: float, params: LinkParams, tol: float = QBER_TOL
) -> ThresholdResult:
    """Attenuation at which the QBER reaches ``target_qber``, by bisection.

    QBER is non-decreasing in attenuation (checked by the test suite), so a
    sign change over the fixed bracket pins a unique crossing.
    """
    if not 0 < target_qber < 0.5:
        raise ValueError("target_qber must lie in (0, 0.5)")

    def f(a: float) -> float:
        return model.qber(scheme, transmission_from_db(a), params) - target_qber

    lo, hi = BRACKET_DB
    f_lo, f_hi = f(lo), f(hi)
    if f_lo >= 0:
        raise NoCrossingError(
            f"{scheme.value}: QBER at 0 dB is {f_lo + target_qber:.6g}, not below {target_qber}"
        )
    if f_hi < 0:
        raise NoCrossingError(f"{scheme.value}: QBER stays below {target_qber} up to {hi} dB")

    mid, f_mid = lo, f_lo
    while hi - lo > BISECT_WIDTH_DB:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    if abs(f_mid) > tol:
        raise NoCrossingError(f"{scheme.value}: bisection stalled at |qber - target| = {abs(f_mid):.3g}")
    return ThresholdResult(
        scheme=scheme,
        target_qber=target_qber,
        crossing_db=mid,
        crossing_km=distance_km(mid, params.alpha_db_per_km),
        achieved_qber=f_mid + target_qber,
    )
