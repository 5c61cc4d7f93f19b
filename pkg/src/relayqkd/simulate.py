"""Per-pulse event model, solved two ways: exact enumeration of every discrete
outcome, and seeded Monte Carlo sampling of the same indicators.

Neither engine calls the closed forms in :mod:`relayqkd.model`; they only share
the click/sift/acceptance rules in :func:`resolve_events`.

Indicator layout of one pulse (columns of the ``photons``/``darks`` arrays):

=========  ===================================  ==========================
column     direct                               relay
=========  ===================================  ==========================
photons    Alice, Bob                           Alice, Bob, BSM-1, BSM-2
darks      Alice x4, Bob x4                     Alice x4, Bob x4, BSM x2
bases      Alice, Bob                           Alice, Bob
=========  ===================================  ==========================
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .errors import EmptySampleError
from .model import BELL_PROJECTION, DETECTORS_PER_PARTY, LinkParams, Scheme, arm_transmission

_NDET = DETECTORS_PER_PARTY
_MC_CHUNK = 1 << 18
_SEED_LIMIT = 1 << 64


@dataclass(frozen=True)
class ExactResult:
    p_sift: float
    p_signal: float
    qber: float


@dataclass(frozen=True)
class McEstimate:
    n_pulses: int
    n_sifted: int
    n_errors: int
    qber_hat: Optional[float]  # None when nothing was sifted
    stderr: Optional[float]
    seed: int
    shard_count: int = 1

    @classmethod
    def from_counts(cls, n_pulses, n_sifted, n_errors, seed, shard_count=1) -> "McEstimate":
        if n_sifted == 0:
            return cls(n_pulses, 0, 0, None, None, seed, shard_count)
        q = n_errors / n_sifted
        return cls(n_pulses, n_sifted, n_errors, q, math.sqrt(q * (1 - q) / n_sifted), seed, shard_count)


class Events(NamedTuple):
    sifted: np.ndarray       # bool: both parties report one click, bases agree, relay heralded
    acceptance: np.ndarray   # float: probability the relay herald is accepted (1 for direct)
    all_genuine: np.ndarray  # bool: every click in the event came from a photon


def n_photon_arms(scheme: Scheme) -> int:
    return scheme.arms


def n_dark_detectors(scheme: Scheme) -> int:
    return 2 * _NDET + (2 if scheme is Scheme.RELAY else 0)


def _party(photon: np.ndarray, darks: np.ndarray, basis: np.ndarray):
    # the photon lands in detector 2*basis; which of the pair is irrelevant to
    # click counting, so the outcome bit is not modelled
    fired = darks.copy()
    rows = np.arange(len(photon))
    fired[rows, 2 * basis] |= photon
    single = fired.sum(axis=1) == 1
    reported = np.argmax(fired, axis=1) // 2
    return single, reported, single & photon


def resolve_events(scheme: Scheme, photons: np.ndarray, darks: np.ndarray, bases: np.ndarray) -> Events:
    """Apply the detection rules to a batch of pulses."""
    one_a, basis_a, gen_a = _party(photons[:, 0], darks[:, :_NDET], bases[:, 0])
    one_b, basis_b, gen_b = _party(photons[:, 1], darks[:, _NDET:2 * _NDET], bases[:, 1])
    sifted = one_a & one_b & (basis_a == basis_b)
    genuine = gen_a & gen_b
    if scheme is Scheme.DIRECT:
        return Events(sifted, np.ones(len(sifted)), genuine)

    bsm_photons = photons[:, 2:4]
    bsm_fired = bsm_photons | darks[:, 2 * _NDET:]
    coincidence = bsm_fired.all(axis=1)
    bsm_genuine = bsm_photons.all(axis=1)
    # dark-assisted coincidences are never rejected by the projection
    acceptance = np.where(bsm_genuine, BELL_PROJECTION, 1.0)
    return Events(sifted & coincidence, acceptance, genuine & bsm_genuine)


def _arm_probs(scheme: Scheme, t: float, params: LinkParams) -> np.ndarray:
    x = arm_transmission(scheme, t) * params.detector_efficiency
    if scheme is Scheme.DIRECT:
        return np.array([x, x])
    y = x * params.polarizer_transmission
    return np.array([x, x, y, y])


@lru_cache(maxsize=None)
def _outcome_table(scheme: Scheme):
    """Every (photon, dark, basis) tuple, restricted to the sifted ones."""
    n_ph, n_dk = n_photon_arms(scheme), n_dark_detectors(scheme)
    n_bits = n_ph + n_dk + 2
    bits = (np.arange(1 << n_bits)[:, None] >> np.arange(n_bits)) & 1
    photons = bits[:, :n_ph].astype(bool)
    darks = bits[:, n_ph:n_ph + n_dk].astype(bool)
    bases = bits[:, n_ph + n_dk:]
    events = resolve_events(scheme, photons, darks, bases)
    keep = events.sifted
    return (
        photons[keep],
        darks[keep],
        events.acceptance[keep],
        events.all_genuine[keep],
    )


def enumerate_exact(scheme: Scheme, t: float, params: LinkParams) -> ExactResult:
    """Sum exact probabilities over the full per-pulse outcome space."""
    if not (0 < t <= 1):
        raise ValueError(f"t={t!r} must lie in (0, 1]")
    photons, darks, acceptance, all_genuine = _outcome_table(scheme)
    p_arm = _arm_probs(scheme, t, params)
    dark = params.dark_count_prob

    weight = np.prod(np.where(photons, p_arm, 1 - p_arm), axis=1)
    weight *= np.prod(np.where(darks, dark, 1 - dark), axis=1)
    weight *= 0.25  # two uniform basis choices
    weight *= acceptance

    v = params.pair_visibility(scheme)
    p_sift = float(weight.sum())
    p_err = float((weight * np.where(all_genuine, 0.5 * (1 - v), 0.5)).sum())
    if p_sift == 0:
        return ExactResult(0.0, 0.0, float("nan"))
    return ExactResult(p_sift, p_sift - 2 * p_err, p_err / p_sift)


def _sample_darks(rng: np.random.Generator, m: int, n_det: int, dark: float) -> np.ndarray:
    # Draw the per-pulse dark-click total, then place the clicks uniformly
    # without replacement: same joint law as n_det independent Bernoulli(dark).
    darks = np.zeros((m, n_det), dtype=bool)
    count = rng.binomial(n_det, dark, size=m)
    hit = np.flatnonzero(count)
    if hit.size:
        order = np.argsort(rng.random((hit.size, n_det)), axis=1)
        chosen = np.arange(n_det) < count[hit, None]
        rows = np.broadcast_to(hit[:, None], order.shape)
        darks[rows[chosen], order[chosen]] = True
    return darks


def _any_columns(a: np.ndarray, start: int, stop: int) -> np.ndarray:
    out = a[:, start].copy()
    for k in range(start + 1, stop):
        out |= a[:, k]
    return out


def _run_shard(scheme: Scheme, p_arm: np.ndarray, params: LinkParams, n: int, seq) -> tuple[int, int]:
    rng = np.random.Generator(np.random.PCG64(seq))
    v = params.pair_visibility(scheme)
    n_dk = n_dark_detectors(scheme)
    sifted_total = errors_total = 0
    done = 0
    while done < n:
        m = min(_MC_CHUNK, n - done)
        photons = rng.random((m, len(p_arm))) < p_arm
        darks = _sample_darks(rng, m, n_dk, params.dark_count_prob)
        bases = rng.integers(0, 2, size=(m, 2))
        # cheap pre-filter: every party (and both BSM detectors) must fire
        cand = photons[:, 0] | _any_columns(darks, 0, _NDET)
        cand &= photons[:, 1] | _any_columns(darks, _NDET, 2 * _NDET)
        for k in range(2, len(p_arm)):
            cand &= photons[:, k] | darks[:, 2 * _NDET + k - 2]
        cand = np.flatnonzero(cand)
        ev = resolve_events(scheme, photons[cand], darks[cand], bases[cand])
        idx = np.flatnonzero(ev.sifted)
        accepted = rng.random(idx.size) < ev.acceptance[idx]
        idx = idx[accepted]
        err_p = np.where(ev.all_genuine[idx], 0.5 * (1 - v), 0.5)
        errors = rng.random(idx.size) < err_p
        sifted_total += int(idx.size)
        errors_total += int(errors.sum())
        done += m
    return sifted_total, errors_total


def mc_estimate(
    scheme: Scheme,
    t: float,
    params: LinkParams,
    n_pulses: int,
    seed: int,
    shard_count: int = 1,
    workers: Optional[int] = None,
) -> McEstimate:
    """Simulate ``n_pulses`` independent pulses and estimate the QBER.

    Shard ``i`` draws from its own PCG64 stream spawned from ``seed``; results are
    bit-identical for a fixed ``(seed, shard_count)`` regardless of ``workers``.
    """
    if n_pulses < 1:
        raise EmptySampleError("n_pulses must be at least 1")
    if not (0 <= seed < _SEED_LIMIT):
        raise ValueError(f"seed={seed!r} must be an unsigned 64-bit integer")
    if shard_count < 1:
        raise ValueError("shard_count must be at least 1")
    if not (0 < t <= 1):
        raise ValueError(f"t={t!r} must lie in (0, 1]")

    p_arm = _arm_probs(scheme, t, params)
    seqs = np.random.SeedSequence(seed).spawn(shard_count)
    sizes = [n_pulses // shard_count + (i < n_pulses % shard_count) for i in range(shard_count)]
    jobs = [(scheme, p_arm, params, n, s) for n, s in zip(sizes, seqs) if n > 0]

    if workers and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _run_shard(*a), jobs))
    else:
        results = [_run_shard(*a) for a in jobs]

    n_sifted = sum(r[0] for r in results)
    n_errors = sum(r[1] for r in results)
    return McEstimate.from_counts(n_pulses, n_sifted, n_errors, seed, shard_count)
