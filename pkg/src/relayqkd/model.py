"""Closed-form click, sift and QBER probabilities for direct and relay-assisted
entanglement-based BB84.

Total channel transmission ``t`` is split symmetrically over the photon arms:
two arms (``t**(1/2)`` each) for direct pair distribution, four arms
(``t**(1/4)`` each) when a Bell-state measurement relay sits between the two
pair sources.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from .errors import ParamError, UndefinedQberError

if TYPE_CHECKING:
    from .simulate import McEstimate

# Genuine two-photon coincidences at the PBS analyzer are accepted with this
# probability (both outputs must be projected onto |+>).
BELL_PROJECTION = 0.5

DETECTORS_PER_PARTY = 4


class Scheme(enum.Enum):
    DIRECT = "direct"
    RELAY = "relay"

    @property
    def arms(self) -> int:
        return 2 if self is Scheme.DIRECT else 4

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown scheme {name!r}; expected 'direct' or 'relay'") from None


@dataclass(frozen=True)
class LinkParams:
    """One experimental configuration. Defaults reproduce the reported setup."""

    detector_efficiency: float = 0.15
    dark_count_prob: float = 1.1e-4
    visibility: float = 0.95
    polarizer_transmission: float = 0.5
    pair_rate_hz: float = 2.4e4
    rep_rate_hz: float = 7.6e7
    alpha_db_per_km: float = 0.25

    def __post_init__(self) -> None:
        def check(name: str, ok: bool, rng: str) -> None:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and ok):
                raise ParamError(name, f"{name}={value!r} must lie in {rng}")

        check("detector_efficiency", 0 < self.detector_efficiency <= 1, "(0, 1]")
        check("dark_count_prob", 0 <= self.dark_count_prob < 1, "[0, 1)")
        check("visibility", 0 <= self.visibility <= 1, "[0, 1]")
        check("polarizer_transmission", 0 < self.polarizer_transmission <= 1, "(0, 1]")
        check("pair_rate_hz", self.pair_rate_hz > 0, "(0, inf)")
        check("rep_rate_hz", self.rep_rate_hz > 0, "(0, inf)")
        check("alpha_db_per_km", self.alpha_db_per_km > 0, "(0, inf)")
        ceiling = self.rep_rate_hz * self.detector_efficiency**2
        if self.pair_rate_hz > ceiling:
            raise ParamError(
                "pair_rate_hz",
                f"pair_rate_hz={self.pair_rate_hz!r} exceeds rep_rate_hz*eta^2={ceiling!r} "
                "(source transmission would exceed 1)",
            )

    def pair_visibility(self, scheme: Scheme) -> float:
        """Visibility of the full coincidence: V**2 direct, V**4 relay."""
        return self.visibility ** scheme.arms


@dataclass(frozen=True)
class QberPoint:
    scheme: Scheme
    attenuation_db: float
    transmission: float
    distance_km: float
    qber: float
    p_sift: float
    sift_rate_hz: float
    mc: Optional[McEstimate] = None


def _check_unit(name: str, value: float) -> None:
    if not (math.isfinite(value) and 0 < value <= 1):
        raise ValueError(f"{name}={value!r} must lie in (0, 1]")


def source_equivalent_transmission(params: LinkParams) -> float:
    """Transmission an ideal one-pair-per-pulse source would need to reproduce
    the observed coincidence rate: ``t_s = (c / eta**2) / f``."""
    return (params.pair_rate_hz / params.detector_efficiency**2) / params.rep_rate_hz


def total_transmission(scheme: Scheme, plate_transmission: float, t_s: float) -> float:
    """Compose source and attenuation-plate losses.

    Direct uses one source and two plates, the relay two sources and four plates.
    """
    _check_unit("plate_transmission", plate_transmission)
    _check_unit("t_s", t_s)
    if scheme is Scheme.DIRECT:
        return t_s * plate_transmission**2
    return t_s**2 * plate_transmission**4


def p_click_single(x: float, dark: float) -> float:
    """Probability that exactly one of a party's four detectors fires.

    ``x`` is the probability that the photon reaches and is registered by the
    party. Either the photon clicks and the other three detectors stay dark,
    or the photon is lost and exactly one detector dark-counts.
    """
    n = DETECTORS_PER_PARTY
    return (x + (1 - x) * n * dark) * (1 - dark) ** (n - 1)


def p_bell(y: float, dark: float) -> float:
    """Probability of an accepted coincidence at the two-detector Bell analyzer.

    ``y`` is the per-arm probability of a photon reaching its analyzer detector.
    """
    genuine = BELL_PROJECTION * y**2
    both_dark = ((1 - y) * dark) ** 2
    one_dark = 2 * y * (1 - y) * dark
    return genuine + both_dark + one_dark


def arm_transmission(scheme: Scheme, t: float) -> float:
    return t ** (1.0 / scheme.arms)


def p_sift(scheme: Scheme, t: float, params: LinkParams) -> float:
    _check_unit("t", t)
    eta, dark = params.detector_efficiency, params.dark_count_prob
    x = arm_transmission(scheme, t) * eta
    both_parties = 0.5 * p_click_single(x, dark) ** 2
    if scheme is Scheme.DIRECT:
        return both_parties
    return p_bell(x * params.polarizer_transmission, dark) * both_parties


def _p_genuine(scheme: Scheme, t: float, params: LinkParams) -> float:
    # sifted probability with every click photon-borne; visibility not applied
    _check_unit("t", t)
    eta, dark = params.detector_efficiency, params.dark_count_prob
    x = arm_transmission(scheme, t) * eta
    parties = 0.5 * (x * (1 - dark) ** 3) ** 2
    if scheme is Scheme.DIRECT:
        return parties
    y = x * params.polarizer_transmission
    return (BELL_PROJECTION * y**2) * parties


def p_signal(scheme: Scheme, t: float, params: LinkParams) -> float:
    """Visibility-weighted probability of a sifted event with no dark count."""
    return params.pair_visibility(scheme) * _p_genuine(scheme, t, params)


def qber(scheme: Scheme, t: float, params: LinkParams) -> float:
    sift = p_sift(scheme, t, params)
    if sift <= 0:
        raise UndefinedQberError(f"no sifted events possible for {scheme.value} at t={t!r}")
    # visibility applied after the ratio so the dark-free floor is exact
    return 0.5 * (1 - params.pair_visibility(scheme) * (_p_genuine(scheme, t, params) / sift))


def qber_direct_closed_form(t: float, params: LinkParams) -> float:
    """Direct QBER with the (1-D)**3 factors cancelled algebraically."""
    x = math.sqrt(t) * params.detector_efficiency
    d4 = DETECTORS_PER_PARTY * params.dark_count_prob
    return 0.5 * (1 - params.visibility**2 * x**2 / (x + (1 - x) * d4) ** 2)


def sift_rate_hz(scheme: Scheme, t: float, params: LinkParams) -> float:
    return params.rep_rate_hz * p_sift(scheme, t, params)
