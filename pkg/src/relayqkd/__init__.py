"""QBER model, oracles and sweeps for direct vs. relay-assisted entanglement BB84."""
from .errors import EmptySampleError, NoCrossingError, NumericError, ParamError, UndefinedQberError
from .model import (
    LinkParams,
    QberPoint,
    Scheme,
    p_bell,
    p_click_single,
    p_sift,
    p_signal,
    qber,
    sift_rate_hz,
    source_equivalent_transmission,
    total_transmission,
)
from .simulate import ExactResult, McEstimate, enumerate_exact, mc_estimate
from .sweep import (
    ONE_WAY_BOUND,
    TWO_WAY_BOUND,
    SweepSpec,
    ThresholdResult,
    db_from_transmission,
    distance_km,
    find_threshold,
    sweep_curve,
    transmission_from_db,
)

__version__ = "0.1.0"
