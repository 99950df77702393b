"""Air-cargo revenue management engine.

Pipeline: ingest bookings, detect disguised missing values, predict
received volume with gradient-boosted trees, build value functions by
backward induction, and evaluate acceptance policies under Monte Carlo
flight simulation. Served over HTTP by :mod:`aircargo_rm.service` and
driven from the command line by :mod:`aircargo_rm.cli`.
"""

__version__ = "0.1.0"

from .arrivals import ArrivalModel, build_arrival_model, estimate_step_probs, estimate_type_probs
from .boosting import BoostedModel, BoostParams, train
from .dmv import DmvDirectory, DmvScore, build_directory, flag, linreg_dmv_shift, score_value
from .errors import ConfigError, DataError, EngineError, IngestError
from .features import FeatureVocabulary
from .policies import RULES, BookingDraw, Policy, decide
from .prediction import (
    TypeMeanPredictor,
    cross_validated_flight_error,
    evaluate_flight_error,
    flight_grouped_folds,
    type_mean_baseline,
)
from .records import BookingRecord, IngestReport, ingest_csv, write_records_csv
from .simulate import (
    CampaignReport,
    FlightResult,
    SimulationConfig,
    lognormal_sample,
    run_campaign,
    simulate_flight,
)
from .value_function import (
    RevenueSpec,
    ScalarValueTable,
    VectorValueTable,
    build_scalar_table,
    build_vector_table,
    load_table,
)

__all__ = [
    "ArrivalModel",
    "BookingDraw",
    "BookingRecord",
    "BoostParams",
    "BoostedModel",
    "CampaignReport",
    "ConfigError",
    "DataError",
    "DmvDirectory",
    "DmvScore",
    "EngineError",
    "FeatureVocabulary",
    "FlightResult",
    "IngestError",
    "IngestReport",
    "Policy",
    "RULES",
    "RevenueSpec",
    "ScalarValueTable",
    "SimulationConfig",
    "TypeMeanPredictor",
    "VectorValueTable",
    "build_arrival_model",
    "build_directory",
    "build_scalar_table",
    "build_vector_table",
    "cross_validated_flight_error",
    "decide",
    "estimate_step_probs",
    "estimate_type_probs",
    "evaluate_flight_error",
    "flag",
    "flight_grouped_folds",
    "ingest_csv",
    "linreg_dmv_shift",
    "load_table",
    "lognormal_sample",
    "run_campaign",
    "score_value",
    "simulate_flight",
    "train",
    "type_mean_baseline",
    "write_records_csv",
]
