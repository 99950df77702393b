"""Record-level prediction utilities around the boosted model.

Holds the per-type historical-mean baseline, the flight-level error
metric, and the flight-grouped cross-validation splitter. Flight-level
error is what matters operationally: booking-level misses cancel out
when volumes aggregate over a flight leg.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boosting import BoostedModel, BoostParams, train
from .dmv import DmvDirectory, flag
from .errors import ConfigError, DataError
from .features import FeatureVocabulary
from .records import BookingRecord


@dataclass(frozen=True)
class TypeMeanPredictor:
    """Per-type mean received volume; unseen types fall back to the global mean."""

    means: dict[str, float]
    global_mean: float

    def predict(self, product_type: str) -> float:
        return self.means.get(product_type, self.global_mean)


def type_mean_baseline(records: list[BookingRecord]) -> TypeMeanPredictor:
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    total = 0.0
    n = 0
    for record in records:
        if record.rcsvol is None:
            continue
        sums[record.product_type] = sums.get(record.product_type, 0.0) + record.rcsvol
        counts[record.product_type] = counts.get(record.product_type, 0) + 1
        total += record.rcsvol
        n += 1
    if n == 0:
        raise DataError("no training records with a received volume")
    return TypeMeanPredictor(
        means={name: sums[name] / counts[name] for name in sums},
        global_mean=total / n,
    )


@dataclass
class FlightErrorReport:
    per_flight: dict
    mean_error: float
    frac_under_5pct: float
    frac_under_10pct: float
    excluded_zero_actual: int

    def to_dict(self) -> dict:
        return {
            "mean_error": self.mean_error,
            "frac_under_5pct": self.frac_under_5pct,
            "frac_under_10pct": self.frac_under_10pct,
            "num_flights": len(self.per_flight),
            "excluded_zero_actual": self.excluded_zero_actual,
            "per_flight": {str(k): v for k, v in sorted(self.per_flight.items(), key=lambda kv: str(kv[0]))},
        }


def evaluate_flight_error(actuals, predictions, flight_ids) -> FlightErrorReport:
    """Relative absolute error of flight-aggregated volume per flight leg.

    error(flight) = |sum(actual) - sum(predicted)| / sum(actual); flights
    with zero actual volume are excluded and counted.
    """
    actuals = np.asarray(actuals, dtype=float)
    predictions = np.asarray(predictions, dtype=float)
    if not (len(actuals) == len(predictions) == len(flight_ids)):
        raise DataError("actuals, predictions and flight_ids must have equal length")
    sums: dict = {}
    for actual, predicted, fid in zip(actuals, predictions, flight_ids):
        a, p = sums.get(fid, (0.0, 0.0))
        sums[fid] = (a + actual, p + predicted)
    per_flight = {}
    excluded = 0
    for fid, (a, p) in sums.items():
        if a > 0.0:
            per_flight[fid] = abs(a - p) / a
        else:
            excluded += 1
    if not per_flight:
        raise DataError("no flights with positive received volume")
    errors = np.array(list(per_flight.values()))
    return FlightErrorReport(
        per_flight=per_flight,
        mean_error=float(errors.mean()),
        frac_under_5pct=float((errors < 0.05).mean()),
        frac_under_10pct=float((errors < 0.10).mean()),
        excluded_zero_actual=excluded,
    )


def flight_grouped_folds(flight_ids, num_folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """K-fold index splits that keep bookings of the same flight leg together."""
    if num_folds < 2:
        raise ConfigError("num_folds must be >= 2")
    unique = sorted(set(flight_ids))
    if len(unique) < num_folds:
        raise DataError(f"only {len(unique)} flight legs for {num_folds} folds")
    rng = np.random.default_rng(seed)
    shuffled = [unique[i] for i in rng.permutation(len(unique))]
    fold_of = {fid: i % num_folds for i, fid in enumerate(shuffled)}
    assignments = np.array([fold_of[fid] for fid in flight_ids])
    folds = []
    for fold in range(num_folds):
        test = np.flatnonzero(assignments == fold)
        train_idx = np.flatnonzero(assignments != fold)
        folds.append((train_idx, test))
    return folds


def dmv_flags(records: list[BookingRecord], directory: DmvDirectory | None) -> list[bool]:
    if directory is None:
        return [False] * len(records)
    return [flag(record, directory) for record in records]


def train_on_records(
    records: list[BookingRecord],
    directory: DmvDirectory | None,
    params: BoostParams | None = None,
    seed: int = 0,
) -> BoostedModel:
    """Encode records that carry a received volume and fit the boosted model."""
    labelled = [r for r in records if r.rcsvol is not None]
    if len(labelled) < 2:
        raise DataError("need at least 2 records with a received volume to train")
    vocab = FeatureVocabulary.from_records(labelled)
    X = vocab.encode_many(labelled, dmv_flags(labelled, directory))
    y = np.array([r.rcsvol for r in labelled])
    return train(X, y, params=params, seed=seed, vocabulary=vocab)


def predict_record(
    model: BoostedModel,
    record: BookingRecord,
    directory: DmvDirectory | None = None,
) -> float:
    if model.vocabulary is None:
        raise ConfigError("model carries no feature vocabulary; encode inputs yourself")
    flagged = directory is not None and flag(record, directory)
    return model.predict_one(model.vocabulary.encode(record, flagged))


def model_predictor(model: BoostedModel, directory: DmvDirectory | None = None, cache: bool = True):
    """Wrap a trained model as a per-arrival volume predictor for D2V/D2S.

    Predictions are memoized on the feature-relevant record fields, which
    collapses the per-draw cost in campaigns where the same shipment
    profile recurs thousands of times.
    """
    memo: dict = {}

    def predict(draw) -> float:
        record = draw.record
        if record is None:
            raise ConfigError("arrival carries no booking record to encode for prediction")
        if not cache:
            return predict_record(model, record, directory)
        key = (
            record.product_type,
            record.booking_time,
            record.departure_time,
            record.bkvol,
            record.bkwt,
            record.pieces,
            record.destination,
            record.origin,
            record.shipment_codes,
        )
        value = memo.get(key)
        if value is None:
            value = predict_record(model, record, directory)
            memo[key] = value
        return value

    return predict


def identity_predictor(draw) -> float:
    """Take the declared booked volume at face value (the no-model baseline)."""
    return draw.bkvol


def cross_validated_flight_error(
    records: list[BookingRecord],
    directory: DmvDirectory | None,
    params: BoostParams | None = None,
    seed: int = 0,
    num_folds: int = 3,
) -> FlightErrorReport:
    """Flight-grouped k-fold CV: train on k-1 folds, score held-out flights."""
    labelled = [r for r in records if r.rcsvol is not None]
    if len(labelled) < 2:
        raise DataError("need at least 2 records with a received volume")
    flight_ids = [r.flight_key for r in labelled]
    flags = dmv_flags(labelled, directory)
    actuals = np.array([r.rcsvol for r in labelled])
    predictions = np.empty(len(labelled))
    for train_idx, test_idx in flight_grouped_folds(flight_ids, num_folds, seed):
        fold_records = [labelled[i] for i in train_idx]
        vocab = FeatureVocabulary.from_records(fold_records)
        X_train = vocab.encode_many(fold_records, [flags[i] for i in train_idx])
        model = train(X_train, actuals[train_idx], params=params, seed=seed, vocabulary=vocab)
        test_records = [labelled[i] for i in test_idx]
        X_test = vocab.encode_many(test_records, [flags[i] for i in test_idx])
        predictions[test_idx] = model.predict(X_test)
    return evaluate_flight_error(actuals, predictions, flight_ids)
