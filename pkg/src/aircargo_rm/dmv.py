"""Disguised-missing-value detection for booked volumes.

Agents who do not know the final volume often submit a fixed placeholder
number instead of leaving the field empty. Such a value recurs across
many bookings while the received volumes scatter widely around it. Each
frequent distinct booked volume is scored on two axes:

* ``g1`` -- squared gap between the mean received volume and the booked
  value, in (m^3)^2;
* ``g2`` -- entropy of the received volumes, normalized by ``log n`` so
  it never exceeds 1.

Values exceeding both thresholds are recorded as DMVs in a directory
that incoming bookings are checked against by exact value match.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DataError
from .records import BookingRecord

BUCKET_MODES = ("width", "distinct")

DEFAULT_FREQUENCY_THRESHOLD = 0.0001
DEFAULT_NUM_BUCKETS = 16
# Defaults follow the production calibration: flag values whose mean
# received volume sits more than 4 m^3 away (16 (m^3)^2 squared) with
# near-uniform scatter.
DEFAULT_G1_THRESHOLD = 16.0
DEFAULT_G2_THRESHOLD = 0.9

# DMVs are literal repeated values, so directory keys are the booked
# volume printed at fixed 4-decimal precision.
_KEY_DECIMALS = 4


def volume_key(value: float) -> str:
    return f"{value:.{_KEY_DECIMALS}f}"


@dataclass(frozen=True)
class DmvScore:
    value: float
    support: int
    g1: float
    g2: float
    is_dmv: bool


@dataclass(frozen=True)
class DmvDirectory:
    scores: dict[str, DmvScore]
    frequency_threshold: float
    g1_threshold: float
    g2_threshold: float
    num_buckets: int
    bucket_mode: str
    total_records: int

    def __len__(self) -> int:
        return len(self.scores)

    def flagged_values(self) -> list[float]:
        return sorted(s.value for s in self.scores.values() if s.is_dmv)

    def to_dict(self) -> dict:
        return {
            "frequency_threshold": self.frequency_threshold,
            "g1_threshold": self.g1_threshold,
            "g2_threshold": self.g2_threshold,
            "num_buckets": self.num_buckets,
            "bucket_mode": self.bucket_mode,
            "total_records": self.total_records,
            "entries": [
                {
                    "value": score.value,
                    "n": score.support,
                    "g1": score.g1,
                    "g2": score.g2,
                    "is_dmv": score.is_dmv,
                }
                for _, score in sorted(self.scores.items(), key=lambda kv: kv[1].value)
            ],
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def from_dict(cls, payload: dict) -> "DmvDirectory":
        scores = {}
        for entry in payload["entries"]:
            score = DmvScore(
                value=float(entry["value"]),
                support=int(entry["n"]),
                g1=float(entry["g1"]),
                g2=float(entry["g2"]),
                is_dmv=bool(entry["is_dmv"]),
            )
            scores[volume_key(score.value)] = score
        return cls(
            scores=scores,
            frequency_threshold=float(payload["frequency_threshold"]),
            g1_threshold=float(payload["g1_threshold"]),
            g2_threshold=float(payload["g2_threshold"]),
            num_buckets=int(payload["num_buckets"]),
            bucket_mode=str(payload["bucket_mode"]),
            total_records=int(payload["total_records"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "DmvDirectory":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def _bucket_counts(values: list[float], num_buckets: int, bucket_mode: str) -> list[int]:
    if bucket_mode == "distinct":
        counts: dict[float, int] = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        return list(counts.values())
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return [len(values)]
    counts_w = [0] * num_buckets
    span = hi - lo
    for v in values:
        idx = min(int((v - lo) / span * num_buckets), num_buckets - 1)
        counts_w[idx] += 1
    return counts_w


def score_value(
    value: float,
    rcsvols: list[float],
    num_buckets: int = DEFAULT_NUM_BUCKETS,
    bucket_mode: str = "width",
    g1_threshold: float = DEFAULT_G1_THRESHOLD,
    g2_threshold: float = DEFAULT_G2_THRESHOLD,
) -> DmvScore:
    """Score one booked volume against the received volumes observed for it.

    ``g1 = (mean(rcsvols) - value)^2`` and ``g2`` is the bucket entropy of
    ``rcsvols`` divided by ``log n`` (0 for a single observation). With
    equal-width bucketing, ``num_buckets`` buckets span the observed range;
    ``bucket_mode="distinct"`` uses one bucket per distinct value instead.
    """
    if not rcsvols:
        raise DataError("cannot score a value with no received volumes")
    if bucket_mode not in BUCKET_MODES:
        raise ConfigError(f"bucket_mode must be one of {BUCKET_MODES}, got {bucket_mode!r}")
    if num_buckets < 1:
        raise ConfigError("num_buckets must be positive")
    for v in rcsvols:
        if not math.isfinite(v) or v < 0.0:
            raise DataError(f"received volumes must be finite and non-negative, got {v}")
    n = len(rcsvols)
    mean = math.fsum(rcsvols) / n
    g1 = (mean - value) ** 2
    if n == 1:
        g2 = 0.0
    else:
        counts = _bucket_counts(rcsvols, num_buckets, bucket_mode)
        entropy = 0.0
        for count in counts:
            if count > 0:
                p = count / n
                entropy -= p * math.log(p)
        # entropy <= log(#occupied buckets) <= log n; the min() guards the
        # bound against the last-ulp rounding of the sum.
        g2 = min(entropy / math.log(n), 1.0)
    return DmvScore(
        value=value,
        support=n,
        g1=g1,
        g2=g2,
        is_dmv=(g1 > g1_threshold and g2 > g2_threshold),
    )


def build_directory(
    records: list[BookingRecord],
    frequency_threshold: float = DEFAULT_FREQUENCY_THRESHOLD,
    num_buckets: int = DEFAULT_NUM_BUCKETS,
    bucket_mode: str = "width",
    g1_threshold: float = DEFAULT_G1_THRESHOLD,
    g2_threshold: float = DEFAULT_G2_THRESHOLD,
) -> DmvDirectory:
    """Score every frequent distinct booked volume seen with a received volume.

    A value qualifies when its share of the scored records is at least
    ``frequency_threshold``. Booked volumes are grouped at 4-decimal
    precision, matching the lookup rule in :func:`flag`.
    """
    groups: dict[str, list[float]] = {}
    total = 0
    for record in records:
        if record.rcsvol is None:
            continue
        total += 1
        groups.setdefault(volume_key(record.bkvol), []).append(record.rcsvol)
    if total == 0:
        raise DataError("no ground truth: no records with a received volume")
    scores: dict[str, DmvScore] = {}
    for key, values in groups.items():
        if len(values) / total < frequency_threshold:
            continue
        scores[key] = score_value(
            float(key),
            values,
            num_buckets=num_buckets,
            bucket_mode=bucket_mode,
            g1_threshold=g1_threshold,
            g2_threshold=g2_threshold,
        )
    return DmvDirectory(
        scores=scores,
        frequency_threshold=frequency_threshold,
        g1_threshold=g1_threshold,
        g2_threshold=g2_threshold,
        num_buckets=num_buckets,
        bucket_mode=bucket_mode,
        total_records=total,
    )


def flag(booking: BookingRecord, directory: DmvDirectory) -> bool:
    """True iff the booked volume exactly matches a directory entry marked DMV."""
    score = directory.scores.get(volume_key(booking.bkvol))
    return score is not None and score.is_dmv


def linreg_dmv_shift(
    pairs: list[tuple[float, float]],
    x_dmv: float,
    dmv_targets: list[float],
) -> tuple[float, float]:
    """Slope of no-intercept least squares before/after adding DMV rows.

    Returns ``(w, w_new)`` for ``y = w x`` fitted to ``pairs``, and the
    refitted slope once ``len(dmv_targets)`` rows at ``x_dmv`` are added.
    When the DMV targets average onto the fitted line
    (``sum(dmv_targets) == m * w * x_dmv``) the slope is unchanged: the
    placeholder value carries no signal. Diagnostic used by the property
    tests around DMV impact.
    """
    sxx = math.fsum(x * x for x, _ in pairs)
    if sxx <= 0.0:
        raise DataError("degenerate regression: sum of squared x is zero")
    sxy = math.fsum(x * y for x, y in pairs)
    w = sxy / sxx
    m = len(dmv_targets)
    w_new = (sxy + x_dmv * math.fsum(dmv_targets)) / (sxx + m * x_dmv * x_dmv)
    return w, w_new
