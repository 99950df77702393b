"""Arrival statistics estimated from historical bookings.

The booking horizon is discretized into ``num_steps`` decision epochs
counted backwards from departure (step 1 is the last epoch before
departure). A booking of type ``i`` arrives at step ``t`` with
probability ``type_probs[i] * step_probs[t-1]``; the remainder of the
probability mass at each step is "no arrival".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .records import BookingRecord

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class ArrivalModel:
    types: tuple[str, ...]
    type_probs: np.ndarray
    step_probs: np.ndarray
    mean_volumes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "type_probs", np.asarray(self.type_probs, dtype=float))
        object.__setattr__(self, "step_probs", np.asarray(self.step_probs, dtype=float))
        object.__setattr__(self, "mean_volumes", np.asarray(self.mean_volumes, dtype=float))
        if len(self.types) != self.type_probs.size or len(self.types) != self.mean_volumes.size:
            raise ConfigError("types, type_probs and mean_volumes must have equal length")
        if abs(float(self.type_probs.sum()) - 1.0) > _PROB_TOL:
            raise ConfigError(f"type probabilities sum to {self.type_probs.sum()}, expected 1")
        if np.any(self.type_probs < 0.0):
            raise ConfigError("type probabilities must be non-negative")
        if np.any((self.step_probs < 0.0) | (self.step_probs > 1.0)):
            raise ConfigError("step probabilities must lie in [0, 1]")
        if np.any(self.mean_volumes <= 0.0):
            raise ConfigError("mean volumes must be positive")

    @property
    def num_types(self) -> int:
        return len(self.types)

    @property
    def num_steps(self) -> int:
        return int(self.step_probs.size)

    def type_index(self, product_type: str) -> int:
        try:
            return self.types.index(product_type)
        except ValueError:
            raise ConfigError(f"unknown product type {product_type!r}") from None

    def arrival_probs(self, t: int) -> np.ndarray:
        """Per-type arrival probabilities at step t (1-based, backward time)."""
        if not 1 <= t <= self.num_steps:
            raise ConfigError(f"step {t} outside horizon 1..{self.num_steps}")
        return self.type_probs * float(self.step_probs[t - 1])

    def no_arrival_prob(self, t: int) -> float:
        return 1.0 - float(self.step_probs[t - 1])


def estimate_type_probs(records: list[BookingRecord]) -> dict[str, float]:
    """Empirical share of bookings per product type; shares are n_i / N exactly."""
    if not records:
        raise DataError("no data: cannot estimate type probabilities from zero records")
    counts: dict[str, int] = {}
    for record in records:
        counts[record.product_type] = counts.get(record.product_type, 0) + 1
    total = len(records)
    return {name: counts[name] / total for name in sorted(counts)}


def step_index(lead_minutes: int, max_lead_minutes: int, num_steps: int) -> int:
    """Map a booking lead time onto [0, num_steps) by linear scaling.

    Index 0 is the step nearest departure. Leads at or beyond the maximum
    observed horizon clamp to the last step.
    """
    if max_lead_minutes <= 0:
        return 0
    idx = int(lead_minutes / max_lead_minutes * num_steps)
    return min(idx, num_steps - 1)


def estimate_step_probs(
    records: list[BookingRecord],
    num_steps: int,
    num_intervals: int,
) -> np.ndarray:
    """Per-step arrival frequencies, smoothed by averaging within intervals.

    Raw frequencies (shipments at step t / total shipments) are computed
    from records carrying a received volume, then each block of
    ``num_steps / num_intervals`` consecutive steps is replaced by its
    mean. The result does not sum to 1: most steps see no booking and the
    remainder is the no-arrival probability.
    """
    if num_steps < 1 or num_intervals < 1:
        raise ConfigError("num_steps and num_intervals must be positive")
    if num_steps % num_intervals != 0:
        raise ConfigError(
            f"num_steps ({num_steps}) must be divisible by num_intervals ({num_intervals})"
        )
    shipped = [r for r in records if r.rcsvol is not None]
    if not shipped:
        raise DataError("no data: no records with a received volume")
    max_lead = max(r.lead_minutes for r in shipped)
    raw = np.zeros(num_steps)
    for record in shipped:
        raw[step_index(record.lead_minutes, max_lead, num_steps)] += 1.0
    raw /= len(shipped)
    width = num_steps // num_intervals
    smoothed = np.empty(num_steps)
    for block in range(num_intervals):
        lo = block * width
        smoothed[lo : lo + width] = raw[lo : lo + width].mean()
    return smoothed


def estimate_mean_volumes(records: list[BookingRecord]) -> dict[str, float]:
    """Mean received volume per product type (the type's expected load)."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for record in records:
        if record.rcsvol is None:
            continue
        sums[record.product_type] = sums.get(record.product_type, 0.0) + record.rcsvol
        counts[record.product_type] = counts.get(record.product_type, 0) + 1
    if not counts:
        raise DataError("no data: no records with a received volume")
    return {name: sums[name] / counts[name] for name in sorted(counts)}


def build_arrival_model(
    records: list[BookingRecord],
    num_steps: int,
    num_intervals: int,
) -> ArrivalModel:
    """Estimate the full arrival model from historical bookings.

    Types with no received volume on record borrow the global mean so
    that every type has a positive expected volume.
    """
    type_probs = estimate_type_probs(records)
    step_probs = estimate_step_probs(records, num_steps, num_intervals)
    means = estimate_mean_volumes(records)
    received = [r.rcsvol for r in records if r.rcsvol is not None]
    global_mean = sum(received) / len(received)
    types = tuple(sorted(type_probs))
    volumes = []
    for name in types:
        mean = means.get(name, global_mean)
        if mean <= 0.0:
            raise DataError(f"type {name!r} has non-positive mean received volume")
        volumes.append(mean)
    return ArrivalModel(
        types=types,
        type_probs=np.array([type_probs[name] for name in types]),
        step_probs=step_probs,
        mean_volumes=np.array(volumes),
    )
