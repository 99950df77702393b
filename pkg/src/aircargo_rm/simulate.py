"""Monte Carlo flight simulation and policy campaigns.

A flight is a script of arrivals drawn step by step from the arrival
model; each policy replays the same script, so competing policies are
compared under common random numbers. Realized volumes come from a
lognormal whose mean is the shipment's true expected volume and whose
standard deviation is ``dispersion`` times that mean.

Two booking generators:

* ``mean-volume`` -- the booked volume equals the type mean (the classic
  synthetic setup for comparing D1S with FCFS);
* ``distorted-bkvol`` -- the booked volume is a systematically wrong
  multiple of the true type mean, which is what makes prediction-driven
  acceptance worth measuring;
* ``dataset`` -- arrivals are sampled from historical records of the
  drawn type, with their booked volume and their held-out received
  volume as ground truth (dispersion is ignored).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .arrivals import ArrivalModel
from .errors import ConfigError, DataError
from .policies import BookingDraw, Policy, decide
from .records import BookingRecord
from .value_function import RevenueSpec

GENERATORS = ("mean-volume", "distorted-bkvol", "dataset")

_SYNTH_ORIGIN = "SYN"
_SYNTH_DEST = "SYN"
_SYNTH_AGENT = "sim"
_SYNTH_PIECES = 1
# One decision step per day when materializing synthetic records.
_STEP_MINUTES = 1440
# Declared weight tracks the type's expected volume at a fixed density;
# agents can weigh the planned shipment but not the one that has not
# arrived yet.
_SYNTH_DENSITY = 167.0


def lognormal_params(mean: float, dispersion: float) -> tuple[float, float]:
    """Location/shape of a lognormal with the given mean and sd = dispersion * mean."""
    if mean <= 0.0:
        raise DataError(f"lognormal mean must be positive, got {mean}")
    if dispersion < 0.0:
        raise DataError(f"dispersion must be non-negative, got {dispersion}")
    shape_sq = math.log(1.0 + dispersion * dispersion)
    location = math.log(mean) - shape_sq / 2.0
    return location, math.sqrt(shape_sq)


def lognormal_sample(mean: float, dispersion: float, rng: np.random.Generator) -> float:
    """One received-volume draw; dispersion 0 degenerates to the mean exactly."""
    if dispersion == 0.0:
        if mean <= 0.0:
            raise DataError(f"lognormal mean must be positive, got {mean}")
        return mean
    location, shape = lognormal_params(mean, dispersion)
    # normal variate via the inverse CDF of a uniform: portable and seeded
    return float(np.exp(location + shape * ndtri(rng.random())))


def lognormal_sample_many(
    means: np.ndarray, dispersion: float, rng: np.random.Generator
) -> np.ndarray:
    means = np.asarray(means, dtype=float)
    if np.any(means <= 0.0):
        raise DataError("lognormal means must be positive")
    if dispersion < 0.0:
        raise DataError(f"dispersion must be non-negative, got {dispersion}")
    if dispersion == 0.0:
        return means.copy()
    shape_sq = math.log(1.0 + dispersion * dispersion)
    locations = np.log(means) - shape_sq / 2.0
    return np.exp(locations + math.sqrt(shape_sq) * ndtri(rng.random(means.size)))


@dataclass
class SimulationConfig:
    """Everything one flight needs; sweep grids are run_campaign arguments."""

    arrival: ArrivalModel
    revenue: RevenueSpec
    capacity: float
    offload_rate: float
    horizon: int
    dispersion: float
    generator: str = "mean-volume"
    bkvol_factors: np.ndarray | None = None  # distorted mode: bkvol = factor * true mean
    true_mean_volumes: np.ndarray | None = None  # defaults to the arrival means
    materialize_records: bool = False  # build BookingRecords for feature encoding
    record_pool: list[BookingRecord] | None = None  # dataset mode

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ConfigError(f"generator must be one of {GENERATORS}, got {self.generator!r}")
        if self.dispersion < 0.0:
            raise ConfigError("dispersion must be non-negative")
        if self.horizon < 1 or self.horizon > self.arrival.num_steps:
            raise ConfigError(
                f"horizon must lie in 1..{self.arrival.num_steps}, got {self.horizon}"
            )
        if self.true_mean_volumes is None:
            self.true_mean_volumes = np.asarray(self.arrival.mean_volumes, dtype=float)
        else:
            self.true_mean_volumes = np.asarray(self.true_mean_volumes, dtype=float)
        if self.generator == "distorted-bkvol":
            if self.bkvol_factors is None:
                raise ConfigError("distorted-bkvol generator needs bkvol_factors")
            self.bkvol_factors = np.asarray(self.bkvol_factors, dtype=float)
            if self.bkvol_factors.size != self.arrival.num_types:
                raise ConfigError("bkvol_factors must have one entry per type")
        if self.generator == "dataset":
            pools: list[list[BookingRecord]] = [[] for _ in self.arrival.types]
            for record in self.record_pool or []:
                if record.rcsvol is None:
                    continue
                try:
                    pools[self.arrival.type_index(record.product_type)].append(record)
                except ConfigError:
                    continue  # types outside the arrival model never arrive
            for name, pool in zip(self.arrival.types, pools):
                if not pool:
                    raise ConfigError(
                        f"dataset generator: no records with a received volume for type {name!r}"
                    )
            self._pools = pools

    def booked_volume(self, type_index: int) -> float:
        mean = float(self.true_mean_volumes[type_index])
        if self.generator == "mean-volume":
            return float(self.arrival.mean_volumes[type_index])
        return float(self.bkvol_factors[type_index]) * mean


def materialize_booking(
    config: SimulationConfig, draw_step: int, type_index: int, bkvol: float
) -> BookingRecord:
    """Synthetic booking with the features a real reservation would carry.

    History generation and live campaign draws both go through here, so
    the predictor sees the same feature distribution in training and at
    decision time.
    """
    departure = config.horizon * _STEP_MINUTES
    expected = float(config.true_mean_volumes[type_index])
    return BookingRecord(
        booking_id=f"sim-{draw_step}",
        booking_time=departure - draw_step * _STEP_MINUTES,
        departure_time=departure,
        origin=_SYNTH_ORIGIN,
        destination=_SYNTH_DEST,
        agent=_SYNTH_AGENT,
        product_type=config.arrival.types[type_index],
        shipment_codes=frozenset(),
        pieces=_SYNTH_PIECES,
        bkvol=bkvol,
        bkwt=round(expected * _SYNTH_DENSITY, 3),
        rcsvol=None,
    )


def draw_flight_script(config: SimulationConfig, rng: np.random.Generator) -> list[BookingDraw]:
    """Arrivals for one flight, ordered from the horizon opening down to step 1."""
    cumulative = np.cumsum(config.arrival.type_probs)
    script: list[BookingDraw] = []
    for t in range(config.horizon, 0, -1):
        if rng.random() >= config.arrival.step_probs[t - 1]:
            continue
        type_index = int(np.searchsorted(cumulative, rng.random(), side="right"))
        type_index = min(type_index, config.arrival.num_types - 1)
        if config.generator == "dataset":
            pool = config._pools[type_index]
            record = pool[int(rng.integers(len(pool)))]
            script.append(
                BookingDraw(
                    step=t,
                    type_index=type_index,
                    bkvol=record.bkvol,
                    rcsvol=record.rcsvol,
                    record=record,
                )
            )
            continue
        bkvol = config.booked_volume(type_index)
        rcsvol = lognormal_sample(
            float(config.true_mean_volumes[type_index]), config.dispersion, rng
        )
        record = (
            materialize_booking(config, t, type_index, bkvol)
            if config.materialize_records
            else None
        )
        script.append(
            BookingDraw(step=t, type_index=type_index, bkvol=bkvol, rcsvol=rcsvol, record=record)
        )
    return script


@dataclass
class FlightResult:
    policy: str
    accepted: list[BookingDraw]
    accepted_revenue: float
    realized_volume: float
    offload_cost: float
    final_revenue: float


def replay_script(
    script: list[BookingDraw],
    policy: Policy,
    config: SimulationConfig,
) -> FlightResult:
    """Run one policy over a fixed arrival script and settle at departure."""
    state = policy.initial_state()
    accepted: list[BookingDraw] = []
    revenue = 0.0
    for draw in script:
        if not decide(policy, state, draw.step, draw):
            continue
        planned = policy.planned_volume(draw)
        revenue += config.revenue.revenue(draw.type_index, planned)
        state = policy.next_state(state, draw, planned)
        accepted.append(draw)
    realized = math.fsum(draw.rcsvol for draw in accepted)
    offload = config.offload_rate * max(realized - config.capacity, 0.0)
    return FlightResult(
        policy=policy.label,
        accepted=accepted,
        accepted_revenue=revenue,
        realized_volume=realized,
        offload_cost=offload,
        final_revenue=revenue - offload,
    )


def simulate_flight(
    config: SimulationConfig, policy: Policy, rng: np.random.Generator
) -> FlightResult:
    return replay_script(draw_flight_script(config, rng), policy, config)


def flight_rng(seed: int, dispersion_index: int, flight_index: int) -> np.random.Generator:
    """Independent, reproducible stream per (dispersion cell, flight)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(dispersion_index, flight_index))
    )


@dataclass
class CampaignRow:
    policy: str
    capacity: float
    dispersion: float
    mean_offload: float
    std_offload: float
    mean_final_revenue: float
    std_final_revenue: float
    mean_accepted_revenue: float
    num_flights: int


@dataclass
class CampaignReport:
    rows: list[CampaignRow]
    seed: int
    num_flights: int

    def row(self, policy: str, capacity: float, dispersion: float) -> CampaignRow:
        for row in self.rows:
            if (
                row.policy == policy
                and row.capacity == capacity
                and row.dispersion == dispersion
            ):
                return row
        raise KeyError((policy, capacity, dispersion))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(
                [
                    "policy",
                    "k_v",
                    "theta",
                    "mean_offload",
                    "std_offload",
                    "mean_final_revenue",
                    "std_final_revenue",
                ]
            )
            for row in self.rows:
                writer.writerow(
                    [
                        row.policy,
                        repr(row.capacity),
                        repr(row.dispersion),
                        repr(row.mean_offload),
                        repr(row.std_offload),
                        repr(row.mean_final_revenue),
                        repr(row.std_final_revenue),
                    ]
                )


def run_campaign(
    base_config: SimulationConfig,
    policies_by_capacity: dict[float, list[Policy]],
    dispersions: list[float],
    num_flights: int,
    seed: int,
) -> CampaignReport:
    """Replay every policy over shared flight scripts per (capacity, dispersion).

    Scripts depend on the dispersion but not on capacity or policy, so one
    draw per (dispersion, flight) serves every cell: common random numbers
    across policies and capacities. Statistics use the population standard
    deviation, so a single-flight campaign reports zero spread.
    """
    if num_flights < 1:
        raise ConfigError("num_flights must be >= 1")
    results: dict[tuple[str, float, float], dict[str, list[float]]] = {}
    order: list[tuple[str, float, float]] = []
    for d_index, dispersion in enumerate(dispersions):
        draw_config = replace(base_config, dispersion=dispersion)
        cell_configs = {
            capacity: replace(draw_config, capacity=capacity)
            for capacity in policies_by_capacity
        }
        for flight in range(num_flights):
            script = draw_flight_script(draw_config, flight_rng(seed, d_index, flight))
            for capacity, policies in policies_by_capacity.items():
                cell_config = cell_configs[capacity]
                for policy in policies:
                    key = (policy.label, capacity, dispersion)
                    if key not in results:
                        results[key] = {"offload": [], "final": [], "accepted": []}
                        order.append(key)
                    outcome = replay_script(script, policy, cell_config)
                    results[key]["offload"].append(outcome.offload_cost)
                    results[key]["final"].append(outcome.final_revenue)
                    results[key]["accepted"].append(outcome.accepted_revenue)
    rows = []
    for key in order:
        offload_arr = np.array(results[key]["offload"])
        final_arr = np.array(results[key]["final"])
        rows.append(
            CampaignRow(
                policy=key[0],
                capacity=key[1],
                dispersion=key[2],
                mean_offload=float(offload_arr.mean()),
                std_offload=float(offload_arr.std()),
                mean_final_revenue=float(final_arr.mean()),
                std_final_revenue=float(final_arr.std()),
                mean_accepted_revenue=float(np.mean(results[key]["accepted"])),
                num_flights=num_flights,
            )
        )
    return CampaignReport(rows=rows, seed=seed, num_flights=num_flights)
