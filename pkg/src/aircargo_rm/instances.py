"""Synthetic problem instances for simulation campaigns and demos.

Real airline data cannot ship with the package, so campaigns run on
documented synthetic stand-ins. Instances are generated from fixed seeds
and are therefore identical on every call.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .arrivals import ArrivalModel
from .records import MINUTES_PER_DAY, BookingRecord
from .simulate import SimulationConfig, draw_flight_script, flight_rng, materialize_booking
from .value_function import RevenueSpec


def two_type_example() -> tuple[ArrivalModel, RevenueSpec, float, float, int]:
    """Tiny two-type instance: unit volumes, flat revenues 1 and 2, each type
    arriving with probability 0.4 per step, capacity 2 over a 4-step horizon.

    Small enough to check by hand; most value-function tests build on it.
    """
    arrival = ArrivalModel(
        types=("type1", "type2"),
        type_probs=np.array([0.5, 0.5]),
        step_probs=np.full(4, 0.8),
        mean_volumes=np.array([1.0, 1.0]),
    )
    revenue = RevenueSpec(mode="flat", amounts=np.array([1.0, 2.0]))
    capacity = 2.0
    offload_rate = 1.0
    horizon = 4
    return arrival, revenue, capacity, offload_rate, horizon


def many_type_instance(
    num_types: int = 24,
    horizon: int = 60,
    arrival_rate: float = 0.9,
    seed: int = 2203,
) -> tuple[ArrivalModel, RevenueSpec]:
    """Heterogeneous cargo mix: volumes 20..140 m^3, revenue rates 0.5..1.25
    per m^3, skewed type frequencies, heavy traffic on every step.

    Demand far exceeds any reasonable capacity, so a value-aware rule has
    room to outperform first-come first-served.
    """
    rng = np.random.default_rng(seed)
    mean_volumes = np.sort(rng.uniform(20.0, 140.0, num_types))
    rates = rng.uniform(0.5, 1.25, num_types)
    weights = rng.exponential(1.0, num_types)
    type_probs = weights / weights.sum()
    arrival = ArrivalModel(
        types=tuple(f"Type{i + 1}" for i in range(num_types)),
        type_probs=type_probs,
        step_probs=np.full(horizon, arrival_rate),
        mean_volumes=mean_volumes,
    )
    revenue = RevenueSpec(mode="rate", amounts=rates)
    return arrival, revenue


def distorted_booking_world(
    num_types: int = 4,
    horizon: int = 30,
    arrival_rate: float = 0.6,
    seed: int = 714,
) -> tuple[ArrivalModel, RevenueSpec, np.ndarray]:
    """World where booked volumes systematically under-state the truth.

    Returns (arrival, revenue, bkvol_factors): each booking of type i
    declares ``factor_i * mean_i`` while the received volume centers on
    ``mean_i``. Deciding on the declared volume therefore over-accepts;
    a predictor trained on history recovers the true means.
    """
    rng = np.random.default_rng(seed)
    mean_volumes = np.linspace(4.0, 20.0, num_types)
    weights = rng.uniform(0.5, 1.5, num_types)
    type_probs = weights / weights.sum()
    factors = rng.uniform(0.3, 0.55, num_types)
    arrival = ArrivalModel(
        types=tuple(f"Type{i + 1}" for i in range(num_types)),
        type_probs=type_probs,
        step_probs=np.full(horizon, arrival_rate),
        mean_volumes=mean_volumes,
    )
    revenue = RevenueSpec(mode="rate", amounts=np.ones(num_types))
    return arrival, revenue, factors


def generate_history(
    config: SimulationConfig,
    num_flights: int,
    seed: int,
) -> list[BookingRecord]:
    """Materialize past flights into tendered booking records.

    Records go through the same materialization as live campaign draws
    (so a model trained on this history sees matching features), with the
    realized volume attached and departures spaced a day apart to keep
    flight legs distinct for grouped cross-validation.
    """
    records: list[BookingRecord] = []
    step_minutes = int(MINUTES_PER_DAY)
    for flight in range(num_flights):
        departure = (config.horizon + flight) * step_minutes
        for draw in draw_flight_script(config, flight_rng(seed, 0, flight)):
            base = materialize_booking(config, draw.step, draw.type_index, draw.bkvol)
            records.append(
                replace(
                    base,
                    booking_id=f"hist-{flight}-{draw.step}",
                    booking_time=departure - draw.step * step_minutes,
                    departure_time=departure,
                    rcsvol=draw.rcsvol,
                )
            )
    return records
