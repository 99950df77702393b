"""Expected-revenue value functions built by backward induction.

Time counts backwards: t = 0 is departure, t = T opens the booking
horizon, and at most one shipment arrives per step. The terminal value
is the offload cost of the expected load; earlier columns take, for each
possible arrival, the better of accepting (earn the type's expected
revenue, grow the state) and rejecting.

Two state representations:

* :class:`VectorValueTable` -- exact per-type counts, viable only for a
  handful of types;
* :class:`ScalarValueTable` -- the aggregate expected volume on a uniform
  grid, with linear interpolation between grid points. Linear
  interpolation is exact on the piecewise-linear terminal cost, which is
  why it is the right choice here.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arrivals import ArrivalModel
from .errors import ConfigError, DataError

REVENUE_MODES = ("flat", "rate")

DEFAULT_STATE_CAP = 10**6

# Snap tolerance for grid lookups: treat a query this close to a grid
# point (in grid units) as the point itself, so stored values round-trip.
_GRID_SNAP = 1e-9


@dataclass(frozen=True)
class RevenueSpec:
    """Per-type booking revenue: a flat amount, or a rate applied to volume."""

    mode: str
    amounts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amounts", np.asarray(self.amounts, dtype=float))
        if self.mode not in REVENUE_MODES:
            raise ConfigError(f"revenue mode must be one of {REVENUE_MODES}, got {self.mode!r}")
        if np.any(self.amounts < 0.0):
            raise ConfigError("revenues must be non-negative")

    def revenue(self, type_index: int, volume: float) -> float:
        amount = float(self.amounts[type_index])
        if self.mode == "flat":
            return amount
        return amount * volume


def terminal_cost(load: np.ndarray | float, capacity: float, offload_rate: float):
    """Offload cost of a load at departure: rate times the excess over capacity."""
    return -offload_rate * np.maximum(np.asarray(load, dtype=float) - capacity, 0.0)


def _check_build_args(arrival: ArrivalModel, revenue: RevenueSpec, capacity, offload_rate, horizon):
    if revenue.amounts.size != arrival.num_types:
        raise ConfigError("revenue spec and arrival model disagree on the number of types")
    if capacity < 0.0:
        raise ConfigError("capacity must be non-negative")
    if offload_rate < 0.0:
        raise ConfigError("offload rate must be non-negative")
    if horizon < 0:
        raise ConfigError("horizon must be non-negative")
    if horizon > arrival.num_steps:
        raise ConfigError(
            f"horizon {horizon} exceeds the arrival model's {arrival.num_steps} steps"
        )


def _enumerate_states(num_types: int, budget: int) -> list[tuple[int, ...]]:
    """All count vectors with a total at most ``budget``, lexicographic order."""
    states: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], remaining: int, slots: int):
        if slots == 0:
            states.append(prefix)
            return
        for count in range(remaining + 1):
            extend(prefix + (count,), remaining - count, slots - 1)

    extend((), budget, num_types)
    return states


class VectorValueTable:
    """Exact value function over per-type count states.

    States cover every count vector with total items <= 2 * horizon; a
    cell (x, t) is exact whenever ``sum(x) + t <= 2 * horizon``, which
    admits any start state of up to ``horizon`` items plus everything
    reachable from it. Queries outside that region raise.
    """

    def __init__(self, arrival, revenue, capacity, offload_rate, horizon, states, values):
        self.arrival = arrival
        self.revenue = revenue
        self.capacity = float(capacity)
        self.offload_rate = float(offload_rate)
        self.horizon = int(horizon)
        self.states = states
        self.index = {state: i for i, state in enumerate(states)}
        self.values = values  # (num_states, horizon + 1)
        self.budget = 2 * self.horizon

    @property
    def num_states(self) -> int:
        return len(self.states)

    def covers(self, state: tuple[int, ...], t: int) -> bool:
        return sum(state) + t <= self.budget

    def lookup(self, state, t: int) -> float:
        if not 0 <= t <= self.horizon:
            raise ConfigError(f"time step {t} outside 0..{self.horizon}")
        state = tuple(int(v) for v in state)
        if any(v < 0 for v in state):
            raise DataError(f"state {state} has negative counts")
        if len(state) != self.arrival.num_types:
            raise DataError(
                f"state has {len(state)} components, expected {self.arrival.num_types}"
            )
        if not self.covers(state, t):
            raise DataError(f"state {state} at t={t} outside the table's exact region")
        return float(self.values[self.index[state], t])

    def save(self, stem: str | Path) -> None:
        stem = Path(stem)
        header = {
            "kind": "vector",
            "horizon": self.horizon,
            "capacity": self.capacity,
            "offload_rate": self.offload_rate,
            "num_types": self.arrival.num_types,
            "num_states": self.num_states,
            "types": list(self.arrival.types),
            "type_probs": [float(v) for v in self.arrival.type_probs],
            "step_probs": [float(v) for v in self.arrival.step_probs],
            "mean_volumes": [float(v) for v in self.arrival.mean_volumes],
            "revenue_mode": self.revenue.mode,
            "revenue_amounts": [float(v) for v in self.revenue.amounts],
        }
        with open(stem.with_suffix(".json"), "w", encoding="utf-8") as handle:
            json.dump(header, handle, indent=2, sort_keys=True)
            handle.write("\n")
        with open(stem.with_suffix(".csv"), "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow([f"x{i}" for i in range(self.arrival.num_types)] + ["t", "value"])
            for i, state in enumerate(self.states):
                for t in range(self.horizon + 1):
                    writer.writerow(list(state) + [t, repr(float(self.values[i, t]))])


def build_vector_table(
    arrival: ArrivalModel,
    revenue: RevenueSpec,
    capacity: float,
    offload_rate: float,
    horizon: int | None = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> VectorValueTable:
    """Backward induction over enumerated count vectors (small instances only)."""
    horizon = arrival.num_steps if horizon is None else int(horizon)
    _check_build_args(arrival, revenue, capacity, offload_rate, horizon)
    m = arrival.num_types
    budget = 2 * horizon
    num_states = math.comb(budget + m, m)
    if num_states > state_cap:
        raise ConfigError(
            f"vector state space needs {num_states} states (> cap {state_cap}); "
            "use the scalar table instead"
        )
    states = _enumerate_states(m, budget)
    index = {state: i for i, state in enumerate(states)}
    loads = np.array(states, dtype=float) @ arrival.mean_volumes
    # transition[i][s] = index of state + e_i, or -1 at the budget boundary
    transition = np.full((m, len(states)), -1, dtype=np.int64)
    for s, state in enumerate(states):
        for i in range(m):
            grown = state[:i] + (state[i] + 1,) + state[i + 1 :]
            transition[i, s] = index.get(grown, -1)
    type_revenue = np.array(
        [revenue.revenue(i, float(arrival.mean_volumes[i])) for i in range(m)]
    )
    values = np.empty((len(states), horizon + 1))
    values[:, 0] = terminal_cost(loads, capacity, offload_rate)
    for t in range(1, horizon + 1):
        prev = values[:, t - 1]
        column = arrival.no_arrival_prob(t) * prev
        probs = arrival.arrival_probs(t)
        for i in range(m):
            grown = transition[i]
            valid = grown >= 0
            accept = np.where(valid, type_revenue[i] + prev[np.where(valid, grown, 0)], -np.inf)
            column = column + probs[i] * np.maximum(accept, prev)
        values[:, t] = column
    return VectorValueTable(arrival, revenue, capacity, offload_rate, horizon, states, values)


class ScalarValueTable:
    """Value function over the aggregate expected volume on a uniform grid."""

    def __init__(self, arrival, revenue, capacity, offload_rate, horizon, delta, values):
        self.arrival = arrival
        self.revenue = revenue
        self.capacity = float(capacity)
        self.offload_rate = float(offload_rate)
        self.horizon = int(horizon)
        self.delta = float(delta)
        self.values = values  # (num_points, horizon + 1)
        self.grid = np.arange(values.shape[0]) * self.delta
        self.clamp_count = 0  # diagnostic: lookups above the grid ceiling

    @property
    def num_points(self) -> int:
        return int(self.values.shape[0])

    @property
    def max_volume(self) -> float:
        return float(self.grid[-1])

    def lookup(self, x: float, t: int) -> float:
        if not 0 <= t <= self.horizon:
            raise ConfigError(f"time step {t} outside 0..{self.horizon}")
        if x < 0.0:
            raise DataError(f"aggregate volume must be non-negative, got {x}")
        column = self.values[:, t]
        position = x / self.delta
        nearest = round(position)
        if abs(position - nearest) <= _GRID_SNAP * max(1.0, abs(position)):
            position = float(nearest)
        if position >= self.num_points - 1:
            if position > self.num_points - 1:
                self.clamp_count += 1
            return float(column[-1])
        low = int(position)
        frac = position - low
        if frac == 0.0:
            return float(column[low])
        return float((1.0 - frac) * column[low] + frac * column[low + 1])

    def save(self, stem: str | Path) -> None:
        stem = Path(stem)
        header = {
            "kind": "scalar",
            "horizon": self.horizon,
            "capacity": self.capacity,
            "offload_rate": self.offload_rate,
            "delta": self.delta,
            "num_points": self.num_points,
            "num_types": self.arrival.num_types,
            "types": list(self.arrival.types),
            "type_probs": [float(v) for v in self.arrival.type_probs],
            "step_probs": [float(v) for v in self.arrival.step_probs],
            "mean_volumes": [float(v) for v in self.arrival.mean_volumes],
            "revenue_mode": self.revenue.mode,
            "revenue_amounts": [float(v) for v in self.revenue.amounts],
        }
        with open(stem.with_suffix(".json"), "w", encoding="utf-8") as handle:
            json.dump(header, handle, indent=2, sort_keys=True)
            handle.write("\n")
        with open(stem.with_suffix(".csv"), "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["state_index", "x", "t", "value"])
            for i in range(self.num_points):
                for t in range(self.horizon + 1):
                    writer.writerow(
                        [i, repr(float(self.grid[i])), t, repr(float(self.values[i, t]))]
                    )


def default_delta(arrival: ArrivalModel) -> float:
    """Quarter of the smallest type volume: every transition spans >= 4 cells."""
    return float(arrival.mean_volumes.min()) / 4.0


def build_scalar_table(
    arrival: ArrivalModel,
    revenue: RevenueSpec,
    capacity: float,
    offload_rate: float,
    horizon: int | None = None,
    delta: float | None = None,
    max_volume: float | None = None,
) -> ScalarValueTable:
    """Backward induction on the aggregated volume grid.

    The grid spans [0, max_volume * horizon]; transitions add the type's
    mean volume and are evaluated by linear interpolation, clamping to
    the top row above the ceiling.
    """
    horizon = arrival.num_steps if horizon is None else int(horizon)
    _check_build_args(arrival, revenue, capacity, offload_rate, horizon)
    if delta is None:
        delta = default_delta(arrival)
    if delta <= 0.0:
        raise ConfigError(f"grid step must be positive, got {delta}")
    top_volume = float(arrival.mean_volumes.max())
    if max_volume is None:
        max_volume = top_volume
    if max_volume < top_volume:
        raise ConfigError(
            f"max_volume {max_volume} is below the largest type volume {top_volume}"
        )
    num_cells = max(1, math.ceil(max_volume * max(horizon, 1) / delta))
    grid = np.arange(num_cells + 1) * delta
    m = arrival.num_types
    type_revenue = np.array(
        [revenue.revenue(i, float(arrival.mean_volumes[i])) for i in range(m)]
    )
    values = np.empty((grid.size, horizon + 1))
    values[:, 0] = terminal_cost(grid, capacity, offload_rate)
    for t in range(1, horizon + 1):
        prev = values[:, t - 1]
        column = arrival.no_arrival_prob(t) * prev
        probs = arrival.arrival_probs(t)
        for i in range(m):
            accept = type_revenue[i] + np.interp(grid + arrival.mean_volumes[i], grid, prev)
            column = column + probs[i] * np.maximum(accept, prev)
        values[:, t] = column
    return ScalarValueTable(arrival, revenue, capacity, offload_rate, horizon, delta, values)


def _arrival_from_header(header: dict) -> tuple[ArrivalModel, RevenueSpec]:
    arrival = ArrivalModel(
        types=tuple(header["types"]),
        type_probs=np.array(header["type_probs"]),
        step_probs=np.array(header["step_probs"]),
        mean_volumes=np.array(header["mean_volumes"]),
    )
    revenue = RevenueSpec(mode=header["revenue_mode"], amounts=np.array(header["revenue_amounts"]))
    return arrival, revenue


def load_table(stem: str | Path):
    """Rebuild a saved table (either kind) from its JSON header + CSV values."""
    stem = Path(stem)
    try:
        with open(stem.with_suffix(".json"), "r", encoding="utf-8") as handle:
            header = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read value table {stem}: {exc}") from exc
    arrival, revenue = _arrival_from_header(header)
    horizon = int(header["horizon"])
    with open(stem.with_suffix(".csv"), "r", encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    body = rows[1:]
    if header["kind"] == "scalar":
        values = np.empty((int(header["num_points"]), horizon + 1))
        for row in body:
            values[int(row[0]), int(row[2])] = float(row[3])
        return ScalarValueTable(
            arrival,
            revenue,
            header["capacity"],
            header["offload_rate"],
            horizon,
            header["delta"],
            values,
        )
    if header["kind"] == "vector":
        m = int(header["num_types"])
        states: list[tuple[int, ...]] = []
        seen: dict[tuple[int, ...], int] = {}
        values = np.empty((int(header["num_states"]), horizon + 1))
        for row in body:
            state = tuple(int(v) for v in row[:m])
            if state not in seen:
                seen[state] = len(states)
                states.append(state)
            values[seen[state], int(row[m])] = float(row[m + 1])
        return VectorValueTable(
            arrival,
            revenue,
            header["capacity"],
            header["offload_rate"],
            horizon,
            states,
            values,
        )
    raise ConfigError(f"unknown table kind {header['kind']!r}")
