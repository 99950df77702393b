"""Accept/reject decision rules over the value tables.

Five rules:

* ``D1V`` -- vector state, books at the type's mean volume;
* ``D2V`` -- vector state, books at the predicted volume;
* ``D1S`` -- scalar state, mean volume drives both revenue and transition;
* ``D2S`` -- scalar state, predicted volume drives both;
* ``FCFS`` -- no value table: accept while booked volume fits capacity.

All rules use a strict ">" so ties reject: an arrival that adds nothing
over waiting is turned away.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import ConfigError
from .records import BookingRecord
from .value_function import ScalarValueTable, VectorValueTable

RULES = ("D1V", "D2V", "D1S", "D2S", "FCFS")


@dataclass(frozen=True)
class BookingDraw:
    """One arrival inside a simulated flight.

    ``rcsvol`` is drawn up front (policy-independent) so that paired
    policies see identical noise; it is only *read* at departure.
    """

    step: int
    type_index: int
    bkvol: float
    rcsvol: float
    record: BookingRecord | None = None


@dataclass
class Policy:
    rule: str
    table: VectorValueTable | ScalarValueTable | None = None
    predictor: Callable[[BookingDraw], float] | None = None
    capacity: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.rule not in RULES:
            raise ConfigError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if self.rule in ("D1V", "D2V") and not isinstance(self.table, VectorValueTable):
            raise ConfigError(f"rule {self.rule} requires a vector value table")
        if self.rule in ("D1S", "D2S") and not isinstance(self.table, ScalarValueTable):
            raise ConfigError(f"rule {self.rule} requires a scalar value table")
        if self.rule in ("D2V", "D2S") and self.predictor is None:
            raise ConfigError(f"rule {self.rule} requires a predictor")
        if self.rule == "FCFS" and self.capacity is None and self.table is None:
            raise ConfigError("FCFS requires a capacity")
        if not self.label:
            self.label = self.rule

    @property
    def effective_capacity(self) -> float:
        if self.capacity is not None:
            return float(self.capacity)
        return float(self.table.capacity)

    def initial_state(self):
        if self.rule in ("D1V", "D2V"):
            return (0,) * self.table.arrival.num_types
        return 0.0

    def planned_volume(self, draw: BookingDraw) -> float:
        """Volume this rule books the arrival at (revenue basis and, for
        scalar rules, the state increment)."""
        if self.rule in ("D1V", "D1S"):
            return float(self.table.arrival.mean_volumes[draw.type_index])
        if self.rule in ("D2V", "D2S"):
            return float(self.predictor(draw))
        return draw.bkvol  # FCFS books what the agent declared

    def next_state(self, state, draw: BookingDraw, planned: float):
        if self.rule in ("D1V", "D2V"):
            i = draw.type_index
            return state[:i] + (state[i] + 1,) + state[i + 1 :]
        return state + planned


def decide(policy: Policy, state, t: int, draw: BookingDraw) -> bool:
    """True to accept the arrival at step t given the current load state."""
    if t < 1:
        raise ConfigError(f"decisions happen at steps >= 1, got t={t}")
    if policy.rule == "FCFS":
        return state + draw.bkvol <= policy.effective_capacity
    table = policy.table
    if t > table.horizon:
        raise ConfigError(f"value table horizon {table.horizon} does not cover t={t}")
    planned = policy.planned_volume(draw)
    revenue = table.revenue.revenue(draw.type_index, planned)
    stay = table.lookup(state, t - 1)
    grown = policy.next_state(state, draw, planned)
    return revenue + table.lookup(grown, t - 1) > stay
