import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aircargo_rm.arrivals import (
    ArrivalModel,
    build_arrival_model,
    estimate_step_probs,
    estimate_type_probs,
    step_index,
)
from aircargo_rm.errors import ConfigError, DataError
from tests.conftest import make_record


def records_of_types(names):
    return [make_record(booking_id=f"b{i}", product_type=name) for i, name in enumerate(names)]


def test_type_probs_simple_counts():
    probs = estimate_type_probs(records_of_types(["A"] * 3 + ["B"]))
    assert probs == {"A": 0.75, "B": 0.25}


def test_type_probs_dominant_share():
    # 856 of 1000 bookings on the most frequent product
    probs = estimate_type_probs(records_of_types(["Type1"] * 856 + ["other"] * 144))
    assert probs["Type1"] == pytest.approx(0.856, abs=1e-12)


def test_type_probs_single_category():
    assert estimate_type_probs(records_of_types(["X"] * 5)) == {"X": 1.0}


def test_type_probs_empty_errors():
    with pytest.raises(DataError):
        estimate_type_probs([])


@given(st.lists(st.sampled_from("ABCDE"), min_size=1, max_size=200))
def test_type_probs_sum_to_one(names):
    probs = estimate_type_probs(records_of_types(names))
    assert abs(sum(probs.values()) - 1.0) < 1e-9


def test_step_probs_requires_divisible_horizon():
    with pytest.raises(ConfigError):
        estimate_step_probs([make_record(rcsvol=1.0)], num_steps=10, num_intervals=3)


def test_step_probs_all_in_first_step_flattens():
    # identical lead times land in step 0; one interval covering both steps
    # averages the (1.0, 0.0) histogram to (0.5, 0.5)
    records = [make_record(booking_id=f"b{i}", rcsvol=1.0) for i in range(4)]
    probs = estimate_step_probs(records, num_steps=2, num_intervals=1)
    assert np.allclose(probs, [0.5, 0.5])


def test_step_probs_match_hand_histogram():
    # 10 bookings over T=4, J=2, leads chosen to hit known steps
    day = 1440
    max_lead = 8 * day
    leads = [0, day, day, 2 * day, 3 * day, 3 * day, 4 * day, 5 * day, 7 * day, 8 * day]
    records = [
        make_record(booking_id=f"b{i}", booking_time=0, departure_time=lead, rcsvol=1.0)
        for i, lead in enumerate(leads)
    ]
    # oracle: brute-force histogram then per-interval mean
    raw = np.zeros(4)
    for lead in leads:
        raw[min(int(lead / max_lead * 4), 3)] += 1
    raw /= len(leads)
    expected = np.array(
        [raw[:2].mean(), raw[:2].mean(), raw[2:].mean(), raw[2:].mean()]
    )
    probs = estimate_step_probs(records, num_steps=4, num_intervals=2)
    assert np.allclose(probs, expected)


def test_step_probs_constant_within_intervals(rng):
    records = [
        make_record(
            booking_id=f"b{i}",
            booking_time=0,
            departure_time=int(rng.integers(0, 100_000)),
            rcsvol=1.0,
        )
        for i in range(200)
    ]
    probs = estimate_step_probs(records, num_steps=60, num_intervals=6)
    for block in range(6):
        chunk = probs[block * 10 : (block + 1) * 10]
        assert np.ptp(chunk) == 0.0


def test_step_index_clamps_to_last_step():
    assert step_index(100, 100, 10) == 9
    assert step_index(0, 100, 10) == 0
    assert step_index(5, 0, 10) == 0


def test_arrival_model_validation():
    with pytest.raises(ConfigError):
        ArrivalModel(("a",), np.array([0.5]), np.array([0.1]), np.array([1.0]))
    with pytest.raises(ConfigError):
        ArrivalModel(("a", "b"), np.array([0.5, 0.5]), np.array([1.5]), np.array([1.0, 1.0]))
    with pytest.raises(ConfigError):
        ArrivalModel(("a", "b"), np.array([0.5, 0.5]), np.array([0.5]), np.array([1.0, -1.0]))


def test_arrival_model_probs():
    model = ArrivalModel(
        ("a", "b"), np.array([0.25, 0.75]), np.array([0.8, 0.4]), np.array([1.0, 2.0])
    )
    assert np.allclose(model.arrival_probs(1), [0.2, 0.6])
    assert model.no_arrival_prob(2) == pytest.approx(0.6)
    assert model.type_index("b") == 1
    with pytest.raises(ConfigError):
        model.type_index("missing")
    with pytest.raises(ConfigError):
        model.arrival_probs(3)


def test_build_arrival_model_from_records():
    day = 1440
    records = []
    for i in range(6):
        records.append(
            make_record(
                booking_id=f"a{i}",
                booking_time=0,
                departure_time=(i % 3 + 1) * day,
                product_type="A",
                rcsvol=2.0,
            )
        )
    for i in range(2):
        records.append(
            make_record(
                booking_id=f"c{i}",
                booking_time=0,
                departure_time=day,
                product_type="C",
                rcsvol=5.0,
            )
        )
    model = build_arrival_model(records, num_steps=4, num_intervals=2)
    assert model.types == ("A", "C")
    assert np.allclose(model.type_probs, [0.75, 0.25])
    assert np.allclose(model.mean_volumes, [2.0, 5.0])
    assert model.num_steps == 4
