import numpy as np
import pytest

from aircargo_rm.instances import two_type_example
from aircargo_rm.records import BookingRecord


@pytest.fixture
def example_instance():
    """Two-type hand-checkable instance used across the DP tests."""
    return two_type_example()


def make_record(
    booking_id="b1",
    booking_time=0,
    departure_time=2880,
    origin="AAA",
    destination="ZZZ",
    agent="agent-1",
    product_type="GEN",
    shipment_codes=frozenset(),
    pieces=1,
    bkvol=1.0,
    bkwt=10.0,
    rcsvol=None,
):
    return BookingRecord(
        booking_id=booking_id,
        booking_time=booking_time,
        departure_time=departure_time,
        origin=origin,
        destination=destination,
        agent=agent,
        product_type=product_type,
        shipment_codes=shipment_codes,
        pieces=pieces,
        bkvol=bkvol,
        bkwt=bkwt,
        rcsvol=rcsvol,
    )


@pytest.fixture
def record_factory():
    return make_record


def write_csv(path, rows, header=None):
    header = header or (
        "booking_id,booking_time,departure_time,origin,destination,"
        "agent,product,shc,pieces,bkvol,bkwt,rcsvol"
    )
    path.write_text(header + "\n" + "\n".join(rows) + ("\n" if rows else ""), encoding="utf-8")
    return path


@pytest.fixture
def csv_writer():
    return write_csv


@pytest.fixture
def rng():
    return np.random.default_rng(20240527)
