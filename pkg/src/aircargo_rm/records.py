"""Booking records: the row-level unit of cargo data, plus CSV ingestion.

Timestamps are ISO-8601 in files and integer minutes (UTC epoch) in
memory, which keeps lead-time arithmetic exact. Rows that violate the
record invariants are dropped and counted, never fatal; only an
unreadable file aborts ingestion.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import IngestError

MINUTES_PER_DAY = 1440.0

#: Default CSV column names, overridable via a schema-options map.
DEFAULT_COLUMNS: dict[str, str] = {
    "booking_id": "booking_id",
    "booking_time": "booking_time",
    "departure_time": "departure_time",
    "origin": "origin",
    "destination": "destination",
    "agent": "agent",
    "product_type": "product",
    "shipment_codes": "shc",
    "pieces": "pieces",
    "bkvol": "bkvol",
    "bkwt": "bkwt",
    "rcsvol": "rcsvol",
}

# Fields that must hold a non-empty value for the row to be kept.
_REQUIRED = (
    "booking_id",
    "booking_time",
    "departure_time",
    "origin",
    "destination",
    "product_type",
    "pieces",
    "bkvol",
    "bkwt",
)

DROP_MISSING_FIELD = "missing-field"
DROP_BAD_TIMESTAMP = "bad-timestamp"
DROP_BAD_NUMERIC = "bad-numeric"
DROP_TIME_ORDER = "time-order"
DROP_REASONS = (DROP_MISSING_FIELD, DROP_BAD_TIMESTAMP, DROP_BAD_NUMERIC, DROP_TIME_ORDER)


@dataclass(frozen=True)
class BookingRecord:
    """One cargo booking; ``rcsvol`` stays ``None`` until the shipment is tendered."""

    booking_id: str
    booking_time: int
    departure_time: int
    origin: str
    destination: str
    agent: str
    product_type: str
    shipment_codes: frozenset[str]
    pieces: int
    bkvol: float
    bkwt: float
    rcsvol: float | None = None

    @property
    def lead_minutes(self) -> int:
        return self.departure_time - self.booking_time

    @property
    def days_before_departure(self) -> float:
        return self.lead_minutes / MINUTES_PER_DAY

    @property
    def flight_key(self) -> tuple[str, str, int]:
        """Flight-leg identity: same route departing at the same time."""
        return (self.origin, self.destination, self.departure_time)


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_kept: int = 0
    drops: dict[str, int] = field(default_factory=lambda: {r: 0 for r in DROP_REASONS})

    def drop(self, reason: str) -> None:
        self.drops[reason] = self.drops.get(reason, 0) + 1

    @property
    def rows_dropped(self) -> int:
        return sum(self.drops.values())

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped": self.rows_dropped,
            "drops": dict(sorted(self.drops.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_minutes(text: str) -> int:
    """ISO-8601 timestamp -> whole minutes since the UTC epoch (floor)."""
    dt = datetime.fromisoformat(text.strip())
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return math.floor(dt.timestamp() / 60.0)


def format_minutes(minutes: int) -> str:
    dt = datetime.fromtimestamp(minutes * 60, tz=timezone.utc)
    return dt.replace(tzinfo=None).isoformat()


def _parse_volume(text: str) -> float:
    value = float(text)
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"negative or non-finite: {text!r}")
    return value


def _parse_pieces(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        as_float = float(text)
        if not as_float.is_integer():
            raise
        value = int(as_float)
    if value < 1:
        raise ValueError(f"pieces must be >= 1, got {text!r}")
    return value


def parse_shipment_codes(text: str) -> frozenset[str]:
    return frozenset(code.strip() for code in text.split(";") if code.strip())


def format_shipment_codes(codes: frozenset[str]) -> str:
    return ";".join(sorted(codes))


def _row_to_record(row: dict[str, str | None], columns: dict[str, str]) -> tuple[BookingRecord | None, str | None]:
    """Parse one CSV row; returns (record, None) or (None, drop reason)."""
    raw: dict[str, str] = {}
    for field_name, column in columns.items():
        value = row.get(column)
        raw[field_name] = "" if value is None else value.strip()
    for field_name in _REQUIRED:
        if raw[field_name] == "":
            return None, DROP_MISSING_FIELD
    try:
        booking_time = parse_minutes(raw["booking_time"])
        departure_time = parse_minutes(raw["departure_time"])
    except ValueError:
        return None, DROP_BAD_TIMESTAMP
    try:
        pieces = _parse_pieces(raw["pieces"])
        bkvol = _parse_volume(raw["bkvol"])
        bkwt = _parse_volume(raw["bkwt"])
        rcsvol = _parse_volume(raw["rcsvol"]) if raw["rcsvol"] != "" else None
    except ValueError:
        return None, DROP_BAD_NUMERIC
    if booking_time > departure_time:
        return None, DROP_TIME_ORDER
    record = BookingRecord(
        booking_id=raw["booking_id"],
        booking_time=booking_time,
        departure_time=departure_time,
        origin=raw["origin"],
        destination=raw["destination"],
        agent=raw["agent"],
        product_type=raw["product_type"],
        shipment_codes=parse_shipment_codes(raw["shipment_codes"]),
        pieces=pieces,
        bkvol=bkvol,
        bkwt=bkwt,
        rcsvol=rcsvol,
    )
    return record, None


def ingest_csv(
    path: str | Path,
    schema_options: dict[str, str] | None = None,
) -> tuple[list[BookingRecord], IngestReport]:
    """Read bookings from a UTF-8, comma-delimited file with a header row.

    ``schema_options`` maps record field names to the column names used in
    the file; unspecified fields fall back to :data:`DEFAULT_COLUMNS`.
    """
    columns = dict(DEFAULT_COLUMNS)
    if schema_options:
        unknown = set(schema_options) - set(columns)
        if unknown:
            raise IngestError(f"unknown schema options: {sorted(unknown)}")
        columns.update(schema_options)
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    records: list[BookingRecord] = []
    report = IngestReport()
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: no header row")
        for row in reader:
            report.rows_read += 1
            record, reason = _row_to_record(row, columns)
            if record is None:
                report.drop(reason)  # type: ignore[arg-type]
            else:
                records.append(record)
                report.rows_kept += 1
    return records, report


def write_records_csv(
    records: list[BookingRecord],
    path: str | Path,
    schema_options: dict[str, str] | None = None,
) -> None:
    """Serialize records so that re-ingesting the file reproduces them exactly."""
    columns = dict(DEFAULT_COLUMNS)
    if schema_options:
        columns.update(schema_options)
    field_order = list(DEFAULT_COLUMNS)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([columns[f] for f in field_order])
        for record in records:
            writer.writerow(
                [
                    record.booking_id,
                    format_minutes(record.booking_time),
                    format_minutes(record.departure_time),
                    record.origin,
                    record.destination,
                    record.agent,
                    record.product_type,
                    format_shipment_codes(record.shipment_codes),
                    record.pieces,
                    repr(record.bkvol),
                    repr(record.bkwt),
                    "" if record.rcsvol is None else repr(record.rcsvol),
                ]
            )
