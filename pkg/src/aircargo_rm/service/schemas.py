"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..records import BookingRecord, parse_minutes


class BookingIn(BaseModel):
    """An incoming booking as the reservation system sees it."""

    booking_id: str = ""
    booking_time: str
    departure_time: str
    origin: str = ""
    destination: str = ""
    agent: str = ""
    product_type: str
    shipment_codes: list[str] = Field(default_factory=list)
    pieces: int = 1
    bkvol: float
    bkwt: float = 0.0

    def to_record(self) -> BookingRecord:
        return BookingRecord(
            booking_id=self.booking_id,
            booking_time=parse_minutes(self.booking_time),
            departure_time=parse_minutes(self.departure_time),
            origin=self.origin,
            destination=self.destination,
            agent=self.agent,
            product_type=self.product_type,
            shipment_codes=frozenset(self.shipment_codes),
            pieces=self.pieces,
            bkvol=self.bkvol,
            bkwt=self.bkwt,
            rcsvol=None,
        )


class ScoreRequest(BaseModel):
    booking: BookingIn
    model: str
    dmv_directory: str | None = None


class ScoreResponse(BaseModel):
    dmv: bool
    predicted_rcsvol: float


class DecideRequest(BaseModel):
    rule: Literal["D1V", "D2V", "D1S", "D2S", "FCFS"]
    time_step: int
    load: float | list[int]
    booking: BookingIn
    value_table: str | None = None
    model: str | None = None
    dmv_directory: str | None = None
    capacity: float | None = None  # FCFS without a table


class DecideResponse(BaseModel):
    accept: bool
    rule: str
    planned_volume: float | None = None
    dmv: bool | None = None
    accept_value: float | None = None
    reject_value: float | None = None


class PipelineRequest(BaseModel):
    config: dict
    base_dir: str | None = None


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorResponse(BaseModel):
    detail: str
    error_kind: str
