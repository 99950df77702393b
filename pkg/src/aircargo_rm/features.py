"""Feature encoding for the received-volume predictor.

Layout of one encoded row:

    [days, bkwt, pieces, bkvol, dmv] ++ shc multi-hot ++ product one-hot
                                     ++ destination one-hot ++ origin one-hot

Vocabularies are frozen at training time; categories unseen in training
encode as all-zero blocks rather than erroring, since live bookings
regularly contain novel codes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .records import BookingRecord

NUMERIC_FEATURES = ("days", "bkwt", "pieces", "bkvol", "dmv")


@dataclass(frozen=True)
class FeatureVocabulary:
    products: tuple[str, ...]
    shipment_codes: tuple[str, ...]
    destinations: tuple[str, ...]
    origins: tuple[str, ...]

    @classmethod
    def from_records(cls, records: list[BookingRecord]) -> "FeatureVocabulary":
        codes: set[str] = set()
        for record in records:
            codes.update(record.shipment_codes)
        return cls(
            products=tuple(sorted({r.product_type for r in records})),
            shipment_codes=tuple(sorted(codes)),
            destinations=tuple(sorted({r.destination for r in records})),
            origins=tuple(sorted({r.origin for r in records})),
        )

    @cached_property
    def _product_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.products)}

    @cached_property
    def _shc_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.shipment_codes)}

    @cached_property
    def _dest_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.destinations)}

    @cached_property
    def _orig_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.origins)}

    @property
    def num_features(self) -> int:
        return (
            len(NUMERIC_FEATURES)
            + len(self.shipment_codes)
            + len(self.products)
            + len(self.destinations)
            + len(self.origins)
        )

    def feature_names(self) -> list[str]:
        names = list(NUMERIC_FEATURES)
        names += [f"shc:{c}" for c in self.shipment_codes]
        names += [f"product:{p}" for p in self.products]
        names += [f"dest:{d}" for d in self.destinations]
        names += [f"orig:{o}" for o in self.origins]
        return names

    def encode(self, booking: BookingRecord, dmv_flag: bool) -> np.ndarray:
        row = np.zeros(self.num_features)
        row[0] = booking.days_before_departure
        row[1] = booking.bkwt
        row[2] = booking.pieces
        row[3] = booking.bkvol
        row[4] = 1.0 if dmv_flag else 0.0
        base = len(NUMERIC_FEATURES)
        for code in booking.shipment_codes:
            idx = self._shc_index.get(code)
            if idx is not None:
                row[base + idx] = 1.0
        base += len(self.shipment_codes)
        idx = self._product_index.get(booking.product_type)
        if idx is not None:
            row[base + idx] = 1.0
        base += len(self.products)
        idx = self._dest_index.get(booking.destination)
        if idx is not None:
            row[base + idx] = 1.0
        base += len(self.destinations)
        idx = self._orig_index.get(booking.origin)
        if idx is not None:
            row[base + idx] = 1.0
        return row

    def encode_many(self, bookings: list[BookingRecord], dmv_flags: list[bool]) -> np.ndarray:
        if len(bookings) != len(dmv_flags):
            raise ValueError("bookings and dmv_flags must have equal length")
        matrix = np.zeros((len(bookings), self.num_features))
        for i, (booking, flagged) in enumerate(zip(bookings, dmv_flags)):
            matrix[i] = self.encode(booking, flagged)
        return matrix

    def to_dict(self) -> dict:
        return {
            "products": list(self.products),
            "shipment_codes": list(self.shipment_codes),
            "destinations": list(self.destinations),
            "origins": list(self.origins),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FeatureVocabulary":
        return cls(
            products=tuple(payload["products"]),
            shipment_codes=tuple(payload["shipment_codes"]),
            destinations=tuple(payload["destinations"]),
            origins=tuple(payload["origins"]),
        )
