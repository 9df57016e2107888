"""Longitudinal occupant dataset: loading, validation and localisation."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterable, TextIO

from .diagnostics import emit
from .geo import GeoSample, OutOfRangeError, SiteTransform, ZoneMismatchError, to_local

REQUIRED_COLUMNS = ("subject_id", "age", "gender", "timestamp", "latitude", "longitude", "altitude")


class MissingColumnError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LocatedSample:
    timestamp: datetime
    geo: GeoSample
    local: tuple[float, float, float] | None = None
    room_ref: str | None = None


@dataclass(frozen=True)
class OccupantRecord:
    subject_id: str
    age: int | None = None
    gender: str | None = None
    samples: tuple[LocatedSample, ...] = ()


def parse_instant(text: str) -> datetime:
    """RFC 3339 / ISO 8601 instant; naive values are taken as UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    value = datetime.fromisoformat(text)
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def _parse_age(text: str) -> int | None:
    text = text.strip()
    if not text:
        return None
    value = float(text)
    if not math.isfinite(value) or value != int(value) or value < 0:
        raise ValueError(f"age {text!r} is not a non-negative whole number")
    return int(value)


def load_occupants(source: TextIO | str, diagnostics: list | None = None
                   ) -> tuple[list[OccupantRecord], list]:
    """Read the occupant CSV; one record per distinct ``subject_id``.

    Malformed rows are reported with their line number and skipped.
    Records keep first-appearance order and their samples are sorted by
    timestamp (stable for ties).
    """
    diags = diagnostics if diagnostics is not None else []
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.DictReader(source)
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise MissingColumnError(f"missing column(s): {', '.join(missing)}")
    reader.fieldnames = header

    attrs: dict[str, dict] = {}
    samples: dict[str, list[LocatedSample]] = {}
    rows = 0
    for row in reader:
        rows += 1
        line = reader.line_num
        subject = (row.get("subject_id") or "").strip()
        if not subject:
            emit(diags, "MalformedRow", None, f"line {line}: empty subject_id")
            continue
        info = attrs.setdefault(subject, {"age": None, "gender": None})
        samples.setdefault(subject, [])

        try:
            age = _parse_age(row.get("age") or "")
        except ValueError as exc:
            emit(diags, "MalformedRow", subject, f"line {line}: {exc}")
            age = None
        gender = (row.get("gender") or "").strip().lower() or None
        for key, value in (("age", age), ("gender", gender)):
            if value is None:
                continue
            if info[key] is None:
                info[key] = value
            elif info[key] != value:
                emit(diags, "ConflictingAttribute", subject,
                     f"line {line}: {key} {value!r} differs from earlier {info[key]!r}; kept earlier")

        try:
            ts = parse_instant(row.get("timestamp") or "")
            geo = GeoSample(float(row["latitude"]), float(row["longitude"]), float(row["altitude"]))
        except (ValueError, TypeError, OutOfRangeError) as exc:
            emit(diags, "MalformedRow", subject, f"line {line}: {exc}")
            continue
        samples[subject].append(LocatedSample(ts, geo))
    if rows == 0:
        raise EmptyDatasetError("occupant dataset has no data rows")

    records = []
    for subject, info in attrs.items():
        ordered = sorted(samples[subject], key=lambda s: s.timestamp)
        records.append(OccupantRecord(subject, info["age"], info["gender"], tuple(ordered)))
    return records, diags


def read_occupants(path, diagnostics: list | None = None):
    with open(path, newline="", encoding="utf-8") as fh:
        return load_occupants(fh, diagnostics)


def filter_defined(records: Iterable[OccupantRecord], diagnostics: list | None = None
                   ) -> list[OccupantRecord]:
    """Keep records with age, gender and at least one well-formed sample."""
    kept = []
    for rec in records:
        if rec.age is None:
            reason = "undefined age"
        elif rec.gender is None:
            reason = "undefined gender"
        elif not rec.samples:
            reason = "no valid samples"
        else:
            kept.append(rec)
            continue
        emit(diagnostics, "DroppedOccupant", rec.subject_id, reason)
    return kept


def localize(records: Iterable[OccupantRecord], transform: SiteTransform,
             diagnostics: list | None = None) -> list[OccupantRecord]:
    """Fill ``local`` on every sample; out-of-zone samples are dropped."""
    out = []
    for rec in records:
        located = []
        for s in rec.samples:
            try:
                local = to_local(s.geo, transform)
            except ZoneMismatchError as exc:
                emit(diagnostics, "ZoneMismatch", rec.subject_id,
                     f"sample at {s.timestamp.isoformat()} dropped: {exc}")
                continue
            located.append(replace(s, local=local))
        out.append(replace(rec, samples=tuple(located)))
    return out


def select_sample(record: OccupantRecord, as_of: datetime | None = None) -> LocatedSample | None:
    """Latest localised sample not after ``as_of`` (latest overall when ``None``)."""
    chosen = None
    for s in record.samples:
        if s.local is None:
            continue
        if as_of is not None and s.timestamp > as_of:
            break
        chosen = s
    return chosen
