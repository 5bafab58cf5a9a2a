"""Turn spectrum-analyzer spans and positioning logs into tagged records.

Pipeline: linear-scale span averaging -> join with the nearest position fix
-> GPS/UWB distance fusion -> tag assignment from annotated time segments ->
censoring at the detection threshold -> removal of records around tag
transitions.
"""

from __future__ import annotations

import bisect
import csv
import enum
import json
import warnings
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DataFormatError, DomainError, SpanLengthWarning
from .estimation import Sample
from .linkbudget import LinkBudget, max_measurable_pl
from .models import (Antenna, Blocking, Environment, ModelKey, Mounting,
                     Visibility, parse_enum)

SPEED_OF_LIGHT = 299_792_458.0
NOMINAL_SPAN_SAMPLES = 551
NOMINAL_SPAN_DURATION_S = 0.055
LEE_BOUNDS_WAVELENGTHS = (10.1, 81.4)


@dataclass(frozen=True)
class RawSpan:
    """One zero-span sweep: ``powers`` in dBm captured over ``duration`` seconds."""

    timestamp: float
    powers: Tuple[float, ...]
    duration: float = NOMINAL_SPAN_DURATION_S

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if not self.powers:
            raise DomainError("span has no power samples")
        if not self.duration > 0:
            raise DomainError(f"span duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class PositionFix:
    timestamp: float
    gps_distance: Optional[float] = None
    uwb_distance: Optional[float] = None
    v_rx: Optional[float] = None
    v_rel: Optional[float] = None

    def __post_init__(self):
        if self.gps_distance is None and self.uwb_distance is None:
            raise DomainError("position fix needs a GPS or a UWB distance")


@dataclass(frozen=True)
class Tags:
    visibility: Visibility
    environment: Environment
    mounting: Mounting
    antenna: Antenna
    blocking: Blocking = Blocking.NONE

    def __post_init__(self):
        for name, cls in (("visibility", Visibility), ("environment", Environment),
                          ("mounting", Mounting), ("antenna", Antenna),
                          ("blocking", Blocking)):
            object.__setattr__(self, name, parse_enum(cls, getattr(self, name)))

    def model_key(self) -> ModelKey:
        return ModelKey(self.antenna, self.mounting, self.visibility,
                        self.environment, self.blocking)


@dataclass(frozen=True)
class TagSegment:
    """Annotated interval ``[start, end)`` over which ``tags`` hold."""

    start: float
    end: float
    tags: Tags

    def __post_init__(self):
        if not self.end > self.start:
            raise DomainError(f"tag segment must have end > start, got [{self.start}, {self.end})")


class DistanceSource(str, enum.Enum):
    GPS = "gps"
    UWB = "uwb"


class FusedDistance(NamedTuple):
    distance: float
    source: DistanceSource


@dataclass(frozen=True)
class MeasurementRecord:
    """One large-scale fading sample after span averaging and tagging."""

    timestamp: float
    distance: float
    rx_power: float
    censored: bool
    tags: Tags
    distance_source: DistanceSource = DistanceSource.GPS
    v_rx: Optional[float] = None
    v_rel: Optional[float] = None

    def __post_init__(self):
        if not self.distance > 0:
            raise DomainError(f"record distance must be > 0, got {self.distance}")
        object.__setattr__(self, "distance_source", DistanceSource(self.distance_source))

    def to_dict(self) -> dict:
        return {
            "timestamp_s": self.timestamp,
            "distance_m": self.distance,
            "distance_source": self.distance_source.value,
            "rx_power_dbm": self.rx_power,
            "censored": self.censored,
            "visibility": self.tags.visibility.value,
            "environment": self.tags.environment.value,
            "mounting": self.tags.mounting.value,
            "antenna": self.tags.antenna.value,
            "blocking": self.tags.blocking.value,
            "v_rx_mps": self.v_rx,
            "v_rel_mps": self.v_rel,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeasurementRecord":
        tags = Tags(data["visibility"], data["environment"], data["mounting"],
                    data["antenna"], data.get("blocking", "none"))
        return cls(timestamp=float(data["timestamp_s"]), distance=float(data["distance_m"]),
                   rx_power=float(data["rx_power_dbm"]), censored=bool(data["censored"]),
                   tags=tags, distance_source=data.get("distance_source", "gps"),
                   v_rx=data.get("v_rx_mps"), v_rel=data.get("v_rel_mps"))


def average_span(span) -> float:
    """dBm of the mean linear (mW) power across the span's samples.

    Accepts a :class:`RawSpan` or a plain sequence of dBm values.
    """
    powers = np.asarray(getattr(span, "powers", span), dtype=float)
    if powers.size == 0:
        raise DomainError("span has no power samples")
    # factor out the peak so very low dBm values do not underflow
    peak = powers.max()
    return float(peak + 10.0 * np.log10(np.mean(10.0 ** ((powers - peak) / 10.0))))


def to_path_loss(record: MeasurementRecord, budget: LinkBudget) -> Sample:
    """Invert the link budget. Censored records map to the censoring level exactly."""
    if record.censored:
        return Sample(record.distance, max_measurable_pl(budget), True)
    return Sample(record.distance, budget.eirp_less_rx - record.rx_power, False)


def fuse_distance(fix: PositionFix, uwb_max_range: float = 100.0) -> FusedDistance:
    """Prefer UWB ranging while it is within ``uwb_max_range``, else GPS."""
    if fix.uwb_distance is not None and fix.uwb_distance <= uwb_max_range:
        return FusedDistance(float(fix.uwb_distance), DistanceSource.UWB)
    if fix.gps_distance is not None:
        return FusedDistance(float(fix.gps_distance), DistanceSource.GPS)
    if fix.uwb_distance is not None:
        raise DomainError(
            f"UWB distance {fix.uwb_distance:g} m exceeds the {uwb_max_range:g} m range "
            "and no GPS distance is available")
    raise DomainError("position fix has neither GPS nor UWB distance")


def transition_times(records: Sequence) -> List[float]:
    """Timestamps of records whose tags differ from the preceding record's."""
    return [cur.timestamp for prev, cur in zip(records, records[1:]) if cur.tags != prev.tags]


def filter_transitions(records: Sequence, window: float = 2.0) -> list:
    """Drop every record within ``window`` seconds of a tag change.

    ``records`` must be time-ordered and expose ``timestamp`` and ``tags``.
    """
    records = list(records)
    times = [r.timestamp for r in records]
    if any(b < a for a, b in zip(times, times[1:])):
        raise DomainError("records must be ordered by timestamp")
    changes = transition_times(records)
    if not changes:
        return records
    kept = []
    for rec in records:
        i = bisect.bisect_left(changes, rec.timestamp)
        near = any(abs(changes[j] - rec.timestamp) <= window
                   for j in (i - 1, i) if 0 <= j < len(changes))
        if not near:
            kept.append(rec)
    return kept


def lee_check(v: float, span_duration: float, frequency: float,
              bounds: Tuple[float, float] = LEE_BOUNDS_WAVELENGTHS) -> Tuple[float, bool]:
    """Averaging distance covered by one span, in wavelengths, and whether it
    falls inside ``bounds``.

    ``v`` in m/s, ``span_duration`` in s, ``frequency`` in GHz.
    """
    if not (v > 0 and span_duration > 0 and frequency > 0):
        raise DomainError("speed, span duration and frequency must all be > 0")
    wavelength = SPEED_OF_LIGHT / (frequency * 1e9)
    n = v * span_duration / wavelength
    return n, bounds[0] <= n <= bounds[1]


def _nearest(sorted_times, t):
    i = bisect.bisect_left(sorted_times, t)
    best = None
    for j in (i - 1, i):
        if 0 <= j < len(sorted_times):
            if best is None or abs(sorted_times[j] - t) < abs(sorted_times[best] - t):
                best = j
    return best


def build_records(spans: Iterable[RawSpan], fixes: Iterable[PositionFix],
                  segments: Iterable[TagSegment], budget: LinkBudget, *,
                  join_tolerance: float = 0.5, uwb_max_range: float = 100.0,
                  transition_window: float = 2.0) -> List[MeasurementRecord]:
    """Join spans, fixes and tag segments into filtered measurement records.

    Spans with no fix within ``join_tolerance`` seconds, or outside every tag
    segment, are dropped. Spans averaging at or below the detection threshold
    become censored records carrying the threshold as their power.
    """
    fixes = sorted(fixes, key=lambda f: f.timestamp)
    fix_times = [f.timestamp for f in fixes]
    segments = sorted(segments, key=lambda s: s.start)
    seg_starts = [s.start for s in segments]

    records = []
    for span in sorted(spans, key=lambda s: s.timestamp):
        j = _nearest(fix_times, span.timestamp)
        if j is None or abs(fix_times[j] - span.timestamp) > join_tolerance:
            continue
        k = bisect.bisect_right(seg_starts, span.timestamp) - 1
        if k < 0 or span.timestamp >= segments[k].end:
            continue
        fix = fixes[j]
        distance, source = fuse_distance(fix, uwb_max_range)
        rx = average_span(span)
        censored = rx <= budget.detection_threshold
        records.append(MeasurementRecord(
            timestamp=span.timestamp, distance=distance, distance_source=source,
            rx_power=budget.detection_threshold if censored else rx,
            censored=censored, tags=segments[k].tags, v_rx=fix.v_rx, v_rel=fix.v_rel))
    return filter_transitions(records, transition_window)


def read_spans_csv(path, length_tolerance: int = 5) -> List[RawSpan]:
    """Read ``timestamp_s,duration_s,p1,...,pN`` rows; a header row is skipped."""
    spans = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and row[0].strip() == "timestamp_s":
                continue
            if len(row) < 3:
                raise DataFormatError("span row needs timestamp, duration and >= 1 power",
                                      path, lineno)
            try:
                values = [float(c) for c in row]
                span = RawSpan(values[0], values[2:], values[1])
            except ValueError as exc:
                raise DataFormatError(str(exc), path, lineno) from None
            if abs(len(span.powers) - NOMINAL_SPAN_SAMPLES) > length_tolerance:
                warnings.warn(f"{path}:{lineno}: span has {len(span.powers)} samples, "
                              f"expected {NOMINAL_SPAN_SAMPLES}", SpanLengthWarning,
                              stacklevel=2)
            spans.append(span)
    return spans


def _iter_jsonl(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"invalid JSON: {exc.msg}", path, lineno) from None
            if not isinstance(obj, dict):
                raise DataFormatError("expected a JSON object", path, lineno)
            yield lineno, obj


def read_fixes_jsonl(path) -> List[PositionFix]:
    """Read ``{timestamp_s, gps_distance_m?, uwb_distance_m?, v_rx_mps?, v_rel_mps?}``."""
    fixes = []
    for lineno, obj in _iter_jsonl(path):
        try:
            fixes.append(PositionFix(float(obj["timestamp_s"]), obj.get("gps_distance_m"),
                                     obj.get("uwb_distance_m"), obj.get("v_rx_mps"),
                                     obj.get("v_rel_mps")))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"bad position fix: {exc}", path, lineno) from None
    return fixes


def read_tags_jsonl(path) -> List[TagSegment]:
    """Read ``{start_s, end_s, visibility, environment, mounting, antenna, blocking?}``."""
    segments = []
    for lineno, obj in _iter_jsonl(path):
        try:
            tags = Tags(obj["visibility"], obj["environment"], obj["mounting"],
                        obj["antenna"], obj.get("blocking", "none"))
            segments.append(TagSegment(float(obj["start_s"]), float(obj["end_s"]), tags))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"bad tag segment: {exc}", path, lineno) from None
    return segments


def read_records_jsonl(path) -> List[MeasurementRecord]:
    records = []
    for lineno, obj in _iter_jsonl(path):
        try:
            records.append(MeasurementRecord.from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"bad measurement record: {exc}", path, lineno) from None
    return records


def dump_records_jsonl(records: Iterable[MeasurementRecord]) -> str:
    return "".join(json.dumps(r.to_dict()) + "\n" for r in records)
