"""Tick-stream parsing and resampling into activity and best-rate panels.

Input is a quote-event CSV (`timestamp,instrument,side,price`).  Events are
bucketed on a uniform grid with half-open buckets [k*dt, (k+1)*dt): the
activity series counts side-matching quotes per unit time, the best-rate
series takes the bucket minimum for asks (maximum for bids) and carries the
previous value through empty buckets.  Buckets before an instrument's first
quote have no defensible value and stay missing; panels are trimmed to the
first bucket where every instrument has one.
"""

from __future__ import annotations

import csv
import gzip
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, TextIO

import numpy as np

from .errors import FormatError, TransformError
from .spectra import SignalPanel

log = logging.getLogger(__name__)

TICK_HEADER = ("timestamp", "instrument", "side", "price")
SIDES = ("ask", "bid")

# Abort parsing when more than this fraction of data rows is malformed.
MALFORMED_ABORT_FRACTION = 0.01
_MAX_REPORTED_PROBLEMS = 20


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC-3339 timestamp; naive times are taken as UTC."""
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    # Python 3.10 only accepts 3- or 6-digit fractional seconds; pad to 6.
    if "." in s:
        date_part, _, frac_part = s.partition(".")
        digits = ""
        while frac_part and frac_part[0].isdigit():
            digits += frac_part[0]
            frac_part = frac_part[1:]
        if not 1 <= len(digits) <= 6:
            raise ValueError(f"bad fractional seconds in {text!r}")
        s = f"{date_part}.{digits:<06s}{frac_part}"
    t = datetime.fromisoformat(s)
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    return t.astimezone(timezone.utc)


def format_rfc3339(t: datetime) -> str:
    """Render a UTC timestamp as RFC-3339 with a Z suffix."""
    t = t.astimezone(timezone.utc)
    if t.microsecond:
        return t.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def _epoch_ms(t: datetime) -> int:
    return round(t.timestamp() * 1000.0)


def _from_epoch_ms(ms: float) -> datetime:
    return datetime.fromtimestamp(ms / 1000.0, tz=timezone.utc)


@dataclass(frozen=True)
class TickRecord:
    """One quote event: when, what, which side, at what price."""

    timestamp_ms: int
    instrument: str
    side: str
    price: float


@dataclass
class ParsedTicks:
    """Parse outcome: records in file order plus a malformed-row tally."""

    records: list[TickRecord]
    malformed: int = 0
    problems: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class ResampleGrid:
    """Uniform bucket grid: origin timestamp, bucket width dt (minutes), count."""

    origin_ms: int
    dt: float
    bucket_count: int

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"bucket width must be positive, got {self.dt}")
        if self.bucket_count < 1:
            raise ValueError(f"need at least one bucket, got {self.bucket_count}")

    @property
    def dt_ms(self) -> float:
        return self.dt * 60_000.0

    @property
    def origin(self) -> datetime:
        return _from_epoch_ms(self.origin_ms)

    def bucket_of(self, timestamp_ms: int) -> int:
        """Bucket index under the half-open convention; may fall outside the grid."""
        return math.floor((timestamp_ms - self.origin_ms) / self.dt_ms)

    def bucket_start(self, k: int) -> datetime:
        return _from_epoch_ms(self.origin_ms + k * self.dt_ms)

    @classmethod
    def covering(cls, ticks: Iterable[TickRecord], dt: float = 1.0) -> "ResampleGrid":
        """Smallest dt-aligned grid containing every tick (either side)."""
        stamps = [t.timestamp_ms for t in ticks]
        if not stamps:
            raise ValueError("cannot build a grid from an empty tick sequence")
        dt_ms = dt * 60_000.0
        origin = math.floor(min(stamps) / dt_ms) * dt_ms
        count = math.floor((max(stamps) - origin) / dt_ms) + 1
        return cls(origin_ms=round(origin), dt=dt, bucket_count=count)


@dataclass(frozen=True)
class MarketSeries:
    """Per-instrument activity and best-rate series on one grid and side.

    Best-rate buckets before an instrument's first quote are NaN.
    """

    activity: dict[str, np.ndarray]
    best_rate: dict[str, np.ndarray]
    grid: ResampleGrid
    side: str


def parse_ticks(stream: TextIO) -> ParsedTicks:
    """Read quote events from a tick CSV stream.

    Malformed rows are counted and reported, never silently dropped; when
    more than 1% of the data rows are bad the whole parse aborts with a
    summary.  An unrecognizable header aborts immediately.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty tick file: missing header") from None
    if tuple(h.strip().lower() for h in header) != TICK_HEADER:
        raise FormatError(
            f"bad tick header {header!r}, expected {','.join(TICK_HEADER)}"
        )

    records: list[TickRecord] = []
    malformed = 0
    problems: list[str] = []

    def reject(line: int, reason: str) -> None:
        nonlocal malformed
        malformed += 1
        if len(problems) < _MAX_REPORTED_PROBLEMS:
            problems.append(f"line {line}: {reason}")

    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            reject(lineno, f"expected 4 fields, got {len(row)}")
            continue
        raw_ts, instrument, side, raw_price = (c.strip() for c in row)
        side = side.lower()
        if side not in SIDES:
            reject(lineno, f"unknown side {side!r}")
            continue
        if not instrument:
            reject(lineno, "empty instrument")
            continue
        try:
            ts = _epoch_ms(parse_rfc3339(raw_ts))
        except ValueError:
            reject(lineno, f"bad timestamp {raw_ts!r}")
            continue
        try:
            price = float(raw_price)
        except ValueError:
            reject(lineno, f"bad price {raw_price!r}")
            continue
        if not (math.isfinite(price) and price > 0):
            reject(lineno, f"price must be positive, got {raw_price!r}")
            continue
        records.append(TickRecord(ts, instrument, side, price))

    total = len(records) + malformed
    if total and malformed / total > MALFORMED_ABORT_FRACTION:
        summary = "; ".join(problems[:5])
        raise FormatError(
            f"{malformed} of {total} rows malformed (>{MALFORMED_ABORT_FRACTION:.0%}): {summary}"
        )
    return ParsedTicks(records=records, malformed=malformed, problems=problems)


def read_ticks(path: str | Path) -> ParsedTicks:
    """Parse a tick CSV file; gzip-compressed input is accepted by extension."""
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rt", encoding="utf-8", newline="") as fh:
            return parse_ticks(fh)
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_ticks(fh)


def _in_grid(ticks: Iterable[TickRecord], grid: ResampleGrid, side: str):
    for t in ticks:
        if t.side != side:
            continue
        k = grid.bucket_of(t.timestamp_ms)
        if 0 <= k < grid.bucket_count:
            yield k, t


def quotation_frequency(
    ticks: Iterable[TickRecord], grid: ResampleGrid, side: str
) -> dict[str, np.ndarray]:
    """Quotes per unit time per instrument: A_j(k) = count in bucket k / dt.

    Instruments present in the stream but with every tick outside the grid
    yield all-zero series.  Bucket assignment depends only on timestamps,
    so the input order is irrelevant.
    """
    _check_side(side)
    counts: dict[str, np.ndarray] = {}
    ticks = list(ticks)
    for t in ticks:
        if t.side == side and t.instrument not in counts:
            counts[t.instrument] = np.zeros(grid.bucket_count)
    for k, t in _in_grid(ticks, grid, side):
        counts[t.instrument][k] += 1.0
    return {name: counts[name] / grid.dt for name in sorted(counts)}


def best_rates(
    ticks: Iterable[TickRecord], grid: ResampleGrid, side: str
) -> dict[str, np.ndarray]:
    """Best quoted rate per bucket: minimum ask or maximum bid, forward-filled.

    Empty buckets repeat the previous bucket's value; buckets before an
    instrument's first in-grid quote stay NaN.  Instruments with no in-grid
    quote at all are dropped with a warning.
    """
    _check_side(side)
    extremum = min if side == "ask" else max
    per_bucket: dict[str, dict[int, float]] = {}
    ticks = list(ticks)
    seen = {t.instrument for t in ticks if t.side == side}
    for k, t in _in_grid(ticks, grid, side):
        buckets = per_bucket.setdefault(t.instrument, {})
        prior = buckets.get(k)
        buckets[k] = t.price if prior is None else extremum(prior, t.price)

    for name in sorted(seen - per_bucket.keys()):
        log.warning("instrument %s has no %s quotes inside the grid; dropped", name, side)

    out: dict[str, np.ndarray] = {}
    for name in sorted(per_bucket):
        series = np.full(grid.bucket_count, np.nan)
        buckets = per_bucket[name]
        last = math.nan
        for k in range(grid.bucket_count):
            if k in buckets:
                last = buckets[k]
            series[k] = last
        out[name] = series
    return out


def market_series(
    ticks: Iterable[TickRecord], grid: ResampleGrid, side: str
) -> MarketSeries:
    """Bundle quotation-frequency and best-rate series for one side."""
    ticks = list(ticks)
    return MarketSeries(
        activity=quotation_frequency(ticks, grid, side),
        best_rate=best_rates(ticks, grid, side),
        grid=grid,
        side=side,
    )


def log_returns(values: np.ndarray) -> np.ndarray:
    """Row-wise log(v[k]) - log(v[k-1]); requires strictly positive input."""
    v = np.asarray(values, dtype=np.float64)
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise TransformError("log-return requires strictly positive, finite values")
    logs = np.log(v)
    return logs[..., 1:] - logs[..., :-1]


def build_panel(
    series: MarketSeries, field_name: str = "activity", transform: str = "raw"
) -> SignalPanel:
    """Assemble a SignalPanel from resampled market series.

    `field_name` picks the activity or the best-rate series.  Rate panels
    are trimmed to the first bucket where every instrument has a value;
    `transform="log-return"` then maps each rate series to its log
    differences (one sample shorter, stamped at the start of the interval
    each return spans).  Activity panels are always raw.
    """
    if field_name not in ("activity", "rate"):
        raise ValueError(f"unknown panel field {field_name!r}")
    if transform not in ("raw", "log-return"):
        raise TransformError(f"unknown transform {transform!r}")

    if field_name == "activity":
        if transform != "raw":
            raise TransformError("activity panels are always raw")
        data = series.activity
        if not data:
            raise ValueError("no instruments to build a panel from")
        labels = tuple(sorted(data))
        values = np.vstack([data[name] for name in labels])
        return SignalPanel(values, labels, series.grid.dt, series.grid.bucket_start(0))

    data = series.best_rate
    if not data:
        raise ValueError("no instruments to build a panel from")
    labels = tuple(sorted(data))
    values = np.vstack([data[name] for name in labels])
    valid = ~np.isnan(values)
    first_complete = 0
    for row in valid:
        first_complete = max(first_complete, int(np.argmax(row)))
    values = values[:, first_complete:]
    t0 = series.grid.bucket_start(first_complete)
    if transform == "log-return":
        values = log_returns(values)
    return SignalPanel(values, labels, series.grid.dt, t0)


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def write_panel_csv(
    panel: SignalPanel, path: str | Path, meta: Mapping[str, str] | None = None
) -> None:
    """Write a panel as `time,<channel>,...` rows with RFC-3339 timestamps.

    An optional `# key=value ...` comment line records provenance.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if meta:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        fh.write("time," + ",".join(panel.labels) + "\n")
        dt_ms = panel.dt * 60_000.0
        base_ms = _epoch_ms(panel.t0)
        for k in range(panel.length):
            stamp = format_rfc3339(_from_epoch_ms(base_ms + k * dt_ms))
            row = ",".join(repr(float(v)) for v in panel.values[:, k])
            fh.write(f"{stamp},{row}\n")


def read_panel_csv(path: str | Path) -> SignalPanel:
    """Read a panel CSV back into a SignalPanel (comment lines are skipped)."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise FormatError(f"{path}: no header row found")
    reader = csv.reader(lines)
    header = next(reader)
    if len(header) < 2 or header[0].strip().lower() != "time":
        raise FormatError(f"{path}: expected header `time,<channel>,...`, got {header!r}")
    labels = tuple(h.strip() for h in header[1:])
    stamps: list[int] = []
    rows: list[list[float]] = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {lineno}: expected {len(header)} fields")
        try:
            stamps.append(_epoch_ms(parse_rfc3339(row[0])))
            rows.append([float(c) for c in row[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}: line {lineno}: {exc}") from None
    if len(rows) < 2:
        raise FormatError(f"{path}: a panel needs at least two rows")
    deltas = np.diff(stamps)
    if np.any(np.abs(deltas - deltas[0]) > 1):
        raise FormatError(f"{path}: rows are not uniformly spaced")
    dt = deltas[0] / 60_000.0
    values = np.array(rows, dtype=np.float64).T
    return SignalPanel(values, labels, dt, _from_epoch_ms(stamps[0]))
