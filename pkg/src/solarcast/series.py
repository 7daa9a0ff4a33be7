"""Power time series: CSV ingestion, seasonal windows, resampling, scaling
and sliding-window pattern construction.

Timestamps are held as ``datetime64[m]`` arrays and power as ``float64``
arrays. Every function here is pure; inputs are never mutated.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import (
    DegenerateRange,
    EmptyFile,
    EmptyResult,
    EmptySplit,
    InsufficientData,
    MalformedRow,
    NonMonotonicTimestamps,
    WrongResolution,
)

PLANT_CAPACITY_MW = 25.0
CSV_HEADER = ("timestamp", "power_mw")


class Resolution(enum.Enum):
    FIVE_MINUTE = 5
    ONE_HOUR = 60

    @property
    def minutes(self) -> int:
        return self.value

    @property
    def step(self) -> np.timedelta64:
        return np.timedelta64(self.value, "m")

    @property
    def label(self) -> str:
        return "5min" if self is Resolution.FIVE_MINUTE else "1h"

    @classmethod
    def parse(cls, text: "str | Resolution") -> "Resolution":
        if isinstance(text, Resolution):
            return text
        key = str(text).strip().lower().replace(" ", "").replace("-", "").replace("_", "")
        if key in {"5min", "5m", "fiveminute", "5", "5minute", "5minutes"}:
            return cls.FIVE_MINUTE
        if key in {"1h", "1hour", "onehour", "60min", "60", "hourly", "60m"}:
            return cls.ONE_HOUR
        raise ValueError(f"unknown resolution {text!r}")


class Season(enum.Enum):
    SUMMER = "Summer"
    RAINY = "Rainy"
    WINTER = "Winter"

    @classmethod
    def parse(cls, text: "str | Season") -> "Season":
        if isinstance(text, Season):
            return text
        for s in cls:
            if s.value.lower() == str(text).strip().lower():
                return s
        raise ValueError(f"unknown season {text!r}")

    @property
    def window(self) -> "SeasonWindow":
        return SEASON_WINDOWS[self]


@dataclass(frozen=True)
class SeasonWindow:
    season: Season
    months: frozenset
    daylight_start: dt.time
    daylight_end: dt.time

    def __post_init__(self):
        if not self.daylight_start < self.daylight_end:
            raise ValueError("daylight_start must precede daylight_end")
        if not self.months or not set(self.months) <= set(range(1, 13)):
            raise ValueError(f"invalid month set {sorted(self.months)}")

    @property
    def start_minute(self) -> int:
        return self.daylight_start.hour * 60 + self.daylight_start.minute

    @property
    def end_minute(self) -> int:
        return self.daylight_end.hour * 60 + self.daylight_end.minute


SEASON_WINDOWS = {
    Season.SUMMER: SeasonWindow(Season.SUMMER, frozenset({3, 4, 5, 6}), dt.time(5, 30), dt.time(18, 30)),
    Season.RAINY: SeasonWindow(Season.RAINY, frozenset({7, 8, 9, 10}), dt.time(6, 30), dt.time(17, 30)),
    Season.WINTER: SeasonWindow(Season.WINTER, frozenset({11, 12, 1, 2}), dt.time(8, 0), dt.time(16, 0)),
}

# first calendar day used when synthesising each season
_SEASON_FIRST_DAY = {
    Season.SUMMER: dt.date(2006, 3, 1),
    Season.RAINY: dt.date(2006, 7, 1),
    Season.WINTER: dt.date(2006, 11, 1),
}


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Timestamped power samples (MW, or p.u. once scaled)."""

    timestamps: np.ndarray
    values: np.ndarray
    resolution: Resolution

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[m]")
        vals = np.asarray(self.values, dtype=np.float64)
        if ts.ndim != 1 or vals.shape != ts.shape:
            raise ValueError("timestamps and values must be 1-D arrays of equal length")
        if ts.size > 1 and not np.all(ts[1:] > ts[:-1]):
            raise NonMonotonicTimestamps("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return int(self.values.size)

    def __getitem__(self, idx: slice) -> "TimeSeries":
        if not isinstance(idx, slice):
            raise TypeError("TimeSeries supports slice indexing only")
        return TimeSeries(self.timestamps[idx], self.values[idx], self.resolution)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.resolution is other.resolution
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
        )

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(self.timestamps, values, self.resolution)

    def blocks(self) -> list[tuple[int, int]]:
        """Half-open ``(start, stop)`` index ranges of contiguous runs.

        A run ends wherever the spacing to the next sample differs from the
        declared resolution.
        """
        if len(self) == 0:
            return []
        breaks = np.flatnonzero(np.diff(self.timestamps) != self.resolution.step) + 1
        edges = np.concatenate(([0], breaks, [len(self)]))
        return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass(frozen=True)
class ScaleParams:
    x_min: float
    x_max: float

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise DegenerateRange(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")

    @property
    def span(self) -> float:
        return self.x_max - self.x_min

    def scale(self, x):
        return (np.asarray(x, dtype=np.float64) - self.x_min) / self.span

    def unscale(self, y):
        return np.asarray(y, dtype=np.float64) * self.span + self.x_min

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max}

    @classmethod
    def from_dict(cls, d: dict) -> "ScaleParams":
        return cls(float(d["x_min"]), float(d["x_max"]))


@dataclass(frozen=True, eq=False)
class PatternSet:
    """Supervised sliding-window pairs.

    ``inputs`` is S x n, ``targets`` is S x m. ``target_times`` carries the
    timestamp of each pattern's first target and ``source_index`` the index
    of its first input sample in the series it was cut from; both are
    optional for hand-built sets.
    """

    inputs: np.ndarray
    targets: np.ndarray
    target_times: Optional[np.ndarray] = None
    source_index: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        D = np.asarray(self.targets, dtype=np.float64)
        if D.ndim == 1:
            D = D[:, None]
        if X.ndim != 2 or D.ndim != 2 or X.shape[0] != D.shape[0]:
            raise ValueError(f"inputs {X.shape} and targets {D.shape} do not pair up")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", D)

    @property
    def S(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def n(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def m(self) -> int:
        return int(self.targets.shape[1])

    def __len__(self) -> int:
        return self.S

    def take(self, idx) -> "PatternSet":
        return PatternSet(
            self.inputs[idx],
            self.targets[idx],
            None if self.target_times is None else self.target_times[idx],
            None if self.source_index is None else self.source_index[idx],
        )


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------


def _parse_timestamp(text: str) -> dt.datetime:
    stamp = dt.datetime.fromisoformat(text.strip())
    if stamp.tzinfo is not None:
        raise ValueError("timezone offsets are not supported; use local time")
    if stamp.second or stamp.microsecond:
        raise ValueError("timestamps must have minute resolution")
    return stamp


def parse_csv(
    path: "str | Path",
    resolution: "Resolution | str" = Resolution.FIVE_MINUTE,
    capacity_mw: Optional[float] = PLANT_CAPACITY_MW,
) -> TimeSeries:
    """Read a ``timestamp,power_mw`` CSV into a :class:`TimeSeries`.

    Rows are validated one by one and the first offending line is reported
    with its 1-based line number. Pass ``capacity_mw=None`` to skip the
    upper bound check.
    """
    resolution = Resolution.parse(resolution)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")

    stamps: list[dt.datetime] = []
    values: list[float] = []
    step = dt.timedelta(minutes=resolution.minutes)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if header is None:
                header = tuple(c.strip().lower() for c in row)
                if header != CSV_HEADER:
                    raise MalformedRow(line, f"expected header 'timestamp,power_mw', got {','.join(row)!r}")
                continue
            if len(row) != 2:
                raise MalformedRow(line, f"expected 2 fields, got {len(row)}")
            try:
                stamp = _parse_timestamp(row[0])
            except ValueError as exc:
                raise MalformedRow(line, f"bad timestamp {row[0]!r} ({exc})") from None
            try:
                power = float(row[1])
            except ValueError:
                raise MalformedRow(line, f"bad power value {row[1]!r}") from None
            if not math.isfinite(power):
                raise MalformedRow(line, f"non-finite power value {row[1]!r}")
            if power < 0:
                raise MalformedRow(line, f"negative power {power}")
            if capacity_mw is not None and power > capacity_mw:
                raise MalformedRow(line, f"power {power} exceeds plant capacity {capacity_mw} MW")
            if stamps:
                gap = stamp - stamps[-1]
                if gap <= dt.timedelta(0):
                    raise NonMonotonicTimestamps(f"line {line}: {stamp.isoformat()} does not follow {stamps[-1].isoformat()}")
                if gap < step:
                    raise MalformedRow(line, f"spacing {gap} is finer than the declared {resolution.label} resolution")
            stamps.append(stamp)
            values.append(power)

    if not stamps:
        raise EmptyFile(f"{path} contains no data rows")
    return TimeSeries(np.array(stamps, dtype="datetime64[m]"), np.array(values), resolution)


def write_csv(ts: TimeSeries, path: "str | Path") -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for stamp, value in zip(ts.timestamps.astype(str), ts.values.tolist()):
            writer.writerow((stamp, repr(value)))
    return path


def concat(series: Iterable[TimeSeries]) -> TimeSeries:
    """Join chronologically ordered series of the same resolution."""
    series = list(series)
    if not series:
        raise EmptyResult("nothing to concatenate")
    res = series[0].resolution
    if any(s.resolution is not res for s in series):
        raise WrongResolution("cannot concatenate series of differing resolution")
    return TimeSeries(
        np.concatenate([s.timestamps for s in series]),
        np.concatenate([s.values for s in series]),
        res,
    )


# ---------------------------------------------------------------------------
# Windows and resampling
# ---------------------------------------------------------------------------


def _months(ts: np.ndarray) -> np.ndarray:
    return ts.astype("datetime64[M]").astype(np.int64) % 12 + 1


def _minute_of_day(ts: np.ndarray) -> np.ndarray:
    return (ts - ts.astype("datetime64[D]")).astype(np.int64)


def filter_season(ts: TimeSeries, window: "SeasonWindow | Season | str") -> TimeSeries:
    """Keep samples inside the window's months and daylight hours (inclusive)."""
    if not isinstance(window, SeasonWindow):
        window = Season.parse(window).window
    minute = _minute_of_day(ts.timestamps)
    keep = (
        np.isin(_months(ts.timestamps), sorted(window.months))
        & (minute >= window.start_minute)
        & (minute <= window.end_minute)
    )
    if not keep.any():
        raise EmptyResult(f"no samples fall inside the {window.season.value} window")
    return TimeSeries(ts.timestamps[keep], ts.values[keep], ts.resolution)


def resample_hourly(ts: TimeSeries) -> TimeSeries:
    """Average 5-minute samples into clock hours stamped at the hour start."""
    if ts.resolution is not Resolution.FIVE_MINUTE:
        raise WrongResolution(f"resample_hourly needs 5-minute input, got {ts.resolution.label}")
    hours = ts.timestamps.astype("datetime64[h]")
    starts = np.flatnonzero(np.concatenate(([True], hours[1:] != hours[:-1])))
    sums = np.add.reduceat(ts.values, starts) if len(ts) else np.empty(0)
    counts = np.diff(np.concatenate((starts, [len(ts)])))
    return TimeSeries(hours[starts].astype("datetime64[m]"), sums / counts, Resolution.ONE_HOUR)


# ---------------------------------------------------------------------------
# Scaling
# ---------------------------------------------------------------------------


def fit_scale(ts: "TimeSeries | np.ndarray") -> ScaleParams:
    values = ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=np.float64)
    if values.size == 0:
        raise InsufficientData("cannot fit scale parameters on an empty series")
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        raise DegenerateRange(f"series is constant at {lo}")
    return ScaleParams(lo, hi)


def apply_scale(ts: TimeSeries, sp: ScaleParams) -> TimeSeries:
    """Min-max map onto [0, 1]; values outside the fitted range are not clamped."""
    return ts.with_values(sp.scale(ts.values))


def invert_scale(ts: TimeSeries, sp: ScaleParams) -> TimeSeries:
    return ts.with_values(sp.unscale(ts.values))


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------


def make_patterns(ts: TimeSeries, n: int = 5, m: int = 1) -> PatternSet:
    """Stride-1 sliding windows that never cross a gap in the series."""
    if n < 1 or m < 1:
        raise ValueError("window length n and output count m must be positive")
    width = n + m
    starts = []
    for a, b in ts.blocks():
        if b - a >= width:
            starts.append(np.arange(a, b - width + 1))
    if not starts:
        raise InsufficientData(f"no contiguous block holds the {width} samples one pattern needs")
    start = np.concatenate(starts)
    idx = start[:, None] + np.arange(width)[None, :]
    windows = ts.values[idx]
    return PatternSet(
        inputs=windows[:, :n],
        targets=windows[:, n:],
        target_times=ts.timestamps[start + n],
        source_index=start,
    )


def split_count(S: int, train_fraction: float) -> int:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    # rounding guards against 0.29 * 100 == 28.999999999999996
    return int(math.floor(round(train_fraction * S, 9)))


def split_patterns(ps: PatternSet, train_fraction: float = 0.8) -> tuple[PatternSet, PatternSet]:
    """Chronological split: first floor(fraction * S) patterns train."""
    k = split_count(ps.S, train_fraction)
    if k == 0 or k == ps.S:
        raise EmptySplit(f"a {train_fraction} split of {ps.S} patterns leaves one side empty")
    return ps.take(slice(0, k)), ps.take(slice(k, None))


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

# mean cloudiness offset per season; larger = clearer skies
_CLEARNESS = {Season.SUMMER: 1.6, Season.RAINY: 0.7, Season.WINTER: 1.2}


def _season_days(season: Season, days: int) -> list[dt.date]:
    months = season.window.months
    out = []
    day = _SEASON_FIRST_DAY[season]
    while len(out) < days:
        if day.month in months:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def _smooth_noise(rng: np.random.Generator, size: int, corr_steps: float) -> np.ndarray:
    """Unit-variance smooth noise: white noise through two AR(1) low-pass stages."""
    phi = math.exp(-1.0 / corr_steps)
    x = rng.standard_normal(size)
    for _ in range(2):
        x, _ = lfilter([1.0 - phi], [1.0, -phi], x, zi=[phi * x[0]])
    return (x - x.mean()) / x.std()


def generate_synthetic(
    days: int,
    season: "Season | str",
    seed: int,
    clouds: bool = True,
    capacity_mw: float = PLANT_CAPACITY_MW,
) -> TimeSeries:
    """Seeded stand-in for a season of 5-minute plant output.

    Each day follows a half-sine clear-sky curve spanning the season's
    daylight window with ``capacity_mw`` at its midpoint, multiplied by a
    smooth attenuation in [0.2, 1] built from a slow (synoptic) and a fast
    (passing cloud) low-pass noise component. Night samples are zero. With
    ``clouds=False`` the attenuation is identically one.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    season = Season.parse(season)
    window = season.window
    rng = np.random.default_rng(seed)

    dates = _season_days(season, days)
    per_day = 24 * 60 // Resolution.FIVE_MINUTE.minutes
    day0 = np.array(dates, dtype="datetime64[D]").astype("datetime64[m]")
    offsets = np.arange(per_day) * Resolution.FIVE_MINUTE.minutes
    stamps = (day0[:, None] + offsets[None, :].astype("timedelta64[m]")).ravel()

    phase = (offsets - window.start_minute) / (window.end_minute - window.start_minute)
    clear = np.where((phase >= 0) & (phase <= 1), np.sin(np.pi * np.clip(phase, 0, 1)), 0.0)
    clear = np.tile(clear, len(dates))

    if clouds:
        total = clear.size
        slow = _smooth_noise(rng, total, corr_steps=72.0)  # ~6 h
        fast = _smooth_noise(rng, total, corr_steps=6.0)  # ~30 min
        drive = _CLEARNESS[season] + 1.4 * slow + 0.6 * fast
        atten = 0.2 + 0.8 / (1.0 + np.exp(-2.0 * drive))
    else:
        atten = np.ones_like(clear)
    power = np.clip(capacity_mw * clear * atten, 0.0, capacity_mw)
    return TimeSeries(stamps, power, Resolution.FIVE_MINUTE)


def season_series(
    raw: TimeSeries, season: "Season | str", resolution: "Resolution | str"
) -> TimeSeries:
    """Season filter followed by hourly averaging when ``resolution`` is 1 h."""
    resolution = Resolution.parse(resolution)
    out = filter_season(raw, season)
    if resolution is Resolution.ONE_HOUR and out.resolution is Resolution.FIVE_MINUTE:
        out = resample_hourly(out)
    elif resolution is not out.resolution:
        raise WrongResolution(f"cannot derive {resolution.label} data from {out.resolution.label} input")
    return out


def training_prefix(ts: TimeSeries, n: int, m: int, train_fraction: float) -> TimeSeries:
    """The chronological prefix of ``ts`` consumed by the training patterns."""
    ps = make_patterns(ts, n, m)
    k = split_count(ps.S, train_fraction)
    if k == 0 or k == ps.S:
        raise EmptySplit(f"a {train_fraction} split of {ps.S} patterns leaves one side empty")
    stop = int(ps.source_index[k - 1]) + n + m
    return ts[0:stop]


__all__: Sequence[str] = (
    "PLANT_CAPACITY_MW",
    "PatternSet",
    "Resolution",
    "ScaleParams",
    "Season",
    "SeasonWindow",
    "SEASON_WINDOWS",
    "TimeSeries",
    "apply_scale",
    "concat",
    "filter_season",
    "fit_scale",
    "generate_synthetic",
    "invert_scale",
    "make_patterns",
    "parse_csv",
    "resample_hourly",
    "season_series",
    "split_patterns",
    "training_prefix",
    "write_csv",
)
