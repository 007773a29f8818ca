"""Synthetic Wi-Fi session logs with known occupancy.

Visits arrive per AP per hour as a Poisson count (optionally gamma-mixed for
over-dispersion), start uniformly within the hour and last an exponential
dwell time.  Hourly arrival intensities are solved so that the expected
number of distinct devices seen in each hour equals the profile's daily
shape, carry-over from earlier hours included.  Ground truth is produced by
:func:`occucast.ingest.count_occupancy` on the generated records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError
from .ingest import SCALES, OccupancySeries, Scope, SessionRecord, count_occupancy, format_sessions, write_series

DAY = 86400
HOUR = 3600
# 2016-01-15 00:00 UTC, first day of the six-week campus capture
DEFAULT_START = 1452816000


@dataclass(frozen=True, eq=False)
class BuildingProfile:
    ap_count: int
    days: int
    daily_shape: np.ndarray  # (24,) shared, or (ap_count, 24)
    weekend_scale: float = 0.3
    session_mean_minutes: float = 45.0
    noise: float = 0.0
    seed: int = 0
    start: int = DEFAULT_START
    ap_prefix: str = "AP"

    def __post_init__(self):
        if self.ap_count < 1:
            raise DataError("profile needs at least one access point")
        if self.days < 1:
            raise DataError("profile needs at least one day")
        shape = np.asarray(self.daily_shape, dtype=float)
        if shape.shape == (24,):
            shape = np.tile(shape, (self.ap_count, 1))
        if shape.shape != (self.ap_count, 24):
            raise DataError(f"daily_shape must be (24,) or ({self.ap_count}, 24), got {shape.shape}")
        if not np.all(np.isfinite(shape)) or shape.min() < 0:
            raise DataError("daily_shape must be finite and non-negative")
        if not 0.0 <= self.weekend_scale <= 1.0:
            raise DataError("weekend_scale must lie in [0, 1]")
        if not self.session_mean_minutes > 0:
            raise DataError("session_mean_minutes must be positive")
        if self.noise < 0:
            raise DataError("noise must be non-negative")
        if self.start % DAY:
            raise DataError("profile start must be a UTC midnight")
        object.__setattr__(self, "daily_shape", shape)

    @property
    def end(self) -> int:
        return self.start + self.days * DAY

    def ap_ids(self) -> list[str]:
        width = max(2, len(str(self.ap_count)))
        return [f"{self.ap_prefix}{k + 1:0{width}d}" for k in range(self.ap_count)]

    def hourly_targets(self) -> np.ndarray:
        """Expected distinct devices per AP per hour, shape (ap_count, days*24)."""
        weekend = np.array([datetime.fromtimestamp(self.start + d * DAY, timezone.utc).weekday() >= 5
                            for d in range(self.days)])
        day_scale = np.where(weekend, self.weekend_scale, 1.0)
        return (self.daily_shape[:, None, :] * day_scale[None, :, None]).reshape(self.ap_count, -1)


def bimodal_shape(morning: float = 30.0, afternoon: float = 24.0, night: float = 1.0) -> np.ndarray:
    """Campus-like weekday curve: late-morning and mid-afternoon peaks."""
    h = np.arange(24) + 0.5
    return (night + morning * np.exp(-0.5 * ((h - 10.5) / 1.8) ** 2)
            + afternoon * np.exp(-0.5 * ((h - 15.0) / 2.0) ** 2))


def _ap_shapes(ap_count: int, seed: int, base: np.ndarray) -> np.ndarray:
    rng = np.random.default_rng([seed, 1])
    peak = rng.uniform(0.5, 1.5, ap_count)
    shift = rng.integers(-1, 2, ap_count)
    return np.stack([np.roll(base, s) * p for s, p in zip(shift, peak)])


def default_profile(seed: int = 0, days: int = 42, ap_count: int = 18) -> BuildingProfile:
    """18 APs over six weeks with weekday peaks and damped weekends."""
    return BuildingProfile(ap_count, days, _ap_shapes(ap_count, seed, bimodal_shape()),
                           weekend_scale=0.3, session_mean_minutes=45.0, noise=0.05, seed=seed)


def benchmark_profile(seed: int = 0) -> BuildingProfile:
    """Reduced preset used by the acceptance benchmark."""
    return default_profile(seed=seed, days=28, ap_count=4)


def _still_present(lags: np.ndarray, mean_minutes: float) -> np.ndarray:
    """P(a visit arriving uniformly in hour j is present at the start of hour j+k)."""
    r = 60.0 / mean_minutes
    return (np.exp(-(lags - 1) * r) - np.exp(-lags * r)) / r


def arrival_rates(profile: BuildingProfile) -> np.ndarray:
    """Expected visits starting in each AP-hour, shape (ap_count, days*24)."""
    targets = profile.hourly_targets()
    horizon = int(math.ceil(40.0 * profile.session_mean_minutes / 60.0)) + 1
    carry_kernel = _still_present(np.arange(1, horizon + 1, dtype=float), profile.session_mean_minutes)
    rates = np.zeros_like(targets)
    for h in range(targets.shape[1]):
        k = min(h, horizon)
        carry = rates[:, h - k:h][:, ::-1] @ carry_kernel[:k] if k else 0.0
        rates[:, h] = np.maximum(targets[:, h] - carry, 0.0)
    return rates


def generate_sessions(profile: BuildingProfile) -> tuple[list[SessionRecord], dict[tuple[str, int], OccupancySeries]]:
    """Draw a session log and its ground-truth series.

    Returns the records sorted by start time and a mapping
    ``(scope string, scale_minutes) -> OccupancySeries`` for the building
    and every AP at 15, 30 and 60 minutes.
    """
    rng = np.random.default_rng(profile.seed)
    rates = arrival_rates(profile)
    hours = profile.start + HOUR * np.arange(rates.shape[1], dtype=np.int64)
    mean_seconds = profile.session_mean_minutes * 60.0

    rows = []
    for ap, ap_rates in zip(profile.ap_ids(), rates):
        lam = ap_rates
        if profile.noise > 0:
            k = 1.0 / profile.noise
            lam = lam * rng.gamma(k, 1.0 / k, lam.shape)
        n = rng.poisson(lam)
        total = int(n.sum())
        starts = np.repeat(hours, n) + rng.integers(0, HOUR, total)
        durations = np.maximum(np.rint(rng.exponential(mean_seconds, total)), 1).astype(np.int64)
        rows.extend((int(s), int(d), ap) for s, d in zip(starts, durations))
    rows.sort()
    sessions = [SessionRecord(s, d, f"d{k:07d}", ap) for k, (s, d, ap) in enumerate(rows)]
    return sessions, ground_truth(sessions, profile)


def ground_truth(sessions: list[SessionRecord], profile: BuildingProfile) -> dict[tuple[str, int], OccupancySeries]:
    by_ap = {ap: [] for ap in profile.ap_ids()}
    for s in sessions:
        by_ap[s.ap_id].append(s)
    truth = {}
    for scale in SCALES:
        truth[("building", scale)] = count_occupancy(sessions, scale, Scope.building(),
                                                     profile.start, profile.end)
        for ap, group in by_ap.items():
            scope = Scope.access_point(ap)
            truth[(str(scope), scale)] = count_occupancy(group, scale, scope, profile.start, profile.end)
    return truth


def series_filename(scope: str, scale: int) -> str:
    """``building_15.csv`` or ``ap-<id>_15.csv``."""
    slug = "building" if scope == "building" else "ap-" + scope.split(":", 1)[1]
    return f"{slug}_{scale}.csv"


def write_dataset(out_dir, sessions: list[SessionRecord],
                  truth: dict[tuple[str, int], OccupancySeries]) -> list[Path]:
    """Write ``sessions.csv`` and ``series/<scope>_<scale>.csv``; returns paths written."""
    out = Path(out_dir)
    (out / "series").mkdir(parents=True, exist_ok=True)
    written = [out / "sessions.csv"]
    written[0].write_text(format_sessions(sessions))
    for (scope, scale), series in sorted(truth.items()):
        path = out / "series" / series_filename(scope, scale)
        write_series(series, path)
        written.append(path)
    return written
