"""Circular statistics and activity histograms of message timestamps.

Every timestamp is reduced to a position within a repeating period
(second of the minute, hour of the day, day of the month, ...). That
position becomes a phase on the unit circle, and the resulting sample is
summarised with circular moments.
"""

from __future__ import annotations

import calendar
import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Optional, Sequence

import numpy as np

SCALES = ("seconds", "minutes", "hours", "weekdays", "monthdays", "months")

# Numerical floor below which the first moment is treated as zero.
R1_EPS = 1e-12


class UndefinedMeanError(ArithmeticError):
    """Raised when the mean resultant vanishes; carries ``var == 1``."""

    def __init__(self, message: str, var: float = 1.0):
        super().__init__(message)
        self.var = var


def _utc(t: int) -> datetime:
    return datetime.fromtimestamp(int(t), tz=timezone.utc)


@dataclass(frozen=True)
class TimescaleSpec:
    """A repeating timescale.

    ``extract`` maps a timestamp to ``(measurement, period)``. The period is
    fixed for every scale except ``monthdays``, where it is the length of the
    calendar month the timestamp falls in.
    """

    name: str
    period: int
    n_bins: int
    first_label: int
    extract: Callable

    def measure(self, timestamps) -> tuple:
        """Vectorised extraction: returns ``(measurements, periods)`` as float arrays."""
        ts = np.asarray(timestamps, dtype=np.int64)
        if self.name == "seconds":
            return (ts % 60).astype(float), np.full(ts.shape, 60.0)
        if self.name == "minutes":
            return ((ts // 60) % 60).astype(float), np.full(ts.shape, 60.0)
        if self.name == "hours":
            return ((ts // 3600) % 24).astype(float), np.full(ts.shape, 24.0)
        if self.name == "weekdays":
            # 1970-01-01 was a Thursday (weekday 3, Monday = 0)
            return (((ts // 86400) + 3) % 7).astype(float), np.full(ts.shape, 7.0)
        days = (ts // 86400).astype("datetime64[D]")
        months = days.astype("datetime64[M]")
        if self.name == "months":
            return (months.astype(np.int64) % 12).astype(float), np.full(ts.shape, 12.0)
        if self.name == "monthdays":
            start = months.astype("datetime64[D]")
            length = (months + 1).astype("datetime64[D]") - start
            return (days - start).astype(np.int64).astype(float), length.astype(np.int64).astype(float)
        pairs = [self.extract(int(t)) for t in ts]
        m = np.array([p[0] for p in pairs], dtype=float)
        T = np.array([p[1] for p in pairs], dtype=float)
        return m, T


def _monthday(t: int):
    d = _utc(t)
    return d.day - 1, calendar.monthrange(d.year, d.month)[1]


TIMESCALES = {
    "seconds": TimescaleSpec("seconds", 60, 60, 0, lambda t: (int(t) % 60, 60)),
    "minutes": TimescaleSpec("minutes", 60, 60, 0, lambda t: ((int(t) // 60) % 60, 60)),
    "hours": TimescaleSpec("hours", 24, 24, 0, lambda t: ((int(t) // 3600) % 24, 24)),
    "weekdays": TimescaleSpec("weekdays", 7, 7, 0, lambda t: (_utc(t).weekday(), 7)),
    "monthdays": TimescaleSpec("monthdays", 31, 31, 1, _monthday),
    "months": TimescaleSpec("months", 12, 12, 1, lambda t: (_utc(t).month - 1, 12)),
}

WEEKDAY_LABELS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def get_scale(scale) -> TimescaleSpec:
    if isinstance(scale, TimescaleSpec):
        return scale
    try:
        return TIMESCALES[scale]
    except KeyError:
        raise ValueError(f"unknown timescale {scale!r}; expected one of {SCALES}") from None


@dataclass(frozen=True)
class CircularStats:
    m1: complex
    m2: complex
    R1: float
    R2: float
    theta_mu: float
    theta_mu_rescaled: float
    var: float
    std: float
    dispersion: float
    n: int


def phases(timestamps, scale) -> np.ndarray:
    spec = get_scale(scale)
    m, T = spec.measure(timestamps)
    return 2 * np.pi * m / T


def _mean(z: np.ndarray) -> complex:
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist())) / z.size


def circular_stats(timestamps, scale) -> CircularStats:
    """Circular moments, mean angle and dispersions of timestamps on a scale.

    The mean angle lies in (-pi, pi] and is rescaled back to scale units.
    For ``monthdays`` the rescaling uses the mean month length of the sample.

    Raises
    ------
    UndefinedMeanError
        If the first moment vanishes (perfectly balanced phases).
    """
    spec = get_scale(scale)
    ts = np.asarray(timestamps)
    if ts.size == 0:
        raise ValueError("circular statistics need at least one timestamp")
    m, T = spec.measure(ts)
    z = np.exp(1j * (2 * np.pi * m / T))
    # exactly rounded sums: the dispersion divides by R1^2, which is tiny for
    # near-uniform samples
    m1 = _mean(z)
    m2 = _mean(z * z)
    R1 = min(abs(m1), 1.0)
    R2 = min(abs(m2), 1.0)
    if R1 <= R1_EPS:
        raise UndefinedMeanError("mean resultant length is zero; mean angle undefined", var=1.0)
    theta_mu = math.atan2(m1.imag, m1.real)
    if theta_mu == -math.pi:
        theta_mu = math.pi
    period = float(T.mean())
    return CircularStats(
        m1=m1,
        m2=m2,
        R1=R1,
        R2=R2,
        theta_mu=theta_mu,
        theta_mu_rescaled=period / (2 * math.pi) * theta_mu,
        var=1.0 - R1,
        std=math.sqrt(max(-2.0 * math.log(R1), 0.0)),
        dispersion=(1.0 - R2) / (2.0 * R1 * R1),
        n=int(ts.size),
    )


@dataclass(frozen=True)
class ActivityHistogram:
    scale: TimescaleSpec
    counts: np.ndarray
    percentages: np.ndarray
    peak_ratio: Optional[float]

    @property
    def labels(self) -> list:
        return [self.scale.first_label + i for i in range(self.scale.n_bins)]

    @property
    def ratio_defined(self) -> bool:
        return self.peak_ratio is not None


def peak_ratio(counts) -> Optional[float]:
    """Highest over lowest bin count; None when any bin is empty."""
    counts = np.asarray(counts)
    lo = counts.min()
    if lo <= 0:
        return None
    return float(counts.max() / lo)


def activity_histogram(timestamps, scale) -> ActivityHistogram:
    spec = get_scale(scale)
    ts = np.asarray(timestamps)
    if ts.size == 0:
        raise ValueError("histogram needs at least one timestamp")
    m, _ = spec.measure(ts)
    counts = np.bincount(m.astype(int), minlength=spec.n_bins)
    pct = 100.0 * counts / counts.sum()
    return ActivityHistogram(spec, counts, pct, peak_ratio(counts))


def uniform_peak_ratios(n_draws: int = 20000, n_bins: int = 60, n_sims: int = 1000, seed=None) -> np.ndarray:
    """Peak ratios of ``n_sims`` histograms of uniform integer draws.

    Baseline for judging whether the seconds/minutes histograms of a real
    archive are flatter than chance.
    """
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_draws, np.full(n_bins, 1.0 / n_bins), size=n_sims)
    lo = counts.min(axis=1).astype(float)
    return np.where(lo > 0, counts.max(axis=1) / np.where(lo > 0, lo, 1), np.nan)


def grouped_histogram(histogram, group_widths: Sequence[int]) -> dict:
    """Roll bin percentages up into contiguous groups of each width.

    Returns ``{width: [percent per group]}``. Every width must divide the
    number of bins.
    """
    pct = np.asarray(getattr(histogram, "percentages", histogram), dtype=float)
    n = pct.size
    out = {}
    for w in group_widths:
        if w < 1 or n % w:
            raise ValueError(f"group width {w} does not divide {n} bins")
        out[w] = pct.reshape(n // w, w).sum(axis=1).tolist()
    return out


GROUP_WIDTHS = {
    "seconds": (1, 5, 10, 15, 30),
    "minutes": (1, 5, 10, 15, 30),
    "hours": (1, 2, 3, 4, 6, 12),
    "weekdays": (1, 7),
    "monthdays": (1, 31),
    "months": (1, 2, 3, 4, 6),
}


@dataclass(frozen=True)
class ActivityConcentration:
    hub_share: float
    q1_participants: float
    q1_coverage: float
    q3_participants: float
    q3_coverage: float
    last_decile_participants: float
    last_decile_coverage: float


def activity_concentration(authors: Sequence[str]) -> ActivityConcentration:
    """How concentrated message authorship is among participants.

    ``authors`` holds the author of each message (or pass a corpus). All
    values are fractions in [0, 1]:

    * ``hub_share``: share of messages sent by the most active participant;
    * ``q1_participants``: smallest share of participants, most active first,
      whose messages reach at least 25% of the total (``q3`` likewise, 75%);
    * ``last_decile_participants``: largest share of participants, least
      active first, whose messages stay at or below 10% of the total.
    """
    messages = getattr(authors, "messages", None)
    if messages is not None:
        authors = [m.author for m in messages]
    if len(authors) == 0:
        raise ValueError("activity concentration needs at least one message")
    _, counts = np.unique(np.asarray(authors, dtype=object), return_counts=True)
    total = counts.sum()
    n = counts.size
    desc = np.sort(counts)[::-1]
    cum = np.cumsum(desc)

    def cover(frac):
        idx = int(np.searchsorted(cum, frac * total, side="left"))
        return (idx + 1) / n, cum[idx] / total

    q1, q1c = cover(0.25)
    q3, q3c = cover(0.75)
    asc = np.cumsum(desc[::-1])
    n_low = int(np.searchsorted(asc, 0.10 * total, side="right"))
    low_cov = asc[n_low - 1] / total if n_low else 0.0
    return ActivityConcentration(
        hub_share=desc[0] / total,
        q1_participants=q1,
        q1_coverage=q1c,
        q3_participants=q3,
        q3_coverage=q3c,
        last_decile_participants=n_low / n,
        last_decile_coverage=low_cov,
    )


def write_histogram_csv(hist: ActivityHistogram, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["unit", "count", "percentage"])
        for label, c, p in zip(hist.labels, hist.counts, hist.percentages):
            writer.writerow([label, int(c), f"{p:.10g}"])
