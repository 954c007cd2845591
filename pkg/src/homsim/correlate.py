"""Time-tag cross-correlation, pulsed peak-area analysis, and visibility.

Builds the two-detector correlation histogram from sorted tag streams,
estimates the flat dark-count floor from inter-peak dead zones, integrates
the pulsed peak comb, and turns central-to-side peak ratios into the
two-photon interference visibility.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import ConfigurationError, EstimationError, ValidationError


def _as_times_channels(tags):
    """Accept a tag-stream object (times_ps/channels attributes) or a pair."""
    if hasattr(tags, "times_ps") and hasattr(tags, "channels"):
        return np.asarray(tags.times_ps), np.asarray(tags.channels)
    times, channels = tags
    return np.asarray(times), np.asarray(channels)


def _worker_count() -> int:
    env = os.environ.get("HOMSIM_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigurationError("HOMSIM_THREADS must be an integer") from exc
        if n < 1:
            raise ConfigurationError("HOMSIM_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class CorrelationHistogram:
    """Histogram of arrival-time differences t(ch b) - t(ch a).

    Bins are half-open [lo, hi), bin i covering
    [-window + i*bin_width, -window + (i+1)*bin_width); the bin count is
    2*window/bin_width and the grid is centered on zero delay.
    """

    bin_width_ps: float
    window_ps: float
    counts: np.ndarray
    total_pairs: int
    channel_pair: tuple[int, int] = (0, 1)

    def __post_init__(self) -> None:
        n = self.counts.size
        expected = 2.0 * self.window_ps / self.bin_width_ps
        if abs(n - expected) > 1e-9 or n % 2 != 0:
            raise ConfigurationError(
                "histogram needs an even bin count of 2*window/bin_width; "
                "got %d bins for window %g ps, bin %g ps"
                % (n, self.window_ps, self.bin_width_ps)
            )
        if np.any(self.counts < 0):
            raise ValidationError("histogram counts must be >= 0")

    @property
    def n_bins(self) -> int:
        return int(self.counts.size)

    @property
    def bin_edges_ps(self) -> np.ndarray:
        return -self.window_ps + self.bin_width_ps * np.arange(self.n_bins + 1)

    @property
    def bin_centers_ps(self) -> np.ndarray:
        return -self.window_ps + self.bin_width_ps * (np.arange(self.n_bins) + 0.5)

    def scaled(self, factor: float) -> "CorrelationHistogram":
        return CorrelationHistogram(
            bin_width_ps=self.bin_width_ps,
            window_ps=self.window_ps,
            counts=self.counts * factor,
            total_pairs=self.total_pairs,
            channel_pair=self.channel_pair,
        )


def _histogram_chunk(t0_chunk, times1, window, bin_width, n_bins):
    lo = np.searchsorted(times1, t0_chunk - window, side="left")
    hi = np.searchsorted(times1, t0_chunk + window, side="left")
    counts_per = hi - lo
    total = int(counts_per.sum())
    if total == 0:
        return np.zeros(n_bins, dtype=np.int64)
    starts = np.cumsum(counts_per) - counts_per
    flat = np.arange(total) - np.repeat(starts, counts_per) + np.repeat(lo, counts_per)
    tau = times1[flat] - np.repeat(t0_chunk, counts_per)
    idx = np.floor((tau + window) / bin_width).astype(np.int64)
    return np.bincount(idx, minlength=n_bins).astype(np.int64)


def cross_correlate(tags, bin_width_ps: float, window_ps: float) -> CorrelationHistogram:
    """Histogram all channel-0/channel-1 tag pairs with |t1 - t0| <= window.

    Pair delays tau = t(ch1) - t(ch0) in [-window, window) are binned on the
    half-open grid. Equivalent to brute-force pair enumeration; implemented
    as a sorted sweep, chunked over channel-0 tags (partial histograms sum,
    so the result is identical for any chunking or worker count).
    """
    if bin_width_ps < 1.0:
        raise ValidationError("bin_width_ps must be >= 1 ps")
    n_bins = int(round(2.0 * window_ps / bin_width_ps))
    if (
        window_ps <= 0
        or n_bins < 2
        or n_bins % 2 != 0
        or abs(n_bins * bin_width_ps - 2.0 * window_ps) > 1e-6
    ):
        raise ConfigurationError(
            "window_ps must be a positive even multiple of bin_width_ps"
        )
    times, channels = _as_times_channels(tags)
    times = np.asarray(times, dtype=np.float64)
    if times.size and np.any(np.diff(times) < 0):
        raise ValidationError("time tags must be sorted ascending")
    t0 = times[channels == 0]
    t1 = times[channels == 1]
    if t0.size == 0 or t1.size == 0:
        return CorrelationHistogram(
            bin_width_ps=float(bin_width_ps),
            window_ps=float(window_ps),
            counts=np.zeros(n_bins, dtype=np.int64),
            total_pairs=0,
        )
    span = float(times[-1] - times[0])
    if window_ps > span and (t0.size > 1 or t1.size > 1):
        raise ValidationError(
            "correlation window %g ps exceeds the data span %g ps" % (window_ps, span)
        )
    chunk = 1 << 14
    chunks = [t0[i : i + chunk] for i in range(0, t0.size, chunk)]
    workers = min(_worker_count(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(
                pool.map(
                    lambda c: _histogram_chunk(c, t1, window_ps, bin_width_ps, n_bins),
                    chunks,
                )
            )
    else:
        partials = [
            _histogram_chunk(c, t1, window_ps, bin_width_ps, n_bins) for c in chunks
        ]
    counts = np.sum(partials, axis=0, dtype=np.int64) if partials else np.zeros(n_bins, np.int64)
    return CorrelationHistogram(
        bin_width_ps=float(bin_width_ps),
        window_ps=float(window_ps),
        counts=counts,
        total_pairs=int(counts.sum()),
    )


def _peak_centers(window_ps, period_ps, delay_ps, k_values):
    return delay_ps + period_ps * np.asarray(k_values, dtype=float)


def _k_range(n_side: int) -> np.ndarray:
    if n_side < 2 or n_side % 2 != 0:
        raise ConfigurationError("n_side must be a positive even count of side peaks")
    half = n_side // 2
    return np.arange(-half, half + 1)


def estimate_background(
    hist: CorrelationHistogram,
    period_ps: float,
    delta_t_ps: float = 3000.0,
    delay_ps: float = 0.0,
    guard_bins: int = 1,
) -> float:
    """Mean counts/bin in the inter-peak dead zones (the flat dark floor).

    Dead-zone bins are those farther than delta_t/2 plus guard_bins bin
    widths from every peak center k*period + delay inside the window.
    """
    if period_ps <= 0:
        raise ValidationError("period_ps must be positive")
    if hist.window_ps < 1.5 * period_ps:
        raise ConfigurationError(
            "background estimation needs the window to cover >= 3 periods"
        )
    centers = hist.bin_centers_ps
    k_max = int(np.ceil((hist.window_ps + abs(delay_ps)) / period_ps)) + 1
    peak_pos = _peak_centers(hist.window_ps, period_ps, delay_ps, np.arange(-k_max, k_max + 1))
    dist = np.min(np.abs(centers[:, None] - peak_pos[None, :]), axis=1)
    dead = dist > (delta_t_ps / 2.0 + guard_bins * hist.bin_width_ps)
    if not np.any(dead):
        raise ConfigurationError(
            "no dead-zone bins between peaks; reduce delta_t_ps or enlarge window"
        )
    return float(np.mean(hist.counts[dead]))


@dataclass(frozen=True)
class PeakAnalysis:
    """Integrated pulsed-peak areas and the central-to-side-peak ratio.

    areas[i] belongs to the comb peak at k_values[i]*period + delay. The
    ratio g2_zero = central area / mean(side areas); its uncertainty
    combines the Poisson error of the central area with the standard
    deviation of the side-peak areas.
    """

    period_ps: float
    delta_t_ps: float
    delay_ps: float
    k_values: np.ndarray
    areas: np.ndarray
    area_errors: np.ndarray
    bins_per_peak: np.ndarray
    floor_per_bin: float
    g2_zero: float
    g2_zero_err: float
    corrected: bool

    @property
    def central_area(self) -> float:
        return float(self.areas[self.k_values == 0][0])

    @property
    def side_areas(self) -> np.ndarray:
        return self.areas[self.k_values != 0]


def integrate_peaks(
    hist: CorrelationHistogram,
    period_ps: float,
    delta_t_ps: float = 3000.0,
    n_side: int = 6,
    floor: float = 0.0,
    corrected: bool = False,
    delay_ps: float = 0.0,
) -> PeakAnalysis:
    """Integrate the pulse comb: central peak plus n_side side peaks total.

    area_k sums counts in bins whose centers lie within delta_t/2 of
    k*period + delay; when corrected, floor*bins_in_window is subtracted
    from each area. Poisson errors are taken on the raw (uncorrected)
    areas; the ratio error propagates the side-area standard deviation of
    the mean together with the central Poisson error.
    """
    if delta_t_ps <= 0:
        raise ValidationError("delta_t_ps must be positive")
    if delta_t_ps > period_ps:
        raise ConfigurationError(
            "integration window %g ps exceeds the period %g ps (peaks overlap)"
            % (delta_t_ps, period_ps)
        )
    ks = _k_range(n_side)
    outermost = np.max(np.abs(ks)) * period_ps + abs(delay_ps) + delta_t_ps / 2.0
    if outermost > hist.window_ps:
        raise ConfigurationError(
            "peak comb (outermost edge %g ps) does not fit in the +-%g ps window"
            % (outermost, hist.window_ps)
        )
    centers = hist.bin_centers_ps
    peak_pos = _peak_centers(hist.window_ps, period_ps, delay_ps, ks)
    raw = np.empty(ks.size, dtype=float)
    nbins = np.empty(ks.size, dtype=np.int64)
    for i, c in enumerate(peak_pos):
        mask = np.abs(centers - c) <= delta_t_ps / 2.0
        raw[i] = float(hist.counts[mask].sum())
        nbins[i] = int(mask.sum())
    errors = np.sqrt(raw)
    areas = raw - floor * nbins if corrected else raw.copy()
    side = areas[ks != 0]
    mean_side = float(np.mean(side))
    if mean_side <= 0:
        raise EstimationError("side-peak areas average to zero; cannot normalize")
    a0 = float(areas[ks == 0][0])
    sigma_a0 = float(errors[ks == 0][0])
    sigma_mean = float(np.std(side, ddof=1) / np.sqrt(side.size))
    g2 = a0 / mean_side
    g2_err = np.hypot(sigma_a0 / mean_side, a0 * sigma_mean / mean_side**2)
    return PeakAnalysis(
        period_ps=float(period_ps),
        delta_t_ps=float(delta_t_ps),
        delay_ps=float(delay_ps),
        k_values=ks,
        areas=areas,
        area_errors=errors,
        bins_per_peak=nbins,
        floor_per_bin=float(floor if corrected else 0.0),
        g2_zero=float(g2),
        g2_zero_err=float(g2_err),
        corrected=bool(corrected),
    )


def hom_visibility(g_delayed, g_synced, err_delayed: float = 0.0, err_synced: float = 0.0):
    """Interference visibility from the delayed and synchronized peak ratios.

    V = (g_d - g_s)/g_d, with the error propagated from both inputs.
    Accepts floats or PeakAnalysis objects (whose own errors are then used).
    Returns (V, V_err).
    """
    if hasattr(g_delayed, "g2_zero"):
        err_delayed = g_delayed.g2_zero_err
        g_delayed = g_delayed.g2_zero
    if hasattr(g_synced, "g2_zero"):
        err_synced = g_synced.g2_zero_err
        g_synced = g_synced.g2_zero
    if g_delayed <= 0:
        raise ValidationError("delayed-reference ratio must be > 0")
    if g_synced < 0:
        raise ValidationError("synchronized ratio must be >= 0")
    v = (g_delayed - g_synced) / g_delayed
    v_err = np.hypot(
        g_synced * err_delayed / g_delayed**2, err_synced / g_delayed
    )
    return float(v), float(v_err)


@dataclass(frozen=True)
class Timetrace:
    """Histogram of tag times folded by the pulse period."""

    bin_width_ps: float
    period_ps: float
    counts: np.ndarray
    channel: int | None = None

    @property
    def n_bins(self) -> int:
        return int(self.counts.size)

    @property
    def bin_centers_ps(self) -> np.ndarray:
        return self.bin_width_ps * (np.arange(self.n_bins) + 0.5)


def timetrace(tags, train, bin_width_ps: float = 20.0, channel: int | None = None) -> Timetrace:
    """Fold tag times modulo the pulse period into a decay histogram."""
    if bin_width_ps <= 0:
        raise ValidationError("bin_width_ps must be positive")
    times, channels = _as_times_channels(tags)
    if channel is not None:
        times = times[channels == channel]
    period = train.period_ps
    n_bins = int(np.ceil(period / bin_width_ps))
    folded = np.mod(np.asarray(times, dtype=np.float64), period)
    idx = np.minimum(np.floor(folded / bin_width_ps).astype(np.int64), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins).astype(np.int64)
    return Timetrace(
        bin_width_ps=float(bin_width_ps),
        period_ps=float(period),
        counts=counts,
        channel=channel,
    )


def estimate_delay(trace_a, trace_b) -> float:
    """Delay of trace B relative to trace A via circular cross-correlation.

    The integer-bin peak of the circular correlation is refined by
    parabolic interpolation; the result is mapped to (-period/2, period/2].
    Structureless (flat) traces raise an estimation error.
    """
    if hasattr(trace_a, "counts"):
        bw = trace_a.bin_width_ps
        if hasattr(trace_b, "bin_width_ps") and trace_b.bin_width_ps != bw:
            raise ValidationError("traces must share the same bin width")
        a = np.asarray(trace_a.counts, dtype=float)
        b = np.asarray(trace_b.counts, dtype=float)
    else:
        bw = 1.0
        a = np.asarray(trace_a, dtype=float)
        b = np.asarray(trace_b, dtype=float)
    if a.size != b.size:
        raise ValidationError("traces must cover the same period with equal bins")
    if a.size < 4:
        raise ValidationError("traces too short for delay estimation")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise EstimationError("flat trace: no structure to estimate a delay from")
    a = a - a.mean()
    b = b - b.mean()
    corr = np.fft.irfft(np.conj(np.fft.rfft(a)) * np.fft.rfft(b), n=a.size)
    k = int(np.argmax(corr))
    n = a.size
    y0, y1, y2 = corr[(k - 1) % n], corr[k], corr[(k + 1) % n]
    denom = y0 - 2.0 * y1 + y2
    frac = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    shift = k + frac
    if shift > n / 2.0:
        shift -= n
    return float(shift * bw)
