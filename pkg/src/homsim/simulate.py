"""Monte Carlo engine: pulsed emission, splitter routing with pairwise
two-photon interference, losses, timing jitter, dark counts, dead time.

Randomness comes from counter-based generators with a fixed number of
words consumed per pulse, so any pulse range can be generated
independently: results are identical for every chunking and worker count.
Streams are keyed (seed, stream_id) with stream 1/2 = emission of source
1/2, 3 = circuit decisions, 4/5 = dark counts of channel 0/1.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from .interfere import InterferenceKernelParams, kernel_params
from .model import (
    HBAR_UEV_PS,
    CircuitSpec,
    ConfigurationError,
    DetectorSpec,
    EmitterSpec,
    PulseTrainSpec,
    ValidationError,
)

_EMIT_WORDS = 8  # per pulse: emit, component, decay, double, double-decay,
#                  freq offset, blink, double freq offset
_CIRCUIT_WORDS = 20  # per pulse: 4 photon slots x (survival, route, output
#                      loss, jitter) + pair draw + assignment draw + 2 spare
_STREAM_CIRCUIT = 3
_STREAM_DARK0 = 4
_STREAM_DARK1 = 5
_CHUNK_PULSES = 1 << 16


@dataclass(frozen=True)
class PhotonEvent:
    """One emitted photon.

    emit_time_ps is absolute (pulse start + per-source delay + decay draw);
    component records which decay branch produced it; freq_offset_uev is
    the quasi-static per-photon frequency offset (0 with spectral
    diffusion off).
    """

    source_id: int
    pulse_index: int
    emit_time_ps: float
    component: str
    freq_offset_uev: float = 0.0


@dataclass(frozen=True)
class TimeTagStream:
    """Detector output: channel/time records sorted by time.

    times_ps are integer picoseconds (resolution 1 ps); channels are 0/1.
    seed and config_digest carry provenance when produced by a simulation.
    """

    times_ps: np.ndarray
    channels: np.ndarray
    resolution_ps: int = 1
    seed: int | None = None
    config_digest: str | None = None

    def __post_init__(self) -> None:
        if self.times_ps.size != self.channels.size:
            raise ValidationError("times and channels must have equal length")
        if self.times_ps.size:
            if np.any(np.diff(self.times_ps) < 0):
                raise ValidationError("time tags must be sorted ascending")
            if np.any((self.channels != 0) & (self.channels != 1)):
                raise ValidationError("channels must be 0 or 1")

    @property
    def n_records(self) -> int:
        return int(self.times_ps.size)

    @property
    def span_ps(self) -> int:
        return int(self.times_ps[-1] - self.times_ps[0]) if self.n_records else 0


@dataclass(frozen=True)
class SimulationCounters:
    """Exact bookkeeping of every generated and recorded event."""

    photons_emitted: int
    photons_detected: int
    dark_counts: int
    dead_time_pruned: int
    pairs_interfered: int
    tags_written: int

    def as_dict(self) -> dict:
        return {
            "photons_emitted": self.photons_emitted,
            "photons_detected": self.photons_detected,
            "dark_counts": self.dark_counts,
            "dead_time_pruned": self.dead_time_pruned,
            "pairs_interfered": self.pairs_interfered,
            "tags_written": self.tags_written,
        }


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


def _stream_words(seed: int, stream_id: int, p0: int, n: int, width: int) -> np.ndarray:
    """Uniform words for pulses [p0, p0+n), shape (n, width).

    width must be a multiple of 4 so pulse boundaries align with the
    4-word counter blocks of the generator.
    """
    bitgen = Philox(key=[seed, stream_id])
    if p0:
        bitgen.advance(p0 * width // 4)
    return Generator(bitgen).random((n, width))


def _gauss_from_uniform(u: np.ndarray) -> np.ndarray:
    return ndtri(np.maximum(u, 2.0**-55))


def _blink_gate(emitter: EmitterSpec, train: PulseTrainSpec, seed: int, stream_id: int):
    """Per-pulse on/off gate of the two-state telegraph, or None if static."""
    k_on = emitter.blink_on_rate_per_s
    k_off = emitter.blink_off_rate_per_s
    if k_on == 0.0 and k_off == 0.0:
        return None
    k_tot = k_on + k_off
    pi_on = k_on / k_tot
    decay = np.exp(-k_tot * train.period_ps * 1e-12)
    p_on_on = pi_on + (1.0 - pi_on) * decay
    p_off_on = pi_on * (1.0 - decay)
    n = train.n_pulses
    gate = np.empty(n, dtype=bool)
    state = False
    for p0 in range(0, n, _CHUNK_PULSES):
        p1 = min(p0 + _CHUNK_PULSES, n)
        u = _stream_words(seed, stream_id, p0, p1 - p0, _EMIT_WORDS)[:, 6]
        for i, uv in enumerate(u, start=p0):
            if i == 0:
                state = uv < pi_on
            else:
                state = uv < (p_on_on if state else p_off_on)
            gate[i] = state
    return gate


def _emission_columns(
    emitter: EmitterSpec,
    train: PulseTrainSpec,
    source_id: int,
    seed: int,
    p0: int,
    p1: int,
    gate=None,
):
    """Column arrays for pulses [p0, p1): primary and extra photon slots."""
    n = p1 - p0
    u = _stream_words(seed, source_id, p0, n, _EMIT_WORDS)
    delay = train.source_delay_ps if source_id == 2 else 0.0
    start = (np.arange(p0, p1, dtype=np.float64)) * train.period_ps + delay
    has_a = u[:, 0] < emitter.emission_prob
    if gate is not None:
        has_a &= gate[p0:p1]
    slow = u[:, 1] < emitter.slow_fraction
    tau = np.where(slow, emitter.t1_slow_ps, emitter.t1_fast_ps)
    t_a = start - np.log1p(-u[:, 2]) * tau
    has_b = has_a & (u[:, 3] < emitter.double_prob)
    t_b = start - np.log1p(-u[:, 4]) * emitter.t1_slow_ps
    sd = emitter.spectral_diffusion_sigma_uev
    if sd > 0.0:
        f_a = sd * _gauss_from_uniform(u[:, 5])
        f_b = sd * _gauss_from_uniform(u[:, 7])
    else:
        f_a = np.zeros(n)
        f_b = np.zeros(n)
    return {
        "has_a": has_a,
        "t_a": t_a,
        "slow_a": slow,
        "f_a": f_a,
        "has_b": has_b,
        "t_b": t_b,
        "f_b": f_b,
    }


def generate_emission_stream(
    emitter: EmitterSpec, train: PulseTrainSpec, source_id: int, seed: int
) -> list[PhotonEvent]:
    """All photons a source emits over the pulse train, sorted by time.

    Per pulse (with the blinking gate on): a primary photon with
    probability emission_prob whose decay time mixes the fast and slow
    branches, plus — with probability double_prob — one extra photon from
    the slow branch in the same cycle. Deterministic for fixed
    (seed, source_id).
    """
    if source_id not in (1, 2):
        raise ValidationError("source_id must be 1 or 2")
    gate = _blink_gate(emitter, train, seed, source_id)
    events: list[PhotonEvent] = []
    for p0 in range(0, train.n_pulses, _CHUNK_PULSES):
        p1 = min(p0 + _CHUNK_PULSES, train.n_pulses)
        col = _emission_columns(emitter, train, source_id, seed, p0, p1, gate)
        pulses = np.arange(p0, p1)
        for idx in np.flatnonzero(col["has_a"]):
            events.append(
                PhotonEvent(
                    source_id=source_id,
                    pulse_index=int(pulses[idx]),
                    emit_time_ps=float(col["t_a"][idx]),
                    component="slow" if col["slow_a"][idx] else "fast",
                    freq_offset_uev=float(col["f_a"][idx]),
                )
            )
        for idx in np.flatnonzero(col["has_b"]):
            events.append(
                PhotonEvent(
                    source_id=source_id,
                    pulse_index=int(pulses[idx]),
                    emit_time_ps=float(col["t_b"][idx]),
                    component="slow",
                    freq_offset_uev=float(col["f_b"][idx]),
                )
            )
    events.sort(key=lambda e: (e.emit_time_ps, e.pulse_index))
    return events


def pair_interference_outcome(
    p1: PhotonEvent,
    p2: PhotonEvent,
    params: InterferenceKernelParams,
    u_pair: float,
    u_assign: float,
) -> tuple[int, int]:
    """Channels for one interfering photon pair.

    With tau the emission-time difference, the photons land on different
    channels with probability P_c = r^2 + t^2 - 2rt*D(tau) (D includes the
    pair's frequency offsets); otherwise both exit one uniformly drawn
    channel. Returns (channel of p1, channel of p2).
    """
    if p1.source_id == p2.source_id:
        raise ValidationError("interfering photons must come from different sources")
    if p1.pulse_index != p2.pulse_index:
        raise ValidationError("interfering photons must share a pulse cycle")
    a, b = (p1, p2) if p1.source_id == 1 else (p2, p1)
    tau = a.emit_time_ps - b.emit_time_ps
    delta_eff = params.delta_rad_ps + (a.freq_offset_uev - b.freq_offset_uev) / HBAR_UEV_PS
    d = (
        params.overlap
        * np.cos(delta_eff * tau)
        * np.exp(-abs(tau) * (params.gstar1 + params.gstar2))
    )
    r = params.reflectance
    t = 1.0 - r
    p_cross = r * r + t * t - 2.0 * r * t * d
    if u_pair < p_cross:
        both_bar = u_assign < (r * r) / (r * r + t * t)
        ch_a, ch_b = (0, 1) if both_bar else (1, 0)
    else:
        ch = 0 if u_assign < 0.5 else 1
        ch_a = ch_b = ch
    return (ch_a, ch_b) if p1.source_id == 1 else (ch_b, ch_a)


def _order_slots(col):
    """Reorder each pulse's two slots so slot a holds the earlier photon."""
    both = col["has_a"] & col["has_b"]
    swap = both & (col["t_b"] < col["t_a"])
    only_b = col["has_b"] & ~col["has_a"]
    move = swap | only_b
    t_a = np.where(move, col["t_b"], col["t_a"])
    t_b = np.where(swap, col["t_a"], col["t_b"])
    f_a = np.where(move, col["f_b"], col["f_a"])
    f_b = np.where(swap, col["f_a"], col["f_b"])
    has_a = col["has_a"] | col["has_b"]
    has_b = both
    return has_a, t_a, f_a, has_b, t_b, f_b


def _route_chunk(
    p0: int,
    col1,
    col2,
    circuit: CircuitSpec,
    det: DetectorSpec,
    kparams: InterferenceKernelParams | None,
    seed: int,
):
    """Route one pulse chunk through the splitter; returns tags + counters."""
    n = col1["has_a"].size
    u = _stream_words(seed, _STREAM_CIRCUIT, p0, n, _CIRCUIT_WORDS)
    h1a, t1a, f1a, h1b, t1b, f1b = _order_slots(col1)
    h2a, t2a, f2a, h2b, t2b, f2b = _order_slots(col2)
    tin = circuit.arm_transmission
    eff = det.efficiency
    sv = [
        h1a & (u[:, 0] < tin[0] * eff),
        h1b & (u[:, 4] < tin[0] * eff),
        h2a & (u[:, 8] < tin[1] * eff),
        h2b & (u[:, 12] < tin[1] * eff),
    ]
    emitted = int(h1a.sum() + h1b.sum() + h2a.sum() + h2b.sum())
    n1 = sv[0].astype(np.int8) + sv[1]
    n2 = sv[2].astype(np.int8) + sv[3]
    paired = (n1 == 1) & (n2 == 1)
    r = circuit.reflectance
    t = circuit.transmittance

    # Channels for the four slots; -1 = not detected/absent.
    chan = [np.full(n, -1, dtype=np.int8) for _ in range(4)]
    times = [t1a, t1b, t2a, t2b]
    # Classical routing for every surviving photon not in an interfering pair.
    for s in range(4):
        free = sv[s] & ~paired
        bar = u[:, 4 * s + 1] < r
        if s < 2:
            chan[s][free] = np.where(bar[free], 0, 1)
        else:
            chan[s][free] = np.where(bar[free], 1, 0)

    pairs_interfered = int(paired.sum())
    if pairs_interfered:
        if kparams is None:
            raise ConfigurationError(
                "interference kernel parameters are required when photons "
                "from both sources can meet"
            )
        idx = np.flatnonzero(paired)
        s1_slot = np.where(sv[0][idx], 0, 1)
        s2_slot = np.where(sv[2][idx], 2, 3)
        ta = np.where(s1_slot == 0, t1a[idx], t1b[idx])
        fa = np.where(s1_slot == 0, f1a[idx], f1b[idx])
        tb = np.where(s2_slot == 2, t2a[idx], t2b[idx])
        fb = np.where(s2_slot == 2, f2a[idx], f2b[idx])
        tau = ta - tb
        delta_eff = kparams.delta_rad_ps + (fa - fb) / HBAR_UEV_PS
        d = (
            kparams.overlap
            * np.cos(delta_eff * tau)
            * np.exp(-np.abs(tau) * (kparams.gstar1 + kparams.gstar2))
        )
        p_cross = r * r + t * t - 2.0 * r * t * d
        u_pair = u[idx, 16]
        u_assign = u[idx, 17]
        cross = u_pair < p_cross
        both_bar = u_assign < (r * r) / (r * r + t * t)
        ch_a = np.where(cross, np.where(both_bar, 0, 1), np.where(u_assign < 0.5, 0, 1))
        ch_b = np.where(cross, 1 - ch_a, ch_a)
        rows = idx
        for s in (0, 1):
            sel = s1_slot == s
            chan[s][rows[sel]] = ch_a[sel].astype(np.int8)
        for s in (2, 3):
            sel = s2_slot == s
            chan[s][rows[sel]] = ch_b[sel].astype(np.int8)

    out_times = []
    out_chans = []
    tout = (tin[2], tin[3])
    sigma = det.irf_sigma_ps
    for s in range(4):
        present = chan[s] >= 0
        ch = chan[s][present]
        keep = u[present, 4 * s + 2] < np.where(ch == 0, tout[0], tout[1])
        ch = ch[keep]
        tt = times[s][present][keep]
        if sigma > 0.0:
            tt = tt + sigma * _gauss_from_uniform(u[present, 4 * s + 3][keep])
        out_times.append(tt)
        out_chans.append(ch)
    tt = np.concatenate(out_times)
    cc = np.concatenate(out_chans).astype(np.uint8)
    ti = np.rint(tt).astype(np.int64)
    ok = ti >= 0
    return ti[ok], cc[ok], emitted, int(ok.sum()), pairs_interfered


def _dark_counts(det: DetectorSpec, span_ps: float, seed: int):
    times = []
    chans = []
    for ch, stream in ((0, _STREAM_DARK0), (1, _STREAM_DARK1)):
        rng = Generator(Philox(key=[seed, stream]))
        mu = det.dark_rate_cps * span_ps * 1e-12
        n = int(rng.poisson(mu)) if mu > 0 else 0
        if n:
            t = np.rint(rng.uniform(0.0, span_ps, n)).astype(np.int64)
            times.append(t)
            chans.append(np.full(n, ch, dtype=np.uint8))
    if not times:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.uint8)
    return np.concatenate(times), np.concatenate(chans)


def _prune_dead_time(times: np.ndarray, channels: np.ndarray, dead_ps: float):
    if dead_ps <= 0 or times.size == 0:
        return np.ones(times.size, dtype=bool)
    keep = np.ones(times.size, dtype=bool)
    for ch in (0, 1):
        idx = np.flatnonzero(channels == ch)
        last = -np.inf
        for i in idx:
            if times[i] - last < dead_ps:
                keep[i] = False
            else:
                last = times[i]
    return keep


def _merge_and_finalize(parts_t, parts_c, dark_t, dark_c, det, seed, counters):
    emitted, detected, pairs = counters
    times = np.concatenate(parts_t + [dark_t]) if parts_t else dark_t
    chans = np.concatenate(parts_c + [dark_c]) if parts_c else dark_c
    order = np.lexsort((chans, times))
    times = times[order]
    chans = chans[order]
    keep = _prune_dead_time(times, chans, det.dead_time_ps)
    pruned = int(keep.size - keep.sum())
    times = times[keep]
    chans = chans[keep]
    stream = TimeTagStream(times_ps=times, channels=chans, seed=seed)
    stats = SimulationCounters(
        photons_emitted=emitted,
        photons_detected=detected,
        dark_counts=int(dark_t.size),
        dead_time_pruned=pruned,
        pairs_interfered=pairs,
        tags_written=stream.n_records,
    )
    return stream, stats


def run_simulation(
    emitter1: EmitterSpec,
    emitter2: EmitterSpec,
    circuit: CircuitSpec,
    det: DetectorSpec,
    train: PulseTrainSpec,
    seed: int,
) -> tuple[TimeTagStream, SimulationCounters]:
    """Full two-source experiment: emission, interference, detection.

    Deterministic for fixed (specs, seed): chunk boundaries and worker
    count never change the output stream.
    """
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must fit in 64 bits")
    kparams = kernel_params(emitter1, emitter2, circuit)
    gate1 = _blink_gate(emitter1, train, seed, 1)
    gate2 = _blink_gate(emitter2, train, seed, 2)

    def work(p0: int):
        p1 = min(p0 + _CHUNK_PULSES, train.n_pulses)
        col1 = _emission_columns(emitter1, train, 1, seed, p0, p1, gate1)
        col2 = _emission_columns(emitter2, train, 2, seed, p0, p1, gate2)
        return _route_chunk(p0, col1, col2, circuit, det, kparams, seed)

    starts = list(range(0, train.n_pulses, _CHUNK_PULSES))
    workers = min(_worker_count(), max(len(starts), 1))
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, starts))
    else:
        results = [work(p0) for p0 in starts]
    parts_t = [res[0] for res in results]
    parts_c = [res[1] for res in results]
    emitted = sum(res[2] for res in results)
    detected = sum(res[3] for res in results)
    pairs = sum(res[4] for res in results)
    dark_t, dark_c = _dark_counts(det, train.span_ps, seed)
    return _merge_and_finalize(
        parts_t, parts_c, dark_t, dark_c, det, seed, (emitted, detected, pairs)
    )


def _events_to_columns(events, train: PulseTrainSpec, expect_source: int):
    n = train.n_pulses
    col = {
        "has_a": np.zeros(n, dtype=bool),
        "t_a": np.zeros(n),
        "f_a": np.zeros(n),
        "has_b": np.zeros(n, dtype=bool),
        "t_b": np.zeros(n),
        "f_b": np.zeros(n),
    }
    if not events:
        return col
    last_t = -np.inf
    for e in events:
        if e.emit_time_ps < last_t:
            raise ValidationError("event list must be sorted by emission time")
        last_t = e.emit_time_ps
        if e.source_id != expect_source:
            raise ValidationError(
                "all events on input port %d must come from source %d"
                % (expect_source, expect_source)
            )
        p = e.pulse_index
        if not 0 <= p < n:
            raise ValidationError("pulse_index %d outside the pulse train" % p)
        if not col["has_a"][p]:
            col["has_a"][p] = True
            col["t_a"][p] = e.emit_time_ps
            col["f_a"][p] = e.freq_offset_uev
        elif not col["has_b"][p]:
            col["has_b"][p] = True
            col["t_b"][p] = e.emit_time_ps
            col["f_b"][p] = e.freq_offset_uev
        else:
            raise ValidationError(
                "more than two photons in pulse %d from source %d"
                % (p, expect_source)
            )
    return col


def route_and_detect(
    events1,
    events2,
    circuit: CircuitSpec,
    det: DetectorSpec,
    train: PulseTrainSpec,
    seed: int,
    kernel: InterferenceKernelParams | None = None,
) -> TimeTagStream:
    """Convert two sorted emission-event lists into a detector tag stream.

    Surviving photons route through the splitter; whenever exactly one
    photon from each source survives in a pulse cycle, the pair interferes
    (kernel required in that case). Jitter, dark counts, and dead time are
    applied as configured.
    """
    if kernel is not None and abs(kernel.reflectance - circuit.reflectance) > 1e-12:
        raise ValidationError(
            "kernel reflectance %g disagrees with circuit reflectance %g"
            % (kernel.reflectance, circuit.reflectance)
        )
    col1 = _events_to_columns(events1, train, 1)
    col2 = _events_to_columns(events2, train, 2)
    parts_t = []
    parts_c = []
    emitted = detected = pairs = 0
    for p0 in range(0, train.n_pulses, _CHUNK_PULSES):
        p1 = min(p0 + _CHUNK_PULSES, train.n_pulses)
        sl = slice(p0, p1)
        c1 = {k: v[sl] for k, v in col1.items()}
        c2 = {k: v[sl] for k, v in col2.items()}
        tt, cc, em, dt, pr = _route_chunk(p0, c1, c2, circuit, det, kernel, seed)
        parts_t.append(tt)
        parts_c.append(cc)
        emitted += em
        detected += dt
        pairs += pr
    dark_t, dark_c = _dark_counts(det, train.span_ps, seed)
    stream, _ = _merge_and_finalize(
        parts_t, parts_c, dark_t, dark_c, det, seed, (emitted, detected, pairs)
    )
    return stream


def delayed_reference(train: PulseTrainSpec, delay_ps: float = 500.0) -> PulseTrainSpec:
    """The same pulse train with the intentional inter-source delay set."""
    return replace(train, source_delay_ps=delay_ps)
