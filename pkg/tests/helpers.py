"""Shared builders for the test suite.

Two reference emitters are used throughout: a short-coherence one
(T1 = 720 ps, T2 = 100 ps) and a long-coherence one (T1 = 600 ps,
T2 = 440 ps), both with a weak 12 ns slow decay component.
"""

from __future__ import annotations

import numpy as np

import homsim as hs


def make_emitter(
    energy_uev=0.0,
    t1_fast_ps=600.0,
    t1_slow_ps=12000.0,
    slow_fraction=0.0,
    t2_ps=440.0,
    emission_prob=0.5,
    **kw,
):
    return hs.EmitterSpec(
        energy_uev=energy_uev,
        t1_fast_ps=t1_fast_ps,
        t1_slow_ps=t1_slow_ps,
        slow_fraction=slow_fraction,
        t2_ps=t2_ps,
        emission_prob=emission_prob,
        **kw,
    )


def emitter_short_t2(**kw):
    base = dict(
        energy_uev=0.0,
        t1_fast_ps=720.0,
        t1_slow_ps=12000.0,
        slow_fraction=0.02,
        t2_ps=100.0,
        emission_prob=0.5,
    )
    base.update(kw)
    return hs.EmitterSpec(**base)


def emitter_long_t2(**kw):
    base = dict(
        energy_uev=0.0,
        t1_fast_ps=600.0,
        t1_slow_ps=12000.0,
        slow_fraction=0.012,
        t2_ps=440.0,
        emission_prob=0.5,
    )
    base.update(kw)
    return hs.EmitterSpec(**base)


def reference_circuit(**kw):
    base = dict(reflectance=0.48, pol_overlap=0.95)
    base.update(kw)
    return hs.CircuitSpec(**base)


def make_stream(times0, times1, resolution_ps=1):
    """Build a sorted two-channel TimeTagStream from per-channel times."""
    t0 = np.asarray(times0, dtype=np.int64)
    t1 = np.asarray(times1, dtype=np.int64)
    times = np.concatenate([t0, t1])
    chans = np.concatenate(
        [np.zeros(t0.size, dtype=np.uint8), np.ones(t1.size, dtype=np.uint8)]
    )
    order = np.lexsort((chans, times))
    return hs.TimeTagStream(
        times_ps=times[order], channels=chans[order], resolution_ps=resolution_ps
    )


def brute_force_histogram(stream, bin_width_ps, window_ps):
    """O(N*M) reference correlator: full pair enumeration, chunked.

    Counts ordered pairs (a in ch0, b in ch1) by tau = t_b - t_a into
    half-open bins covering [-window, +window).
    """
    t0 = stream.times_ps[stream.channels == 0].astype(np.float64)
    t1 = stream.times_ps[stream.channels == 1].astype(np.float64)
    n_bins = int(round(2.0 * window_ps / bin_width_ps))
    counts = np.zeros(n_bins, dtype=np.int64)
    for lo in range(0, t0.size, 512):
        block = t0[lo : lo + 512]
        tau = t1[None, :] - block[:, None]
        keep = (tau >= -window_ps) & (tau < window_ps)
        idx = np.floor((tau[keep] + window_ps) / bin_width_ps).astype(np.int64)
        idx = np.clip(idx, 0, n_bins - 1)
        counts += np.bincount(idx, minlength=n_bins)
    return counts


def poissonize(rng, y):
    return rng.poisson(np.clip(y, 0, None)).astype(float)


def scenario_dict(**overrides):
    """Full JSON-ready scenario; keyword overrides replace whole blocks."""
    emitter1 = {
        "energy_uev": 0.0,
        "t1_fast_ps": 720.0,
        "t1_slow_ps": 12000.0,
        "slow_fraction": 0.02,
        "t2_ps": 100.0,
        "emission_prob": 0.5,
        "double_prob": 0.0,
        "blink_on_rate_per_s": 0.0,
        "blink_off_rate_per_s": 0.0,
        "spectral_diffusion_sigma_uev": 0.0,
    }
    emitter2 = dict(
        emitter1, t1_fast_ps=600.0, t2_ps=440.0, slow_fraction=0.012
    )
    base = {
        "emitter1": emitter1,
        "emitter2": emitter2,
        "circuit": {
            "reflectance": 0.48,
            "pol_overlap": 0.95,
            "arm_transmission": [1.0, 1.0, 1.0, 1.0],
            "classical_visibility": None,
        },
        "detector": {
            "irf_fwhm_ps": 80.0,
            "dark_rate_cps": 300.0,
            "efficiency": 0.3,
            "dead_time_ps": 0.0,
        },
        "train": {
            "rep_rate_mhz": 76.0,
            "n_pulses": 100000,
            "source_delay_ps": 0.0,
        },
        "seed": 20260815,
    }
    base.update(overrides)
    return base
