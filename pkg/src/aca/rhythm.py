"""Novelty function, onset picking, tempo induction and beat tracking."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import scipy.signal

from .errors import DegenerateInputError, ParameterError
from .features import envelope_peak, rms
from .signal import RHYTHM_SPEC, AudioBuffer, BlockSpec, stft_magnitude
from .tonal.pitch import _acf_rows, _parabolic

__all__ = [
    "NoveltyCurve",
    "OnsetList",
    "TempoEstimate",
    "BeatGrid",
    "novelty",
    "novelty_from_feature",
    "pick_onsets",
    "tempo_acf",
    "tempo_comb",
    "tempo_ioi",
    "track_beats",
]

NoveltySource = Literal["envelope", "rms", "spectral_flux"]

COMB_FEEDBACK = 0.9
SNAP_FRACTION = 1.0 / 8.0
ADAPTATION_RATE = 0.1
HARMONIC_RATIO = 0.8


@dataclass(frozen=True)
class NoveltyCurve:
    """Non-negative novelty, one value per frame.

    Frame ``i`` sits at ``time_offset + i / frame_rate`` seconds.
    """

    values: np.ndarray
    frame_rate: float
    time_offset: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ParameterError("novelty values must be one-dimensional")
        if np.any(v < 0):
            raise ParameterError("novelty values must be non-negative")
        if not self.frame_rate > 0:
            raise ParameterError("frame_rate must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.time_offset + np.arange(len(self)) / self.frame_rate

    @property
    def duration(self) -> float:
        return self.time_offset + len(self) / self.frame_rate


@dataclass(frozen=True)
class OnsetList:
    times: np.ndarray
    strengths: np.ndarray

    def __len__(self):
        return self.times.shape[0]


@dataclass(frozen=True)
class TempoEstimate:
    bpm: float
    periodicity_strength: float
    candidates: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {
            "bpm": self.bpm,
            "periodicity_strength": self.periodicity_strength,
            "candidates": [{"bpm": b, "strength": s} for b, s in self.candidates],
        }


@dataclass(frozen=True)
class BeatGrid:
    beat_times: np.ndarray
    bpm_track: np.ndarray


# --------------------------------------------------------------------------
# Novelty and onsets


def _smooth(x: np.ndarray, length: int) -> np.ndarray:
    """Centered raised-cosine weighted moving average (zero-phase, unit DC gain)."""
    if length <= 1:
        return x
    w = np.sin(np.pi * np.arange(1, length + 1) / (length + 1)) ** 2
    return np.convolve(x, w / w.sum(), mode="same")


def novelty_from_feature(values, frame_rate: float, time_offset: float = 0.0,
                         smoothing: int = 5) -> NoveltyCurve:
    """Difference over time, half-wave rectify, centered lowpass smoothing.

    The first frame has no predecessor and gets a difference of zero.
    """
    if smoothing < 1 or smoothing % 2 == 0:
        raise ParameterError(f"smoothing length must be an odd positive integer, got {smoothing}")
    x = np.asarray(values, dtype=np.float64)
    d = np.diff(x, prepend=x[:1]) if x.size else x
    return NoveltyCurve(np.maximum(_smooth(np.maximum(d, 0.0), smoothing), 0.0), frame_rate, time_offset)


def novelty(buffer: AudioBuffer, spec: BlockSpec = RHYTHM_SPEC,
            source: NoveltySource = "spectral_flux", smoothing: int = 5) -> NoveltyCurve:
    """Novelty function from the envelope, RMS or spectral flux.

    For ``spectral_flux`` the time difference and rectification are taken per
    bin before summing, ``sum_k max(|X(n, k)| - |X(n-1, k)|, 0)``; the result
    is then smoothed like the other sources.
    """
    if len(buffer) == 0:
        raise ParameterError("cannot compute novelty of an empty buffer")
    frame_rate = buffer.sample_rate / spec.hop_size
    offset = spec.block_size / 2 / buffer.sample_rate
    if source == "envelope":
        return novelty_from_feature(envelope_peak(buffer, spec).values[:, 0], frame_rate, offset, smoothing)
    if source == "rms":
        return novelty_from_feature(rms(buffer, spec).values[:, 0], frame_rate, offset, smoothing)
    if source == "spectral_flux":
        if smoothing < 1 or smoothing % 2 == 0:
            raise ParameterError(f"smoothing length must be an odd positive integer, got {smoothing}")
        mags = stft_magnitude(buffer, spec).magnitudes
        diff = np.diff(mags, axis=0, prepend=mags[:1])
        flux = np.maximum(diff, 0.0).sum(axis=1)
        return NoveltyCurve(np.maximum(_smooth(flux, smoothing), 0.0), frame_rate, offset)
    raise ParameterError(f"unknown novelty source {source!r}")


def _local_maxima(x: np.ndarray) -> np.ndarray:
    """Indices of strict-left / non-strict-right local maxima (first index of a plateau)."""
    if x.size == 0:
        return np.zeros(0, dtype=int)
    left = np.concatenate(([-np.inf], x[:-1]))
    right = np.concatenate((x[1:], [-np.inf]))
    return np.flatnonzero((x > left) & (x >= right))


def pick_onsets(curve: NoveltyCurve, threshold_ratio: float = 0.1, min_distance: float = 0.05) -> OnsetList:
    """Local maxima above ``threshold_ratio * max(curve)``, thinned to ``min_distance`` seconds.

    Thinning keeps the stronger of two close peaks, the earlier one on ties.
    """
    x = curve.values
    if x.size == 0 or x.max() <= 0:
        return OnsetList(np.zeros(0), np.zeros(0))
    peaks = _local_maxima(x)
    peaks = peaks[x[peaks] > threshold_ratio * x.max()]
    order = sorted(peaks.tolist(), key=lambda i: (-x[i], i))
    min_frames = min_distance * curve.frame_rate
    kept: list[int] = []
    for i in order:
        if all(abs(i - j) >= min_frames - 1e-9 for j in kept):
            kept.append(i)
    kept.sort()
    idx = np.array(kept, dtype=int)
    return OnsetList(curve.time_offset + idx / curve.frame_rate, x[idx].copy())


# --------------------------------------------------------------------------
# Tempo


def _check_range(bpm_min: float, bpm_max: float):
    if not 0 < bpm_min < bpm_max:
        raise ParameterError(f"need 0 < bpm_min < bpm_max, got {bpm_min}, {bpm_max}")


def tempo_acf(curve: NoveltyCurve, bpm_min: float = 60.0, bpm_max: float = 180.0,
              harmonic_ratio: float = HARMONIC_RATIO) -> TempoEstimate:
    """Tempo from the autocorrelation of the mean-removed novelty curve.

    Every ACF local maximum inside the lag range is refined by parabolic
    interpolation and the highest one is taken. If the lag range also holds a
    peak near ``lag / k`` (integer ``k >= 2``) reaching ``harmonic_ratio``
    times that height, the fastest such sub-multiple is reported instead, as
    ``k`` times the winning tempo. This undoes the period doubling caused by
    click positions repeating their alignment with the frame grid.
    """
    _check_range(bpm_min, bpm_max)
    fr = curve.frame_rate
    lag_max_f = fr * 60.0 / bpm_min
    if len(curve) < 2 * lag_max_f:
        raise ParameterError(
            f"novelty curve too short: {len(curve)} frames, need >= {2 * lag_max_f:.1f} for {bpm_min} BPM")
    x = curve.values - curve.values.mean()
    if not np.any(np.abs(x) > 1e-12 * max(1.0, np.abs(curve.values).max())):
        raise DegenerateInputError("constant novelty curve has no periodicity")
    r = _acf_rows(x)

    lo = max(1, math.ceil(fr * 60.0 / bpm_max))
    hi = min(math.floor(lag_max_f), len(r) - 2)
    peaks = []  # (height, fractional lag)
    for lag in range(lo, hi + 1):
        if r[lag] > r[lag - 1] and r[lag] >= r[lag + 1]:
            offset, height = _parabolic(r[lag - 1], r[lag], r[lag + 1])
            peaks.append((float(height), lag + offset))
    if not peaks:
        lag = lo + int(np.argmax(r[lo:hi + 1]))
        peaks.append((float(r[lag]), float(lag)))
    peaks.sort(key=lambda p: (-p[0], p[1]))
    height, lag = peaks[0]

    k_best = 1
    lag_min_f = fr * 60.0 / bpm_max
    for k in range(2, int(lag / (0.95 * lag_min_f)) + 1):
        target = lag / k
        if any(abs(pl - target) <= 0.05 * target and ph >= harmonic_ratio * height for ph, pl in peaks):
            k_best = k

    def to_bpm(lag):
        return min(max(60.0 * fr / lag, bpm_min), bpm_max)

    bpm = min(max(k_best * 60.0 * fr / lag, bpm_min), bpm_max)
    return TempoEstimate(float(bpm), height, tuple((to_bpm(l), h) for h, l in peaks))


def _comb_energy(x: np.ndarray, delay: float, feedback: float) -> float:
    """Output energy of ``y[n] = x[n] + feedback * y[n - delay]``.

    A fractional delay is split linearly over the two neighboring integer taps.
    """
    d0 = int(math.floor(delay))
    frac = delay - d0
    a = np.zeros(d0 + 2)
    a[0] = 1.0
    a[d0] -= feedback * (1.0 - frac)
    a[d0 + 1] -= feedback * frac
    y = scipy.signal.lfilter([1.0], a, x)
    return float(y @ y)


def tempo_comb(curve: NoveltyCurve, bpm_grid: Sequence[float] | None = None,
               feedback: float = COMB_FEEDBACK) -> TempoEstimate:
    """Tempo from a bank of feedback comb resonators, one per grid tempo.

    The grid tempo whose resonator has the highest output energy wins, so the
    resolution is the grid spacing. Default grid: 60..180 BPM in 1 BPM steps.
    """
    if bpm_grid is None:
        bpm_grid = np.arange(60.0, 181.0, 1.0)
    grid = [float(b) for b in bpm_grid]
    if not grid:
        raise ParameterError("empty tempo grid")
    if any(b <= 0 for b in grid):
        raise ParameterError("grid tempi must be positive")
    if not 0 < feedback < 1:
        raise ParameterError("feedback gain must lie in (0, 1)")
    x = curve.values
    energies = [_comb_energy(x, 60.0 * curve.frame_rate / b, feedback) for b in grid]
    if max(energies) <= 0:
        raise DegenerateInputError("all resonator energies are zero (silent novelty)")
    total = sum(energies)
    ranked = sorted(zip(grid, energies), key=lambda p: (-p[1], p[0]))
    cands = tuple((b, e / total) for b, e in ranked)
    return TempoEstimate(cands[0][0], cands[0][1], cands)


def tempo_ioi(onsets: OnsetList, bpm_min: float = 60.0, bpm_max: float = 180.0,
              bin_width: float = 0.01) -> TempoEstimate:
    """Tempo from the mode of the inter-onset-interval histogram.

    Bins are centered on integer multiples of ``bin_width``; only intervals
    inside the tempo range count. Ties go to the shorter interval.
    """
    _check_range(bpm_min, bpm_max)
    if bin_width <= 0:
        raise ParameterError("bin_width must be positive")
    if len(onsets) < 3:
        raise ParameterError(f"need at least 3 onsets for an IOI histogram, got {len(onsets)}")
    ioi = np.diff(np.asarray(onsets.times, dtype=np.float64))
    lo, hi = 60.0 / bpm_max, 60.0 / bpm_min
    ioi = ioi[(ioi >= lo - 1e-9) & (ioi <= hi + 1e-9)]
    if ioi.size == 0:
        raise DegenerateInputError("no inter-onset interval inside the tempo range")
    bins, counts = np.unique(np.round(ioi / bin_width).astype(int), return_counts=True)
    order = np.lexsort((bins, -counts))
    total = counts.sum()
    cands = tuple((60.0 / (bins[i] * bin_width), counts[i] / total) for i in order)
    return TempoEstimate(float(cands[0][0]), float(cands[0][1]), tuple((float(b), float(s)) for b, s in cands))


# --------------------------------------------------------------------------
# Beat tracking


def track_beats(curve: NoveltyCurve, onsets: OnsetList, tempo: TempoEstimate,
                bpm_min: float = 60.0, bpm_max: float = 180.0,
                snap_fraction: float = SNAP_FRACTION, adaptation: float = ADAPTATION_RATE) -> BeatGrid:
    """Adaptive pulse generator.

    Starts at the strongest onset with period ``60 / bpm`` and walks forward
    and backward. Each predicted beat snaps to the strongest onset within
    ``+-snap_fraction * P``; on a snap the period moves by
    ``adaptation * (observed - predicted)`` and is clamped to the tempo range.
    Without a nearby onset the generator free-runs.
    """
    _check_range(bpm_min, bpm_max)
    if not (np.isfinite(tempo.bpm) and tempo.bpm > 0):
        raise DegenerateInputError(f"invalid tempo {tempo.bpm!r}")
    if len(onsets) == 0:
        raise ParameterError("beat tracking needs at least one onset")
    times = np.asarray(onsets.times, dtype=np.float64)
    strengths = np.asarray(onsets.strengths, dtype=np.float64)
    p_lo, p_hi = 60.0 / bpm_max, 60.0 / bpm_min
    start, end = 0.0, curve.duration
    anchor = int(np.argmax(strengths))

    def walk(direction: int):
        t = float(times[anchor])
        period = min(max(60.0 / tempo.bpm, p_lo), p_hi)
        out = []
        while True:
            pred = t + direction * period
            slack = snap_fraction * period
            if pred < start - slack or pred > end + slack:
                return out
            near = np.flatnonzero(np.abs(times - pred) <= snap_fraction * period + 1e-12)
            if near.size:
                best = near[np.lexsort((np.abs(times[near] - pred), -strengths[near]))[0]]
                obs = float(times[best])
                period = min(max(period + adaptation * direction * (obs - pred), p_lo), p_hi)
                t = obs
            else:
                t = pred
            t = min(max(t, start), end)
            out.append((t, 60.0 / period))

    backward = walk(-1)[::-1]
    forward = walk(+1)
    beats = backward + [(float(times[anchor]), min(max(tempo.bpm, bpm_min), bpm_max))] + forward
    bt = np.array([b for b, _ in beats])
    bpm = np.array([b for _, b in beats])
    keep = np.concatenate(([True], np.diff(bt) > 1e-9))
    return BeatGrid(bt[keep], bpm[keep])
