"""Fundamental frequency estimation.

Monophonic: autocorrelation (time domain) and harmonic product spectrum
(frequency domain). Polyphonic: iterative subtraction of detected harmonic
series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..signal import AudioBuffer, BlockSpec, Spectrogram, block_audio, frame_times

__all__ = [
    "F0Track",
    "acf",
    "acf_f0",
    "hps_f0",
    "harmonic_product_spectrum",
    "iterative_subtraction_f0",
]

VOICING_THRESHOLD = 0.3


@dataclass(frozen=True)
class F0Track:
    """Per-frame fundamental frequency in Hz; 0 marks an unvoiced frame."""

    frequencies: np.ndarray
    frame_times: np.ndarray

    def __post_init__(self):
        f = np.array(self.frequencies, dtype=np.float64)
        t = np.array(self.frame_times, dtype=np.float64)
        if f.shape != t.shape:
            raise ParameterError("frequencies and frame_times differ in length")
        f.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "frame_times", t)


def _acf_rows(frames: np.ndarray) -> np.ndarray:
    """Normalized autocorrelation r(0..N-1) of each row, via zero-padded FFT."""
    n = frames.shape[-1]
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(frames, nfft, axis=-1)
    r = np.fft.irfft(spec.real ** 2 + spec.imag ** 2, nfft, axis=-1)[..., :n]
    r0 = r[..., :1]
    return np.divide(r, r0, out=np.zeros_like(r), where=r0 > 0)


def acf(frame) -> np.ndarray:
    """Autocorrelation ``r(eta) = sum_n x(n) x(n + eta)`` for lags 0..N-1, scaled so r(0) = 1.

    An all-zero frame yields all zeros.
    """
    x = np.asarray(frame, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ParameterError("acf needs a one-dimensional frame of at least 2 samples")
    return _acf_rows(x)


def _parabolic(left: float, center: float, right: float) -> tuple[float, float]:
    """Vertex offset (in [-0.5, 0.5] for a true peak) and height of the parabola through three points."""
    denom = left - 2.0 * center + right
    if denom >= 0:
        return 0.0, center
    offset = 0.5 * (left - right) / denom
    return offset, center - 0.25 * (left - right) * offset


def acf_f0(buffer: AudioBuffer, spec: BlockSpec, fmin: float = 33.3, fmax: float = 3333.0,
           voicing_threshold: float = VOICING_THRESHOLD) -> F0Track:
    """Autocorrelation pitch tracker.

    Per frame the strongest local maximum of the normalized ACF within lags
    ``[sr / fmax, sr / fmin]`` gives the period; its position is refined by
    parabolic interpolation. Frames whose peak is below ``voicing_threshold``
    are unvoiced.
    """
    sr = buffer.sample_rate
    if not 0 < fmin < fmax:
        raise ParameterError(f"need 0 < fmin < fmax, got {fmin}, {fmax}")
    if sr / fmax < 2:
        raise ParameterError(f"fmax={fmax} Hz leaves fewer than 2 samples per period at {sr} Hz")
    if spec.block_size < 2 * sr / fmin:
        raise ParameterError(
            f"block_size {spec.block_size} too short for fmin={fmin} Hz (need >= {2 * sr / fmin:.0f})")

    frames = block_audio(buffer, spec)
    r = _acf_rows(frames)
    lo = max(1, math.ceil(sr / fmax))
    hi = min(math.floor(sr / fmin), spec.block_size - 2)

    f0 = np.zeros(len(frames))
    lags = np.arange(lo, hi + 1)
    for i, row in enumerate(r):
        if row[0] == 0:
            continue
        c = row[lo:hi + 1]
        is_peak = (c > row[lo - 1:hi]) & (c >= row[lo + 1:hi + 2])
        if not is_peak.any():
            continue
        cand = lags[is_peak]
        best = cand[np.argmax(row[cand])]
        if row[best] < voicing_threshold:
            continue
        offset, _ = _parabolic(row[best - 1], row[best], row[best + 1])
        f0[i] = min(max(sr / (best + offset), fmin), fmax)
    return F0Track(f0, frame_times(len(frames), spec, sr))


def _bin_range(spectrogram: Spectrogram, order: int, fmin: float, fmax: float | None):
    nyquist = spectrogram.sample_rate / 2.0
    if order < 2:
        raise ParameterError(f"HPS order must be >= 2, got {order}")
    if fmax is None:
        fmax = nyquist / order
    if not 0 < fmin < fmax:
        raise ParameterError(f"need 0 < fmin < fmax, got {fmin}, {fmax}")
    if fmax * order > nyquist + 1e-9:
        raise ParameterError(f"fmax * order = {fmax * order} Hz exceeds Nyquist ({nyquist} Hz)")
    df = spectrogram.bin_width
    kmin = max(1, math.ceil(fmin / df - 1e-9))
    kmax = math.floor(fmax / df + 1e-9)
    if kmax < kmin:
        raise ParameterError(f"no FFT bin between {fmin} and {fmax} Hz")
    return kmin, kmax


def harmonic_product_spectrum(magnitudes, order: int, kmin: int, kmax: int) -> np.ndarray:
    """``prod_{j=1..order} |X(j k)|`` for k = kmin..kmax (last axis = bins)."""
    mags = np.asarray(magnitudes, dtype=np.float64)
    ks = np.arange(kmin, kmax + 1)
    out = np.ones(mags.shape[:-1] + ks.shape)
    for j in range(1, order + 1):
        out *= mags[..., j * ks]
    return out


def hps_f0(spectrogram: Spectrogram, order: int = 4, fmin: float = 50.0, fmax: float | None = None,
           silence_threshold: float = 1e-6) -> F0Track:
    """Harmonic product spectrum pitch tracker.

    ``f0`` is the bin frequency maximizing the product of the spectrum with its
    ``order - 1`` integer-compressed copies, searched over ``[fmin, fmax]``
    (``fmax`` defaults to Nyquist / order). Frames whose magnitude sum is below
    ``silence_threshold`` are unvoiced.
    """
    kmin, kmax = _bin_range(spectrogram, order, fmin, fmax)
    mags = spectrogram.magnitudes
    hps = harmonic_product_spectrum(mags, order, kmin, kmax)
    k = kmin + np.argmax(hps, axis=1)
    f0 = spectrogram.bin_frequencies[k]
    f0 = np.where(mags.sum(axis=1) < silence_threshold, 0.0, f0)
    return F0Track(f0, spectrogram.frame_times)


def iterative_subtraction_f0(spectrogram: Spectrogram, max_voices: int, energy_floor_ratio: float = 0.1,
                             order: int = 4, fmin: float = 50.0, fmax: float | None = None,
                             removal_width: int = 1) -> list[list[float]]:
    """Polyphonic f0 candidates by repeated detect-and-remove.

    Each round takes the HPS maximum of the residual spectrum as the most
    salient f0, then zeroes the bins within ``removal_width`` of every
    harmonic of it up to Nyquist. Stops after ``max_voices`` rounds or once the
    residual power drops below ``energy_floor_ratio`` times the original.
    """
    if max_voices < 1:
        raise ParameterError(f"max_voices must be >= 1, got {max_voices}")
    if not 0 < energy_floor_ratio < 1:
        raise ParameterError(f"energy_floor_ratio must lie in (0, 1), got {energy_floor_ratio}")
    if removal_width < 0:
        raise ParameterError("removal_width must be >= 0")
    kmin, kmax = _bin_range(spectrogram, order, fmin, fmax)
    freqs = spectrogram.bin_frequencies
    nbins = spectrogram.num_bins
    df = spectrogram.bin_width

    result = []
    for row in spectrogram.magnitudes:
        residual = row.copy()
        original = float(residual @ residual)
        voices: list[float] = []
        while len(voices) < max_voices:
            energy = float(residual @ residual)
            if original == 0 or energy < energy_floor_ratio * original:
                break
            k = kmin + int(np.argmax(harmonic_product_spectrum(residual, order, kmin, kmax)))
            f0 = float(freqs[k])
            voices.append(f0)
            for h in np.arange(f0, freqs[-1] + df / 2, f0):
                c = int(round(h / df))
                residual[max(0, c - removal_width):min(nbins, c + removal_width + 1)] = 0.0
        result.append(voices)
    return result
