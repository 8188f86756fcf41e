"""Instantaneous low-level features and their aggregation over time."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft

from .errors import ParameterError
from .signal import AudioBuffer, BlockSpec, Spectrogram, block_audio, frame_times

__all__ = [
    "FeatureSeries",
    "AggregatedFeatures",
    "MelFilterbank",
    "LOG_FLOOR",
    "hz_to_mel",
    "mel_to_hz",
    "spectral_centroid",
    "rms",
    "envelope_peak",
    "build_mel_filterbank",
    "mfcc",
    "cepstrum",
    "aggregate",
]

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class FeatureSeries:
    """One feature over time: ``values`` has shape (num_frames, dim)."""

    name: str
    values: np.ndarray
    frame_times: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[1] < 1:
            raise ParameterError(f"{self.name}: values must be (frames, dim) with dim >= 1")
        times = np.array(self.frame_times, dtype=np.float64)
        if times.shape != (values.shape[0],):
            raise ParameterError(f"{self.name}: {values.shape[0]} rows but {times.shape[0]} timestamps")
        values.setflags(write=False)
        times.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frame_times", times)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def column_names(self) -> list[str]:
        if self.dim == 1:
            return [self.name]
        return [f"{self.name}_{d}" for d in range(self.dim)]


@dataclass(frozen=True)
class AggregatedFeatures:
    names: tuple[str, ...]
    vector: np.ndarray

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.vector)}


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular mel filters; ``weights`` has shape (num_bands, num_bins)."""

    num_bands: int
    weights: np.ndarray
    band_edges: np.ndarray


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def spectral_centroid(spectrogram: Spectrogram) -> FeatureSeries:
    """Magnitude-weighted mean frequency per frame, in Hz (0 for silent frames)."""
    mags = spectrogram.magnitudes
    total = mags.sum(axis=1)
    weighted = mags @ spectrogram.bin_frequencies
    centroid = np.divide(weighted, total, out=np.zeros_like(total), where=total > 0)
    return FeatureSeries("spectral_centroid", centroid, spectrogram.frame_times)


def _unwindowed_blocks(buffer: AudioBuffer, spec: BlockSpec) -> np.ndarray:
    return block_audio(buffer, BlockSpec(spec.block_size, spec.hop_size, "rectangular"))


def rms(buffer: AudioBuffer, spec: BlockSpec) -> FeatureSeries:
    """Root mean square per (unwindowed, zero-padded) block."""
    blocks = _unwindowed_blocks(buffer, spec)
    values = np.sqrt(np.mean(blocks ** 2, axis=1))
    return FeatureSeries("rms", values, frame_times(len(blocks), spec, buffer.sample_rate))


def envelope_peak(buffer: AudioBuffer, spec: BlockSpec) -> FeatureSeries:
    """Absolute maximum per block."""
    blocks = _unwindowed_blocks(buffer, spec)
    values = np.max(np.abs(blocks), axis=1)
    return FeatureSeries("envelope", values, frame_times(len(blocks), spec, buffer.sample_rate))


def build_mel_filterbank(num_bands: int, num_bins: int, sample_rate: float,
                         fmin: float = 0.0, fmax: float | None = None) -> MelFilterbank:
    """Triangular filters with centers equally spaced on the mel scale.

    ``band_edges`` holds ``num_bands + 2`` frequencies; band ``i`` rises from
    ``edges[i]`` to a peak of 1.0 at ``edges[i + 1]`` and falls to zero at
    ``edges[i + 2]``. ``num_bins`` is the one-sided bin count
    (``block_size // 2 + 1``).
    """
    nyquist = sample_rate / 2.0
    if fmax is None:
        fmax = nyquist
    if num_bands < 1:
        raise ParameterError(f"num_bands must be >= 1, got {num_bands}")
    if not 0 <= fmin < fmax <= nyquist:
        raise ParameterError(f"need 0 <= fmin < fmax <= {nyquist} Hz, got fmin={fmin}, fmax={fmax}")
    if num_bins < 2:
        raise ParameterError("num_bins must be >= 2")

    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), num_bands + 2))
    freqs = np.linspace(0.0, nyquist, num_bins)
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    weights = np.maximum(0.0, np.minimum(rising, falling))

    empty = np.flatnonzero(weights.max(axis=1) <= 0)
    if empty.size:
        raise ParameterError(
            f"mel bands {empty.tolist()} contain no FFT bin; use fewer bands or a longer block")
    return MelFilterbank(num_bands, weights, edges)


def cepstrum(band_energies, num_coefficients: int) -> np.ndarray:
    """Log-compress band energies (with floor) and take the orthonormal DCT-II.

    Works on a single energy vector or on a (frames, bands) matrix.
    """
    energies = np.asarray(band_energies, dtype=np.float64)
    if num_coefficients > energies.shape[-1]:
        raise ParameterError(
            f"num_coefficients ({num_coefficients}) exceeds num_bands ({energies.shape[-1]})")
    log_e = np.log(np.maximum(energies, LOG_FLOOR))
    return scipy.fft.dct(log_e, type=2, norm="ortho", axis=-1)[..., :num_coefficients]


def mfcc(spectrogram: Spectrogram, num_bands: int = 40, num_coefficients: int = 13,
         fmin: float = 0.0, fmax: float | None = None) -> FeatureSeries:
    """Mel-frequency cepstral coefficients from power band energies."""
    if num_coefficients > num_bands:
        raise ParameterError(f"num_coefficients ({num_coefficients}) exceeds num_bands ({num_bands})")
    bank = build_mel_filterbank(num_bands, spectrogram.num_bins, spectrogram.sample_rate, fmin, fmax)
    energies = (spectrogram.magnitudes ** 2) @ bank.weights.T
    return FeatureSeries("mfcc", cepstrum(energies, num_coefficients), spectrogram.frame_times)


def aggregate(series: Sequence[FeatureSeries]) -> AggregatedFeatures:
    """Mean and population standard deviation of every feature dimension.

    Layout is ``[a.mean, a.std, b.mean, b.std, ...]`` in the order given; for
    multi-dimensional features each dimension contributes its own pair.
    """
    if not series:
        raise ParameterError("nothing to aggregate")
    names, values = [], []
    for s in series:
        if s.values.shape[0] == 0:
            raise ParameterError(f"feature series {s.name!r} is empty")
        means = s.values.mean(axis=0)
        stds = s.values.std(axis=0)
        for col, m, sd in zip(s.column_names(), means, stds):
            names += [f"{col}.mean", f"{col}.std"]
            values += [m, sd]
    return AggregatedFeatures(tuple(names), np.array(values))
