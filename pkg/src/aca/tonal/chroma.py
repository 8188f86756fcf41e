"""Pitch chroma: octave-folded spectral magnitude per pitch class."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..signal import Spectrogram

__all__ = ["PITCH_CLASSES", "ChromaVector", "ChromaSequence", "pitch_chroma", "average_chroma",
           "chroma_assignment"]

PITCH_CLASSES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    total = x.sum(axis=-1, keepdims=True)
    return np.divide(x, total, out=np.zeros_like(x), where=total > 0)


@dataclass(frozen=True)
class ChromaVector:
    """Twelve pitch-class energies, index 0 = C."""

    energies: np.ndarray

    def __post_init__(self):
        e = np.array(self.energies, dtype=np.float64)
        if e.shape != (12,):
            raise ParameterError(f"chroma vector needs 12 entries, got shape {e.shape}")
        if np.any(e < 0):
            raise ParameterError("chroma energies must be non-negative")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    def normalized(self) -> "ChromaVector":
        return ChromaVector(_normalize_rows(self.energies))

    def rotated(self, semitones: int) -> "ChromaVector":
        """Transpose up by ``semitones``."""
        return ChromaVector(np.roll(self.energies, semitones))


@dataclass(frozen=True)
class ChromaSequence:
    """Per-frame chroma; ``frames`` has shape (num_frames, 12)."""

    frames: np.ndarray
    frame_times: np.ndarray

    def __post_init__(self):
        f = np.array(self.frames, dtype=np.float64)
        t = np.array(self.frame_times, dtype=np.float64)
        if f.ndim != 2 or f.shape[1] != 12:
            raise ParameterError(f"chroma frames must be (n, 12), got {f.shape}")
        if t.shape != (f.shape[0],):
            raise ParameterError("frame_times length does not match the number of frames")
        f.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "frames", f)
        object.__setattr__(self, "frame_times", t)

    def __len__(self):
        return self.frames.shape[0]

    def __getitem__(self, i) -> ChromaVector:
        return ChromaVector(self.frames[i])


def chroma_assignment(bin_frequencies, tuning: float = 440.0, fmin: float = 65.4,
                      fmax: float = 2093.0) -> np.ndarray:
    """0/1 matrix of shape (12, num_bins) mapping each in-range bin to its pitch class.

    A bin maps to the nearest MIDI pitch ``round(69 + 12 log2(f / tuning))``
    (halves round up).
    """
    f = np.asarray(bin_frequencies, dtype=np.float64)
    in_range = (f >= fmin) & (f <= fmax) & (f > 0)
    midi = np.floor(69.0 + 12.0 * np.log2(np.where(in_range, f, tuning) / tuning) + 0.5).astype(int)
    assign = np.zeros((12, f.shape[0]))
    cols = np.flatnonzero(in_range)
    assign[midi[cols] % 12, cols] = 1.0
    return assign


def pitch_chroma(spectrogram: Spectrogram, tuning: float = 440.0, fmin: float = 65.4,
                 fmax: float = 2093.0, normalize: bool = True) -> ChromaSequence:
    """Sum bin magnitudes into the 12 pitch classes, frame by frame.

    With ``normalize`` every non-silent frame sums to one.
    """
    nyquist = spectrogram.sample_rate / 2.0
    if not 0 < fmin < fmax <= nyquist:
        raise ParameterError(f"need 0 < fmin < fmax <= {nyquist} Hz, got fmin={fmin}, fmax={fmax}")
    if tuning <= 0:
        raise ParameterError("tuning frequency must be positive")
    assign = chroma_assignment(spectrogram.bin_frequencies, tuning, fmin, fmax)
    frames = spectrogram.magnitudes @ assign.T
    if normalize:
        frames = _normalize_rows(frames)
    return ChromaSequence(frames, spectrogram.frame_times)


def average_chroma(seq: ChromaSequence) -> ChromaVector:
    """Mean chroma over all frames, renormalized to unit sum."""
    if len(seq) == 0:
        raise ParameterError("empty chroma sequence")
    return ChromaVector(_normalize_rows(seq.frames.mean(axis=0)))
