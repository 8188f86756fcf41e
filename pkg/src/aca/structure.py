"""Self-similarity analysis: boundaries from a checkerboard kernel, repetitions from diagonals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .features import FeatureSeries
from .rhythm import NoveltyCurve, pick_onsets
from .tonal.chroma import ChromaSequence

__all__ = [
    "SelfSimilarityMatrix",
    "SegmentBoundaries",
    "RepetitionReport",
    "ssm",
    "checkerboard_kernel",
    "boundary_novelty",
    "repetition_lags",
]


@dataclass(frozen=True)
class SelfSimilarityMatrix:
    values: np.ndarray
    frame_times: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        t = np.array(self.frame_times, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ParameterError(f"SSM must be square, got shape {v.shape}")
        if t.shape != (v.shape[0],):
            raise ParameterError("frame_times length does not match the matrix size")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "frame_times", t)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def hop(self) -> float:
        """Seconds between consecutive frames (1.0 if there is a single frame)."""
        if self.size < 2:
            return 1.0
        return float((self.frame_times[-1] - self.frame_times[0]) / (self.size - 1))


@dataclass(frozen=True)
class SegmentBoundaries:
    times: np.ndarray
    frames: np.ndarray
    novelty: NoveltyCurve


@dataclass(frozen=True)
class RepetitionReport:
    """``lags`` holds (lag seconds, lag frames, support) sorted by support, descending."""

    lags: tuple[tuple[float, int, float], ...]


def ssm(features: ChromaSequence | FeatureSeries | np.ndarray, frame_times=None) -> SelfSimilarityMatrix:
    """Pairwise cosine similarity between frame vectors.

    Zero vectors have similarity 0 to every other frame and 1 to themselves.
    The matrix is built from its upper triangle so it is exactly symmetric.
    """
    if isinstance(features, ChromaSequence):
        X, times = features.frames, features.frame_times
    elif isinstance(features, FeatureSeries):
        X, times = features.values, features.frame_times
    else:
        X = np.asarray(features, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        times = np.arange(X.shape[0], dtype=np.float64) if frame_times is None else frame_times
    if X.shape[0] < 2:
        raise ParameterError(f"need at least 2 frames for a self-similarity matrix, got {X.shape[0]}")
    norms = np.linalg.norm(X, axis=1)
    U = np.divide(X, norms[:, None], out=np.zeros_like(X, dtype=np.float64), where=norms[:, None] > 0)
    S = np.clip(U @ U.T, -1.0, 1.0)
    upper = np.triu(S, 1)
    S = upper + upper.T
    np.fill_diagonal(S, 1.0)
    return SelfSimilarityMatrix(S, times)


def checkerboard_kernel(half_size: int) -> np.ndarray:
    """``2L x 2L`` checkerboard (+ on the diagonal quadrants) with a Gaussian taper, sigma = L / 2.

    Normalized to unit absolute sum; the entries sum to zero.
    """
    if half_size < 1:
        raise ParameterError("kernel half size must be >= 1")
    L = half_size
    u = np.arange(-L, L) + 0.5
    sign = np.sign(u)
    taper = np.exp(-0.5 * (u / (L / 2.0)) ** 2)
    K = np.outer(sign * taper, sign * taper)
    return K / np.abs(K).sum()


def boundary_novelty(matrix: SelfSimilarityMatrix, kernel_half_size: int = 16,
                     threshold_ratio: float = 0.1, min_distance: float | None = None) -> SegmentBoundaries:
    """Segment boundaries from a checkerboard kernel slid along the main diagonal.

    Novelty at frame ``n`` correlates the kernel with the block
    ``S[n-L:n+L, n-L:n+L]`` (edges padded by replication), so a peak at ``n``
    marks ``n`` as the first frame of a new segment. The rectified curve is
    peak-picked with :func:`aca.rhythm.pick_onsets`; ``min_distance`` defaults
    to ``L`` frames.
    """
    n, L = matrix.size, kernel_half_size
    if L < 1 or n < 2 * L:
        raise ParameterError(f"{n}x{n} matrix too small for a kernel of half size {L}")
    K = checkerboard_kernel(L)
    P = np.pad(matrix.values, L, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(P, (2 * L, 2 * L))
    idx = np.arange(n)
    raw = np.einsum("nij,ij->n", windows[idx, idx], K)

    hop = matrix.hop
    curve = NoveltyCurve(np.maximum(raw, 0.0), 1.0 / hop, float(matrix.frame_times[0]))
    if min_distance is None:
        min_distance = L * hop
    onsets = pick_onsets(curve, threshold_ratio, min_distance)
    frames = np.rint((onsets.times - curve.time_offset) * curve.frame_rate).astype(int)
    frames = frames[(frames > 0) & (frames < n)]
    return SegmentBoundaries(matrix.frame_times[frames], frames, curve)


def repetition_lags(matrix: SelfSimilarityMatrix, min_lag: float, threshold: float = 0.9,
                    min_support: float = 1e-6) -> RepetitionReport:
    """Lags whose super-diagonal has high mean similarity.

    ``support(l)`` is the mean of ``S[i, i + l]``. Lags with support above
    ``threshold * max support`` (and above ``min_support``) qualify; runs of
    adjacent qualifying lags collapse to their strongest member (smallest lag
    on ties).
    """
    n, hop = matrix.size, matrix.hop
    first = int(np.ceil(min_lag / hop - 1e-9))
    if min_lag <= 0 or first < 1 or first > n - 1:
        raise ParameterError(f"min_lag {min_lag} s outside (0, {(n - 1) * hop}] s")
    lags = np.arange(first, n)
    support = np.array([np.diagonal(matrix.values, int(l)).mean() for l in lags])
    cutoff = max(threshold * support.max(), min_support)
    ok = support > cutoff

    picks = []
    i = 0
    while i < len(lags):
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(lags) and ok[j + 1]:
            j += 1
        best = i + int(np.argmax(support[i:j + 1]))
        picks.append((float(lags[best] * hop), int(lags[best]), float(support[best])))
        i = j + 1
    picks.sort(key=lambda p: (-p[2], p[1]))
    return RepetitionReport(tuple(picks))
