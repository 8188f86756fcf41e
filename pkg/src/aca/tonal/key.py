"""Template-based key detection over the 24 major/minor keys."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..errors import DegenerateInputError, ParameterError
from .chroma import PITCH_CLASSES, ChromaVector

__all__ = ["KeyProfile", "KeyEstimate", "key_profiles", "get_profile", "detect_key"]

Mode = Literal["major", "minor"]

# Scale membership, C major / C natural minor.
_DIATONIC_MAJOR = [1, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 1]
_DIATONIC_MINOR = [1, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1, 0]

# Krumhansl & Kessler probe-tone ratings,
# Krumhansl (1990) "Cognitive Foundations of Musical Pitch", p. 30.
_KRUMHANSL_MAJOR = [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88]
_KRUMHANSL_MINOR = [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17]

# Kostka-Payne corpus profiles,
# Temperley (2007) "Music and Probability", Table 6.1.
_TEMPERLEY_MAJOR = [0.748, 0.060, 0.488, 0.082, 0.670, 0.460, 0.096, 0.715, 0.104, 0.366, 0.057, 0.400]
_TEMPERLEY_MINOR = [0.712, 0.048, 0.474, 0.618, 0.049, 0.460, 0.105, 0.747, 0.404, 0.067, 0.133, 0.330]

# Scores closer than this are treated as ties.
_TIE_EPS = 1e-12


@dataclass(frozen=True)
class KeyProfile:
    """Unit-sum major and minor templates with tonic at index 0."""

    name: str
    major: np.ndarray
    minor: np.ndarray

    def template(self, tonic: int, mode: Mode) -> np.ndarray:
        base = self.major if mode == "major" else self.minor
        return np.roll(base, tonic)


def _profile(name, major, minor) -> KeyProfile:
    major = np.asarray(major, dtype=np.float64)
    minor = np.asarray(minor, dtype=np.float64)
    major, minor = major / major.sum(), minor / minor.sum()
    major.setflags(write=False)
    minor.setflags(write=False)
    return KeyProfile(name, major, minor)


_PROFILES = {
    "diatonic": _profile("diatonic", _DIATONIC_MAJOR, _DIATONIC_MINOR),
    "krumhansl": _profile("krumhansl", _KRUMHANSL_MAJOR, _KRUMHANSL_MINOR),
    "temperley": _profile("temperley", _TEMPERLEY_MAJOR, _TEMPERLEY_MINOR),
}


def key_profiles() -> dict[str, KeyProfile]:
    """The diatonic, Krumhansl and Temperley profiles, keyed by name."""
    return dict(_PROFILES)


def get_profile(name: str) -> KeyProfile:
    try:
        return _PROFILES[name]
    except KeyError:
        raise ParameterError(f"unknown key profile {name!r}; choose from {sorted(_PROFILES)}") from None


@dataclass(frozen=True)
class KeyEstimate:
    tonic: int
    mode: Mode
    score: float
    ranking: tuple[tuple[int, Mode, float], ...]

    @property
    def name(self) -> str:
        return f"{PITCH_CLASSES[self.tonic]} {self.mode}"

    def to_dict(self) -> dict:
        return {
            "tonic": PITCH_CLASSES[self.tonic],
            "tonic_index": self.tonic,
            "mode": self.mode,
            "score": self.score,
            "ranking": [{"tonic": PITCH_CLASSES[t], "mode": m, "score": s} for t, m, s in self.ranking],
        }


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc, yc = x - x.mean(), y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    return float(xc @ yc / denom) if denom > 0 else 0.0


def detect_key(chroma_avg: ChromaVector, profile: KeyProfile | str = "krumhansl",
               similarity: Literal["correlation", "euclidean"] = "correlation") -> KeyEstimate:
    """Pick the rotated major/minor template most similar to the average chroma.

    ``correlation`` scores by Pearson correlation; ``euclidean`` scores by the
    negated Euclidean distance between unit-sum vectors. Ties go to the lower
    pitch class, then to major.
    """
    if isinstance(profile, str):
        profile = get_profile(profile)
    if not isinstance(chroma_avg, ChromaVector):
        chroma_avg = ChromaVector(chroma_avg)
    if not np.any(chroma_avg.energies > 0):
        raise DegenerateInputError("cannot detect a key from an all-zero chroma vector")
    if similarity not in ("correlation", "euclidean"):
        raise ParameterError(f"unknown similarity {similarity!r}")
    x = chroma_avg.normalized().energies

    candidates = []
    for mode_rank, mode in enumerate(("major", "minor")):
        for tonic in range(12):
            t = profile.template(tonic, mode)
            if similarity == "correlation":
                score = _pearson(x, t)
            else:
                score = -float(np.linalg.norm(x - t))
            candidates.append((tonic, mode_rank, mode, score))

    best = max(c[3] for c in candidates)

    def sort_key(c):
        # Snap near-equal scores to the best one so that equal templates tie exactly.
        s = best if best - c[3] <= _TIE_EPS else c[3]
        return (-s, c[0], c[1])

    ranked = sorted(candidates, key=sort_key)
    ranking = tuple((t, m, s) for t, _, m, s in ranked)
    tonic, mode, score = ranking[0]
    return KeyEstimate(tonic, mode, score, ranking)
