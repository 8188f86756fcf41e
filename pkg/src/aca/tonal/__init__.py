"""Tonal analysis: pitch chroma, key, fundamental frequency and NMF."""
from .chroma import PITCH_CLASSES, ChromaSequence, ChromaVector, average_chroma, pitch_chroma
from .key import KeyEstimate, KeyProfile, detect_key, get_profile, key_profiles
from .nmf import NmfResult, nmf
from .pitch import F0Track, acf, acf_f0, hps_f0, iterative_subtraction_f0

__all__ = [
    "PITCH_CLASSES",
    "ChromaSequence",
    "ChromaVector",
    "average_chroma",
    "pitch_chroma",
    "KeyEstimate",
    "KeyProfile",
    "detect_key",
    "get_profile",
    "key_profiles",
    "NmfResult",
    "nmf",
    "F0Track",
    "acf",
    "acf_f0",
    "hps_f0",
    "iterative_subtraction_f0",
]
