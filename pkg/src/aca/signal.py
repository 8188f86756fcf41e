"""Audio ingestion, blocking, windowing and magnitude STFT.

Everything downstream consumes either an :class:`AudioBuffer` (time domain)
or a :class:`Spectrogram` (frames x bins magnitude matrix).
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import (
    AudioFileNotFoundError,
    MalformedWavError,
    ParameterError,
    UnsupportedEncodingError,
)

__all__ = [
    "AudioBuffer",
    "BlockSpec",
    "Spectrogram",
    "read_wav",
    "write_wav",
    "block_audio",
    "stft_magnitude",
    "window_function",
    "TONAL_SPEC",
    "RHYTHM_SPEC",
]

WindowName = Literal["rectangular", "hann"]

_FORMAT_PCM = 1
_FORMAT_FLOAT = 3


def _frozen(a, dtype=np.float64):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: float samples (nominally in [-1, 1]) and a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ParameterError(f"samples must be one-dimensional, got shape {samples.shape}")
        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def scaled(self, gain: float) -> "AudioBuffer":
        return AudioBuffer(self.samples * gain, self.sample_rate)


@dataclass(frozen=True)
class BlockSpec:
    """Framing parameters: block length, hop length (both in samples) and window."""

    block_size: int = 4096
    hop_size: int = 2048
    window: WindowName = "hann"

    def __post_init__(self):
        b, h = self.block_size, self.hop_size
        if int(b) != b or b <= 0 or (int(b) & (int(b) - 1)) != 0:
            raise ParameterError(f"block_size must be a positive power of two, got {b!r}")
        if int(h) != h or not 0 < h <= b:
            raise ParameterError(f"hop_size must satisfy 0 < hop_size <= block_size, got {h!r}")
        if self.window not in ("rectangular", "hann"):
            raise ParameterError(f"unknown window {self.window!r}")
        object.__setattr__(self, "block_size", int(b))
        object.__setattr__(self, "hop_size", int(h))

    def num_frames(self, num_samples: int) -> int:
        return -(-num_samples // self.hop_size)


TONAL_SPEC = BlockSpec(4096, 2048, "hann")
RHYTHM_SPEC = BlockSpec(1024, 512, "hann")


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude spectrogram, shape ``(num_frames, block_size // 2 + 1)``."""

    magnitudes: np.ndarray
    bin_frequencies: np.ndarray
    frame_times: np.ndarray
    source_spec: BlockSpec
    sample_rate: int

    def __post_init__(self):
        mags = _frozen(self.magnitudes)
        if mags.ndim != 2:
            raise ParameterError("magnitudes must be a 2-D matrix")
        if np.any(mags < 0):
            raise ParameterError("magnitudes must be non-negative")
        freqs = _frozen(self.bin_frequencies)
        times = _frozen(self.frame_times)
        if freqs.shape[0] != mags.shape[1] or times.shape[0] != mags.shape[0]:
            raise ParameterError("metadata lengths do not match the magnitude matrix")
        object.__setattr__(self, "magnitudes", mags)
        object.__setattr__(self, "bin_frequencies", freqs)
        object.__setattr__(self, "frame_times", times)

    @property
    def num_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def num_bins(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.source_spec.block_size

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.source_spec.hop_size

    def with_magnitudes(self, magnitudes) -> "Spectrogram":
        """Same time/frequency grid, different magnitude values."""
        magnitudes = np.asarray(magnitudes, dtype=np.float64)
        times = self.frame_times
        if magnitudes.shape[0] != times.shape[0]:
            spec = self.source_spec
            times = (np.arange(magnitudes.shape[0]) * spec.hop_size + spec.block_size / 2) / self.sample_rate
        return Spectrogram(magnitudes, self.bin_frequencies, times, self.source_spec, self.sample_rate)


# --------------------------------------------------------------------------
# WAV I/O


def read_wav(path) -> AudioBuffer:
    """Read a RIFF/WAVE file (16-bit PCM or 32-bit float, mono or stereo).

    Integer samples are scaled by 1/32768, stereo is downmixed by averaging the
    two channels. Unknown chunks are skipped.
    """
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        raise AudioFileNotFoundError(f"no such file: {path}") from None
    except IsADirectoryError:
        raise AudioFileNotFoundError(f"not a file: {path}") from None

    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWavError(f"{path}: missing RIFF/WAVE header")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            if chunk_id == b"data":
                raise MalformedWavError(f"{path}: data chunk truncated ({len(body)} of {size} bytes)")
            raise MalformedWavError(f"{path}: chunk {chunk_id!r} truncated")
        if chunk_id == b"fmt ":
            if size < 16:
                raise MalformedWavError(f"{path}: fmt chunk too short ({size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + size + (size & 1)

    if fmt is None:
        raise MalformedWavError(f"{path}: no fmt chunk")
    if payload is None:
        raise MalformedWavError(f"{path}: no data chunk")

    code, channels, sample_rate, _, block_align, bits = fmt
    if code == _FORMAT_PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / 32768.0
    elif code == _FORMAT_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedEncodingError(
            f"{path}: format code {code} with {bits} bits per sample is not supported "
            "(only 16-bit PCM and 32-bit float)")
    if channels not in (1, 2):
        raise UnsupportedEncodingError(f"{path}: {channels} channels (only mono/stereo supported)")
    if sample_rate <= 0:
        raise MalformedWavError(f"{path}: sample rate {sample_rate}")
    if block_align != channels * dtype.itemsize:
        raise MalformedWavError(f"{path}: block_align {block_align} inconsistent with {channels}x{bits} bit")

    num_frames = len(payload) // block_align
    raw = np.frombuffer(payload[:num_frames * block_align], dtype=dtype)
    samples = raw.astype(np.float64).reshape(num_frames, channels) * scale
    return AudioBuffer(samples.mean(axis=1), sample_rate)


def write_wav(path, buffer: AudioBuffer, encoding: Literal["pcm16", "float32"] = "pcm16") -> None:
    """Write a mono WAV file. PCM output is clipped to the 16-bit range."""
    x = buffer.samples
    if encoding == "pcm16":
        pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
        code, bits = _FORMAT_PCM, 16
    elif encoding == "float32":
        pcm = x.astype("<f4")
        code, bits = _FORMAT_FLOAT, 32
    else:
        raise ParameterError(f"unknown encoding {encoding!r}")
    body = pcm.tobytes()
    align = bits // 8
    fmt = struct.pack("<HHIIHH", code, 1, buffer.sample_rate, buffer.sample_rate * align, align, bits)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(body) + (len(body) & 1)) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        fh.write(b"data" + struct.pack("<I", len(body)) + body)
        if len(body) & 1:
            fh.write(b"\0")


# --------------------------------------------------------------------------
# Blocking and STFT


def window_function(name: WindowName, length: int) -> np.ndarray:
    """Periodic (DFT-even) window of the given length."""
    if name == "rectangular":
        return np.ones(length)
    if name == "hann":
        n = np.arange(length)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / length))
    raise ParameterError(f"unknown window {name!r}")


def block_audio(buffer: AudioBuffer, spec: BlockSpec) -> np.ndarray:
    """Split ``buffer`` into windowed frames of ``spec.block_size`` samples.

    Frame ``k`` starts at sample ``k * hop_size``; there are
    ``ceil(len / hop_size)`` frames and the trailing ones are zero-padded
    before the window is applied.

    Returns
    -------
    frames : np.ndarray, shape (num_frames, block_size)
    """
    n = len(buffer)
    if n == 0:
        raise ParameterError("cannot block an empty buffer")
    num_frames = spec.num_frames(n)
    padded = np.zeros((num_frames - 1) * spec.hop_size + spec.block_size)
    padded[:n] = buffer.samples
    frames = np.lib.stride_tricks.sliding_window_view(padded, spec.block_size)[:: spec.hop_size]
    return frames[:num_frames] * window_function(spec.window, spec.block_size)


def frame_times(num_frames: int, spec: BlockSpec, sample_rate: int) -> np.ndarray:
    """Frame-center timestamps in seconds."""
    return (np.arange(num_frames) * spec.hop_size + spec.block_size / 2) / sample_rate


def stft_magnitude(buffer: AudioBuffer, spec: BlockSpec = TONAL_SPEC) -> Spectrogram:
    """Unnormalized one-sided DFT magnitudes of every frame."""
    frames = block_audio(buffer, spec)
    mags = np.abs(np.fft.rfft(frames, axis=1))
    freqs = np.arange(spec.block_size // 2 + 1) * (buffer.sample_rate / spec.block_size)
    return Spectrogram(mags, freqs, frame_times(len(frames), spec, buffer.sample_rate), spec, buffer.sample_rate)
