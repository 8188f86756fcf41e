"""Deterministic test-signal generators (tones, click tracks, cadences, noise)."""
from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .signal import AudioBuffer

__all__ = [
    "midi_to_hz",
    "sine",
    "harmonic_complex",
    "sawtooth",
    "click_track",
    "cadence",
    "noise_burst",
    "concatenate",
]


def midi_to_hz(pitch, tuning: float = 440.0):
    return tuning * 2.0 ** ((np.asarray(pitch, dtype=np.float64) - 69.0) / 12.0)


def _time(duration: float, sr: int) -> np.ndarray:
    return np.arange(int(round(duration * sr))) / sr


def sine(freq: float, duration: float, sr: int = 44100, amplitude: float = 1.0,
         phase: float = 0.0) -> AudioBuffer:
    t = _time(duration, sr)
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq * t + phase), sr)


def harmonic_complex(f0: float, harmonics, duration: float, sr: int = 44100,
                     amplitudes=None, peak: float | None = 0.9) -> AudioBuffer:
    """Sum of sines at ``h * f0`` for every ``h`` in ``harmonics`` (int n means 1..n).

    Partials above Nyquist are dropped. With ``peak`` the result is scaled to
    that absolute maximum.
    """
    if np.isscalar(harmonics):
        harmonics = range(1, int(harmonics) + 1)
    harmonics = [h for h in harmonics if h * f0 < sr / 2]
    if amplitudes is None:
        amplitudes = np.ones(len(harmonics))
    elif callable(amplitudes):
        amplitudes = [amplitudes(h) for h in harmonics]
    t = _time(duration, sr)
    x = np.zeros_like(t)
    for h, a in zip(harmonics, amplitudes):
        x += a * np.sin(2 * np.pi * h * f0 * t)
    if peak is not None and np.max(np.abs(x)) > 0:
        x *= peak / np.max(np.abs(x))
    return AudioBuffer(x, sr)


def sawtooth(f0: float, duration: float, sr: int = 44100, num_harmonics: int = 5,
             peak: float | None = 0.9) -> AudioBuffer:
    """Band-limited sawtooth: harmonics 1..num_harmonics with amplitude 1/h."""
    return harmonic_complex(f0, num_harmonics, duration, sr, amplitudes=lambda h: 1.0 / h, peak=peak)


def _click(sr: int, length_s: float = 0.005, seed: int = 0) -> np.ndarray:
    n = max(1, int(round(length_s * sr)))
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, n) * np.exp(-np.arange(n) / (0.2 * n))


def click_track(bpm: float, duration: float, sr: int = 44100, offset: float = 0.0,
                tempo_change: tuple[float, float] | None = None, amplitude: float = 0.8,
                seed: int = 0) -> tuple[AudioBuffer, np.ndarray]:
    """Short noise clicks on a metronome grid.

    ``tempo_change=(time, new_bpm)`` switches tempo at the first beat at or after
    ``time``. Returns the buffer and the click onset times in seconds.
    """
    if bpm <= 0 or duration <= 0:
        raise ParameterError("bpm and duration must be positive")
    times = []
    t, period = offset, 60.0 / bpm
    while t < duration:
        times.append(t)
        if tempo_change is not None and t + period >= tempo_change[0]:
            period = 60.0 / tempo_change[1]
        t += period
    n = int(round(duration * sr))
    x = np.zeros(n)
    click = amplitude * _click(sr, seed=seed)
    for t in times:
        s = int(round(t * sr))
        seg = click[: max(0, n - s)]
        x[s:s + len(seg)] += seg
    return AudioBuffer(x, sr), np.array(times)


_TRIADS = {
    "major": [(0, 4, 7), (5, 9, 12), (7, 11, 14), (0, 4, 7)],
    "minor": [(0, 3, 7), (5, 8, 12), (7, 11, 14), (0, 3, 7)],
}


def cadence(tonic: int, mode: str, sr: int = 22050, chord_duration: float = 1.0,
            num_harmonics: int = 8, base_octave_midi: int = 60) -> AudioBuffer:
    """I-IV-V-I (minor: i-iv-V-i) root-position triads with sawtooth voices.

    ``tonic`` is a pitch class (0 = C); the chord roots sit in the octave
    starting at ``base_octave_midi``.
    """
    if mode not in _TRIADS:
        raise ParameterError(f"mode must be 'major' or 'minor', got {mode!r}")
    root = base_octave_midi + tonic % 12
    t = _time(chord_duration, sr)
    fade = np.minimum(1.0, np.minimum(t, chord_duration - t) / 0.01)
    chords = []
    for triad in _TRIADS[mode]:
        x = np.zeros_like(t)
        for interval in triad:
            f = float(midi_to_hz(root + interval))
            x += sawtooth(f, chord_duration, sr, num_harmonics, peak=None).samples
        chords.append(x * fade)
    y = np.concatenate(chords)
    return AudioBuffer(0.9 * y / np.max(np.abs(y)), sr)


def noise_burst(duration: float, sr: int = 22050, seed: int = 0, amplitude: float = 0.5,
                bursts: int = 4) -> AudioBuffer:
    """White noise gated into ``bursts`` on/off segments of random length."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sr))
    x = rng.uniform(-1.0, 1.0, n) * amplitude
    gate = np.zeros(n)
    edges = np.sort(rng.integers(0, n, 2 * bursts))
    for a, b in zip(edges[::2], edges[1::2]):
        gate[a:b] = 1.0
    return AudioBuffer(x * gate, sr)


def concatenate(*buffers: AudioBuffer) -> AudioBuffer:
    rates = {b.sample_rate for b in buffers}
    if len(rates) != 1:
        raise ParameterError("cannot concatenate buffers with different sample rates")
    return AudioBuffer(np.concatenate([b.samples for b in buffers]), rates.pop())
