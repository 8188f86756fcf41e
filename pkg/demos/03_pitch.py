"""
Monophonic pitch tracking
=========================

Autocorrelation in the time domain against the harmonic product spectrum in
the frequency domain, including the case HPS gets wrong.
"""

# %%
import numpy as np

from aca import AudioBuffer, BlockSpec, stft_magnitude, synth
from aca.tonal import acf, acf_f0, hps_f0, iterative_subtraction_f0

sr = 44100
rect = BlockSpec(4096, 2048, "rectangular")
hann = BlockSpec(4096, 2048, "hann")

# %%
# The normalized ACF of a 200 Hz sawtooth frame peaks at the period,
# sr / 200 = 220.5 samples.
frame = synth.sawtooth(200.0, 0.1, sr).samples[:2048]
r = acf(frame)
lag = 100 + int(np.argmax(r[100:400]))
print("ACF peak lag", lag, "->", round(sr / lag, 1), "Hz")

# %%
# Tracking across frequencies. Parabolic interpolation around the peak keeps
# the error well below a percent.
for f in (82.4, 196.0, 440.0, 987.8):
    est = np.median(acf_f0(synth.sawtooth(f, 0.5, sr), rect).frequencies[1:-2])
    print(f"acf  true {f:6.1f} Hz  est {est:7.2f} Hz")

# %%
# HPS multiplies the spectrum with its decimated copies. The true fundamental
# is the only bin that lines up with every harmonic. Its resolution is one
# FFT bin, here 10.8 Hz.
for f in (110.0, 330.0):
    est = np.median(hps_f0(stft_magnitude(synth.sawtooth(f, 0.5, sr), hann)).frequencies)
    print(f"hps  true {f:6.1f} Hz  est {est:7.2f} Hz")

# %%
# Remove the fundamental and HPS follows the lowest harmonic that is present.
# A listener still hears 200 Hz.
spg = stft_magnitude(synth.harmonic_complex(200.0, range(2, 9), 1.0, sr), hann)
est = np.median(hps_f0(spg, fmin=50, fmax=1100).frequencies)
print(f"missing fundamental: HPS says {est:.1f} Hz, the perceived pitch is 200 Hz")

# %%
# Two voices at once: pick the strongest HPS peak, cancel its harmonics and
# repeat.
duo = synth.harmonic_complex(200.0, 6, 0.5, sr).samples + synth.harmonic_complex(330.0, 6, 0.5, sr).samples
voices = iterative_subtraction_f0(stft_magnitude(AudioBuffer(duo, sr), hann), max_voices=2)
print("voices in frame 3:", np.round(voices[3], 1))
