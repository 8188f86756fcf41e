"""
Frame-level features
====================

Read a signal, slice it into blocks and summarize each block with a few
numbers: spectral centroid, RMS, peak envelope and MFCCs.
"""

# %%
# A one-second mix: a 220 Hz sawtooth for the first half, white noise for the
# second. Writing and reading it back exercises the WAV codec.
import tempfile
from pathlib import Path

import numpy as np

from aca import AudioBuffer, BlockSpec, read_wav, stft_magnitude, write_wav
from aca import features, synth

sr = 22050
tone = synth.sawtooth(220.0, 0.5, sr)
noise = AudioBuffer(np.random.default_rng(1).uniform(-0.5, 0.5, sr // 2), sr)
mix = synth.concatenate(tone, noise)

path = Path(tempfile.mkdtemp()) / "mix.wav"
write_wav(path, mix)
buf = read_wav(path)
print(f"{buf.duration:.2f} s at {buf.sample_rate} Hz")

# %%
# 1024-sample Hann blocks with 50 % overlap. Each row of the spectrogram is one
# block; its time stamp is the block centre.
spec = BlockSpec(1024, 512, "hann")
spg = stft_magnitude(buf, spec)
print("spectrogram", spg.magnitudes.shape, "bin width", round(spg.bin_width, 2), "Hz")

# %%
# The centroid jumps when the noise starts: noise spreads its energy across
# the whole band while the sawtooth keeps it near its low harmonics.
centroid = features.spectral_centroid(spg).values[:, 0]
half = len(centroid) // 2
print(f"centroid, tone half : {np.median(centroid[:half - 1]):7.1f} Hz")
print(f"centroid, noise half: {np.median(centroid[half + 1:]):7.1f} Hz")

# %%
# RMS and peak envelope follow loudness; the MFCCs describe spectral shape.
loud = features.rms(buf, spec)
coeffs = features.mfcc(spg, num_bands=40, num_coefficients=13)
print("mfcc matrix", coeffs.values.shape)

# %%
# Aggregating turns the time series into one fixed-length vector per file,
# which is what the classifiers consume.
agg = features.aggregate([features.spectral_centroid(spg), loud])
for name, value in agg.as_dict().items():
    print(f"{name:24s} {value:10.4f}")
