"""
Spectrogram factorization
=========================

Split a magnitude spectrogram into spectral templates and their activations
with multiplicative updates.
"""

# %%
import numpy as np

from aca import AudioBuffer, BlockSpec, stft_magnitude, synth
from aca.tonal import nmf

sr = 22050
spec = BlockSpec(2048, 1024, "hann")

# %%
# Two notes that alternate and then overlap: A3, then E4, then both.
a = synth.sawtooth(220.0, 0.5, sr).samples
e = synth.sawtooth(329.6, 0.5, sr).samples
x = np.concatenate([a, e, a + e])
V = stft_magnitude(AudioBuffer(x / np.max(np.abs(x)), sr), spec).magnitudes.T
print("V is bins x frames:", V.shape)

# %%
# Rank 2, seeded. The loss never increases under the update rules.
res = nmf(V, rank=2, iterations=200, seed=0)
print("loss start/end:", f"{res.loss_history[0]:.3g}", f"{res.loss_history[-1]:.3g}")
print("monotone:", bool(np.all(np.diff(res.loss_history) <= 1e-9)))

# %%
# Each template should peak near one of the two fundamentals, and its
# activation should be high exactly where that note sounds.
freqs = np.arange(V.shape[0]) * sr / spec.block_size
for j in range(2):
    peak = freqs[np.argmax(res.templates[:, j])]
    h = res.activations[j]
    thirds = np.array_split(h, 3)
    print(f"template {j}: peak {peak:6.1f} Hz, activation by third",
          np.round([t.mean() / h.max() for t in thirds], 2))
