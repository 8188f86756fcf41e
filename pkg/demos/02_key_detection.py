"""
Key detection from pitch chroma
===============================

Fold spectral energy onto the twelve pitch classes, average over time and
correlate the result with rotated key profiles.
"""

# %%
import numpy as np

from aca import BlockSpec, stft_magnitude, synth
from aca.tonal import PITCH_CLASSES, average_chroma, detect_key, pitch_chroma

spec = BlockSpec(4096, 2048, "hann")

# %%
# An I-IV-V-I cadence in D major built from sawtooth triads.
audio = synth.cadence(2, "major")
chroma = average_chroma(pitch_chroma(stft_magnitude(audio, spec)))
for pc, e in zip(PITCH_CLASSES, chroma.energies):
    print(f"{pc:2s} {'#' * int(round(60 * e))}")

# %%
# Pearson correlation against the 24 rotations of a profile. The ranking
# shows how far ahead the winner is.
est = detect_key(chroma, "krumhansl")
print("estimate:", est.name)
for tonic, mode, score in est.ranking[:4]:
    print(f"  {PITCH_CLASSES[tonic]:2s} {mode:5s} {score:+.3f}")

# %%
# The diatonic profile is a flat scale template, so a major key and its
# relative minor share it up to rotation. That is where its errors land.
for tonic, mode in [(0, "major"), (9, "minor"), (7, "major")]:
    c = average_chroma(pitch_chroma(stft_magnitude(synth.cadence(tonic, mode), spec)))
    row = [detect_key(c, p).name for p in ("krumhansl", "temperley", "diatonic")]
    print(f"{PITCH_CLASSES[tonic]} {mode:5s} ->", " | ".join(row))

# %%
# The whole 24-key corpus.
hits = sum(
    detect_key(average_chroma(pitch_chroma(stft_magnitude(synth.cadence(t, m), spec)))).name
    == f"{PITCH_CLASSES[t]} {m}"
    for t in range(12) for m in ("major", "minor")
)
print(f"{hits}/24 keys correct")
assert np.isfinite(hits)
