"""
Self-similarity and structure
=============================

Compare every frame with every other frame, look for block edges along the
diagonal and for repeated material along the off-diagonals.
"""

# %%
import numpy as np

from aca import AudioBuffer, BlockSpec, stft_magnitude, synth
from aca.structure import boundary_novelty, repetition_lags, ssm
from aca.tonal import pitch_chroma

sr = 22050
spec = BlockSpec(4096, 2048, "hann")


def chord(*midi, seconds=4.0):
    x = sum(synth.sawtooth(float(synth.midi_to_hz(p)), seconds, sr, peak=None).samples for p in midi)
    return AudioBuffer(0.5 * x / np.max(np.abs(x)), sr)


# %%
# An A-B-A-B form with 4 s sections: a held C major triad, then a held
# F# minor triad, twice.
A, B = chord(60, 64, 67), chord(66, 69, 73)
song = synth.concatenate(A, B, A, B)
S = ssm(pitch_chroma(stft_magnitude(song, spec)))
print(f"{S.size} x {S.size} matrix, {S.hop * 1000:.0f} ms per frame")

# %%
# A coarse text rendering of the matrix.
step = max(1, S.size // 32)
for row in S.values[::step, ::step]:
    print("".join(" .:-=+*#%@"[int(v * 9.999)] for v in np.clip(row, 0, 1)))

# %%
# A checkerboard kernel slid along the diagonal peaks where one homogeneous
# block ends and the next begins. The final frame is half zero padding, which
# smears its chroma; a relative threshold of 0.35 keeps that small edge bump
# out of the result.
bounds = boundary_novelty(S, kernel_half_size=16, threshold_ratio=0.35)
print("boundaries (s):", np.round(bounds.times, 2), " true: 4, 8, 12")

# %%
# The second half repeats the first, so the lag of one A+B pass stands out.
reps = repetition_lags(S, min_lag=6.0)
lag, frames, support = reps.lags[0]
print(f"strongest repetition: {lag:.2f} s ({frames} frames), support {support:.2f}")
