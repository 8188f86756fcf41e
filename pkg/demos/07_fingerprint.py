"""
Audio fingerprinting
====================

Reduce audio to a stream of 32-bit words, index them, and identify a
degraded excerpt by looking up exact word hits and verifying the bit error
rate over a 256-word block.
"""

# %%
import numpy as np

from aca import AudioBuffer, synth
from aca.fingerprint import (
    BLOCK_LEN,
    Fingerprint,
    FingerprintDB,
    exhaustive_search,
    extract_fingerprint,
    identify,
)

sr = 44100
fp = extract_fingerprint(synth.noise_burst(3.0, sr, seed=0))
print(f"3 s of audio -> {len(fp)} words, {fp.num_bits} bits")

# %%
# A library of eight synthetic tracks. They are continuous noise: gated
# material with long silent stretches would share all-zero words between
# tracks and blur the distinction.
db = FingerprintDB()
library = {}
for i in range(8):
    audio = AudioBuffer(np.random.default_rng(i).uniform(-0.5, 0.5, 20 * sr), sr)
    library[f"track{i}"] = audio
    db.add(f"track{i}", f"synthetic track {i}", extract_fingerprint(audio))
print(len(db), "tracks,", db.num_postings(), "postings,", len(db.index_keys()), "distinct words")

# %%
# Query: 4 s cut from track 5, with added noise at about 20 dB SNR.
rng = np.random.default_rng(1)
clip = library["track5"].samples[7 * sr: 11 * sr]
noisy = clip + rng.normal(0, 0.1 * np.std(clip), clip.size)
q = extract_fingerprint(AudioBuffer(noisy, sr))
m = identify(db, q)
print(f"match {m.track_id} at {m.offset:.2f} s, BER {m.bit_error_rate:.3f}")

# %%
# The index only proposes alignments where at least one word matches
# exactly. On a small library a full scan over every offset confirms the
# answer.
ber, tid, off = exhaustive_search(db, Fingerprint(q.subfingerprints[:BLOCK_LEN]))
print(f"exhaustive scan: {tid} at frame {off}, BER {ber:.3f}")

# %%
# Unrelated audio stays above the 0.35 threshold.
other = extract_fingerprint(AudioBuffer(np.random.default_rng(99).uniform(-0.5, 0.5, 4 * sr), sr))
print("unrelated query ->", identify(db, other))
