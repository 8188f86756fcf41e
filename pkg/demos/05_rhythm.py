"""
Onsets, tempo and beats
=======================

Turn audio into a novelty curve, pick onsets from it, estimate tempo three
ways and lay a beat grid over the result.
"""

# %%
import numpy as np

from aca import synth
from aca.rhythm import novelty, pick_onsets, tempo_acf, tempo_comb, tempo_ioi, track_beats

# The first click sits at 0.5 s: novelty measures a rise against the previous
# frame, so an event in the very first frame has nothing to rise from.
buf, clicks = synth.click_track(132, 15.0, 44100, offset=0.5)
curve = novelty(buf, source="spectral_flux")
print(f"novelty: {len(curve.values)} frames at {curve.frame_rate:.1f} Hz")

# %%
# Onsets are local maxima above a fraction of the curve's maximum, kept at
# least 50 ms apart.
onsets = pick_onsets(curve, threshold_ratio=0.1, min_distance=0.05)
err = [np.min(np.abs(onsets.times - c)) for c in clicks]
print(f"{len(onsets.times)} onsets for {len(clicks)} clicks, worst error {1000 * max(err):.1f} ms")

# %%
# Three tempo estimators: novelty autocorrelation, a comb-filter resonator
# bank and the inter-onset-interval histogram.
print("acf ", round(tempo_acf(curve).bpm, 2))
print("comb", round(tempo_comb(curve, np.arange(60, 181)).bpm, 2))
print("ioi ", round(tempo_ioi(onsets).bpm, 2))

# %%
# 264 BPM is outside the tactus range; the estimate folds to half of it.
fast, _ = synth.click_track(264, 15.0, 44100)
print("264 BPM clicks ->", round(tempo_acf(novelty(fast)).bpm, 2))

# %%
# Beat tracking follows a step from 100 to 125 BPM halfway through.
step, step_clicks = synth.click_track(100, 20.0, 44100, tempo_change=(10.0, 125))
c = novelty(step)
grid = track_beats(c, pick_onsets(c), tempo_acf(c))
late = step_clicks[step_clicks > 13.0]
print("beats after the step, worst error:",
      f"{1000 * max(np.min(np.abs(grid.beat_times - t)) for t in late):.1f} ms")
print("local tempo at the end:", round(float(grid.bpm_track[-1]), 1), "BPM")
