"""
Two-class audio classification
==============================

Noise bursts against harmonic tones, described by two numbers per file: mean
spectral centroid and the standard deviation of RMS.
"""

# %%
import numpy as np

from aca import BlockSpec, stft_magnitude, synth
from aca.classify import LabeledDataset, evaluate, fit_knn, fit_threshold, leave_one_out
from aca.features import rms, spectral_centroid

spec = BlockSpec(1024, 512, "hann")
rng = np.random.default_rng(0)


def describe(buf):
    return [spectral_centroid(stft_magnitude(buf, spec)).values.mean(), rms(buf, spec).values.std()]


vectors, labels = [], []
for i in range(30):
    vectors.append(describe(synth.noise_burst(1.0, seed=i, amplitude=rng.uniform(0.2, 0.8))))
    labels.append("noise")
    tone = synth.harmonic_complex(rng.uniform(100, 400), int(rng.integers(3, 9)), 1.0, 22050)
    vectors.append(describe(tone.scaled(rng.uniform(0.2, 0.8))))
    labels.append("tone")
data = LabeledDataset(vectors, labels, [str(i) for i in range(60)], ["centroid_mean", "rms_std"])

# %%
# The class means are far apart on the centroid axis.
for c in data.classes:
    X = data.vectors[np.array(data.labels) == c]
    print(f"{c:5s} centroid {X[:, 0].mean():7.1f} Hz   rms std {X[:, 1].mean():.4f}")

# %%
# A single threshold on one feature already separates most of the data.
th = fit_threshold(data, 0)
print(f"threshold {th.threshold:.1f} Hz: '{th.label_above}' above, training accuracy {th.training_accuracy:.2f}")

# %%
# Nearest neighbour on z-scored features, scored by leaving each point out.
report = leave_one_out(data, k=1)
print("1-NN leave-one-out accuracy:", report["accuracy"])
print("confusion (rows = truth):", report["labels"], report["confusion_matrix"])

# %%
# Train on a random half, test on the rest.
order = rng.permutation(len(data))
train, test = data.subset(order[:30]), data.subset(order[30:])
print("3-NN held-out accuracy:", evaluate(fit_knn(train, 3), test)["accuracy"])
