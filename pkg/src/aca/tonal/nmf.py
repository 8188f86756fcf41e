"""Non-negative matrix factorization with multiplicative updates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError

__all__ = ["NmfResult", "nmf", "CLAMP"]

CLAMP = 1e-12


@dataclass(frozen=True)
class NmfResult:
    """``V ~= templates @ activations``.

    templates : (num_bins, rank)
    activations : (rank, num_frames)
    loss_history : squared Frobenius error after every iteration
    """

    templates: np.ndarray
    activations: np.ndarray
    loss_history: np.ndarray
    seed: int

    def reconstruction(self) -> np.ndarray:
        return self.templates @ self.activations


def nmf(V, rank: int, iterations: int = 200, seed: int = 0) -> NmfResult:
    """Factorize a non-negative matrix minimizing ``||V - W H||_F^2``.

    W and H start uniform in (0, 1] from ``seed`` and follow the Lee-Seung
    multiplicative updates (H first, then W). Entries are clamped at 1e-12
    so that no factor entry gets stuck at zero.
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise ParameterError(f"V must be a matrix, got shape {V.shape}")
    if np.any(V < 0) or not np.all(np.isfinite(V)):
        raise ParameterError("V must contain finite non-negative entries")
    if rank < 1 or iterations < 1:
        raise ParameterError("rank and iterations must be >= 1")

    rng = np.random.default_rng(seed)
    m, n = V.shape
    W = 1.0 - rng.random((m, rank))
    H = 1.0 - rng.random((rank, n))

    losses = np.empty(iterations)
    for it in range(iterations):
        H *= (W.T @ V) / np.maximum(W.T @ W @ H, CLAMP)
        np.maximum(H, CLAMP, out=H)
        W *= (V @ H.T) / np.maximum(W @ (H @ H.T), CLAMP)
        np.maximum(W, CLAMP, out=W)
        R = V - W @ H
        losses[it] = np.einsum("ij,ij->", R, R)
    return NmfResult(W, H, losses, seed)
