"""Boundary time-trace observations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TimeTrace:
    """Sampled boundary observation h(t), clean or noisy.

    noise_level is the recorded max-norm noise bound (0 for clean traces).
    """

    times: np.ndarray
    values: np.ndarray
    noise_level: float = 0.0
    provenance: str = "synthetic-clean"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have matching shapes")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly ascending")
        if self.noise_level < 0:
            raise ValueError("noise level must be nonnegative")

    def __len__(self) -> int:
        return len(self.times)
