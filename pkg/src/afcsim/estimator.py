"""Online normalized-gradient estimation of plant and residual-runout terms.

One stacked parameter vector [theta_a; theta_b; theta_m] is fitted against
the stacked regressor [past errors; past excitation; harmonic pairs]:

    theta(k+1) = theta(k) + K(k) * phi(k) * e_tilde(k) / (1 + phi(k).phi(k))

with e_tilde the one-step prediction error.  The normalization bounds every
step by K(k)*|e_tilde|/2 regardless of regressor scale, since
||phi|| / (1 + ||phi||^2) <= 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GainSchedule",
    "ParameterVector",
    "step_size_bound",
]


@dataclass(frozen=True)
class GainSchedule:
    """Decreasing adaptation gain K(k) = max(floor, k0 / (1 + decay*k)).

    decay = 0 gives the constant-gain mode used for tracking runs; a
    nonzero floor keeps adaptation alive for slowly drifting plants.
    """

    k0: float
    decay: float = 0.0
    floor: float = 0.0

    def __post_init__(self):
        if self.k0 < 0 or self.decay < 0 or self.floor < 0:
            raise ValueError("gain schedule parameters must be >= 0")

    def gain(self, k: int) -> float:
        return max(self.floor, self.k0 / (1.0 + self.decay * k))


class ParameterVector:
    """Stacked estimate [theta_a; theta_b; theta_m] with block views.

    theta_a has one slot per past-error tap, theta_b one per excitation
    tap, theta_m one per harmonic regressor component (2 per harmonic).
    """

    __slots__ = ("n_a", "n_b", "n_m", "stacked")

    def __init__(self, n_a: int, n_b: int, n_m: int, stacked=None):
        if n_a < 0 or n_b < 0 or n_m < 0:
            raise ValueError("block sizes must be >= 0")
        self.n_a = n_a
        self.n_b = n_b
        self.n_m = n_m
        dim = n_a + n_b + n_m
        if stacked is None:
            self.stacked = np.zeros(dim)
        else:
            arr = np.asarray(stacked, dtype=float)
            if arr.shape != (dim,):
                raise ValueError(
                    f"stacked vector has length {arr.size}, expected {dim}"
                )
            self.stacked = arr

    @classmethod
    def zeros(cls, n_a: int, n_b: int, n_harmonics: int) -> "ParameterVector":
        return cls(n_a, n_b, 2 * n_harmonics)

    @property
    def theta_a(self) -> np.ndarray:
        return self.stacked[: self.n_a]

    @property
    def theta_b(self) -> np.ndarray:
        return self.stacked[self.n_a : self.n_a + self.n_b]

    @property
    def theta_m(self) -> np.ndarray:
        return self.stacked[self.n_a + self.n_b :]

    def predict(self, phi: np.ndarray) -> float:
        """Predicted output theta . phi for a matching stacked regressor."""
        if phi.shape != self.stacked.shape:
            raise ValueError(
                f"regressor has length {phi.size}, expected {self.stacked.size}"
            )
        return float(np.dot(self.stacked, phi))

    def update(self, phi: np.ndarray, e_tilde: float, gain: float) -> "ParameterVector":
        """Normalized-gradient step; returns a new vector, inputs untouched."""
        if phi.shape != self.stacked.shape:
            raise ValueError(
                f"regressor has length {phi.size}, expected {self.stacked.size}"
            )
        if not math.isfinite(e_tilde):
            raise ValueError(f"non-finite prediction error: {e_tilde!r}")
        scale = gain * e_tilde / (1.0 + float(np.dot(phi, phi)))
        return ParameterVector(
            self.n_a, self.n_b, self.n_m, self.stacked + scale * phi
        )

    def copy(self) -> "ParameterVector":
        return ParameterVector(self.n_a, self.n_b, self.n_m, self.stacked.copy())


def step_size_bound(gain: float, e_tilde: float) -> float:
    """Upper bound K*|e_tilde|/2 on the norm of one update step."""
    return 0.5 * gain * abs(e_tilde)
