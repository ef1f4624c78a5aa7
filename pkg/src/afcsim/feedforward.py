"""Feedforward coefficient adaptation: matrix-inverse and swapped variants.

The feedforward signal is u_a(k) = coeffs . phi_r(k) on the same harmonic
regressor as the runout.  Two update laws are provided:

* basic: coeffs <- coeffs - alpha * Dinv * theta_m, where D collects the
  per-harmonic 2x2 rotation-scaling blocks of the estimated numerator's
  frequency response (one tiny inversion per harmonic, guarded by
  magnitude smoothing and a freeze floor);
* improved: coeffs <- coeffs - alpha * [filtered phi_r] * [theta_m . phi_r],
  a rank-one step using the regressor filtered through the estimated
  numerator.  No inversion at all, which is the point.

Block convention, derived once and locked by tests: a steady-state pair
(c, s) meaning c*cos(w k) + s*sin(w k), filtered through a transfer with
magnitude m and phase psi, becomes block @ (c, s) with

    block = m * [[cos psi,  sin psi],
                 [-sin psi, cos psi]]

and, equivalently, filtering the regressor componentwise gives
block.T @ (cos(w k), sin(w k)).  Both update laws reduce to the same
per-harmonic geometry through this identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regressors import HarmonicSet

__all__ = [
    "ResponseBlocks",
    "ResponseSmoother",
    "NumeratorEvaluator",
    "FeedforwardState",
    "build_response_blocks",
    "evaluate_numerator",
]


def evaluate_numerator(theta_b: np.ndarray, omegas: np.ndarray) -> np.ndarray:
    """Complex response sum_j b_j exp(-1j*w*j) of a pure-delay numerator
    at each frequency."""
    theta_b = np.asarray(theta_b, dtype=float)
    taps = np.arange(1, theta_b.size + 1)
    return np.exp(-1j * np.outer(np.asarray(omegas, dtype=float), taps)) @ theta_b


class NumeratorEvaluator:
    """Precomputed exponent table for repeated numerator evaluations.

    The simulation loop calls this once per sample, so the (n_r x n_b)
    complex matrix is built a single time up front.
    """

    def __init__(self, omegas: np.ndarray, n_taps: int):
        taps = np.arange(1, n_taps + 1)
        self._table = np.exp(-1j * np.outer(np.asarray(omegas, dtype=float), taps))

    def response(self, theta_b: np.ndarray) -> np.ndarray:
        return self._table @ theta_b


@dataclass
class ResponseBlocks:
    """Per-harmonic 2x2 rotation-scaling blocks of a numerator response.

    Block i acts on the (cos, sin) slot pair of harmonic i; frozen marks
    harmonics whose raw magnitude sat below the floor and whose blocks
    must not be inverted.
    """

    mags: np.ndarray
    phases: np.ndarray
    frozen: np.ndarray

    def __post_init__(self):
        self.mags = np.asarray(self.mags, dtype=float)
        self.phases = np.asarray(self.phases, dtype=float)
        self.frozen = np.asarray(self.frozen, dtype=bool)
        if not (self.mags.shape == self.phases.shape == self.frozen.shape):
            raise ValueError("mags, phases and frozen must have equal length")

    @property
    def n_harmonics(self) -> int:
        return self.mags.size

    def block(self, i: int) -> np.ndarray:
        m, p = self.mags[i], self.phases[i]
        c, s = np.cos(p), np.sin(p)
        return m * np.array([[c, s], [-s, c]])

    def inverse_block(self, i: int) -> np.ndarray:
        if self.frozen[i]:
            raise ValueError(f"harmonic {i} is frozen; block not invertible")
        m, p = self.mags[i], self.phases[i]
        c, s = np.cos(p), np.sin(p)
        return np.array([[c, -s], [s, c]]) / m

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Blockwise D @ vec on an interleaved (cos, sin) vector."""
        c, s = vec[0::2], vec[1::2]
        cp, sp = np.cos(self.phases), np.sin(self.phases)
        out = np.empty_like(vec)
        out[0::2] = self.mags * (c * cp + s * sp)
        out[1::2] = self.mags * (-c * sp + s * cp)
        return out

    def apply_transpose(self, vec: np.ndarray) -> np.ndarray:
        """Blockwise D.T @ vec; equals filtering the regressor componentwise."""
        c, s = vec[0::2], vec[1::2]
        cp, sp = np.cos(self.phases), np.sin(self.phases)
        out = np.empty_like(vec)
        out[0::2] = self.mags * (c * cp - s * sp)
        out[1::2] = self.mags * (c * sp + s * cp)
        return out

    def apply_inverse(self, vec: np.ndarray) -> np.ndarray:
        """Blockwise D^-1 @ vec; every block must be unfrozen."""
        if np.any(self.frozen):
            raise ValueError("cannot invert: some harmonics are frozen")
        c, s = vec[0::2], vec[1::2]
        cp, sp = np.cos(self.phases), np.sin(self.phases)
        out = np.empty_like(vec)
        out[0::2] = (c * cp - s * sp) / self.mags
        out[1::2] = (c * sp + s * cp) / self.mags
        return out

    def as_matrix(self) -> np.ndarray:
        """Dense block-diagonal form, for tests and reports."""
        n = self.n_harmonics
        out = np.zeros((2 * n, 2 * n))
        for i in range(n):
            out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = self.block(i)
        return out


class ResponseSmoother:
    """Exponential averaging of per-harmonic magnitude and phase.

    Raw magnitudes below the floor freeze their harmonic: the stored
    average is not polluted and the caller skips that pair's inversion.
    The first above-floor sample seeds the average directly, so a stage
    whose numerator estimate starts at zero cannot drag the magnitude
    through near-zero values on its way up (that is the transient the
    inverse-based update cannot survive without this guard).

    beta = 0 disables averaging while keeping the freeze floor.
    """

    def __init__(self, beta: float = 0.95, floor: float = 1e-4):
        if not (0.0 <= beta < 1.0):
            raise ValueError("beta must lie in [0, 1)")
        if floor <= 0.0:
            raise ValueError("magnitude floor must be > 0")
        self.beta = float(beta)
        self.floor = float(floor)
        self._mags: np.ndarray | None = None
        self._phases: np.ndarray | None = None
        self._seeded: np.ndarray | None = None
        self.freeze_events = 0

    def update(self, raw_mags: np.ndarray, raw_phases: np.ndarray) -> ResponseBlocks:
        raw_mags = np.asarray(raw_mags, dtype=float)
        raw_phases = np.asarray(raw_phases, dtype=float)
        n = raw_mags.size
        if self._mags is None:
            self._mags = np.full(n, self.floor)
            self._phases = np.zeros(n)
            self._seeded = np.zeros(n, dtype=bool)
        if raw_mags.size != self._mags.size:
            raise ValueError("harmonic count changed between updates")

        live = raw_mags >= self.floor
        first = live & ~self._seeded
        track = live & self._seeded

        if np.any(first):
            self._mags[first] = raw_mags[first]
            self._phases[first] = raw_phases[first]
            self._seeded[first] = True
        if np.any(track):
            b = self.beta
            self._mags[track] = b * self._mags[track] + (1 - b) * raw_mags[track]
            # unwrap the raw phase to the branch nearest the running average
            delta = raw_phases[track] - self._phases[track]
            delta = (delta + np.pi) % (2 * np.pi) - np.pi
            self._phases[track] = self._phases[track] + (1 - b) * delta
        # below the floor now, or never yet seeded: not safe to invert
        frozen = ~live | ~self._seeded
        self.freeze_events += int(np.count_nonzero(frozen))
        return ResponseBlocks(self._mags.copy(), self._phases.copy(), frozen)


def build_response_blocks(
    theta_b: np.ndarray,
    harmonics: HarmonicSet,
    smoother: ResponseSmoother,
) -> ResponseBlocks:
    """Evaluate the estimated numerator at the harmonic set and smooth it."""
    resp = evaluate_numerator(theta_b, harmonics.omegas)
    return smoother.update(np.abs(resp), np.angle(resp))


class FeedforwardState:
    """Feedforward coefficients plus the state their update law needs.

    Single-writer: one instance per actuator stage.  The improved variant
    keeps the last n_taps harmonic regressor vectors so the filtered
    regressor is a short dot product with the current numerator estimate.
    """

    def __init__(self, dimension: int, alpha: float, n_taps: int = 0):
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        self.coeffs = np.zeros(dimension)
        self.alpha = float(alpha)
        self._past = np.zeros((n_taps, dimension)) if n_taps > 0 else None

    def control(self, phi_r: np.ndarray) -> float:
        """u_a(k) = coeffs . phi_r(k), whichever variant maintains coeffs."""
        if phi_r.shape != self.coeffs.shape:
            raise ValueError(
                f"regressor has length {phi_r.size}, expected {self.coeffs.size}"
            )
        return float(np.dot(self.coeffs, phi_r))

    def filter_regressor(self, theta_b: np.ndarray, phi_r: np.ndarray) -> np.ndarray:
        """Componentwise FIR of the regressor through the current numerator.

        Returns sum_j theta_b[j-1] * phi_r(k-j) from the stored past values
        (zeros before the start of the episode), then records phi_r(k).
        Current coefficients against past regressors: the standard
        slow-adaptation approximation.
        """
        if self._past is None:
            raise ValueError("state was built without filter taps")
        theta_b = np.asarray(theta_b, dtype=float)
        if theta_b.size != self._past.shape[0]:
            raise ValueError(
                f"numerator has {theta_b.size} taps, expected {self._past.shape[0]}"
            )
        out = theta_b @ self._past
        self._past[1:] = self._past[:-1]
        self._past[0] = phi_r
        return out

    def update_basic(self, blocks: ResponseBlocks, theta_m: np.ndarray) -> None:
        """coeffs -= alpha * Dinv * theta_m on unfrozen pairs; frozen pairs hold."""
        if 2 * blocks.n_harmonics != self.coeffs.size:
            raise ValueError("block count does not match coefficient pairs")
        live = ~blocks.frozen
        if not np.any(live):
            return
        c, s = theta_m[0::2], theta_m[1::2]
        cp, sp = np.cos(blocks.phases), np.sin(blocks.phases)
        mags = np.where(live, blocks.mags, 1.0)  # frozen lanes are masked out below
        dc = np.where(live, (c * cp - s * sp) / mags, 0.0)
        ds = np.where(live, (c * sp + s * cp) / mags, 0.0)
        self.coeffs[0::2] -= self.alpha * dc
        self.coeffs[1::2] -= self.alpha * ds

    def update_improved(self, filtered_phi: np.ndarray, residual: float) -> None:
        """coeffs -= alpha * filtered_phi * residual (rank-one, no inversion)."""
        if filtered_phi.shape != self.coeffs.shape:
            raise ValueError(
                f"filtered regressor has length {filtered_phi.size}, "
                f"expected {self.coeffs.size}"
            )
        self.coeffs -= (self.alpha * residual) * filtered_phi
