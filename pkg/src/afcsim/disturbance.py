"""Synthetic disturbances: periodic runout and broadband noise.

The periodic component (repeatable runout) is a sum of cosines at the
harmonic set's frequencies, exactly periodic over one revolution.  The
broadband component (non-repeatable runout) is seeded white noise with an
optional shaping filter and sets the achievable cancellation floor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .lti_core import DelayPolynomial, RationalSystem
from .regressors import HarmonicSet

__all__ = [
    "RroProfile",
    "NrroModel",
    "random_profile",
]


@dataclass(frozen=True)
class RroProfile:
    """Per-harmonic amplitude and phase of the periodic runout.

    Sample k of the signal is sum_i amp_i * cos(omega_i * k + phase_i).
    Amplitudes are in the same units as the error signal.
    """

    harmonics: HarmonicSet
    amplitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=float)
        ph = np.asarray(self.phases, dtype=float)
        if amp.shape != (self.harmonics.n_harmonics,) or ph.shape != amp.shape:
            raise ValueError("need one amplitude and phase per harmonic index")
        if np.any(amp < 0):
            raise ValueError("amplitudes must be >= 0")
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "phases", ph)

    def sample(self, k: int) -> float:
        """Runout value at sample k >= 0."""
        if k < 0:
            raise ValueError("sample index must be >= 0")
        n = self.harmonics.samples_per_rev
        km = k % n
        idx = np.asarray(self.harmonics.indices, dtype=np.int64)
        angles = 2.0 * np.pi * ((idx * km) % n) / n
        return float(np.dot(self.amplitudes, np.cos(angles + self.phases)))

    def revolution(self) -> np.ndarray:
        """One exact period of the signal; sample k is revolution()[k % N]."""
        n = self.harmonics.samples_per_rev
        return np.array([self.sample(k) for k in range(n)])

    def coefficient_pairs(self) -> np.ndarray:
        """Interleaved (cos, sin) coefficients of the raw signal.

        amp*cos(w k + p) = amp*cos(p)*cos(w k) - amp*sin(p)*sin(w k), so
        pair i is [amp_i*cos(phase_i), -amp_i*sin(phase_i)].
        """
        out = np.empty(self.harmonics.dimension)
        out[0::2] = self.amplitudes * np.cos(self.phases)
        out[1::2] = -self.amplitudes * np.sin(self.phases)
        return out

    def filtered_coefficients(self, a_star: DelayPolynomial) -> np.ndarray:
        """Regressor coefficients of the runout after the monic filter 1 - a_star.

        Filtering a steady-state pair (c, s) through a transfer with
        magnitude m and phase psi at that frequency maps it to
        (m*(c*cos psi + s*sin psi), m*(-c*sin psi + s*cos psi)) -- the same
        rotation-scaling block convention used by the feedforward stage.
        """
        pairs = self.coefficient_pairs()
        out = np.empty_like(pairs)
        for i, omega in enumerate(self.harmonics.omegas):
            h = a_star.monic_response(omega)
            m, psi = abs(h), np.angle(h)
            c, s = pairs[2 * i], pairs[2 * i + 1]
            out[2 * i] = m * (c * np.cos(psi) + s * np.sin(psi))
            out[2 * i + 1] = m * (-c * np.sin(psi) + s * np.cos(psi))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "amplitude", "phase"])
            for i, a, p in zip(self.harmonics.indices, self.amplitudes, self.phases):
                writer.writerow([i, repr(float(a)), repr(float(p))])

    @classmethod
    def from_csv(cls, path, spindle_hz: float, samples_per_rev: int) -> "RroProfile":
        indices, amps, phases = [], [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or set(reader.fieldnames) != {
                "index",
                "amplitude",
                "phase",
            }:
                raise ValueError(f"profile CSV needs columns index,amplitude,phase: {path}")
            for row in reader:
                indices.append(int(row["index"]))
                amps.append(float(row["amplitude"]))
                phases.append(float(row["phase"]))
        order = np.argsort(indices)
        h = HarmonicSet(spindle_hz, samples_per_rev, tuple(indices[i] for i in order))
        return cls(h, np.asarray(amps)[order], np.asarray(phases)[order])


def random_profile(
    harmonics: HarmonicSet,
    seed: int,
    amplitude_scale: float = 1.0,
    decay_exponent: float = 1.0,
) -> RroProfile:
    """Seeded runout profile with a declining amplitude envelope.

    Amplitude of harmonic i is amplitude_scale * u / i**decay_exponent with
    u drawn uniformly from [0.5, 1.5]; phases are uniform over (-pi, pi].
    A declared stand-in for measured servo-track profiles.
    """
    rng = np.random.default_rng(seed)
    idx = np.asarray(harmonics.indices, dtype=float)
    envelope = amplitude_scale / idx**decay_exponent
    amps = envelope * rng.uniform(0.5, 1.5, size=idx.size)
    phases = rng.uniform(-np.pi, np.pi, size=idx.size)
    return RroProfile(harmonics, amps, phases)


class NrroModel:
    """Seeded broadband noise, optionally shaped by a discrete filter.

    The same seed and parameters reproduce the sequence bit for bit,
    which is what makes noise-floor comparisons between runs meaningful.
    """

    def __init__(self, sigma: float, seed: int, shaping: RationalSystem | None = None):
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        self.sigma = float(sigma)
        self.seed = int(seed)
        self.shaping = shaping
        self._rng = np.random.default_rng(self.seed)

    def sample(self) -> float:
        """Next noise sample."""
        if self.sigma == 0.0:
            return 0.0
        x = self.sigma * float(self._rng.standard_normal())
        if self.shaping is not None:
            x = self.shaping.step(x)
        return x

    def generate(self, n: int) -> np.ndarray:
        """The next n samples (identical to n repeated sample() calls)."""
        return np.array([self.sample() for _ in range(n)])
