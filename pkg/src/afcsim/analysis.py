"""Harmonic spectrum measurement and attenuation reporting.

Spectra are bin-exact projections onto cosine/sine pairs at integer
multiples of the once-per-revolution frequency, averaged over whole
revolutions.  Only the requested bins are computed (no full transform,
and no power-of-two constraint on the revolution length).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HarmonicSpectrum",
    "AttenuationReport",
    "harmonic_spectrum",
    "attenuation_report",
]


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Amplitude and phase per harmonic index, amplitude in signal units.

    Bin i describes the component amplitude_i * cos(2*pi*i*k/N + phase_i).
    """

    samples_per_rev: int
    indices: tuple[int, ...]
    amplitudes: np.ndarray
    phases: np.ndarray

    def amplitude_at(self, index: int) -> float:
        return float(self.amplitudes[self.indices.index(index)])

    def synthesize(self, n_samples: int) -> np.ndarray:
        """Reconstruct the analyzed harmonic content over n_samples."""
        n = self.samples_per_rev
        k = np.arange(n_samples)
        out = np.zeros(n_samples)
        for i, amp, ph in zip(self.indices, self.amplitudes, self.phases):
            out += amp * np.cos(2.0 * np.pi * i * k / n + ph)
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "amplitude", "phase"])
            for i, a, p in zip(self.indices, self.amplitudes, self.phases):
                writer.writerow([i, repr(float(a)), repr(float(p))])


def harmonic_spectrum(signal, samples_per_rev: int, indices) -> HarmonicSpectrum:
    """Project a signal onto the requested revolution-harmonic bins.

    The signal length must be a positive whole number of revolutions;
    every index must sit strictly below the Nyquist bin.  Averaging over
    revolutions happens before the projection (identical by linearity,
    and O(N) per bin afterwards).
    """
    x = np.asarray(signal, dtype=float)
    n = int(samples_per_rev)
    indices = tuple(int(i) for i in indices)
    if x.ndim != 1 or x.size == 0 or x.size % n != 0:
        raise ValueError(
            f"signal length {x.size} is not a positive multiple of {n}"
        )
    if any(i < 1 or 2 * i >= n for i in indices):
        raise ValueError("harmonic indices must satisfy 1 <= i < N/2")

    folded = x.reshape(-1, n).mean(axis=0)
    idx = np.asarray(indices, dtype=np.int64)
    # exact angle reduction, same convention as the regressor construction
    angles = 2.0 * np.pi * ((idx[:, None] * np.arange(n)) % n) / n
    a = (2.0 / n) * (np.cos(angles) @ folded)
    b = (2.0 / n) * (np.sin(angles) @ folded)
    amps = np.hypot(a, b)
    phases = np.arctan2(-b, a)
    return HarmonicSpectrum(n, indices, amps, phases)


@dataclass(frozen=True)
class AttenuationReport:
    """Per-harmonic before/after comparison against a noise floor.

    db holds 20*log10(after/before) with -inf where the residual is
    exactly zero; at_floor marks bins whose residual is within margin of
    the floor amplitude at the same bin.
    """

    indices: tuple[int, ...]
    before: np.ndarray
    after: np.ndarray
    floor: np.ndarray
    db: np.ndarray
    at_floor: np.ndarray
    margin: float

    @property
    def n_at_floor(self) -> int:
        return int(np.count_nonzero(self.at_floor))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.after))

    @property
    def worst_floor_ratio(self) -> float:
        """max over bins of after/floor (inf if some floor bin is zero)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(self.floor > 0, self.after / self.floor, np.inf)
        return float(np.max(ratio))

    def render(self) -> str:
        lines = [
            f"{'bin':>5} {'before':>13} {'after':>13} {'floor':>13} "
            f"{'dB':>9} {'at_floor':>8}"
        ]
        for j, i in enumerate(self.indices):
            lines.append(
                f"{i:>5} {self.before[j]:>13.6g} {self.after[j]:>13.6g} "
                f"{self.floor[j]:>13.6g} {self.db[j]:>9.2f} "
                f"{'yes' if self.at_floor[j] else 'NO':>8}"
            )
        lines.append(
            f"at floor: {self.n_at_floor}/{len(self.indices)}   "
            f"max residual: {self.max_residual:.6g}   margin: {self.margin:g}"
        )
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "before", "after", "floor", "db", "at_floor"])
            for j, i in enumerate(self.indices):
                writer.writerow(
                    [
                        i,
                        repr(float(self.before[j])),
                        repr(float(self.after[j])),
                        repr(float(self.floor[j])),
                        repr(float(self.db[j])),
                        int(self.at_floor[j]),
                    ]
                )


def attenuation_report(
    before: HarmonicSpectrum,
    after: HarmonicSpectrum,
    noise_floor: HarmonicSpectrum,
    margin: float = 2.0,
) -> AttenuationReport:
    """Compare spectra bin by bin; all three must share an index set."""
    if not (before.indices == after.indices == noise_floor.indices):
        raise ValueError("spectra cover different harmonic index sets")
    b = before.amplitudes
    a = after.amplitudes
    f = noise_floor.amplitudes
    db = np.empty_like(a)
    for j in range(a.size):
        if a[j] == 0.0:
            db[j] = -math.inf
        elif b[j] == 0.0:
            db[j] = math.inf
        else:
            db[j] = 20.0 * math.log10(a[j] / b[j])
    at_floor = a <= f * margin
    return AttenuationReport(
        before.indices, b.copy(), a.copy(), f.copy(), db, at_floor, margin
    )
