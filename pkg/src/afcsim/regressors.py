"""Regressor construction: harmonic cosine/sine pairs and tapped delays.

The harmonic regressor is laid out as interleaved (cos_i, sin_i) pairs in
index order, so per-harmonic 2x2 operations act on contiguous slots.
Angles are reduced exactly in integer arithmetic before any trig call:
omega_i * k mod 2*pi == 2*pi * ((i*k) mod N) / N, so the regressor is
N-periodic bit for bit and never drifts over long runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HarmonicSet",
    "TappedDelayLine",
    "parse_index_spec",
    "rro_regressor",
    "regressor_table",
]


def parse_index_spec(spec) -> tuple[int, ...]:
    """Parse a harmonic index spec into a sorted tuple of distinct ints.

    Accepts an iterable of ints or a string of comma-separated entries,
    each either a single index or an inclusive range like "1-58".
    """
    if isinstance(spec, str):
        out: set[int] = set()
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo_s, hi_s = part.split("-", 1)
                lo, hi = int(lo_s), int(hi_s)
                if hi < lo:
                    raise ValueError(f"empty index range: {part!r}")
                out.update(range(lo, hi + 1))
            else:
                out.add(int(part))
        indices = tuple(sorted(out))
    else:
        indices = tuple(sorted(set(int(i) for i in spec)))
    if not indices:
        raise ValueError("harmonic index set is empty")
    return indices


@dataclass(frozen=True)
class HarmonicSet:
    """Target frequencies: harmonics of the once-per-revolution rate.

    Harmonic index i maps to omega_i = 2*pi*i / samples_per_rev radians
    per sample (i.e. i cycles per revolution).  All indices must sit
    strictly below the Nyquist bin samples_per_rev / 2.
    """

    spindle_hz: float
    samples_per_rev: int
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", parse_index_spec(self.indices))
        n = self.samples_per_rev
        if n < 2:
            raise ValueError("samples_per_rev must be >= 2")
        if self.indices[0] < 1:
            raise ValueError("harmonic indices must be >= 1")
        if 2 * self.indices[-1] >= n:
            raise ValueError(
                f"harmonic {self.indices[-1]} at or above Nyquist "
                f"for samples_per_rev={n}"
            )

    @property
    def n_harmonics(self) -> int:
        return len(self.indices)

    @property
    def dimension(self) -> int:
        """Length of the harmonic regressor: one (cos, sin) pair per index."""
        return 2 * len(self.indices)

    @property
    def omegas(self) -> np.ndarray:
        """Normalized angular frequencies, radians per sample."""
        return 2.0 * np.pi * np.asarray(self.indices, dtype=float) / self.samples_per_rev

    def frequencies_hz(self) -> np.ndarray:
        return self.spindle_hz * np.asarray(self.indices, dtype=float)


def rro_regressor(harmonics: HarmonicSet, k: int) -> np.ndarray:
    """Harmonic regressor at sample k: [cos(w_1 k), sin(w_1 k), ...].

    k must be >= 0.  Exact angle reduction keeps phi(k + N) == phi(k)
    bit-identical for all k.
    """
    if k < 0:
        raise ValueError("sample index must be >= 0")
    n = harmonics.samples_per_rev
    km = k % n
    idx = np.asarray(harmonics.indices, dtype=np.int64)
    angles = 2.0 * np.pi * ((idx * km) % n) / n
    out = np.empty(2 * idx.size)
    out[0::2] = np.cos(angles)
    out[1::2] = np.sin(angles)
    return out


def regressor_table(harmonics: HarmonicSet) -> np.ndarray:
    """Stack rro_regressor rows for one full revolution (N x 2*n_r).

    Row k holds the regressor at sample k; for any k the regressor is
    table[k % N].  Precomputed once per episode by the simulation loop.
    """
    n = harmonics.samples_per_rev
    table = np.empty((n, harmonics.dimension))
    for k in range(n):
        table[k] = rro_regressor(harmonics, k)
    return table


class TappedDelayLine:
    """Last `depth` samples of a scalar signal, most recent first.

    read() after pushing x(0..k) returns [x(k), x(k-1), ..., x(k-depth+1)],
    zero-padded before the start of the signal.  The simulation loop reads
    a line *before* pushing the current sample, so the read value supplies
    the strictly past taps x(k-1)..x(k-depth) required by the regressors.
    """

    __slots__ = ("_values",)

    def __init__(self, depth: int):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self._values = np.zeros(depth)

    @property
    def depth(self) -> int:
        return self._values.size

    def push(self, x: float) -> None:
        v = self._values
        v[1:] = v[:-1]
        v[0] = x

    def read(self) -> np.ndarray:
        """Copy of the stored taps, most recent first."""
        return self._values.copy()

    @property
    def values(self) -> np.ndarray:
        """Internal tap array (view; treat as read-only)."""
        return self._values

    def reset(self) -> None:
        self._values[:] = 0.0
