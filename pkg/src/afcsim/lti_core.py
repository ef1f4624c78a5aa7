"""Discrete-time polynomial and rational-system arithmetic.

Everything here works on polynomials in the unit delay operator.  A
strictly proper numerator is stored as its coefficients c_1..c_n of
c_1*q^-1 + ... + c_n*q^-n (no constant term).  Monic denominators
A = 1 - A_star are stored through their "star" part, so the simulation
recursion reads

    y(k) = sum_i a_i * y(k-i) + sum_j b_j * u(k-j)

with plus signs everywhere.  One sign convention for the whole package.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DelayPolynomial",
    "FrequencyPoint",
    "RationalSystem",
]


@dataclass(frozen=True)
class FrequencyPoint:
    """Magnitude/phase of a delay polynomial at one normalized frequency.

    omega is in radians per sample, phase in (-pi, pi].
    """

    omega: float
    magnitude: float
    phase: float


class DelayPolynomial:
    """Real polynomial in q^-1 with delays 1..n (no constant term).

    Used both for numerators B and for the star part A_star of monic
    denominators A = 1 - A_star.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 1:
            raise ValueError("coefficients must be a 1-d sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        self.coeffs = c

    @property
    def order(self) -> int:
        return self.coeffs.size

    def complex_response(self, omega: float) -> complex:
        """Evaluate sum_j c_j * exp(-1j*omega*j) for j = 1..n."""
        _check_omega(omega)
        n = self.coeffs.size
        if n == 0:
            return 0.0 + 0.0j
        phases = np.exp(-1j * omega * np.arange(1, n + 1))
        return complex(np.dot(self.coeffs, phases))

    def freq_response(self, omega: float) -> FrequencyPoint:
        """Magnitude and phase at a normalized frequency in (0, pi)."""
        h = self.complex_response(omega)
        return FrequencyPoint(omega=omega, magnitude=abs(h), phase=cmath.phase(h))

    def monic_response(self, omega: float) -> complex:
        """Response of 1 - self, i.e. of the monic polynomial this star
        part represents."""
        return 1.0 - self.complex_response(omega)

    def __eq__(self, other):
        return isinstance(other, DelayPolynomial) and np.array_equal(
            self.coeffs, other.coeffs
        )

    def __repr__(self):
        return f"DelayPolynomial({self.coeffs.tolist()})"


class RationalSystem:
    """Strictly proper transfer function B(q^-1) / A(q^-1) with state.

    The denominator is supplied as its star part (A = 1 - A_star).  State
    is a pair of fixed-capacity buffers of past inputs and outputs, most
    recent first, so the per-sample cost is two short dot products.
    Output at step k depends only on samples before k.
    """

    def __init__(self, num, den_star):
        self.num = num if isinstance(num, DelayPolynomial) else DelayPolynomial(num)
        self.den_star = (
            den_star
            if isinstance(den_star, DelayPolynomial)
            else DelayPolynomial(den_star)
        )
        if self.num.order < 1:
            raise ValueError("numerator must have order >= 1 (strictly proper)")
        self._u_hist = np.zeros(self.num.order)
        self._y_hist = np.zeros(max(self.den_star.order, 1))

    def reset(self) -> None:
        """Zero all state; a reset system driven by zeros outputs zeros."""
        self._u_hist[:] = 0.0
        self._y_hist[:] = 0.0

    def step(self, u: float) -> float:
        """Advance one sample with input u, returning the output y(k)."""
        if not math.isfinite(u):
            raise ValueError(f"non-finite input sample: {u!r}")
        y = float(
            np.dot(self.den_star.coeffs, self._y_hist[: self.den_star.order])
            + np.dot(self.num.coeffs, self._u_hist)
        )
        uh = self._u_hist
        uh[1:] = uh[:-1]
        uh[0] = u
        yh = self._y_hist
        yh[1:] = yh[:-1]
        yh[0] = y
        return y

    def run(self, inputs) -> np.ndarray:
        """Step through a whole input sequence, returning the outputs."""
        out = np.empty(len(inputs))
        for k, u in enumerate(inputs):
            out[k] = self.step(float(u))
        return out

    def complex_response(self, omega: float) -> complex:
        """B(e^-jw) / A(e^-jw) at a normalized frequency in (0, pi)."""
        den = self.den_star.monic_response(omega)
        return self.num.complex_response(omega) / den

    def pole_magnitudes(self) -> np.ndarray:
        """Magnitudes of the roots of A(z), sorted descending.

        Diagnostic only: values >= 1 flag an unstable or marginal system.
        Simulation proceeds regardless; supplied models are never altered.
        """
        n = self.den_star.order
        if n == 0:
            return np.zeros(0)
        # A(q^-1) = 1 - a_1 q^-1 - ... - a_n q^-n  ->  z^n - a_1 z^(n-1) - ... - a_n
        mono = np.concatenate(([1.0], -self.den_star.coeffs))
        mags = np.abs(np.roots(mono))
        return np.sort(mags)[::-1]

    def __repr__(self):
        return f"RationalSystem(num={self.num!r}, den_star={self.den_star!r})"


def _check_omega(omega: float) -> None:
    if not (omega > 0.0 and omega <= math.pi):
        raise ValueError(f"omega must lie in (0, pi], got {omega!r}")
