"""Odd phase polynomials and the control fields they generate.

The accumulated rotation angle phi is parameterized as an odd polynomial
in the scaled time x = 2t/T - 1,

    phi(x) = p_1 x + p_3 x^3 + ... + p_{2N-1} x^{2N-1},

so the control field Omega(t) = dphi/dt is an even polynomial in x,
symmetric about the pulse midpoint t = T/2.  Everything here is a pure
function of the coefficient vector; no state is shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhasePolynomial",
    "GateTarget",
    "PulseWaveform",
    "eval_phi",
    "eval_omega",
    "boundary_residuals",
    "sample_waveform",
    "max_slope",
    "waveform_to_csv",
]

_X_TOL = 1e-12


@dataclass(frozen=True)
class PhasePolynomial:
    """Coefficients (p_1, p_3, ..., p_{2N-1}) of an odd polynomial phase."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) < 1:
            raise ValueError("need at least one coefficient")
        if not all(np.isfinite(coeffs)):
            raise ValueError(f"non-finite coefficients: {coeffs}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_coeffs(self) -> int:
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        return 2 * len(self.coeffs) - 1


@dataclass(frozen=True)
class GateTarget:
    """Target x-rotation angle, noise-suppression order and gate duration."""

    theta: float
    k: int
    T: float

    def __post_init__(self):
        if not np.isfinite(self.theta):
            raise ValueError("theta must be finite")
        if self.k < 0 or int(self.k) != self.k:
            raise ValueError("k must be a non-negative integer")
        if not self.T > 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class PulseWaveform:
    """Uniformly sampled control field Omega(t) on [0, T].

    ``source`` keeps the generating polynomial so that derived quantities
    (slopes) can be computed analytically rather than from the samples.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    source: "PhasePolynomial | None" = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        a = np.asarray(self.amplitudes, dtype=float)
        if t.ndim != 1 or a.shape != t.shape:
            raise ValueError("times and amplitudes must be matching 1-d arrays")
        if t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing with >= 2 samples")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "amplitudes", a)

    @property
    def duration(self) -> float:
        return float(self.times[-1])


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + _X_TOL):
        raise ValueError(f"scaled time outside [-1, 1]: max |x| = {np.max(np.abs(x))}")
    return x


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


_SPLITTER = 134217729.0  # 2^27 + 1, Dekker coefficient splitting


def _two_prod(a, b):
    p = a * b
    ca = _SPLITTER * a
    a_hi = ca - (ca - a)
    a_lo = a - a_hi
    cb = _SPLITTER * b
    b_hi = cb - (cb - b)
    b_lo = b - b_hi
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, err


def eval_phi(poly: PhasePolynomial, x):
    """Evaluate phi(x) = sum_j p_{2j-1} x^{2j-1} for |x| <= 1.

    Uses a compensated Horner recursion in u = x^2 (error-free
    transformations for each product and sum).  The alternating
    coefficients of high-order solutions reach ~1e6 while phi itself
    stays O(10), so plain double Horner would leave ~1e-10 absolute
    noise in the phase; compensation reduces it to ~eps * |phi|.
    """
    x = _check_x(x)
    u = x * x
    acc = np.zeros_like(u)
    comp = np.zeros_like(u)
    for c in reversed(poly.coeffs):
        p, e_prod = _two_prod(acc, u)
        acc, e_sum = _two_sum(p, c)
        comp = comp * u + (e_prod + e_sum)
    return x * (acc + comp)


def _dphi_dx(poly: PhasePolynomial, x):
    """First derivative of phi with respect to x (even polynomial)."""
    u = np.asarray(x, dtype=float) ** 2
    acc = np.zeros_like(u)
    for j in range(poly.n_coeffs, 0, -1):
        acc = acc * u + (2 * j - 1) * poly.coeffs[j - 1]
    return acc


def _d2phi_dx2(poly: PhasePolynomial, x):
    """Second derivative of phi with respect to x (odd polynomial)."""
    x = np.asarray(x, dtype=float)
    u = x * x
    acc = np.zeros_like(u)
    for j in range(poly.n_coeffs, 1, -1):
        acc = acc * u + (2 * j - 1) * (2 * j - 2) * poly.coeffs[j - 1]
    return x * acc


def eval_omega(poly: PhasePolynomial, t, T: float):
    """Control field Omega(t) = (2/T) dphi/dx at x = 2t/T - 1, for t in [0, T]."""
    t = np.asarray(t, dtype=float)
    if np.any(t < -_X_TOL * T) or np.any(t > T * (1 + _X_TOL)):
        raise ValueError("time outside [0, T]")
    x = 2.0 * t / T - 1.0
    return (2.0 / T) * _dphi_dx(poly, np.clip(x, -1.0, 1.0))


def boundary_residuals(poly: PhasePolynomial, theta: float) -> tuple[float, float]:
    """Residuals of phi(1) = theta/2 and phi'(1) = 0.

    Returns (sum_j p_{2j-1} - theta/2, sum_j (2j-1) p_{2j-1}).
    """
    p = np.asarray(poly.coeffs)
    odd = 2 * np.arange(1, p.size + 1) - 1
    return float(p.sum() - theta / 2.0), float((odd * p).sum())


def sample_waveform(poly: PhasePolynomial, T: float, n_t: int = 1025) -> PulseWaveform:
    """Sample Omega(t) on a uniform n_t-point grid covering [0, T]."""
    if n_t < 2:
        raise ValueError(f"n_t must be >= 2, got {n_t}")
    times = np.linspace(0.0, T, n_t)
    return PulseWaveform(times=times, amplitudes=eval_omega(poly, times, T), source=poly)


# max_slope scans the analytic second derivative on a dense grid; 4097
# points resolve the fastest feature of the k = 8 family with margin.
_SLOPE_GRID = 4097


def max_slope(waveform: PulseWaveform) -> float:
    """Maximum |dOmega/dt| of the pulse.

    Evaluated from the exact second derivative of phi on a dense grid
    (endpoints included), never by finite differences on the samples.
    Requires the waveform to carry its generating polynomial.
    """
    if waveform.times.size < 2:
        raise ValueError("waveform needs at least 2 samples")
    if waveform.source is None:
        raise ValueError("waveform has no generating polynomial attached")
    T = waveform.duration
    x = np.linspace(-1.0, 1.0, _SLOPE_GRID)
    d2 = _d2phi_dx2(waveform.source, x)
    return float(np.max(np.abs(d2)) * (2.0 / T) ** 2)


def waveform_to_csv(waveform: PulseWaveform, path) -> None:
    """Write the waveform as CSV with header ``t,omega`` at 17 significant digits."""
    data = np.column_stack([waveform.times, waveform.amplitudes])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="t,omega", comments="")
