"""Noise models: finite random quantum bath and composite telegraph 1/f noise.

The quantum bath couples the qubit to an m-level system whose coupling
operator and Hamiltonian are independent GUE draws scaled so their
eigenvalue densities follow the Wigner semicircle on [-2, 2].  Its noise
power spectrum is the thermally weighted self-convolution of the
semicircle and vanishes identically beyond |omega| = 4 omega_B (hard
cutoff).  The classical model superposes random telegraph processes with
1/sqrt(nu) weights over a log-frequency band, giving a 1/f spectrum with
a soft 1/omega^2 tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

__all__ = [
    "BathInstance",
    "SpectrumModel",
    "VRQBSpectrum",
    "RTNSpectrum",
    "StaticDeltaSpectrum",
    "RTNTrajectory",
    "sample_gue",
    "build_bath",
    "semicircle_pdf",
    "vrqb_spectrum",
    "empirical_bath_spectrum",
    "rtn_spectrum",
    "sample_rtn_trajectory",
    "rtn_average_periodogram",
]


# ---------------------------------------------------------------------------
# GUE bath

def sample_gue(m: int, seed) -> np.ndarray:
    """Hermitian GUE matrix: real diagonal variance 1, off-diagonal complex variance 1.

    With this normalization W / sqrt(m) has semicircle eigenvalue density
    supported on [-2, 2].  ``seed`` may be an int, SeedSequence or Generator.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, m))
    b = rng.standard_normal((m, m))
    g = (a + 1j * b) / np.sqrt(2.0)
    return (g + g.conj().T) / np.sqrt(2.0)


@dataclass(frozen=True)
class BathInstance:
    """GUE coupling operator and bath Hamiltonian with a thermal state.

    All operators are stored in the bath-Hamiltonian eigenbasis: eigvals
    are the energies, ``B_eig`` the rotated coupling matrix and
    ``rho_diag`` the thermal weights.
    """

    m: int
    omega_B: float
    beta: float
    lam: float
    seed: int
    B: np.ndarray
    H_B: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    B_eig: np.ndarray
    rho_diag: np.ndarray


def build_bath(m: int, omega_B: float, beta: float, lam: float, seed: int) -> BathInstance:
    """Draw B and H_B from independent GUE sub-seeds and prepare the thermal state."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if not omega_B > 0:
        raise ValueError("omega_B must be positive")
    ss = np.random.SeedSequence(seed)
    s_B, s_H = ss.spawn(2)
    B = sample_gue(m, s_B) / np.sqrt(m)
    W2 = sample_gue(m, s_H)
    H_B = omega_B * W2 / np.sqrt(m)
    eigvals, eigvecs = np.linalg.eigh(H_B)
    # Boltzmann weights shifted by the ground energy for stability.
    w = np.exp(-beta * (eigvals - eigvals.min()))
    rho_diag = w / w.sum()
    B_eig = eigvecs.conj().T @ B @ eigvecs
    return BathInstance(m=m, omega_B=omega_B, beta=beta, lam=lam, seed=seed,
                        B=B, H_B=H_B, eigvals=eigvals, eigvecs=eigvecs,
                        B_eig=B_eig, rho_diag=rho_diag)


def semicircle_pdf(u):
    """Wigner semicircle density on [-2, 2]."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 2.0, np.sqrt(np.clip(4.0 - u * u, 0.0, None)) / (2.0 * np.pi), 0.0)


def vrqb_spectrum(omega, lam: float, omega_B: float, beta: float = 0.0):
    """Analytic bath spectrum: thermally weighted semicircle self-convolution.

    Identically zero for |omega| >= 4 omega_B.  Vectorized over omega.
    """
    if not omega_B > 0:
        raise ValueError("omega_B must be positive")
    Z, _ = quad(lambda u: semicircle_pdf(u) * np.exp(-beta * omega_B * u), -2, 2,
                epsabs=0, epsrel=1e-10)

    def one(w):
        # S(omega) weights transitions from thermal initial energy u to
        # final energy u + omega/omega_B (absorption at omega > 0), which
        # yields detailed balance S(-omega) = e^{-beta omega} S(omega)
        v = w / omega_B
        lo, hi = max(-2.0, -2.0 - v), min(2.0, 2.0 - v)
        if hi <= lo:
            return 0.0
        val, _ = quad(lambda u: semicircle_pdf(u) * semicircle_pdf(u + v)
                      * np.exp(-beta * omega_B * u),
                      lo, hi, epsabs=0, epsrel=1e-8, limit=200)
        return 2.0 * np.pi * lam**2 / (Z * omega_B) * val

    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 0:
        return one(float(omega))
    return np.array([one(w) for w in omega])


def empirical_bath_spectrum(bath: BathInstance, t_grid, window: str = "hann"):
    """Sampled two-point correlator of the interaction-picture coupling and its FT.

    Returns ``(C, omega_grid, S)`` where ``C[i]`` is the correlator at
    ``t_grid[i]`` (t >= 0) and ``S`` its windowed Fourier transform on a
    frequency grid covering the hard-cutoff band.  The Hann window is
    applied over the full symmetric span [-t_max, t_max] (value 1 at
    t = 0); pass ``window="none"`` for a rectangular window.
    """
    t = np.asarray(t_grid, dtype=float)
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must start at 0 and increase")
    span, step = t[-1], np.max(np.diff(t))
    if span < 20.0 / bath.omega_B or step > 0.05 / bath.omega_B:
        raise ValueError("t_grid too short or too coarse: need span >= 20/omega_B "
                         "and step <= 0.05/omega_B")

    eps = bath.eigvals
    A = np.abs(bath.B_eig) ** 2                     # m x m
    w_rho = bath.rho_diag
    # C(t) = lam^2 sum_{k,l} |B_{kl}|^2 rho_l exp(i (eps_l - eps_k) t)
    W = (w_rho[:, None] * np.exp(1j * np.outer(eps, t)))      # l x t
    M = A @ W                                                  # k x t
    U = np.exp(-1j * np.outer(eps, t))                         # k x t
    C = bath.lam**2 * np.sum(U * M, axis=0)

    if window == "hann":
        win = np.cos(np.pi * t / (2.0 * span)) ** 2
    elif window == "none":
        win = np.ones_like(t)
    else:
        raise ValueError(f"unknown window {window!r}")

    dt = t[1] - t[0]
    omega_grid = np.linspace(-5 * bath.omega_B, 5 * bath.omega_B, 401)
    # S(omega) = int C(t) e^{i omega t} dt with C(-t) = C(t)*:
    # S = 2 Re int_0^inf C(t) e^{i omega t} dt (trapezoid on the grid).
    w_trap = np.full(t.size, dt)
    w_trap[0] = w_trap[-1] = dt / 2.0
    kernel = np.exp(1j * np.outer(omega_grid, t))
    S = 2.0 * np.real(kernel @ (w_trap * win * C)) - np.real(w_trap[0] * C[0]) * np.ones_like(omega_grid)
    return C, omega_grid, S


# ---------------------------------------------------------------------------
# composite random telegraph noise

def rtn_spectrum(omega, lam: float, nu_a: float, nu_b: float):
    """Closed-form composite-RTN spectrum with 1/f midband and 1/omega^2 tail.

    S(omega) = (2 lam^2 C^2 / omega) [arctan(2 nu_b / omega) - arctan(2 nu_a / omega)]
    with C^2 = 1 / log(nu_b / nu_a); the omega -> 0 limit is evaluated
    explicitly.  Vectorized over omega.
    """
    if not (0 < nu_a < nu_b):
        raise ValueError("need 0 < nu_a < nu_b")
    C2 = 1.0 / np.log(nu_b / nu_a)
    omega = np.asarray(omega, dtype=float)
    w = np.abs(omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 2.0 * lam**2 * C2 / w * (np.arctan(2.0 * nu_b / w) - np.arctan(2.0 * nu_a / w))
    limit0 = lam**2 * C2 * (nu_b - nu_a) / (nu_a * nu_b)
    val = np.where(w == 0.0, limit0, val)
    return val if val.ndim else float(val)


@dataclass(frozen=True)
class RTNTrajectory:
    """One realization of the composite telegraph process on a uniform grid."""

    dt: float
    samples: np.ndarray
    component_frequencies: np.ndarray
    weights: np.ndarray
    seed: int

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.samples.size)


def _component_grid(nu_a: float, nu_b: float, n_components: int):
    """Log-spaced telegraph rates with sqrt-bin-width 1/sqrt(nu) weights.

    Rates sit at the geometric centers of a geometric partition of
    [nu_a, nu_b]; weights are normalized to unit total variance.
    """
    edges = np.geomspace(nu_a, nu_b, n_components + 1)
    nus = np.sqrt(edges[:-1] * edges[1:])
    weights = np.sqrt(np.diff(edges) / nus)
    weights /= np.sqrt(np.sum(weights**2))
    return nus, weights


def sample_rtn_trajectory(nu_a: float, nu_b: float, n_components: int, T: float,
                          dt: float, seed: int) -> RTNTrajectory:
    """Superpose independent telegraph processes into a unit-variance 1/f trace.

    Each component starts at +-1 with equal probability and flips at
    Poisson rate nu_i; switching times are drawn as exponential gaps and
    located on the grid by binary search.
    """
    if dt > 0.01 / nu_b:
        raise ValueError(f"dt = {dt} too coarse; need dt <= 0.01/nu_b = {0.01 / nu_b}")
    if n_components < 10:
        raise ValueError("need at least 10 telegraph components")
    nus, weights = _component_grid(nu_a, nu_b, n_components)
    n = int(round(T / dt)) + 1
    t = dt * np.arange(n)
    rng = np.random.default_rng(seed)
    out = np.zeros(n)
    for nu, w in zip(nus, weights):
        n_events = rng.poisson(nu * T)
        flips = np.sort(rng.uniform(0.0, T, n_events))
        state0 = rng.choice((-1.0, 1.0))
        parity = np.searchsorted(flips, t, side="right") % 2
        out += w * state0 * (1.0 - 2.0 * parity)
    return RTNTrajectory(dt=dt, samples=out, component_frequencies=nus,
                         weights=weights, seed=seed)


def rtn_average_periodogram(nu_a: float, nu_b: float, n_components: int, T: float,
                            dt: float, n_traj: int, seed: int):
    """Ensemble-averaged two-sided periodogram of the composite process.

    Returns ``(omega, S_eta)`` for positive frequencies; multiply by
    lam^2 to compare against :func:`rtn_spectrum`.
    """
    base = np.random.SeedSequence(seed)
    child_seeds = base.generate_state(n_traj)
    acc = None
    for s in child_seeds:
        traj = sample_rtn_trajectory(nu_a, nu_b, n_components, T, dt, int(s))
        x = traj.samples
        spec = np.abs(np.fft.rfft(x) * dt) ** 2 / (x.size * dt)
        acc = spec if acc is None else acc + spec
    acc /= n_traj
    omega = 2.0 * np.pi * np.fft.rfftfreq(int(round(T / dt)) + 1, d=dt)
    return omega, acc


# ---------------------------------------------------------------------------
# spectrum model wrappers used by the infidelity integrators

@dataclass(frozen=True)
class VRQBSpectrum:
    lam: float
    omega_B: float
    beta: float = 0.0
    kind: str = field(default="VRQB", init=False)

    def density(self, omega):
        return vrqb_spectrum(omega, self.lam, self.omega_B, self.beta)

    @property
    def cutoff(self) -> float:
        return 4.0 * self.omega_B


@dataclass(frozen=True)
class RTNSpectrum:
    lam: float
    nu_a: float
    nu_b: float
    kind: str = field(default="RTN", init=False)

    def density(self, omega):
        return rtn_spectrum(omega, self.lam, self.nu_a, self.nu_b)


@dataclass(frozen=True)
class StaticDeltaSpectrum:
    """S(omega) = 2 pi lam^2 delta(omega): frozen (quasi-static) noise."""

    lam: float
    kind: str = field(default="StaticDelta", init=False)


SpectrumModel = VRQBSpectrum | RTNSpectrum | StaticDeltaSpectrum
