"""Closed-form EIT and dark-state polariton relations.

All frequencies and rates are angular (rad/s). Conversion from Hz happens in
the config layer only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

C_LIGHT = 299792458.0  # m/s

# Gaussian time-bandwidth product, FWHM in both domains, bandwidth in Hz.
GAUSSIAN_TBP = 2.0 * math.log(2.0) / math.pi

STATISTICS_KINDS = ("fock", "coherent", "thermal")
RAMP_SHAPES = ("linear", "raised-cosine")


def two_level_cross_section(wavelength: float) -> float:
    """Resonant absorption cross-section 3 lambda^2 / 2 pi."""
    return 3.0 * wavelength**2 / (2.0 * math.pi)


def _check_finite(**values):
    for name, v in values.items():
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class AtomicSpecies:
    gamma_e: float  # excited-state decay rate, rad/s
    wavelength: float  # m
    hyperfine_splitting: float  # rad/s
    gamma_mg: float  # ground coherence dephasing rate, 1/s
    sigma_abs: Optional[float] = None  # m^2, defaults to 3 lambda^2 / 2 pi

    def __post_init__(self):
        for name in ("gamma_e", "wavelength", "hyperfine_splitting", "gamma_mg", "cross_section"):
            v = getattr(self, name)
            _check_finite(**{name: v})
            if v <= 0:
                raise ValueError(f"{name} must be > 0, got {v!r}")
        if self.cross_section > two_level_cross_section(self.wavelength) * 1.01:
            raise ValueError("sigma_abs exceeds the two-level limit 3 lambda^2 / 2 pi")

    @property
    def cross_section(self) -> float:
        if self.sigma_abs is None:
            return two_level_cross_section(self.wavelength)
        return self.sigma_abs

    @property
    def dephasing_time(self) -> float:
        return 1.0 / self.gamma_mg


@dataclass(frozen=True)
class EnsembleConfig:
    n_atoms: float
    area: float  # m^2
    length: float  # m
    g_single: float  # rad/s

    def __post_init__(self):
        _check_finite(n_atoms=self.n_atoms, area=self.area, length=self.length, g_single=self.g_single)
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms!r}")
        for name in ("area", "length", "g_single"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def collective_coupling(self) -> float:
        """g * sqrt(N)."""
        return self.g_single * math.sqrt(self.n_atoms)


@dataclass(frozen=True)
class CouplingRamp:
    omega_c_max: float  # rad/s
    switch_time: float  # 10%-90% turn-off duration, s
    shape: str = "raised-cosine"

    def __post_init__(self):
        _check_finite(omega_c_max=self.omega_c_max, switch_time=self.switch_time)
        if self.omega_c_max <= 0 or self.switch_time <= 0:
            raise ValueError("omega_c_max and switch_time must be > 0")
        if self.shape not in RAMP_SHAPES:
            raise ValueError(f"unknown ramp shape {self.shape!r}; expected one of {RAMP_SHAPES}")

    @property
    def total_duration(self) -> float:
        """Full turn-off time whose 10%-90% span equals ``switch_time``."""
        if self.shape == "linear":
            return self.switch_time / 0.8
        # (1 + cos x)/2 crosses 0.9 and 0.1 at x = acos(0.8) and pi - acos(0.8)
        frac = (math.pi - 2.0 * math.acos(0.8)) / math.pi
        return self.switch_time / frac

    def value(self, t):
        """Coupling Rabi frequency at time ``t`` after the turn-off starts."""
        t = np.asarray(t, dtype=float)
        x = np.clip(t / self.total_duration, 0.0, 1.0)
        if self.shape == "linear":
            return self.omega_c_max * (1.0 - x)
        return self.omega_c_max * 0.5 * (1.0 + np.cos(np.pi * x))


@dataclass(frozen=True)
class PhotonStatistics:
    """Input photon-number distribution of the probe pulse.

    ``kind='fock'`` with ``n_hi`` set means the Fock states ``n..n_hi`` are
    each probed separately and weighted equally.
    """

    kind: str = "fock"
    n: float = 1
    n_hi: Optional[int] = None

    def __post_init__(self):
        if self.kind not in STATISTICS_KINDS:
            raise ValueError(f"unknown photon statistics {self.kind!r}; expected one of {STATISTICS_KINDS}")
        if not math.isfinite(self.n) or self.n < 0:
            raise ValueError("photon number / mean must be finite and >= 0")
        if self.kind == "fock":
            if int(self.n) != self.n:
                raise ValueError("fock photon number must be an integer")
            if self.n_hi is not None and self.n_hi < self.n:
                raise ValueError("n_hi must be >= n")
        elif self.n_hi is not None:
            raise ValueError("n_hi only applies to fock statistics")

    @property
    def fock_states(self) -> list[int]:
        if self.kind != "fock":
            raise ValueError("fock_states only defined for fock statistics")
        hi = int(self.n) if self.n_hi is None else int(self.n_hi)
        return list(range(int(self.n), hi + 1))

    def mean(self) -> float:
        if self.kind == "fock":
            return float(np.mean(self.fock_states))
        return float(self.n)

    def upper_support(self, tail: float = 1e-13) -> int:
        """Smallest n_top with probability mass above it below ``tail``."""
        if self.kind == "fock":
            return self.fock_states[-1]
        p = self.pmf(int(10 * self.n + 50 * math.sqrt(self.n + 1) + 50))
        above = 1.0 - np.cumsum(p)
        return int(np.argmax(above < tail))

    def pmf(self, n_top: int) -> np.ndarray:
        """P(n) for n = 0..n_top (mass above n_top is dropped)."""
        n = np.arange(n_top + 1)
        if self.kind == "fock":
            p = np.zeros(n_top + 1)
            states = [s for s in self.fock_states if s <= n_top]
            p[states] = 1.0 / len(self.fock_states)
            return p
        if self.kind == "coherent":
            from scipy.stats import poisson

            return poisson.pmf(n, self.n)
        nbar = self.n
        if nbar == 0:
            return (n == 0).astype(float)
        return np.exp(n * math.log(nbar / (1 + nbar)) - math.log1p(nbar))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "fock":
            if self.n_hi is not None and self.n_hi != self.n:
                raise ValueError("sample a single fock state at a time")
            return np.full(size, int(self.n), dtype=np.int64)
        if self.kind == "coherent":
            return rng.poisson(self.n, size).astype(np.int64)
        return rng.geometric(1.0 / (1.0 + self.n), size).astype(np.int64) - 1


@dataclass(frozen=True)
class ProbePulse:
    duration: float  # intensity FWHM, s
    bandwidth: Optional[float] = None  # spectral FWHM, rad/s
    photon_statistics: PhotonStatistics = field(default_factory=PhotonStatistics)

    def __post_init__(self):
        _check_finite(duration=self.duration)
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.bandwidth is not None and (self.bandwidth <= 0 or not math.isfinite(self.bandwidth)):
            raise ValueError("bandwidth must be finite and > 0")

    @property
    def spectral_width(self) -> float:
        """Probe FWHM bandwidth in rad/s, transform limited unless overridden."""
        if self.bandwidth is None:
            return transform_limited_bandwidth(self.duration)
        return self.bandwidth


def transform_limited_bandwidth(duration: float) -> float:
    """Spectral FWHM (rad/s) of a transform-limited Gaussian pulse."""
    return 2.0 * math.pi * GAUSSIAN_TBP / duration


@dataclass(frozen=True)
class StorageReport:
    mixing_angle_initial: float
    optical_depth: float
    transparency_bandwidth: float
    group_velocity: float
    compressed_length: float
    eta_bandwidth: float
    eta_fit: float
    eta_adiabatic: float
    eta_storage: float
    adiabaticity_margin: float

    @property
    def adiabatic(self) -> bool:
        return self.adiabaticity_margin >= 1.0


def mixing_angle(ramp_value, g, n_atoms):
    """Polariton mixing angle theta, tan(theta) = g sqrt(N) / Omega_c."""
    _check_finite(ramp_value=ramp_value, g=g, n_atoms=n_atoms)
    if np.any(np.asarray(g) <= 0):
        raise ValueError("g must be > 0")
    if np.any(np.asarray(n_atoms) < 1):
        raise ValueError("n_atoms must be >= 1")
    if np.any(np.asarray(ramp_value) < 0):
        raise ValueError("ramp_value must be >= 0")
    theta = np.arctan2(np.asarray(g) * np.sqrt(n_atoms), ramp_value)
    return float(theta) if np.ndim(theta) == 0 else theta


def polariton_amplitudes(theta, n=0):
    """(photonic, atomic) amplitudes (cos theta, -sin theta) of the polariton.

    The n-photon state is the n-th power of this single-excitation creation
    operator, so the amplitude pair does not depend on ``n``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if np.any(np.asarray(theta) < 0) or np.any(np.asarray(theta) > math.pi / 2 + 1e-15):
        raise ValueError("theta must lie in [0, pi/2]")
    return np.cos(theta), -np.sin(theta)


def optical_depth(species: AtomicSpecies, ensemble: EnsembleConfig) -> float:
    """alpha = N sigma / (2 A)."""
    return ensemble.n_atoms * species.cross_section / (2.0 * ensemble.area)


def transparency_bandwidth(omega_c, gamma_e, alpha):
    """Width of the transparency window, Omega_c^2 / (Gamma_e sqrt(alpha))."""
    if np.any(np.asarray(omega_c) <= 0) or np.any(np.asarray(gamma_e) <= 0) or np.any(np.asarray(alpha) <= 0):
        raise ValueError("omega_c, gamma_e and alpha must all be > 0")
    if np.any(np.asarray(alpha) < 1):
        warnings.warn(
            f"optical depth {np.min(alpha):.3g} < 1: medium is optically thin, "
            "transparency-bandwidth formula is outside its regime",
            RuntimeWarning,
            stacklevel=2,
        )
    out = np.square(omega_c) / (np.asarray(gamma_e) * np.sqrt(alpha))
    return float(out) if np.ndim(out) == 0 else out


def group_velocity(theta):
    """v_g = c cos^2(theta)."""
    return C_LIGHT * np.cos(theta) ** 2


def adiabaticity_margin(ramp: CouplingRamp, bandwidth: float) -> float:
    """switch_time * transparency bandwidth; >= 1 counts as adiabatic."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be > 0")
    return ramp.switch_time * bandwidth


def bandwidth_factor(probe_bandwidth: float, window: float) -> float:
    return math.exp(-0.5 * (probe_bandwidth / window) ** 2)


def fit_factor(compressed_length: float, medium_length: float) -> float:
    return 1.0 / (1.0 + compressed_length / medium_length)


def adiabatic_factor(margin: float) -> float:
    return -math.expm1(-margin)


def storage_efficiency(pulse, window, compressed_length, medium_length, margin) -> float:
    """Per-photon storage probability, product of the three penalty factors.

    ``pulse`` may be a :class:`ProbePulse` or a bare probe bandwidth in rad/s.
    """
    probe_bw = pulse.spectral_width if isinstance(pulse, ProbePulse) else float(pulse)
    eta = bandwidth_factor(probe_bw, window) * fit_factor(compressed_length, medium_length) * adiabatic_factor(margin)
    return min(1.0, max(0.0, eta))


def analyze_storage(
    species: AtomicSpecies, ensemble: EnsembleConfig, ramp: CouplingRamp, pulse: ProbePulse
) -> StorageReport:
    theta = mixing_angle(ramp.omega_c_max, ensemble.g_single, ensemble.n_atoms)
    alpha = optical_depth(species, ensemble)
    window = transparency_bandwidth(ramp.omega_c_max, species.gamma_e, alpha)
    vg = float(group_velocity(theta))
    compressed = vg * pulse.duration
    margin = adiabaticity_margin(ramp, window)
    if margin < 1.0:
        warnings.warn(f"coupling turn-off is not adiabatic (margin {margin:.3g} < 1)", RuntimeWarning, stacklevel=2)
    eb = bandwidth_factor(pulse.spectral_width, window)
    ef = fit_factor(compressed, ensemble.length)
    ea = adiabatic_factor(margin)
    return StorageReport(
        mixing_angle_initial=theta,
        optical_depth=alpha,
        transparency_bandwidth=window,
        group_velocity=vg,
        compressed_length=compressed,
        eta_bandwidth=eb,
        eta_fit=ef,
        eta_adiabatic=ea,
        eta_storage=min(1.0, max(0.0, eb * ef * ea)),
        adiabaticity_margin=margin,
    )


def store_pulse(pulse, eta_store: float, rng: np.random.Generator, size: Optional[int] = None):
    """Sample incident photon numbers and the excitations that survive storage.

    Returns ``(n, m)`` with ``m ~ Binomial(n, eta_store)``; scalars when
    ``size`` is None, arrays otherwise.
    """
    if not 0.0 <= eta_store <= 1.0:
        raise ValueError("eta_store must lie in [0, 1]")
    stats = pulse.photon_statistics if isinstance(pulse, ProbePulse) else pulse
    k = 1 if size is None else size
    n = stats.sample(rng, k)
    m = n if eta_store == 1.0 else rng.binomial(n, eta_store)
    if size is None:
        return int(n[0]), int(m[0])
    return n, np.asarray(m, dtype=np.int64)
