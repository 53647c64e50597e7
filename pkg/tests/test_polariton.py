import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stoppedlight.polariton import (
    C_LIGHT,
    AtomicSpecies,
    CouplingRamp,
    EnsembleConfig,
    PhotonStatistics,
    ProbePulse,
    adiabatic_factor,
    adiabaticity_margin,
    analyze_storage,
    bandwidth_factor,
    fit_factor,
    group_velocity,
    mixing_angle,
    optical_depth,
    polariton_amplitudes,
    storage_efficiency,
    store_pulse,
    transparency_bandwidth,
    two_level_cross_section,
)

TWO_PI = 2 * math.pi


def rb():
    return AtomicSpecies(gamma_e=TWO_PI * 6e6, wavelength=780e-9, hyperfine_splitting=TWO_PI * 6.8e9, gamma_mg=100.0)


def cloud(n=1e5):
    return EnsembleConfig(n_atoms=n, area=math.pi * (50e-6) ** 2, length=1e-3, g_single=1e7)


class TestMixingAngle:
    def test_coupling_off_is_fully_atomic(self):
        assert mixing_angle(0.0, 1e6, 1e5) == pytest.approx(math.pi / 2, abs=0)

    def test_symmetry_point(self):
        g, n = 3e5, 4e4
        theta = mixing_angle(g * math.sqrt(n), g, n)
        assert math.cos(theta) ** 2 == pytest.approx(0.5, rel=1e-14)

    def test_twice_collective_coupling(self):
        g, n = 2e5, 1e6
        theta = mixing_angle(2 * g * math.sqrt(n), g, n)
        assert math.cos(theta) ** 2 == pytest.approx(4 / 5, rel=1e-14)

    @pytest.mark.parametrize("bad", [math.nan, math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValueError):
            mixing_angle(bad, 1.0, 10)
        with pytest.raises(ValueError):
            mixing_angle(1.0, bad, 10)

    def test_rejects_bad_domain(self):
        with pytest.raises(ValueError):
            mixing_angle(-1.0, 1.0, 10)
        with pytest.raises(ValueError):
            mixing_angle(1.0, 0.0, 10)
        with pytest.raises(ValueError):
            mixing_angle(1.0, 1.0, 0.5)

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(0, 1e12, allow_nan=False),
        st.floats(1e-3, 1e9),
        st.floats(1, 1e12),
    )
    def test_unit_circle_and_range(self, omega, g, n):
        theta = mixing_angle(omega, g, n)
        assert 0.0 <= theta <= math.pi / 2
        assert math.cos(theta) ** 2 + math.sin(theta) ** 2 == pytest.approx(1.0, abs=4e-16)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0, 1e10), st.floats(0, 1e10), st.floats(1e2, 1e8), st.floats(1, 1e8))
    def test_monotone_decreasing_in_coupling(self, a, b, g, n):
        lo, hi = sorted((a, b))
        assert mixing_angle(hi, g, n) <= mixing_angle(lo, g, n)


class TestAmplitudes:
    def test_stopped_light_limit(self):
        photonic, atomic = polariton_amplitudes(math.pi / 2, 3)
        assert photonic == pytest.approx(0.0, abs=1e-16)
        assert atomic == -1.0

    def test_free_photon_limit(self):
        assert polariton_amplitudes(0.0, 2) == (1.0, -0.0)

    def test_equal_superposition(self):
        p, a = polariton_amplitudes(math.pi / 4, 1)
        assert p == pytest.approx(math.sqrt(2) / 2, rel=1e-15)
        assert a == pytest.approx(-math.sqrt(2) / 2, rel=1e-15)

    @given(st.floats(0, math.pi / 2))
    def test_normalized(self, theta):
        p, a = polariton_amplitudes(theta, 5)
        assert p * p + a * a == pytest.approx(1.0, abs=4e-16)

    def test_domain(self):
        with pytest.raises(ValueError):
            polariton_amplitudes(2.0, 1)
        with pytest.raises(ValueError):
            polariton_amplitudes(0.1, -1)


class TestOpticalDepth:
    def test_reference_geometry(self):
        # alpha = N * (3 lambda^2 / 2 pi) / (2 pi r^2) = 3 N lambda^2 / (4 pi^2 r^2)
        hand = 3 * 1e5 * (780e-9) ** 2 / (4 * math.pi**2 * (50e-6) ** 2)
        assert hand == pytest.approx(1.8493, rel=1e-4)
        assert optical_depth(rb(), cloud()) == pytest.approx(hand, rel=1e-13)

    def test_cross_section_default(self):
        assert rb().cross_section == pytest.approx(2.905e-13, rel=1e-3)

    def test_ten_times_atoms(self):
        assert optical_depth(rb(), cloud(1e6)) == pytest.approx(18.493, rel=1e-4)

    def test_doubling(self):
        assert optical_depth(rb(), cloud(2e5)) == pytest.approx(2 * optical_depth(rb(), cloud(1e5)), rel=1e-14)

    def test_cross_section_over_limit_rejected(self):
        with pytest.raises(ValueError):
            AtomicSpecies(1.0, 780e-9, 1e10, 1.0, sigma_abs=1.02 * two_level_cross_section(780e-9))

    def test_species_fields_positive(self):
        with pytest.raises(ValueError):
            AtomicSpecies(0.0, 780e-9, 1e10, 1.0)


class TestTransparencyBandwidth:
    def test_example(self):
        hand = TWO_PI * 25e12 / (6e6 * math.sqrt(10))
        assert hand == pytest.approx(8.2788e6, rel=1e-4)
        assert transparency_bandwidth(TWO_PI * 5e6, TWO_PI * 6e6, 10.0) == pytest.approx(hand, rel=1e-13)

    def test_scalings(self):
        base = transparency_bandwidth(1e7, 3e7, 9.0)
        assert transparency_bandwidth(2e7, 3e7, 9.0) == pytest.approx(4 * base, rel=1e-14)
        assert transparency_bandwidth(1e7, 3e7, 36.0) == pytest.approx(base / 2, rel=1e-14)

    def test_thin_medium_warns(self):
        with pytest.warns(RuntimeWarning, match="optically thin"):
            transparency_bandwidth(1e7, 3e7, 0.5)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            transparency_bandwidth(0.0, 1.0, 2.0)


class TestGroupVelocity:
    def test_limits(self):
        assert group_velocity(math.pi / 2) == pytest.approx(0.0, abs=1e-7)
        assert group_velocity(0.0) == C_LIGHT

    def test_slow_light(self):
        theta = math.acos(math.sqrt(1e-7))
        assert group_velocity(theta) == pytest.approx(29.9792458, rel=1e-9)


class TestStorageEfficiency:
    def test_ideal_limit(self):
        assert storage_efficiency(0.0, 1.0, 0.0, 1.0, math.inf) == 1.0

    def test_bandwidth_at_window(self):
        assert bandwidth_factor(5.0, 5.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
        assert bandwidth_factor(5.0, 5.0) == pytest.approx(0.607, abs=1e-3)

    def test_fit_at_medium_length(self):
        assert fit_factor(1e-3, 1e-3) == 0.5

    def test_product(self):
        eta = storage_efficiency(1.0, 2.0, 0.5, 1.0, 3.0)
        assert eta == pytest.approx(math.exp(-0.125) * (1 / 1.5) * (1 - math.exp(-3)), rel=1e-14)

    def test_accepts_pulse(self):
        pulse = ProbePulse(duration=1e-6)
        eta = storage_efficiency(pulse, 1e8, 0.0, 1.0, math.inf)
        assert eta == pytest.approx(bandwidth_factor(pulse.spectral_width, 1e8))

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0, 1e3), st.floats(1e-3, 1e3), st.floats(0, 1e3), st.floats(1e-3, 1e3), st.floats(0, 1e3))
    def test_factors_in_unit_interval(self, bw, win, comp, length, margin):
        for f in (bandwidth_factor(bw, win), fit_factor(comp, length), adiabatic_factor(margin)):
            assert 0.0 <= f <= 1.0
        assert 0.0 <= storage_efficiency(bw, win, comp, length, margin) <= 1.0


class TestAdiabaticity:
    def test_definition(self):
        ramp = CouplingRamp(omega_c_max=1e7, switch_time=10 / 4e6)
        assert adiabaticity_margin(ramp, 4e6) == pytest.approx(10.0, rel=1e-15)
        ramp = CouplingRamp(omega_c_max=1e7, switch_time=0.1 / 4e6)
        assert adiabaticity_margin(ramp, 4e6) == pytest.approx(0.1, rel=1e-15)

    def test_composition(self):
        window = transparency_bandwidth(TWO_PI * 5e6, TWO_PI * 6e6, 10.0)
        ramp = CouplingRamp(omega_c_max=TWO_PI * 5e6, switch_time=1e-6)
        assert adiabaticity_margin(ramp, window) == pytest.approx(8.28, abs=0.01)

    def test_non_adiabatic_flag(self):
        species = rb()
        ens = cloud(1e7)
        ramp = CouplingRamp(omega_c_max=TWO_PI * 1e5, switch_time=1e-9)
        with pytest.warns(RuntimeWarning, match="not adiabatic"):
            report = analyze_storage(species, ens, ramp, ProbePulse(duration=1e-3))
        assert not report.adiabatic

    @pytest.mark.parametrize("shape", ["linear", "raised-cosine"])
    def test_ramp_switch_time_is_10_to_90(self, shape):
        ramp = CouplingRamp(omega_c_max=1.0, switch_time=2e-6, shape=shape)
        t = np.linspace(0, ramp.total_duration, 2_000_001)
        v = ramp.value(t)
        t90 = t[np.argmax(v <= 0.9)]
        t10 = t[np.argmax(v <= 0.1)]
        assert t10 - t90 == pytest.approx(2e-6, rel=1e-5)
        assert v[0] == 1.0 and v[-1] == pytest.approx(0.0, abs=1e-15)


class TestProbePulse:
    def test_transform_limit(self):
        p = ProbePulse(duration=3e-6)
        assert p.spectral_width * p.duration == pytest.approx(TWO_PI * 2 * math.log(2) / math.pi, rel=1e-9)
        assert p.spectral_width * p.duration / TWO_PI == pytest.approx(0.44, abs=0.002)

    def test_override(self):
        assert ProbePulse(duration=1e-6, bandwidth=5.0).spectral_width == 5.0


class TestStoreAndStatistics:
    def test_ideal_mapping(self):
        rng = np.random.default_rng(1)
        n, m = store_pulse(ProbePulse(1e-6, photon_statistics=PhotonStatistics("fock", 5)), 1.0, rng, 1000)
        assert np.all(n == 5) and np.all(m == 5)

    def test_vacuum(self):
        rng = np.random.default_rng(1)
        assert store_pulse(PhotonStatistics("fock", 0), 0.7, rng) == (0, 0)

    def test_coherent_thinning_is_poisson(self):
        rng = np.random.default_rng(12)
        trials = 100_000
        _, m = store_pulse(PhotonStatistics("coherent", 4.0), 0.5, rng, trials)
        # thinned coherent state is Poisson(2): mean 2, variance 2
        assert abs(m.mean() - 2.0) < 3 * math.sqrt(2.0 / trials)
        assert abs(m.var() - 2.0) < 3 * 2.0 * math.sqrt(2.0 / trials) * 2

    @pytest.mark.parametrize(
        "stats", [PhotonStatistics("fock", 3), PhotonStatistics("coherent", 2.5), PhotonStatistics("thermal", 1.5)]
    )
    def test_thinning_mean(self, stats):
        rng = np.random.default_rng(99)
        trials = 100_000
        eta = 0.3
        n, m = store_pulse(stats, eta, rng, trials)
        assert np.all(m <= n)
        se = m.std() / math.sqrt(trials)
        assert abs(m.mean() - eta * stats.mean()) < 3 * max(se, 1e-12)

    def test_thermal_pmf_matches_samples(self):
        stats = PhotonStatistics("thermal", 2.0)
        p = stats.pmf(200)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert p[0] == pytest.approx(1 / 3)
        assert (np.arange(201) * p).sum() == pytest.approx(2.0, rel=1e-10)

    def test_rejects_bad_eta(self):
        with pytest.raises(ValueError):
            store_pulse(PhotonStatistics("fock", 1), 1.5, np.random.default_rng(0))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PhotonStatistics("squeezed", 1)


class TestAnalyzeStorage:
    def test_report_consistency(self):
        species, ens = rb(), cloud(1e6)
        ramp = CouplingRamp(omega_c_max=TWO_PI * 5e6, switch_time=1e-6)
        pulse = ProbePulse(duration=1e-6)
        r = analyze_storage(species, ens, ramp, pulse)
        assert r.optical_depth == pytest.approx(optical_depth(species, ens))
        assert r.compressed_length == pytest.approx(r.group_velocity * 1e-6)
        assert r.eta_storage == pytest.approx(r.eta_bandwidth * r.eta_fit * r.eta_adiabatic)
        assert 0 <= r.eta_storage <= 1
        assert all(v >= 0 for v in (r.transparency_bandwidth, r.group_velocity, r.compressed_length))
