import numpy as np
import pytest

from streamlsq import signals
from streamlsq.linalg import composite_rule
from streamlsq.measurement import DelayDopplerTaps


class TestBandlimited:
    def test_seeded_determinism(self):
        a = signals.gen_bandlimited(11)
        b = signals.gen_bandlimited(11)
        assert np.array_equal(a.meta["weights"], b.meta["weights"])
        t = np.linspace(-1.0, 5.0, 100)
        assert np.array_equal(a(t), b(t))

    def test_interpolates_weights_at_grid(self):
        sig = signals.gen_bandlimited(3, spacing=1.0 / 64.0, support=(-1.0, 2.0))
        grid = -1.0 + np.arange(10) / 64.0
        values = sig(grid)
        assert np.max(np.abs(values - sig.meta["weights"][:10])) <= 1e-9

    def test_bandlimit_attribute(self):
        sig = signals.gen_bandlimited(3, spacing=1.0 / 64.0)
        assert sig.bandlimit == pytest.approx(64.0 * np.pi)

    def test_out_of_band_leakage_small(self):
        # Inner product against an out-of-band sinusoid is leakage-limited.
        sig = signals.gen_bandlimited(5, spacing=1.0 / 64.0, support=(-5.0, 21.0))
        omega_out = 1.5 * sig.bandlimit
        rule = composite_rule(-5.0, 21.0, order=10, max_panel=2.0 * np.pi / omega_out / 6.0)
        x_values = sig(rule.nodes)
        probe_values = np.sin(omega_out * rule.nodes)
        probe = rule.integrate(x_values * probe_values)
        x_norm = np.sqrt(rule.integrate(x_values**2))
        probe_norm = np.sqrt(rule.integrate(probe_values**2))
        assert abs(probe) <= 1e-3 * x_norm * probe_norm


class TestOfdm:
    def test_seeded_determinism(self):
        t = np.linspace(-0.9, 3.9, 211)
        assert np.array_equal(signals.gen_ofdm(4)(t), signals.gen_ofdm(4)(t))

    def test_fourier_coefficients_recovered(self):
        sig = signals.gen_ofdm(5, components=64)
        rule = composite_rule(2.0, 3.0, order=10, max_panel=1.0 / 128.0)
        row = sig.meta["intervals"][0]
        cos_true = sig.meta["cos_coef"][2 - row]
        sin_true = sig.meta["sin_coef"][2 - row]
        for j in (1, 7, 32):
            c = 2.0 * rule.integrate(lambda t: sig(t) * np.cos(2 * np.pi * j * (t - 2.0)))
            s = 2.0 * rule.integrate(lambda t: sig(t) * np.sin(2 * np.pi * j * (t - 2.0)))
            assert abs(c - cos_true[j - 1]) <= 1e-8
            assert abs(s - sin_true[j - 1]) <= 1e-8

    def test_boundary_discontinuity(self):
        jumps = 0
        for seed in range(20):
            sig = signals.gen_ofdm(seed)
            left = sig(np.array([1.0 - 1e-9]))[0]
            right = sig(np.array([1.0 + 1e-9]))[0]
            if abs(left - right) > 1e-9:
                jumps += 1
        assert jumps == 20

    def test_outside_configured_intervals_rejected(self):
        sig = signals.gen_ofdm(1, intervals=(0, 2))
        with pytest.raises(ValueError):
            sig(np.array([2.5]))

    def test_component_count_validation(self):
        with pytest.raises(ValueError):
            signals.gen_ofdm(1, components=63)

    def test_qam_alphabet(self):
        sig = signals.gen_ofdm(9)
        levels = np.unique(np.abs(sig.meta["cos_coef"]))
        assert np.allclose(sorted(levels), [1.0 / np.sqrt(10.0), 3.0 / np.sqrt(10.0)])


class TestLevelCrossings:
    def test_constant_signal_no_crossings(self):
        stream = signals.level_crossings(lambda t: np.full_like(t, 0.3), [0.0, 1.0], (0.0, 2.0))
        assert len(stream) == 0

    def test_sine_zero_crossing_located(self):
        stream = signals.level_crossings(
            lambda t: np.sin(2 * np.pi * t), [0.0], (0.1, 0.9)
        )
        assert len(stream) == 1
        assert abs(stream.times[0] - 0.5) <= 1e-9
        assert stream.values[0] == 0.0

    def test_exact_grid_hits_emitted(self):
        stream = signals.level_crossings(
            lambda t: np.sin(2 * np.pi * t), [0.0], (0.0, 1.0), scan_step=0.25
        )
        # Grid hits at 0.0, 0.25 is max..., zeros at 0, 0.5, 1.0 all on grid.
        assert {0.0, 0.5, 1.0} <= set(stream.times.tolist())

    def test_refinement_tolerance_met(self):
        x = lambda t: np.sin(2 * np.pi * t) + 0.3 * np.cos(5 * t)
        levels = signals.default_levels(8, -1.0, 1.0)
        stream = signals.level_crossings(x, levels, (0.0, 3.0))
        assert len(stream) > 10
        assert np.max(np.abs(x(stream.times) - stream.values)) <= 1e-10

    def test_emitted_value_is_level(self):
        levels = signals.default_levels(16)
        assert levels[0] == -2.5
        assert levels[-1] == pytest.approx(2.5 - 5.0 / 16.0)
        sig = signals.gen_bandlimited(2, support=(-1.0, 3.0))
        stream = signals.level_crossings(sig, levels, (0.0, 2.0))
        assert set(np.unique(stream.values)) <= set(levels.tolist())

    def test_times_sorted(self):
        sig = signals.gen_bandlimited(8, support=(-1.0, 3.0))
        stream = signals.level_crossings(sig, signals.default_levels(16), (0.0, 2.0))
        assert np.all(np.diff(stream.times) >= 0)


class TestDelayDoppler:
    def test_identity_channel(self):
        sig = signals.gen_bandlimited(6, support=(-1.0, 3.0))
        taps = DelayDopplerTaps([1.0], [0.0], [0.0])
        stream = signals.delay_doppler_sample(sig, taps, window=(0.0, 2.0), t_step=0.01)
        assert np.array_equal(stream.values, sig(stream.times))

    def test_spacing_exact(self):
        sig = signals.gen_bandlimited(6, support=(-1.0, 3.0))
        taps = DelayDopplerTaps([1.0], [0.0], [0.0])
        stream = signals.delay_doppler_sample(sig, taps, window=(0.0, 2.0), t_step=0.01)
        assert np.max(np.abs(np.diff(stream.times) - 0.01)) <= 1e-12

    def test_echoes_match_per_tap_formula(self):
        # Narrow pulse: each tap contributes an isolated, exactly scaled echo.
        width = 0.002
        pulse = lambda t: np.exp(-0.5 * (np.asarray(t) / width) ** 2)
        taps = DelayDopplerTaps([1.0, 0.036, -0.3, 0.066], [0.0, 0.05, 0.33, 0.341], [0.001, 1.0, 2.0, 3.0])
        stream = signals.delay_doppler_sample(pulse, taps, window=(-0.02, 0.45), t_step=0.001)
        for a_d, tau_d, f_d in zip(taps.amplitudes, taps.delays, taps.frequencies):
            idx = np.argmin(np.abs(stream.times - tau_d))
            t_m = stream.times[idx]
            expected = a_d * np.cos(2 * np.pi * f_d * (t_m - tau_d)) * pulse(t_m - tau_d)
            others = sum(
                a_o * np.cos(2 * np.pi * f_o * (t_m - tau_o)) * pulse(t_m - tau_o)
                for a_o, tau_o, f_o in zip(taps.amplitudes, taps.delays, taps.frequencies)
                if tau_o != tau_d
            )
            assert abs(stream.values[idx] - (expected + others)) <= 1e-12
            assert abs(stream.values[idx] - expected) <= 1e-3 * max(abs(expected), 1e-3)
