import numpy as np
import pytest

from streamlsq import basis as B
from streamlsq.errors import GridTooCoarse
from streamlsq.linalg import composite_rule


class TestWindow:
    def test_plateau(self):
        assert B.window_eval(B.WindowSpec(0.25), 0.5) == 1.0

    def test_ramp_endpoints(self):
        w = B.WindowSpec(0.25)
        assert B.window_eval(w, -0.25) == 0.0
        assert B.window_eval(w, 0.25) == 1.0

    def test_midramp_closed_form(self):
        value = B.window_eval(B.WindowSpec(0.25), 0.0)
        assert abs(value - np.sin(np.pi / 4.0)) <= 1e-15

    def test_power_complementary_on_ramp(self):
        w = B.WindowSpec(0.25)
        t = np.linspace(-0.25, 0.25, 501)
        total = B.window_eval(w, t) ** 2 + B.window_eval(w, -t) ** 2
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_partition_of_unity(self):
        w = B.WindowSpec(0.25)
        t = np.linspace(-1.0, 2.0, 10000)
        total = sum(B.window_eval(w, t - k) ** 2 for k in range(-2, 3))
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_eta_validation(self):
        with pytest.raises(ValueError):
            B.WindowSpec(0.0)
        with pytest.raises(ValueError):
            B.WindowSpec(0.6)

    def test_zero_outside_support(self):
        w = B.WindowSpec(0.25)
        assert B.window_eval(w, -0.3) == 0.0
        assert B.window_eval(w, 1.3) == 0.0


class TestLotBasis:
    def test_closed_form_value(self, lot8):
        # cos(pi/4) against a unit window: sqrt(2) * cos(pi * 0.5 * 0.5) = 1.
        assert abs(B.lot_basis_eval(lot8, 0, 1, 0.5) - 1.0) <= 1e-14

    def test_support_edge_is_zero(self, lot8):
        for n in range(1, 9):
            assert lot8.evaluate(0, n, 1.25) == 0.0
            assert lot8.evaluate(0, n, -0.25) == 0.0
            assert lot8.evaluate(0, n, 2.0) == 0.0

    def test_gram_identity(self, lot8):
        gram = lot8.gram()
        assert np.max(np.abs(gram - np.eye(8))) <= 1e-10

    def test_shift_covariance_bitwise(self, lot8):
        t = np.linspace(2.8, 4.1, 57)
        shifted = lot8.evaluate_packet(3, t)
        base = lot8.evaluate_packet(0, t - 3)
        assert np.array_equal(shifted, base)

    def test_compact_support_exact_zero(self, lot8):
        t = np.array([-0.26, -5.0, 1.26, 3.0])
        assert np.all(lot8.evaluate_packet(0, t) == 0.0)

    def test_n_one_based_bounds(self, lot8):
        with pytest.raises(ValueError):
            lot8.evaluate(0, 0, 0.5)
        with pytest.raises(ValueError):
            lot8.evaluate(0, 9, 0.5)


class TestPacketProject:
    def test_own_function_gives_unit_vector(self, lot8):
        alpha = B.packet_project(lot8, lambda t: lot8.evaluate_packet(0, t)[:, 2], 0)
        expected = np.zeros(8)
        expected[2] = 1.0
        assert np.max(np.abs(alpha - expected)) <= 1e-9

    def test_neighbor_packet_is_orthogonal(self, lot8):
        alpha = B.packet_project(lot8, lambda t: lot8.evaluate_packet(1, t)[:, 1], 0)
        assert np.max(np.abs(alpha)) <= 1e-9

    def test_round_trip_random_combination(self, lot8):
        rng = np.random.default_rng(0)
        coef = rng.standard_normal(8)
        alpha = B.packet_project(lot8, lambda t: B.synthesize(lot8, {0: coef}, t), 0)
        assert np.max(np.abs(alpha - coef)) <= 1e-8

    def test_round_trip_larger_packet(self):
        lot = B.lot_basis(10, 0.25)
        rng = np.random.default_rng(1)
        coef = rng.standard_normal(10)
        alpha = B.packet_project(lot, lambda t: B.synthesize(lot, {0: coef}, t), 0)
        assert np.max(np.abs(alpha - coef)) <= 1e-8


class TestFoldProjector:
    def test_idempotent(self):
        w = B.WindowSpec(0.25)
        x = lambda t: np.exp(-2.0 * (t - 0.4) ** 2)
        t = np.linspace(-0.25, 1.25, 400)
        once = B.project_onto_packet(w, x, 0, t)
        twice = B.project_onto_packet(w, lambda u: B.project_onto_packet(w, x, 0, u), 0, t)
        assert np.max(np.abs(twice - once)) <= 1e-12

    def test_matches_deep_cosine_decomposition(self):
        # The projector and the analysis/synthesis route agree once the
        # cosine expansion is deep enough to converge for a smooth signal.
        w = B.WindowSpec(0.25)
        lot = B.lot_basis(60, 0.25)
        x = lambda t: np.exp(-0.5 * (t - 0.4) ** 2 / 0.05)
        t = np.linspace(-0.25, 1.25, 600)
        alpha = B.packet_project(lot, x, 0)
        assert np.max(np.abs(B.synthesize(lot, {0: alpha}, t) - B.project_onto_packet(w, x, 0, t))) <= 1e-5

    def test_zero_outside_support(self):
        w = B.WindowSpec(0.25)
        out = B.project_onto_packet(w, np.cos, 0, np.array([-0.3, 1.3, 2.0]))
        assert np.all(out == 0.0)


class TestSlepianLot:
    def test_eigenvector_orthonormality_on_grid(self, slepian_small):
        _, spectrum = slepian_small
        psi = spectrum.eigenfunctions
        gram = psi.T @ (spectrum.weights[:, None] * psi)
        assert np.max(np.abs(gram - np.eye(psi.shape[1]))) <= 1e-8

    def test_gram_identity_quadrature(self, slepian_small):
        basis, _ = slepian_small
        gram = basis.gram()
        assert np.max(np.abs(gram - np.eye(basis.n_funcs))) <= 1e-8

    def test_eigenvalues_descending_nonnegative(self, slepian_small):
        _, spectrum = slepian_small
        ev = spectrum.eigenvalues
        assert np.all(np.diff(ev) <= 1e-12 * ev[0])
        assert np.all(ev >= -1e-10 * ev[0])

    def test_rolloff_location(self, slepian_small):
        # Steep drop just past twice the bandlimit (here 2 * 8 = 16).
        _, spectrum = slepian_small
        ev = spectrum.eigenvalues
        assert ev[15] / ev[0] > 1e-2
        assert ev[23] / ev[0] < 1e-3

    def test_kernel_effectively_real(self, slepian_small):
        _, spectrum = slepian_small
        assert spectrum.imag_residual <= 1e-12

    def test_shift_covariance(self, slepian_small):
        basis, _ = slepian_small
        t = np.linspace(1.6, 2.3, 41)
        assert np.array_equal(basis.evaluate_packet(2, t), basis.evaluate_packet(0, t - 2))

    def test_compact_support(self, slepian_small):
        basis, _ = slepian_small
        t = np.array([-0.26, 1.26, 5.0])
        assert np.all(basis.evaluate_packet(0, t) == 0.0)

    def test_grid_too_coarse_raised(self):
        # Depth beyond the kernel's numerical rank cannot form a basis.
        with pytest.raises(GridTooCoarse):
            B.build_slepian_lot(16.0, 0.25, 60, 600)

    def test_grid_size_precondition(self):
        with pytest.raises(ValueError):
            B.build_slepian_lot(16.0, 0.25, 40, 100)

    def test_bandlimited_projection_accuracy(self, slepian_big):
        # A bandlimited signal is captured packet-locally by the top
        # eigenfunctions: compare against the exact packet component.
        basis, _, _ = slepian_big
        omega = basis.omega
        spacing = 1.0 / (2.0 * omega)
        grid = np.arange(-3.0, 4.0 + spacing / 2, spacing)
        rng = np.random.default_rng(5)
        weights = rng.standard_normal(grid.size)

        def x(t):
            t = np.atleast_1d(t)
            return np.sinc((t[:, None] - grid[None, :]) / spacing) @ weights

        alpha = B.packet_project(basis, x, 0)
        rule = composite_rule(-basis.eta, 1.0 + basis.eta, order=10, max_panel=1.0 / 160)
        truth = B.project_onto_packet(basis.window, x, 0, rule.nodes)
        approx = basis.evaluate_packet(0, rule.nodes) @ alpha
        err = np.sqrt(rule.integrate((approx - truth) ** 2))
        ref = np.sqrt(rule.integrate(truth**2))
        assert err <= 1e-4 * ref

    def test_serialization_round_trip(self, slepian_small):
        basis, _ = slepian_small
        rebuilt = B.basis_from_config(basis.to_config())
        t = np.linspace(-0.25, 1.25, 101)
        assert np.array_equal(rebuilt.evaluate_packet(0, t), basis.evaluate_packet(0, t))


class TestShiftInvariant:
    def test_eta_and_support_length(self):
        basis = B.build_shift_invariant("daubechies4", 8)
        assert abs(basis.eta - 0.125) <= 1e-15
        # Each function lives on an interval of length 3/8.
        t = np.linspace(-0.5, 1.5, 4001)
        values = basis.evaluate_packet(0, t)
        for n in range(8):
            nz = t[np.abs(values[:, n]) > 0]
            assert nz.size
            assert nz[-1] - nz[0] <= 3.0 / 8.0 + 1e-3

    def test_unit_integral(self):
        basis = B.build_shift_invariant("daubechies4", 8)
        rule = basis.quadrature()
        psi = basis.evaluate_packet(0, rule.nodes)
        integrals = rule.weights @ psi
        assert np.max(np.abs(integrals - 1.0)) <= 1e-6

    def test_constant_reproduction_in_interior(self):
        basis = B.build_shift_invariant("daubechies4", 8)
        coef = np.full(8, 1.0 / 8.0)
        t = np.linspace(0.125, 0.875, 301)
        values = B.synthesize(basis, {0: coef}, t)
        assert np.max(np.abs(values - 1.0)) <= 1e-6

    def test_integer_values_of_generator(self):
        grid, vals = B.daubechies4_scaling()
        idx = int(round(1.0 / (grid[1] - grid[0])))
        assert abs(vals[idx] - (1 + np.sqrt(3.0)) / 2) <= 1e-12
        assert abs(vals[2 * idx] - (1 - np.sqrt(3.0)) / 2) <= 1e-12

    def test_gram_is_scaled_identity(self):
        basis = B.build_shift_invariant("daubechies4", 8)
        gram = basis.gram()
        assert np.max(np.abs(gram - 8.0 * np.eye(8))) <= 1e-5 * 8.0

    def test_adjacent_packet_orthogonality(self):
        basis = B.build_shift_invariant("daubechies4", 8)
        rule = composite_rule(
            0.5, 1.2, order=4, max_panel=2.0 ** (-12) * 4
        )
        cross = basis.evaluate_packet(0, rule.nodes).T @ (
            rule.weights[:, None] * basis.evaluate_packet(1, rule.nodes)
        )
        assert np.max(np.abs(cross)) <= 1e-4 * 8.0

    def test_minimum_depth(self):
        with pytest.raises(ValueError):
            B.build_shift_invariant("daubechies4", 3)

    def test_serialization_round_trip(self):
        basis = B.build_shift_invariant("daubechies4", 8)
        rebuilt = B.basis_from_config(basis.to_config())
        t = np.linspace(-0.2, 1.2, 77)
        assert np.array_equal(rebuilt.evaluate_packet(0, t), basis.evaluate_packet(0, t))


class _DisjointFlatBasis(B.PacketBasis):
    """Orthonormal indicators on disjoint subintervals (flatness oracle)."""

    family = "test-indicator"

    def __init__(self, n_funcs):
        super().__init__(n_funcs, eta=1e-9)

    def _packet0(self, u):
        n = self.n_funcs
        out = np.zeros((u.size, n))
        idx = np.clip(np.floor(u * n).astype(int), 0, n - 1)
        inside = (u >= 0.0) & (u < 1.0)
        out[np.arange(u.size)[inside], idx[inside]] = np.sqrt(n)
        return out

    def quadrature(self, order=10):
        from streamlsq.linalg import composite_rule

        return composite_rule(0.0, 1.0, order=order, max_panel=1.0 / (4 * self.n_funcs))


class TestFlatness:
    @pytest.mark.parametrize("n", [8, 32, 128])
    def test_lot_bounded_by_two(self, n):
        assert B.flatness_beta(B.lot_basis(n, 0.25)) <= 2.0 + 1e-9

    def test_lot_large_n_approaches_one(self):
        beta = B.flatness_beta(B.lot_basis(128, 0.25))
        assert 1.0 <= beta <= 1.2

    def test_disjoint_indicator_exact(self):
        basis = _DisjointFlatBasis(4)
        # Sum of squares is n at every covered point; beta = n / n = 1.
        assert abs(B.flatness_beta(basis, grid_size=4096) - 1.0) <= 1e-9

    def test_slepian_bounded(self, slepian_small):
        basis, _ = slepian_small
        assert B.flatness_beta(basis) <= 4.0

    def test_daubechies_bounded(self):
        basis = B.build_shift_invariant("daubechies4", 16)
        assert B.flatness_beta(basis) <= 4.0
