import numpy as np
import pytest

from streamlsq import basis as B
from streamlsq import measurement as M
from streamlsq.errors import KernelTooLong, UnsortedStream


class TestBatching:
    def test_all_in_batch_zero(self):
        stream = M.SampleStream(np.array([-0.2, 0.3, 0.74]), np.zeros(3))
        batches = M.batch_stream(stream, eta=0.25)
        assert len(batches) == 1
        assert batches[0].k == 0
        assert batches[0].size == 3

    def test_half_open_boundary_goes_to_later_batch(self):
        stream = M.SampleStream(np.array([0.75]), np.zeros(1))
        batches = M.batch_stream(stream, eta=0.25)
        assert batches[0].k == 1

    def test_empty_stream(self):
        assert M.batch_stream(M.SampleStream(np.empty(0), np.empty(0)), 0.25) == []

    def test_unsorted_raises(self):
        with pytest.raises(UnsortedStream):
            M.SampleStream(np.array([0.5, 0.2]), np.zeros(2))

    def test_partition_and_order_preserved(self):
        rng = np.random.default_rng(0)
        times = np.sort(rng.uniform(-0.25, 5.75, 200))
        stream = M.SampleStream(times, rng.standard_normal(200))
        batches = M.batch_stream(stream, eta=0.25)
        recon_t = np.concatenate([b.times for b in batches])
        recon_y = np.concatenate([b.values for b in batches])
        assert np.array_equal(recon_t, times)
        assert np.array_equal(recon_y, stream.values)
        assert sum(b.size for b in batches) == 200

    def test_empty_batches_emitted(self):
        stream = M.SampleStream(np.array([0.0, 3.0]), np.zeros(2))
        batches = M.batch_stream(stream, eta=0.25)
        assert [b.k for b in batches] == [0, 1, 2, 3]
        assert [b.size for b in batches] == [1, 0, 0, 1]

    def test_out_of_range_samples_warn(self):
        stream = M.SampleStream(np.array([-2.0, 0.5, 9.0]), np.zeros(3))
        with pytest.warns(UserWarning, match="rejecting 2 samples"):
            batches = M.batch_stream(stream, eta=0.25, k_first=0, k_last=1)
        assert sum(b.size for b in batches) == 1

    def test_csv_round_trip(self, tmp_path):
        stream = M.SampleStream(np.array([0.1, 0.7]), np.array([1.25, -0.5]))
        path = tmp_path / "samples.csv"
        stream.to_csv(path)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "t,y"
        back = M.SampleStream.from_csv(path)
        assert np.array_equal(back.times, stream.times)
        assert np.array_equal(back.values, stream.values)

    def test_noise_seeded(self):
        stream = M.SampleStream(np.array([0.1, 0.7]), np.zeros(2))
        a = M.with_noise(stream, 0.1, np.random.default_rng(3))
        b = M.with_noise(stream, 0.1, np.random.default_rng(3))
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, stream.values)


class TestPointAssembly:
    def test_center_sample_has_zero_b_row(self, lot8):
        batch = M.SampleBatch(k=2, times=np.array([2.5]), values=np.array([1.0]))
        filled = M.assemble_point(batch, lot8)
        assert np.all(filled.b == 0.0)
        assert np.any(filled.a != 0.0)

    def test_single_basis_function_signal(self, lot8):
        rng = np.random.default_rng(1)
        times = np.sort(rng.uniform(-0.25, 0.75, 30))
        y = lot8.evaluate_packet(0, times)[:, 3]
        batch = M.assemble_point(M.SampleBatch(0, times, y), lot8)
        assert np.array_equal(batch.values, batch.a[:, 3])

    def test_synthesized_signal_consistency(self, lot8):
        rng = np.random.default_rng(2)
        alphas = {k: rng.standard_normal(8) for k in range(-1, 5)}
        times = np.sort(rng.uniform(-0.25, 3.75, 400))
        stream = M.SampleStream(times, B.synthesize(lot8, alphas, times))
        for batch in M.batch_stream(stream, eta=0.25):
            filled = M.assemble_point(batch, lot8)
            model = filled.b @ alphas[batch.k - 1] + filled.a @ alphas[batch.k]
            resid = np.linalg.norm(filled.values - model)
            assert resid <= 1e-12 * max(np.linalg.norm(filled.values), 1.0)


class TestKernelAssembly:
    def test_narrow_box_matches_point_at_center(self, lot8):
        width = 1e-4
        times = np.array([0.3, 0.5, 0.6])
        batch = M.SampleBatch(0, times, np.zeros(3))
        via_kernel = M.assemble_kernel(batch, lot8, M.KernelMeasurementSpec(M.box_kernel(width), width))
        centered = M.SampleBatch(0, times - width / 2, np.zeros(3))
        via_point = M.assemble_point(centered, lot8)
        assert np.max(np.abs(via_kernel.a - via_point.a)) <= 1e-6
        assert np.max(np.abs(via_kernel.b - via_point.b)) <= 1e-6

    def test_box_narrowing_converges_monotonically(self, lot8):
        times = np.array([0.35, 0.62])
        errors = []
        for width in (1e-2, 1e-3, 1e-4):
            batch = M.SampleBatch(0, times, np.zeros(2))
            spec = M.KernelMeasurementSpec(M.box_kernel(width), width)
            via_kernel = M.assemble_kernel(batch, lot8, spec)
            via_point = M.assemble_point(M.SampleBatch(0, times - width / 2, np.zeros(2)), lot8)
            errors.append(np.max(np.abs(via_kernel.a - via_point.a)))
        assert errors[0] > errors[1] > errors[2]

    def test_kernel_over_dead_zone_gives_zero_row(self, lot8):
        # Kernel support entirely outside packet -1 (b side).
        batch = M.SampleBatch(0, times=np.array([0.74]), values=np.zeros(1))
        spec = M.KernelMeasurementSpec(M.box_kernel(0.4), 0.4)
        filled = M.assemble_kernel(batch, lot8, spec)
        assert np.all(filled.b == 0.0)

    def test_kernel_too_long(self, lot8):
        spec = M.KernelMeasurementSpec(M.box_kernel(0.6), 0.6)
        with pytest.raises(KernelTooLong):
            M.assemble_kernel(M.SampleBatch(0, np.array([0.5]), np.zeros(1)), lot8, spec)

    def test_length_equal_to_limit_accepted(self, lot8):
        spec = M.KernelMeasurementSpec(M.box_kernel(0.5), 0.5)
        M.assemble_kernel(M.SampleBatch(0, np.array([0.5]), np.zeros(1)), lot8, spec)

    def test_kernel_measurements_consistent_with_assembly(self, lot8):
        # Integrating a synthesized signal against the kernel must equal the
        # assembled rows applied to its true coefficients.
        from streamlsq.signals import kernel_sample

        rng = np.random.default_rng(6)
        alphas = {k: rng.standard_normal(8) for k in range(-1, 3)}
        x = lambda t: B.synthesize(lot8, alphas, t)
        width = 0.3
        kernel = M.box_kernel(width)
        seams = [k + s for k in range(-1, 3) for s in (-0.25, 0.25, 0.75, 1.25)]
        stream = kernel_sample(x, kernel, width, window=(0.8, 1.6), t_step=0.1, breakpoints=seams)
        batch = M.batch_stream(stream, eta=0.25, k_first=1, k_last=1)[0]
        filled = M.assemble_kernel(batch, lot8, M.KernelMeasurementSpec(kernel, width))
        model = filled.b @ alphas[0] + filled.a @ alphas[1]
        assert np.max(np.abs(model - filled.values)) <= 1e-10


class TestTapAssembly:
    def test_identity_channel_reduces_to_point(self, lot8):
        taps = M.DelayDopplerTaps([1.0], [0.0], [0.0])
        times = np.sort(np.random.default_rng(4).uniform(-0.25, 0.75, 25))
        batch = M.SampleBatch(0, times, np.zeros(25))
        via_taps = M.assemble_taps(batch, lot8, taps)
        via_point = M.assemble_point(batch, lot8)
        assert np.array_equal(via_taps.a, via_point.a)
        assert np.array_equal(via_taps.b, via_point.b)

    def test_matches_direct_channel_evaluation(self, lot8):
        # Documented channel taps; synthesized signal from known coefficients.
        taps = M.DelayDopplerTaps([1.0, 0.036, -0.3, 0.066], [0.0, 0.05, 0.33, 0.341], [0.001, 1.0, 2.0, 3.0])
        rng = np.random.default_rng(5)
        alphas = {k: rng.standard_normal(8) for k in range(-1, 4)}
        x = lambda t: B.synthesize(lot8, alphas, t)
        times = np.sort(rng.uniform(0.75, 1.75, 40))
        direct = taps.apply(x, times)
        batch = M.assemble_taps(M.SampleBatch(1, times, direct), lot8, taps)
        model = batch.b @ alphas[0] + batch.a @ alphas[1]
        assert np.max(np.abs(model - direct)) <= 1e-10 * max(1.0, np.max(np.abs(direct)))

    def test_delay_beyond_limit_rejected(self, lot8):
        taps = M.DelayDopplerTaps([1.0], [0.6], [0.0])
        with pytest.raises(KernelTooLong):
            M.assemble_taps(M.SampleBatch(0, np.array([0.5]), np.zeros(1)), lot8, taps)

    def test_tap_config_round_trip(self):
        taps = M.DelayDopplerTaps([1.0, -0.3], [0.0, 0.2], [0.5, 2.0])
        back = M.DelayDopplerTaps.from_config(taps.to_config())
        assert np.array_equal(back.amplitudes, taps.amplitudes)
        assert np.array_equal(back.delays, taps.delays)
        assert np.array_equal(back.frequencies, taps.frequencies)
