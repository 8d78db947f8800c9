import numpy as np
import pytest

from codetrack import dcf, fourier
from codetrack.errors import DimensionMismatch

from oracles import dense_dcf_solve


def random_instance(rng, shape=(4, 4), d=1):
    x = rng.standard_normal((d, *shape))
    c = fourier.hann_window(shape)
    y = fourier.gaussian_labels(shape, fourier.label_sigma(shape))
    return x, y, c


class TestDcfTrain:
    def test_zero_features(self):
        rng = np.random.default_rng(0)
        _, y, c = random_instance(rng)
        filt = dcf.dcf_train(np.zeros((2, 4, 4)), y, c, lam=0.5)
        assert np.allclose(filt.u, 2.0 * y, atol=1e-12)

    def test_dense_oracle_single_channel(self):
        rng = np.random.default_rng(1)
        x, y, c = random_instance(rng, (4, 4), d=1)
        filt = dcf.dcf_train(x, y, c, lam=0.5)
        want = dense_dcf_solve(x, y, c, lam=0.5)
        assert np.max(np.abs(filt.u - want)) / np.max(np.abs(want)) < 1e-8

    def test_dense_oracle_multichannel_grids(self):
        rng = np.random.default_rng(2)
        for shape in [(2, 2), (4, 4), (4, 6), (6, 6)]:
            for d in (1, 2, 3):
                x, y, c = random_instance(rng, shape, d)
                filt = dcf.dcf_train(x, y, c, lam=0.3)
                want = dense_dcf_solve(x, y, c, lam=0.3)
                rel = np.max(np.abs(filt.u - want)) / np.max(np.abs(want))
                assert rel < 1e-8

    def test_duplicated_channel_halves_lambda(self):
        rng = np.random.default_rng(3)
        x, y, c = random_instance(rng, (4, 4), d=1)
        doubled = np.concatenate([x, x], axis=0)
        a = dcf.dcf_train(doubled, y, c, lam=0.5)
        b = dcf.dcf_train(x, y, c, lam=0.25)
        assert np.allclose(a.u_hat, b.u_hat, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            dcf.dcf_train(np.zeros((1, 4, 4)), np.zeros((4, 5)), np.zeros((4, 4)), 0.5)


class TestResponseMap:
    def test_self_response_peak(self):
        rng = np.random.default_rng(4)
        shape = (16, 16)
        x = rng.standard_normal((2, *shape))
        c = fourier.hann_window(shape)
        y = fourier.gaussian_labels(shape, 2.0)
        # exact in the small-lambda limit
        filt = dcf.dcf_train(x, y, c, lam=1e-6)
        model = dcf.make_model(x, filt, lam=1e-6)
        resp = dcf.response_map(model, x, c)
        assert np.unravel_index(np.argmax(resp), shape) == (0, 0)
        assert resp.max() == pytest.approx(1.0, abs=0.02)

    def test_shift_theorem(self):
        # window of ones: pure periodic shift, localization must be exact
        rng = np.random.default_rng(5)
        shape = (12, 10)
        x = rng.standard_normal((1, *shape))
        c = np.ones(shape)
        y = fourier.gaussian_labels(shape, 1.5)
        filt = dcf.dcf_train(x, y, c, lam=0.5)
        model = dcf.make_model(x, filt, lam=0.5)
        for dy, dx in [(0, 0), (2, 3), (-1, 4), (5, -2)]:
            shifted = np.roll(x, (dy, dx), axis=(1, 2))
            resp = dcf.response_map(model, shifted, c)
            got = dcf.localize(resp)[:2]
            assert got == (dy, dx)

    def test_moved_right_peaks_right(self):
        # fixes the correlation direction: content moving +x peaks at +x
        rng = np.random.default_rng(6)
        shape = (8, 8)
        x = rng.standard_normal((1, *shape))
        y = fourier.gaussian_labels(shape, 1.0)
        filt = dcf.dcf_train(x, y, np.ones(shape), lam=0.5)
        model = dcf.make_model(x, filt, lam=0.5)
        resp = dcf.response_map(model, np.roll(x, 2, axis=2), np.ones(shape))
        assert dcf.localize(resp)[:2] == (0, 2)

    def test_zero_filter(self):
        rng = np.random.default_rng(7)
        shape = (6, 6)
        x = rng.standard_normal((2, *shape))
        c = fourier.hann_window(shape)
        model = dcf.CfModel(
            template_hat=np.fft.fft2(x, axes=(-2, -1)),
            filter_hat=np.zeros(shape, dtype=complex),
            lam=0.5,
        )
        assert np.allclose(dcf.response_map(model, x, c), 0.0)

    def test_linear_in_filter_and_template(self):
        rng = np.random.default_rng(8)
        shape = (6, 6)
        x = rng.standard_normal((1, *shape))
        t1 = rng.standard_normal((1, *shape))
        t2 = rng.standard_normal((1, *shape))
        c = fourier.hann_window(shape)
        y = fourier.gaussian_labels(shape, 1.0)
        filt = dcf.dcf_train(t1, y, c, lam=0.5)

        def model_with(template, filter_hat):
            return dcf.CfModel(
                template_hat=np.fft.fft2(template, axes=(-2, -1)),
                filter_hat=filter_hat,
                lam=0.5,
            )

        base = dcf.response_map(model_with(t1, filt.u_hat), x, c)
        scaled = dcf.response_map(model_with(t1, 3.0 * filt.u_hat), x, c)
        assert np.allclose(scaled, 3.0 * base, atol=1e-10)

        r1 = dcf.response_map(model_with(t1, filt.u_hat), x, c)
        r2 = dcf.response_map(model_with(t2, filt.u_hat), x, c)
        r12 = dcf.response_map(model_with(t1 + t2, filt.u_hat), x, c)
        assert np.allclose(r12, r1 + r2, atol=1e-10)


class TestLocalize:
    def test_delta_at_origin(self):
        resp = np.zeros((8, 8))
        resp[0, 0] = 1.0
        assert dcf.localize(resp) == (0, 0, 1.0)

    def test_wrap_rule(self):
        resp = np.zeros((8, 6))
        resp[7, 0] = 0.5
        assert dcf.localize(resp) == (-1, 0, 0.5)

    def test_tie_break_lexicographic(self):
        resp = np.zeros((8, 8))
        resp[1, 7] = 1.0  # (1, -1)
        resp[1, 1] = 1.0  # (1, 1)
        resp[7, 2] = 1.0  # (-1, 2)
        assert dcf.localize(resp) == (-1, 2, 1.0)


class TestUpdateModel:
    def make(self, rng, shape=(6, 6), d=2):
        x = rng.standard_normal((d, *shape))
        c = fourier.hann_window(shape)
        y = fourier.gaussian_labels(shape, 1.0)
        filt = dcf.dcf_train(x, y, c, lam=0.5)
        return dcf.make_model(x, filt, lam=0.5), x, filt

    def test_eta_zero_unchanged(self):
        rng = np.random.default_rng(9)
        model, x, filt = self.make(rng)
        x2 = rng.standard_normal(x.shape)
        updated = dcf.update_model(model, x2, filt, eta=0.0)
        assert np.array_equal(updated.template_hat, model.template_hat)
        assert np.array_equal(updated.filter_hat, model.filter_hat)

    def test_eta_one_replaces(self):
        rng = np.random.default_rng(10)
        model, x, filt = self.make(rng)
        x2 = rng.standard_normal(x.shape)
        updated = dcf.update_model(model, x2, filt, eta=1.0)
        assert np.allclose(updated.template_hat, np.fft.fft2(x2, axes=(-2, -1)))

    def test_geometric_convergence(self):
        rng = np.random.default_rng(11)
        model, x, filt = self.make(rng)
        target = rng.standard_normal(x.shape)
        target_hat = np.fft.fft2(target, axes=(-2, -1))
        eta = 0.25
        initial_err = np.linalg.norm(model.template_hat - target_hat)
        m = model
        for step in range(1, 6):
            m = dcf.update_model(m, target, filt, eta)
            err = np.linalg.norm(m.template_hat - target_hat)
            assert err == pytest.approx((1 - eta) ** step * initial_err, rel=1e-9)

    def test_spectrum_equals_spatial_update(self):
        rng = np.random.default_rng(12)
        model, x, filt = self.make(rng)
        x2 = rng.standard_normal(x.shape)
        eta = 0.4
        updated = dcf.update_model(model, x2, filt, eta)
        spatial = (1 - eta) * x + eta * x2
        assert np.allclose(
            updated.template_hat, np.fft.fft2(spatial, axes=(-2, -1)), atol=1e-9
        )

    def test_hermitian_symmetry_preserved(self):
        rng = np.random.default_rng(13)
        model, x, filt = self.make(rng)
        m = dcf.update_model(model, rng.standard_normal(x.shape), filt, 0.3)
        for ch in range(m.template_hat.shape[0]):
            plane = np.fft.ifft2(m.template_hat[ch])
            assert np.max(np.abs(plane.imag)) < 1e-10
