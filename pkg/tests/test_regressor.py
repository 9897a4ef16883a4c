import numpy as np
import pytest

from vizpick.errors import EmptyEnsemble, ShapeMismatch
from vizpick.nn import Conv2d, Dense
from vizpick.regressor import (
    ConvRegressor,
    batch_smooth_l1,
    default_architecture,
    grad_check,
    image_batch,
    init_model,
    loss_smooth_l1_weighted,
    predict_ensemble,
    reduced_architecture,
)


class TestInit:
    def test_same_seed_identical(self):
        a = init_model(7)
        b = init_model(7)
        assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))

    def test_different_seed_differs(self):
        a = init_model(7)
        b = init_model(8)
        assert any(not np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))

    def test_output_width_26(self):
        m = init_model(0)
        out = m.forward(np.zeros((64, 64)))
        assert out.shape == (26,)

    def test_param_count_default(self):
        # conv(8,5x5)+conv(16,3x3)+conv(32,3x3)+dense(1152,128)+dense(128,26)
        assert init_model(0).param_count == 156954

    def test_bad_architecture_rejected(self):
        arch = list(default_architecture())
        arch[-1] = {"kind": "dense", "out_features": 10}
        with pytest.raises(ShapeMismatch):
            ConvRegressor(arch)


class TestForward:
    def test_zero_params_zero_output(self):
        m = ConvRegressor(default_architecture())  # parameters default to zero
        out = m.forward(np.zeros((64, 64)))
        assert np.array_equal(out, np.zeros(26))

    def test_deterministic(self, rng):
        m = init_model(3)
        img = rng.uniform(0, 1, (64, 64))
        assert np.array_equal(m.forward(img), m.forward(img))

    def test_shape_mismatch(self):
        m = init_model(0)
        with pytest.raises(ShapeMismatch):
            m.forward(np.zeros((32, 32)))

    def test_hand_computed_toy_convolution(self):
        conv = Conv2d(1, 1, kernel=2, stride=1, dtype=np.float64)
        conv.weight[0, 0] = [[1.0, 2.0], [3.0, 4.0]]
        conv.bias[0] = 0.5
        x = np.arange(9, dtype=np.float64).reshape(1, 1, 3, 3)
        out, _ = conv.forward(x)
        # window at (0,0): 0*1 + 1*2 + 3*3 + 4*4 + 0.5 = 27.5, and so on
        expected = np.array([[27.5, 37.5], [57.5, 67.5]])
        assert np.array_equal(out[0, 0], expected)


class TestLoss:
    def test_identity_zero(self):
        y = np.linspace(0, 1, 26)
        loss, grad = loss_smooth_l1_weighted(y, y, np.ones(26))
        assert loss == 0.0
        assert np.array_equal(grad, np.zeros(26))

    def test_single_entry_quadratic_region(self):
        y = np.zeros(26)
        pred = np.zeros(26)
        pred[4] = 0.5
        loss, grad = loss_smooth_l1_weighted(pred, y, np.ones(26), beta=1.0)
        assert loss == pytest.approx(0.125)
        assert grad[4] == pytest.approx(0.5)

    def test_linear_region(self):
        y = np.zeros(26)
        pred = np.zeros(26)
        pred[0] = -3.0
        loss, grad = loss_smooth_l1_weighted(pred, y, np.ones(26), beta=1.0)
        assert loss == pytest.approx(3.0 - 0.5)
        assert grad[0] == -1.0

    def test_weights_clamp(self):
        y = np.zeros(26)
        pred = np.full(26, 0.1)
        t_bar = np.zeros(26)  # all weights clamp to 1/eps
        loss, _ = loss_smooth_l1_weighted(pred, y, t_bar, beta=1.0, eps=1e-3)
        assert loss == pytest.approx(26 * 1000 * 0.005)

    def test_gradient_matches_finite_differences(self, rng):
        pred = rng.uniform(-2, 2, 26)
        true = rng.uniform(0, 1, 26)
        t_bar = rng.uniform(0.05, 1.0, 26)
        _, grad = loss_smooth_l1_weighted(pred, true, t_bar, beta=0.7, eps=1e-3)
        step = 1e-7
        for i in range(26):
            up = pred.copy()
            up[i] += step
            down = pred.copy()
            down[i] -= step
            fd = (
                loss_smooth_l1_weighted(up, true, t_bar, beta=0.7)[0]
                - loss_smooth_l1_weighted(down, true, t_bar, beta=0.7)[0]
            ) / (2 * step)
            assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)


class TestGradCheck:
    def test_reduced_architecture_accurate(self, rng):
        m = init_model(5, reduced_architecture())
        img = rng.uniform(0, 1, (12, 12))
        y = rng.uniform(0, 1, 26)
        assert grad_check(m, img, y) <= 1e-4

    def test_zero_signal_zero_gradient(self, rng):
        m = init_model(6, reduced_architecture())
        img = rng.uniform(0, 1, (12, 12))
        y = m.astype(np.float64).forward_batch(image_batch([img], np.float64))[0]
        assert grad_check(m, img, y) == 0.0

    def test_linear_model_matches_closed_form(self, rng):
        # dense-only model, quadratic loss region: dL/dW = (d / beta) x^T
        arch = (
            {"kind": "input", "channels": 1, "height": 4, "width": 4},
            {"kind": "flatten"},
            {"kind": "dense", "out_features": 26},
        )
        m = init_model(2, arch, dtype=np.float64)
        x = rng.uniform(0, 1, (4, 4))
        batch = image_batch([x], np.float64)
        pred, caches = m.forward_with_caches(batch)
        target = rng.uniform(0, 1, (1, 26))
        target = np.clip(target, None, pred - 0.5 + 1.0)  # keep |d| < beta
        loss, dpred = batch_smooth_l1(pred, target, np.ones(26), beta=1.0)
        grads = m.backward(caches, dpred)
        d = (pred - target)[0]
        expected_dw = np.outer(d, batch.ravel())
        np.testing.assert_allclose(grads[0], expected_dw, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(grads[1], d, rtol=1e-10, atol=1e-12)


class TestLayerGradients:
    def test_conv_input_gradient(self, rng):
        conv = Conv2d(2, 3, kernel=3, stride=2, dtype=np.float64)
        conv.init_params(np.random.default_rng(0))
        x = rng.standard_normal((2, 2, 7, 7))
        out, cache = conv.forward(x)
        dout = rng.standard_normal(out.shape)
        dx, _ = conv.backward(cache, dout)
        step = 1e-6
        flat = x.ravel()
        for i in rng.choice(flat.size, size=20, replace=False):
            orig = flat[i]
            flat[i] = orig + step
            up = (conv.forward(x)[0] * dout).sum()
            flat[i] = orig - step
            down = (conv.forward(x)[0] * dout).sum()
            flat[i] = orig
            fd = (up - down) / (2 * step)
            assert dx.ravel()[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_dense_input_gradient(self, rng):
        dense = Dense(6, 4, dtype=np.float64)
        dense.init_params(np.random.default_rng(0))
        x = rng.standard_normal((3, 6))
        out, cache = dense.forward(x)
        dout = rng.standard_normal(out.shape)
        dx, _ = dense.backward(cache, dout)
        np.testing.assert_allclose(dx, dout @ dense.weight, rtol=1e-12)


class TestEnsemble:
    def test_single_member_is_identity(self, rng):
        m = init_model(1)
        img = rng.uniform(0, 1, (64, 64))
        assert np.array_equal(predict_ensemble([m], img), m.forward(img))

    def test_opposite_members_cancel(self, rng):
        img = rng.uniform(0, 1, (64, 64))

        class Stub:
            def __init__(self, v):
                self.v = v

            def forward(self, _img):
                return self.v

        v = rng.uniform(-1, 1, 26)
        out = predict_ensemble([Stub(v), Stub(-v)], img)
        np.testing.assert_allclose(out, np.zeros(26), atol=1e-16)

    def test_empty_rejected(self, rng):
        with pytest.raises(EmptyEnsemble):
            predict_ensemble([], rng.uniform(0, 1, (64, 64)))
