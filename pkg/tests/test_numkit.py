"""Dense-net kernel tests: hand cases plus finite-difference oracles."""

import numpy as np
import pytest

from daovfl import numkit
from daovfl.errors import DimensionError, DomainError, NumericError
from daovfl.numkit import (
    AdamState,
    DenseNet,
    GradBundle,
    Layer,
    adam_step,
    dense_net,
    mlp_backward,
    mlp_forward,
    mse_loss,
    ogd_step,
    softmax_xent,
)


def single_layer(w, b, act="linear"):
    return DenseNet([Layer(np.array(w, dtype=float), np.array(b, dtype=float), act)])


def random_net(rng, widths=None, activations=None):
    if widths is None:
        n_layers = rng.integers(1, 4)
        widths = rng.integers(1, 9, size=n_layers + 1)
    if activations is None:
        activations = list(rng.choice(["linear", "relu", "tanh", "sigmoid"], size=len(widths) - 1))
    return dense_net(widths, activations, rng)


def numeric_grad(f, arr, step=1e-5):
    """Central finite differences of scalar f with respect to arr entries."""
    g = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f()
        flat[i] = orig - step
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * step)
    return g


def relu_margin_ok(net, x, margin=1e-4):
    """True when no relu pre-activation sits within `margin` of its kink."""
    a = x
    for layer in net.layers:
        z = a @ layer.weight + layer.bias
        if layer.activation == "relu" and np.any(np.abs(z) < margin):
            return False
        a = mlp_forward(DenseNet([layer]), a)[-1]
    return True


class TestForward:
    def test_identity(self):
        net = single_layer(np.eye(3), np.zeros(3))
        x = np.arange(6.0).reshape(2, 3)
        acts = mlp_forward(net, x)
        np.testing.assert_array_equal(acts[-1], x)

    def test_scalar_affine(self):
        net = single_layer([[2.0]], [1.0])
        assert mlp_forward(net, [[3.0]])[-1][0, 0] == 7.0

    def test_relu_clamp(self):
        net = single_layer([[1.0]], [-2.0], "relu")
        assert mlp_forward(net, [[1.0]])[-1][0, 0] == 0.0

    def test_one_record_per_layer_plus_input(self):
        rng = np.random.default_rng(0)
        net = dense_net([3, 5, 2], "tanh", rng)
        acts = mlp_forward(net, rng.standard_normal((4, 3)))
        assert len(acts) == 3
        assert acts[-1].shape == (4, 2)

    def test_pure_function(self):
        rng = np.random.default_rng(1)
        net = dense_net([4, 6, 3], ["relu", "sigmoid"], rng)
        x = rng.standard_normal((5, 4))
        a = mlp_forward(net, x)[-1]
        b = mlp_forward(net, x)[-1]
        np.testing.assert_array_equal(a, b)

    def test_shape_mismatch(self):
        net = single_layer([[1.0]], [0.0])
        with pytest.raises(DimensionError):
            mlp_forward(net, np.zeros((2, 3)))


class TestBackward:
    def test_hand_linear(self):
        # y = w x, loss = 0.5 (y - t)^2 with w=2, x=3, t=0 -> dL/dw = 18
        net = single_layer([[2.0]], [0.0])
        acts = mlp_forward(net, [[3.0]])
        y = acts[-1][0, 0]
        grads, _ = mlp_backward(net, acts, [[y]])  # dL/dy = y - t = y
        assert grads.dw[0][0, 0] == pytest.approx(18.0)

    def test_zero_upstream(self):
        rng = np.random.default_rng(2)
        net = dense_net([3, 4, 2], "tanh", rng)
        acts = mlp_forward(net, rng.standard_normal((6, 3)))
        grads, dx = mlp_backward(net, acts, np.zeros((6, 2)))
        for dw in grads.dw:
            assert not dw.any()
        assert not dx.any()

    def test_finite_difference_two_layer(self):
        rng = np.random.default_rng(3)
        net = dense_net([4, 5, 3], ["tanh", "sigmoid"], rng)
        x = rng.standard_normal((7, 4))
        t = rng.standard_normal((7, 3))

        def loss():
            return mse_loss(mlp_forward(net, x)[-1], t)[0]

        acts = mlp_forward(net, x)
        _, grad_out = mse_loss(acts[-1], t)
        grads, _ = mlp_backward(net, acts, grad_out)
        for i, layer in enumerate(net.layers):
            fd = numeric_grad(loss, layer.weight)
            np.testing.assert_allclose(grads.dw[i], fd, rtol=1e-4, atol=1e-8)
            fd_b = numeric_grad(loss, layer.bias)
            np.testing.assert_allclose(grads.db[i], fd_b, rtol=1e-4, atol=1e-8)


class TestFiniteDifferenceSweep:
    def test_100_random_nets(self):
        """Backprop matches central differences across random small nets."""
        checked = 0
        seed = 0
        while checked < 100:
            rng = np.random.default_rng(seed)
            seed += 1
            net = random_net(rng)
            x = rng.standard_normal((4, net.in_width))
            if not relu_margin_ok(net, x):
                continue  # resample: finite differences break at relu kinks
            t = rng.standard_normal((4, net.out_width))

            def loss():
                return mse_loss(mlp_forward(net, x)[-1], t)[0]

            acts = mlp_forward(net, x)
            _, grad_out = mse_loss(acts[-1], t)
            grads, _ = mlp_backward(net, acts, grad_out)
            for i, layer in enumerate(net.layers):
                fd = numeric_grad(loss, layer.weight)
                np.testing.assert_allclose(grads.dw[i], fd, rtol=1e-4, atol=1e-7)
                fd = numeric_grad(loss, layer.bias)
                np.testing.assert_allclose(grads.db[i], fd, rtol=1e-4, atol=1e-7)
            checked += 1


class TestOgd:
    def test_hand_step(self):
        net = single_layer([[1.0]], [0.0])
        grads = GradBundle([np.array([[0.5]])], [np.zeros(1)])
        out = ogd_step(net, grads, 0.1)
        assert out.layers[0].weight[0, 0] == pytest.approx(0.95)
        assert net.layers[0].weight[0, 0] == 1.0  # input untouched

    def test_zero_gradient(self):
        rng = np.random.default_rng(4)
        net = dense_net([3, 3], "linear", rng)
        out = ogd_step(net, GradBundle.zeros_like(net), 0.5)
        np.testing.assert_array_equal(out.layers[0].weight, net.layers[0].weight)

    def test_quadratic_descent(self):
        # loss = mean (wx - t)^2, eta below 1/curvature strictly decreases it
        rng = np.random.default_rng(5)
        net = single_layer([[0.0]], [0.0])
        x = rng.standard_normal((32, 1))
        t = 3.0 * x
        prev = np.inf
        for _ in range(20):
            acts = mlp_forward(net, x)
            loss, grad = mse_loss(acts[-1], t)
            assert loss < prev
            prev = loss
            grads, _ = mlp_backward(net, acts, grad)
            net = ogd_step(net, grads, 0.1)

    def test_nonfinite_gradient(self):
        net = single_layer([[1.0]], [0.0])
        grads = GradBundle([np.array([[np.nan]])], [np.zeros(1)])
        with pytest.raises(NumericError):
            ogd_step(net, grads, 0.1)


class TestAdam:
    def test_first_step_magnitude(self):
        net = single_layer([[1.0]], [0.0])
        state = AdamState.zeros_like(net)
        grads = GradBundle([np.array([[1.0]])], [np.zeros(1)])
        out = adam_step(net, grads, state, lr=0.01)
        # bias-corrected first step is lr / (1 + eps) regardless of g scale
        assert out.layers[0].weight[0, 0] == pytest.approx(1.0 - 0.01, abs=1e-6)
        assert state.t == 1

    def test_zero_gradient_fresh_state(self):
        rng = np.random.default_rng(6)
        net = dense_net([2, 2], "linear", rng)
        state = AdamState.zeros_like(net)
        out = adam_step(net, GradBundle.zeros_like(net), state, lr=0.01)
        np.testing.assert_array_equal(out.layers[0].weight, net.layers[0].weight)

    def test_monotone_descent(self):
        net = single_layer([[5.0]], [0.0])
        state = AdamState.zeros_like(net)
        grads = GradBundle([np.array([[1.0]])], [np.zeros(1)])
        vals = [net.layers[0].weight[0, 0]]
        for _ in range(5):
            net = adam_step(net, grads, state, lr=0.01)
            vals.append(net.layers[0].weight[0, 0])
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestSoftmaxXent:
    def test_uniform_logits(self):
        loss, _ = softmax_xent(np.zeros((5, 7)), np.arange(5) % 7)
        assert loss == pytest.approx(np.log(7))

    def test_saturation(self):
        logits = np.zeros((1, 4))
        logits[0, 2] = 50.0
        loss, _ = softmax_xent(logits, [2])
        assert loss < 1e-9

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(7)
        logits = rng.standard_normal((6, 4))
        labels = rng.integers(0, 4, size=6)
        _, grad = softmax_xent(logits, labels)

        def loss():
            return softmax_xent(logits, labels)[0]

        fd = numeric_grad(loss, logits)
        np.testing.assert_allclose(grad, fd, atol=1e-5)

    def test_label_out_of_range(self):
        with pytest.raises(DomainError):
            softmax_xent(np.zeros((2, 3)), [0, 3])


class TestMseLoss:
    def test_identity(self):
        x = np.random.default_rng(8).standard_normal((3, 4))
        loss, grad = mse_loss(x, x)
        assert loss == 0.0
        assert not grad.any()

    def test_single_element(self):
        loss, grad = mse_loss([[1.0]], [[0.0]])
        assert loss == 1.0
        assert grad[0, 0] == 2.0

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(9)
        pred = rng.standard_normal((5, 3))
        target = rng.standard_normal((5, 3))
        _, grad = mse_loss(pred, target)

        def loss():
            return mse_loss(pred, target)[0]

        fd = numeric_grad(loss, pred, step=1e-6)
        np.testing.assert_allclose(grad, fd, atol=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            mse_loss(np.zeros((2, 2)), np.zeros((2, 3)))


class TestNetPlumbing:
    def test_param_count(self):
        rng = np.random.default_rng(10)
        net = dense_net([3, 5, 2], "tanh", rng)
        assert net.param_count == 3 * 5 + 5 + 5 * 2 + 2

    def test_width_chain_validation(self):
        l1 = Layer(np.zeros((2, 3)), np.zeros(3))
        l2 = Layer(np.zeros((4, 1)), np.zeros(1))
        with pytest.raises(DimensionError):
            DenseNet([l1, l2])

    def test_glorot_bounds(self):
        rng = np.random.default_rng(11)
        net = dense_net([30, 20], "linear", rng)
        bound = np.sqrt(6.0 / 50)
        assert np.all(np.abs(net.layers[0].weight) <= bound)
        assert not net.layers[0].bias.any()
