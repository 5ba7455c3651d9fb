"""Tests for the autodiff tape and its primitives."""

import numpy as np
import pytest

import autodiff as ad
from autodiff import Tape, Tensor
from errors import NonFiniteError, ShapeError


def primitive_error(fn, *shapes, rng, eps=1e-6):
    # inputs kept away from 0 so no gradient is tiny next to the rounding error of f
    theta = {f"x{i}": rng.uniform(0.1, 1.0, size=shape) for i, shape in enumerate(shapes)}
    return ad.grad_check(lambda w: ad.sum_all(fn(*[w[f'x{i}'] for i in range(len(shapes))])), theta, eps)


# ---------------------------------------------------------------------------
# Forward values
# ---------------------------------------------------------------------------


class TestForward:
    def test_sigmoid_at_zero(self):
        assert ad.sigmoid(np.zeros(1)).data[0] == 0.5

    def test_matmul_matches_triple_loop(self, rng):
        a, b = rng.standard_normal((2, 3)), rng.standard_normal((3, 4))
        expected = np.zeros((2, 4))
        for i in range(2):
            for j in range(4):
                for k in range(3):
                    expected[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(ad.matmul(a, b).data, expected, rtol=1e-12)

    def test_bias_row_broadcast(self):
        out = ad.add(np.zeros((3, 2)), np.array([1.0, 2.0]))
        np.testing.assert_array_equal(out.data, [[1, 2], [1, 2], [1, 2]])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError, match="shape mismatch"):
            ad.hadamard(np.zeros((2, 3)), np.zeros((3, 2)))
        with pytest.raises(ShapeError, match="shape mismatch"):
            ad.matmul(np.zeros((2, 3)), np.zeros((2, 3)))
        with pytest.raises(ShapeError, match="shape mismatch"):
            ad.reshape(np.zeros((2, 3)), (4, 2))

    def test_non_finite_forward(self):
        with pytest.raises(NonFiniteError, match="non-finite value"):
            ad.log_eps(np.array([-1.0]))

    def test_pow_scalar_clamped_at_zero(self):
        out = ad.pow_scalar(np.array([0.0, 4.0]), 0.5)
        np.testing.assert_array_equal(out.data, [0.0, 2.0])

    def test_pow_scalar_negative_base_non_integer(self):
        with pytest.raises(ShapeError):
            ad.pow_scalar(np.array([-1.0]), 1.5)

    def test_no_recording_outside_tape(self):
        w = Tensor(np.ones(2), requires_grad=True)
        out = ad.scale(w, 2.0)
        assert out.requires_grad
        assert out._backward is None


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------


class TestBackward:
    def test_sum_of_squares(self):
        with Tape() as tape:
            w = tape.parameter('w', np.array([1.0, 2.0]))
            grads = ad.backward(ad.sum_all(ad.hadamard(w, w)))
        np.testing.assert_allclose(grads['w'], [2.0, 4.0])

    def test_unreachable_parameter_gets_zero(self):
        with Tape() as tape:
            w = tape.parameter('w', np.array([1.0, 2.0]))
            v = tape.parameter('v', np.array([3.0]))
            grads = tape.backward(ad.sum_all(v))
        np.testing.assert_array_equal(grads['w'], [0.0, 0.0])
        assert w.grad is grads['w']

    def test_reuse_accumulates(self):
        with Tape() as tape:
            w = tape.parameter('w', np.array([1.5, -0.5]))
            once = tape.backward(ad.sum_all(w))['w']
        with Tape() as tape:
            w = tape.parameter('w', np.array([1.5, -0.5]))
            twice = tape.backward(ad.sum_all(ad.add(w, w)))['w']
        np.testing.assert_allclose(twice, 2 * once)

    def test_tanh_derivative_at_zero(self):
        with Tape() as tape:
            x = tape.parameter('x', np.zeros(1))
            grads = tape.backward(ad.sum_all(ad.tanh(x)))
        assert grads['x'][0] == pytest.approx(1.0)

    def test_abs_subgradient_zero_at_kink(self):
        with Tape() as tape:
            x = tape.parameter('x', np.array([-2.0, 0.0, 3.0]))
            grads = tape.backward(ad.sum_all(ad.abs_val(x)))
        np.testing.assert_array_equal(grads['x'], [-1.0, 0.0, 1.0])

    def test_non_scalar_loss(self):
        with Tape() as tape:
            w = tape.parameter('w', np.ones(3))
            with pytest.raises(ShapeError):
                tape.backward(ad.scale(w, 2.0))

    def test_backward_outside_tape(self):
        with pytest.raises(RuntimeError):
            ad.backward(Tensor(np.ones(1)))


# ---------------------------------------------------------------------------
# grad_check on every primitive
# ---------------------------------------------------------------------------


class TestGradCheck:
    @pytest.mark.parametrize("fn,shapes", [
        (ad.add, [(3, 4), (3, 4)]),
        (ad.add, [(3, 4), (4,)]),
        (ad.subtract, [(3, 4), (3, 4)]),
        (ad.hadamard, [(3, 4), (3, 4)]),
        (ad.matmul, [(2, 3), (3, 4)]),
        (ad.concat_cols, [(2, 3), (2, 2)]),
        (lambda a: ad.slice_rows(a, 1, 3), [(4, 3)]),
        (lambda a: ad.reshape(a, (2, 6)), [(4, 3)]),
        (ad.sigmoid, [(3, 3)]),
        (ad.tanh, [(3, 3)]),
        (ad.relu, [(3, 3)]),
        (ad.abs_val, [(3, 3)]),
        (lambda a: ad.pow_scalar(a, 1.7), [(3, 3)]),
        (lambda a: ad.pow_scalar(a, 2), [(3, 3)]),
        (ad.log_eps, [(3, 3)]),
        (lambda a: ad.scale(a, -0.3), [(3, 3)]),
        (ad.one_minus, [(3, 3)]),
    ])
    def test_primitive(self, rng, fn, shapes):
        assert primitive_error(fn, *shapes, rng=rng) < 1e-6

    def test_quadratic_is_exact(self, rng):
        theta = {"w": rng.uniform(0.5, 1.5, size=(3, 2))}
        error = ad.grad_check(lambda w: ad.sum_all(ad.hadamard(w['w'], w['w'])), theta, 1e-4)
        assert error < 1e-9

    def test_constant_function(self):
        theta = {'w': np.ones(3)}
        assert ad.grad_check(lambda w: ad.constant(np.array(5.0)), theta) == 0.0

    def test_theta_not_modified(self, rng):
        theta = {'w': rng.standard_normal(4)}
        before = theta['w'].copy()
        ad.grad_check(lambda w: ad.sum_all(ad.tanh(w['w'])), theta)
        np.testing.assert_array_equal(theta['w'], before)

    def test_eps_range(self):
        with pytest.raises(ValueError):
            ad.grad_check(lambda w: ad.sum_all(w['w']), {'w': np.ones(2)}, eps=1e-2)
