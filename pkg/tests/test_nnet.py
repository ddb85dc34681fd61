"""Autodiff correctness, GRU behavior, Adam, and finite-difference checks."""

import numpy as np
import pytest

from groundnav.nnet import (
    AdamState,
    GruEncoder,
    LinearHead,
    NnetError,
    Tensor,
    as_tensor,
    constant,
    finite_diff_check,
    log_softmax,
    parameter,
)


class TestBackward:
    def test_linear_gradient(self):
        w = parameter(np.array([1.0, -2.0, 3.0]))
        x = np.array([0.5, 0.25, -1.0])
        loss = w.dot(constant(x))
        loss.backward()
        assert np.allclose(w.grad, x)

    def test_constant_gets_no_gradient(self):
        w = parameter(np.array([1.0]))
        c = constant(np.array([2.0]))
        (w * c).sum().backward()
        assert c.grad is None or np.all(c.grad == 0)

    def test_non_scalar_root_rejected(self):
        w = parameter(np.array([1.0, 2.0]))
        with pytest.raises(NnetError):
            (w * 2.0).backward()

    def test_shared_subexpression_accumulates(self):
        w = parameter(np.array(3.0))
        y = w * w + w  # dy/dw = 2w + 1 = 7
        y.backward()
        assert w.grad == pytest.approx(7.0)

    def test_elementwise_ops_match_finite_diff(self):
        rng = np.random.default_rng(0)
        p = parameter(rng.normal(size=5))

        def loss_fn():
            t = as_tensor(p)
            return (
                t.tanh().sum()
                + t.sigmoid().sum()
                + (t * t).sum().log()
                + t.relu().sum()
                + (t * 0.1).exp().sum()
            )

        assert finite_diff_check(loss_fn, [p]) < 1e-3

    def test_matmul_and_pick(self):
        rng = np.random.default_rng(1)
        W = parameter(rng.normal(size=(3, 4)))
        x = constant(rng.normal(size=4))

        def loss_fn():
            return (W @ x).pick(1) * 2.0

        assert finite_diff_check(loss_fn, [W]) < 1e-3

    def test_power_gradients(self):
        base = parameter(np.array(1.7))
        expo = parameter(np.array(0.6))

        def loss_fn():
            return as_tensor(base).power(expo)

        assert finite_diff_check(loss_fn, [base, expo]) < 1e-3


class TestLogSoftmax:
    def test_matches_reference(self):
        logits = constant(np.array([1.0, 2.0, -0.5, 800.0]))  # overflow-safe
        lp = log_softmax(logits).value
        ref = logits.value - 800.0
        ref = ref - np.log(np.exp(ref).sum())
        assert np.allclose(lp, ref)

    def test_uniform(self):
        lp = log_softmax(constant(np.zeros(4))).value
        assert np.allclose(lp, -np.log(4))


class TestGru:
    def test_zero_weights_fixed_point(self):
        gru = GruEncoder(3, 4)
        for p in gru.parameters():
            p.value = np.zeros(p.shape)
        h = gru([np.ones(3), np.full(3, -2.0)])
        assert np.all(h.value == 0)

    def test_single_step_equals_length_one(self):
        gru = GruEncoder(3, 4, np.random.default_rng(2))
        x = np.array([0.3, -0.7, 1.1])
        assert np.allclose(gru([x]).value, gru([x]).value)

    def test_order_sensitivity(self):
        gru = GruEncoder(3, 4, np.random.default_rng(3))
        a, b = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
        assert not np.allclose(gru([a, b]).value, gru([b, a]).value)

    def test_empty_sequence_rejected(self):
        with pytest.raises(NnetError):
            GruEncoder(3, 4)([])

    def test_width_mismatch_rejected(self):
        with pytest.raises(NnetError):
            GruEncoder(3, 4)([np.ones(5)])

    def test_gradients_match_finite_diff(self):
        rng = np.random.default_rng(4)
        gru = GruEncoder(2, 3, rng)
        head = LinearHead(3, 1, rng)
        seq = [rng.normal(size=2) for _ in range(3)]

        def loss_fn():
            return head(gru(seq)).pick(0).tanh()

        assert finite_diff_check(loss_fn, gru.parameters() + head.parameters()) < 1e-3

    def test_state_round_trip(self):
        gru = GruEncoder(2, 3, np.random.default_rng(5))
        other = GruEncoder(2, 3, np.random.default_rng(99))
        other.load_state(gru.state())
        x = [np.array([0.1, -0.4])]
        assert np.allclose(gru(x).value, other(x).value)


class TestAdam:
    def test_zero_gradient_no_move(self):
        p = parameter(np.array([1.0, 2.0]))
        adam = AdamState([p], lr=0.1)
        adam.zero_grad()
        adam.step()
        assert np.allclose(p.value, [1.0, 2.0])

    def test_moves_against_gradient_sign(self):
        p = parameter(np.array(0.0))
        adam = AdamState([p], lr=0.1)
        for _ in range(10):
            adam.zero_grad()
            p.grad = np.array(1.0)
            adam.step()
        assert p.value < 0

    def test_quadratic_converges(self):
        p = parameter(np.array(5.0))
        adam = AdamState([p], lr=1e-2)
        for _ in range(5000):
            adam.zero_grad()
            loss = as_tensor(p) * as_tensor(p)
            loss.backward()
            adam.step()
            if loss.item() < 1e-6:
                break
        assert p.value**2 < 1e-6

    def test_nan_gradient_aborts(self):
        p = parameter(np.array(1.0), name="w")
        adam = AdamState([p])
        p.grad = np.array(np.nan)
        with pytest.raises(NnetError, match="w"):
            adam.step()


class TestFiniteDiffCheck:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_classifier_loss(self, seed):
        rng = np.random.default_rng(seed)
        embed = parameter(rng.normal(size=(6, 3)))
        gru = GruEncoder(3, 4, rng)
        head = LinearHead(4, 4, rng)
        tokens = rng.integers(0, 6, size=3)

        def loss_fn():
            h = gru([embed.row(int(i)) for i in tokens])
            return -log_softmax(head(h)).pick(2)

        params = [embed] + gru.parameters() + head.parameters()
        assert finite_diff_check(loss_fn, params) < 1e-3
