"""Classifier network: forward pass, input gradient, RBM pretraining, and
supervised fine-tuning."""

import numpy as np
import pytest

from helpers import central_diff, max_rel_err, random_dnn
from unmix.dnn import (
    DnnModel,
    TrainConfig,
    forward,
    forward_batch,
    input_gradient,
    loss_and_gradients,
    pretrain_rbm_stack,
    rbm_reconstruction_error,
    train_rbm,
    train_supervised,
)


def _zero_model(sizes):
    return DnnModel(
        [np.zeros((b, a)) for a, b in zip(sizes[:-1], sizes[1:])],
        [np.zeros(b) for b in sizes[1:]],
    )


def test_forward_zero_parameters_give_half():
    model = _zero_model([4, 3, 2])
    f, acts = forward(model, np.array([1.0, -2.0, 3.0, 0.5]))
    np.testing.assert_allclose(f, [0.5, 0.5])
    assert len(acts) == 3

    single = DnnModel([np.ones((2, 5))], [np.zeros(2)])
    f, _ = forward(single, np.zeros(5))
    np.testing.assert_allclose(f, [0.5, 0.5])


def test_forward_outputs_strictly_inside_unit_interval():
    rng = np.random.default_rng(0)
    for _ in range(10):
        model = random_dnn(rng, [6, 8, 4, 2])
        f, _ = forward(model, rng.standard_normal(6))
        assert np.all(f > 0.0) and np.all(f < 1.0)


def test_forward_dimension_mismatch_is_error():
    model = _zero_model([4, 3, 2])
    with pytest.raises(ValueError, match="shape"):
        forward(model, np.zeros(5))


def test_forward_monotone_in_output_bias():
    rng = np.random.default_rng(1)
    model = random_dnn(rng, [5, 6, 2])
    x = rng.standard_normal(5)
    f0, _ = forward(model, x)
    bumped = DnnModel(
        [W.copy() for W in model.weights],
        [b.copy() for b in model.biases],
    )
    bumped.biases[-1][0] += 0.5
    f1, _ = forward(bumped, x)
    assert f1[0] > f0[0]
    assert abs(f1[1] - f0[1]) < 1e-15


def test_input_gradient_zero_model_is_zero():
    model = _zero_model([4, 3, 2])
    x = np.array([1.0, 2.0, 3.0, 4.0])
    _, acts = forward(model, x)
    assert np.all(input_gradient(model, x, acts) == 0.0)


def test_input_gradient_single_layer_closed_form():
    rng = np.random.default_rng(2)
    W = rng.standard_normal((2, 6))
    b = rng.standard_normal(2)
    model = DnnModel([W], [b])
    x = rng.standard_normal(6)
    f, acts = forward(model, x)
    J = input_gradient(model, x, acts)
    expected = (f * (1 - f))[:, None] * W
    np.testing.assert_allclose(J, expected, rtol=1e-12)


@pytest.mark.parametrize("hidden", [(5,), (8, 4), (6, 5, 4), (7, 6, 5, 3)])
def test_input_gradient_matches_finite_differences(hidden):
    rng = np.random.default_rng(3)
    sizes = [6, *hidden, 2]
    for _ in range(5):
        model = random_dnn(rng, sizes)
        x = rng.standard_normal(6)
        f, acts = forward(model, x)
        J = input_gradient(model, x, acts)
        for i in range(2):
            num = central_diff(lambda z, i=i: forward(model, z)[0][i], x)
            assert max_rel_err(J[i], num) < 1e-5


def test_input_gradient_rejects_stale_activations():
    rng = np.random.default_rng(4)
    model = random_dnn(rng, [5, 4, 2])
    other = random_dnn(rng, [5, 7, 2])
    x = rng.standard_normal(5)
    _, acts = forward(other, x)
    with pytest.raises(ValueError, match="stale|match"):
        input_gradient(model, x, acts)


def test_loss_gradients_match_finite_differences_on_tiny_model():
    rng = np.random.default_rng(5)
    model = random_dnn(rng, [3, 4, 2])
    X = rng.standard_normal((3, 6))
    labels = np.zeros((2, 6))
    labels[0, :3] = 1.0
    labels[1, 3:] = 1.0
    _, grad_w, grad_b = loss_and_gradients(model, X, labels)

    for k in range(2):
        W = model.weights[k]
        num = np.zeros_like(W)
        for idx in np.ndindex(*W.shape):
            orig = W[idx]
            W[idx] = orig + 1e-5
            up = loss_and_gradients(model, X, labels)[0]
            W[idx] = orig - 1e-5
            down = loss_and_gradients(model, X, labels)[0]
            W[idx] = orig
            num[idx] = (up - down) / 2e-5
        assert max_rel_err(grad_w[k], num) < 1e-5

        b = model.biases[k]
        num_b = np.zeros_like(b)
        for i in range(b.size):
            orig = b[i]
            b[i] = orig + 1e-5
            up = loss_and_gradients(model, X, labels)[0]
            b[i] = orig - 1e-5
            down = loss_and_gradients(model, X, labels)[0]
            b[i] = orig
            num_b[i] = (up - down) / 2e-5
        assert max_rel_err(grad_b[k], num_b) < 1e-5


def _subspace_data(rng, n_samples=320, dim=10):
    # Samples confined to one 2-D nonnegative subspace of [0,1]^dim.
    p1 = rng.uniform(0.0, 1.0, dim)
    p2 = rng.uniform(0.0, 1.0, dim)
    z = rng.uniform(0.0, 1.0, (2, n_samples))
    data = np.clip(np.outer(p1, z[0]) + np.outer(p2, z[1]), 0.0, 1.0)
    return data[:, :256], data[:, 256:]  # train / held-out, same subspace


def test_rbm_training_is_deterministic_and_improves_reconstruction():
    data, held_out = _subspace_data(np.random.default_rng(6))

    cfg_short = TrainConfig(rbm_epochs=1, batch_size=64, seed=0)
    cfg_long = TrainConfig(rbm_epochs=150, batch_size=64, seed=0)

    W1, bv1, bh1 = train_rbm(data, 4, cfg_short, np.random.default_rng(0))
    W150, bv150, bh150 = train_rbm(data, 4, cfg_long, np.random.default_rng(0))
    err1 = rbm_reconstruction_error(W1, bv1, bh1, held_out)
    err150 = rbm_reconstruction_error(W150, bv150, bh150, held_out)
    assert err150 <= err1

    W_again, _, _ = train_rbm(data, 4, cfg_long, np.random.default_rng(0))
    assert np.array_equal(W150, W_again)


def test_rbm_beats_untrained_projection_on_subspace_data():
    data, _ = _subspace_data(np.random.default_rng(8))
    cfg = TrainConfig(rbm_epochs=60, batch_size=64, seed=0)
    W, bv, bh = train_rbm(data, 4, cfg, np.random.default_rng(1))
    trained = rbm_reconstruction_error(W, bv, bh, data)

    rng_base = np.random.default_rng(1)
    W0 = 0.01 * rng_base.standard_normal((4, 10))
    untrained = rbm_reconstruction_error(W0, np.zeros(10), np.zeros(4), data)
    assert trained < untrained


def test_pretrain_stack_shapes_determinism_and_validation():
    rng = np.random.default_rng(9)
    data = np.clip(np.abs(rng.standard_normal((6, 200))), 0, 1)
    cfg = TrainConfig(rbm_epochs=3, batch_size=32, seed=5)
    model_a = pretrain_rbm_stack(data, [6, 5, 4, 2], cfg)
    model_b = pretrain_rbm_stack(data, [6, 5, 4, 2], cfg)
    assert model_a.layer_sizes == [6, 5, 4, 2]
    for Wa, Wb in zip(model_a.weights, model_b.weights):
        assert np.array_equal(Wa, Wb)
    assert np.all(np.abs(model_a.weights[-1]) <= 0.01)

    with pytest.raises(ValueError, match="empty"):
        pretrain_rbm_stack(np.empty((6, 0)), [6, 4, 2], cfg)
    with pytest.raises(ValueError, match="batch"):
        pretrain_rbm_stack(data[:, :8], [6, 4, 2], cfg)


def _separable_dataset(rng, n_per_class=120, dim=4):
    # Class 1 concentrated on the first dims, class 2 on the last ones.
    X1 = rng.uniform(0.5, 1.0, (dim, n_per_class))
    X1[dim // 2 :] *= 0.05
    X2 = rng.uniform(0.5, 1.0, (dim, n_per_class))
    X2[: dim // 2] *= 0.05
    X = np.hstack([X1, X2])
    labels = np.zeros((2, 2 * n_per_class))
    labels[0, :n_per_class] = 1.0
    labels[1, n_per_class:] = 1.0
    return X, labels


def test_supervised_training_fits_separable_data():
    rng = np.random.default_rng(10)
    X, labels = _separable_dataset(rng)
    cfg = TrainConfig(rbm_epochs=5, bp_epochs=60, output_only_epochs=5, batch_size=32, seed=3)
    init = pretrain_rbm_stack(X, [4, 6, 2], cfg)
    model, losses = train_supervised(init, X, labels, cfg)
    assert losses[-1] < losses[0]
    predicted = np.argmax(forward_batch(model, X), axis=0)
    truth = np.argmax(labels, axis=0)
    assert np.mean(predicted == truth) >= 0.95


def test_supervised_output_only_epochs_freeze_lower_layers():
    rng = np.random.default_rng(11)
    X, labels = _separable_dataset(rng, n_per_class=64)
    cfg = TrainConfig(rbm_epochs=2, bp_epochs=5, output_only_epochs=5, batch_size=32, seed=4)
    init = pretrain_rbm_stack(X, [4, 6, 2], cfg)
    model, _ = train_supervised(init, X, labels, cfg)
    # every epoch was output-only, so lower layers are bit-identical
    assert np.array_equal(model.weights[0], init.weights[0])
    assert np.array_equal(model.biases[0], init.biases[0])
    assert not np.array_equal(model.weights[1], init.weights[1])


def test_supervised_training_is_deterministic():
    rng = np.random.default_rng(12)
    X, labels = _separable_dataset(rng, n_per_class=48)
    cfg = TrainConfig(rbm_epochs=2, bp_epochs=8, output_only_epochs=2, batch_size=32, seed=9)
    init = pretrain_rbm_stack(X, [4, 5, 2], cfg)
    m1, l1 = train_supervised(init, X, labels, cfg)
    m2, l2 = train_supervised(init, X, labels, cfg)
    assert l1 == l2
    for Wa, Wb in zip(m1.weights, m2.weights):
        assert np.array_equal(Wa, Wb)


def test_supervised_rejects_bad_labels():
    rng = np.random.default_rng(13)
    model = random_dnn(rng, [4, 5, 2])
    X = rng.standard_normal((4, 10))
    cfg = TrainConfig(rbm_epochs=1, bp_epochs=1, output_only_epochs=0, batch_size=4)
    bad = np.full((2, 10), 0.5)
    with pytest.raises(ValueError, match="indicator"):
        train_supervised(model, X, bad, cfg)
    not_one_hot = np.ones((2, 10))
    with pytest.raises(ValueError, match="indicator"):
        train_supervised(model, X, not_one_hot, cfg)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(output_only_epochs=10, bp_epochs=5)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(momentum=1.0)


def test_model_validation():
    with pytest.raises(ValueError, match="2 units"):
        DnnModel([np.zeros((3, 4))], [np.zeros(3)])
    with pytest.raises(ValueError, match="chain"):
        DnnModel([np.zeros((3, 4)), np.zeros((2, 5))], [np.zeros(3), np.zeros(2)])
    with pytest.raises(ValueError, match="finite"):
        DnnModel([np.full((2, 3), np.nan)], [np.zeros(2)])
