import numpy as np
import pytest

from splineflow import (
    DataFormatError,
    InterpolantSample,
    InvalidArgumentError,
    MlpConfig,
    NumericError,
    SampleBatch,
    forward,
    forward_batch,
    init_params,
    load_checkpoint,
    loss_and_grad,
    save_checkpoint,
    time_embedding,
)


def test_embedding_at_zero():
    emb = time_embedding(0.0, bands=4)
    assert np.allclose(emb[:4], 0.0)
    assert np.allclose(emb[4:], 1.0)


def test_embedding_dimension():
    assert time_embedding(0.3, bands=8).shape == (16,)


def test_embedding_injective_on_grid():
    ts = np.linspace(0.0, 1.0, 1000)
    emb = time_embedding(ts, bands=2)
    assert np.unique(emb.round(12), axis=0).shape[0] == 1000


def test_embedding_rejects_nonpositive_bands():
    with pytest.raises(InvalidArgumentError):
        time_embedding(0.5, bands=0)


def test_zero_params_give_zero_output():
    config = MlpConfig(state_dim=3, hidden_dims=(8, 8), embed_bands=2)
    params = init_params(config, seed=0)
    for w in params.weights:
        w[...] = 0.0
    assert np.allclose(forward(params, 0.7, np.array([1.0, -2.0, 3.0])), 0.0)


def test_forward_matches_hand_computation():
    config = MlpConfig(state_dim=2, hidden_dims=(3,), use_time_embedding=False)
    params = init_params(config, seed=1)
    u = np.array([0.5, -1.5])
    expected = np.maximum(u @ params.weights[0] + params.biases[0], 0.0)
    expected = expected @ params.weights[1] + params.biases[1]
    assert np.allclose(forward(params, 0.0, u), expected, atol=1e-15)


def test_forward_is_deterministic():
    config = MlpConfig(state_dim=4, hidden_dims=(16, 16), embed_bands=4)
    params = init_params(config, seed=3)
    u = np.random.default_rng(0).standard_normal(4)
    a = forward(params, 0.3, u)
    b = forward(params, 0.3, u)
    assert np.array_equal(a, b)


def test_init_deterministic_and_bounded():
    config = MlpConfig(state_dim=3, hidden_dims=(8,), embed_bands=2)
    p1 = init_params(config, seed=7)
    p2 = init_params(config, seed=7)
    p3 = init_params(config, seed=8)
    dims = config.layer_dims
    for i, (w1, w2, w3) in enumerate(zip(p1.weights, p2.weights, p3.weights)):
        assert np.array_equal(w1, w2)
        assert np.abs(w1).max() <= 1.0 / np.sqrt(dims[i])
        assert not np.array_equal(w1, w3)
    for b in p1.biases:
        assert np.all(b == 0.0)


def _toy_batch(params, rng, n=8):
    d = params.config.state_dim
    ts = rng.uniform(0, 1, n)
    xs = rng.standard_normal((n, d))
    vs = rng.standard_normal((n, d))
    return SampleBatch(t=ts, x=xs, v_target=vs)


def test_loss_zero_at_oracle_targets():
    config = MlpConfig(state_dim=2, hidden_dims=(4,), embed_bands=2)
    params = init_params(config, seed=0)
    rng = np.random.default_rng(0)
    batch = _toy_batch(params, rng, n=1)
    oracle = forward_batch(params, batch.t, batch.x)
    loss, grads = loss_and_grad(params, SampleBatch(t=batch.t, x=batch.x, v_target=oracle))
    assert loss == 0.0
    for g in grads.arrays():
        assert np.allclose(g, 0.0)


def test_gradients_match_finite_differences():
    config = MlpConfig(state_dim=2, hidden_dims=(4,), embed_bands=2)
    params = init_params(config, seed=5)
    assert params.n_params <= 200
    rng = np.random.default_rng(6)
    batch = _toy_batch(params, rng, n=8)
    _, grads = loss_and_grad(params, batch)
    flat_g = grads.to_flat()

    eps = 1e-5
    probe = params.copy()
    flat0 = params.to_flat()
    fd = np.empty_like(flat0)
    for i in range(flat0.size):
        bumped = flat0.copy()
        bumped[i] += eps
        probe.set_flat(bumped)
        lp, _ = loss_and_grad(probe, batch)
        bumped[i] -= 2 * eps
        probe.set_flat(bumped)
        lm, _ = loss_and_grad(probe, batch)
        fd[i] = (lp - lm) / (2 * eps)
    denom = np.maximum(np.abs(fd), 1e-8)
    assert np.max(np.abs(flat_g - fd) / denom) < 1e-4


def test_quadratic_scaling_of_loss():
    config = MlpConfig(state_dim=3, hidden_dims=(4,), embed_bands=2)
    params = init_params(config, seed=0)
    for w in params.weights:
        w[...] = 0.0
    rng = np.random.default_rng(2)
    batch = _toy_batch(params, rng)
    loss1, _ = loss_and_grad(params, batch)
    doubled = SampleBatch(t=batch.t, x=batch.x, v_target=2.0 * batch.v_target)
    loss2, _ = loss_and_grad(params, doubled)
    assert np.isclose(loss2, 4.0 * loss1)


def test_loss_accepts_sample_lists():
    config = MlpConfig(state_dim=2, hidden_dims=(4,), embed_bands=2)
    params = init_params(config, seed=1)
    rng = np.random.default_rng(3)
    batch = _toy_batch(params, rng, n=5)
    as_list = [InterpolantSample(t=float(batch.t[i]), x=batch.x[i], v_target=batch.v_target[i]) for i in range(5)]
    loss_a, grads_a = loss_and_grad(params, batch)
    loss_b, grads_b = loss_and_grad(params, as_list)
    assert np.isclose(loss_a, loss_b)
    for ga, gb in zip(grads_a.arrays(), grads_b.arrays()):
        assert np.allclose(ga, gb)


def test_empty_batch_rejected():
    config = MlpConfig(state_dim=2, hidden_dims=(4,))
    params = init_params(config, seed=0)
    with pytest.raises(InvalidArgumentError):
        loss_and_grad(params, [])


def test_nonfinite_input_raises_numeric_error():
    config = MlpConfig(state_dim=2, hidden_dims=(4,), embed_bands=2)
    params = init_params(config, seed=0)
    batch = SampleBatch(
        t=np.array([0.5]), x=np.array([[np.nan, 0.0]]), v_target=np.zeros((1, 2))
    )
    with pytest.raises(NumericError):
        loss_and_grad(params, batch)


def test_nonfinite_target_reports_sample_index():
    config = MlpConfig(state_dim=2, hidden_dims=(4,), embed_bands=2)
    params = init_params(config, seed=0)
    v = np.zeros((3, 2))
    v[1, 0] = np.inf
    batch = SampleBatch(t=np.full(3, 0.5), x=np.zeros((3, 2)), v_target=v)
    with pytest.raises(NumericError, match="sample 1"):
        loss_and_grad(params, batch)


def test_checkpoint_round_trip(tmp_path):
    config = MlpConfig(state_dim=3, hidden_dims=(8, 4), embed_bands=2)
    params = init_params(config, seed=9)
    path = tmp_path / "model.ckpt.npz"
    save_checkpoint(path, params, meta={"kind": "flow", "note": "unit"})
    loaded, meta = load_checkpoint(path)
    assert meta["kind"] == "flow"
    assert loaded.config == config
    for a, b in zip(params.arrays(), loaded.arrays()):
        assert np.array_equal(a, b)


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "junk.npz"
    np.savez(path, foo=np.arange(3))
    with pytest.raises(DataFormatError):
        load_checkpoint(path)
