import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from erc.nn import (
    AdamState,
    MlpSpec,
    ParameterSet,
    adam_step,
    mlp_backward,
    mlp_forward,
    mlp_init,
    soft_update,
)

from _oracles import central_diff, rel_err


def test_init_is_deterministic():
    spec = MlpSpec(4, 2, (5, 3))
    a = mlp_init(spec, 7)
    b = mlp_init(spec, 7)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, mlp_init(spec, 8).values)


def test_init_scaling_and_zero_biases():
    spec = MlpSpec(16, 3, (32,))
    p = mlp_init(spec, 0)
    for W, b in zip(p.weights, p.biases):
        assert np.all(np.abs(W) <= 1 / np.sqrt(W.shape[0]))
        assert np.all(b == 0)


def test_param_count_no_hidden():
    assert MlpSpec(5, 3, ()).n_params == (5 + 1) * 3
    assert len(mlp_init(MlpSpec(5, 3, ()), 0)) == 18


def test_param_count_paper_sized_value_net():
    # 8*100+100 + 100*100+100 + 100*1+1
    assert MlpSpec(8, 1, (100, 100)).n_params == 11101


@pytest.mark.parametrize("bad", [dict(input_dim=0, output_dim=1), dict(input_dim=2, output_dim=1, hidden_dims=(0,)),
                                 dict(input_dim=2, output_dim=1, hidden_activation="gelu")])
def test_invalid_spec(bad):
    with pytest.raises(ValueError):
        MlpSpec(**bad)


def test_zero_network_outputs_zero():
    p = ParameterSet(MlpSpec(3, 2, (4,)))
    out, _ = mlp_forward(p, [1.0, -2.0, 3.0])
    assert np.array_equal(out, np.zeros(2))


def test_sigmoid_head_at_zero_preactivation():
    p = ParameterSet(MlpSpec(3, 1, (4,), output_activation="sigmoid"))
    out, _ = mlp_forward(p, [0.3, 0.1, 2.0])
    assert out[0] == 0.5


def test_identity_layer():
    p = ParameterSet(MlpSpec(3, 3, ()))
    p.weights[0][...] = np.eye(3)
    x = np.array([0.5, -1.5, 2.0])
    out, _ = mlp_forward(p, x)
    assert np.array_equal(out, x)


def test_forward_rejects_non_finite():
    p = mlp_init(MlpSpec(2, 1, (3,)), 0)
    with pytest.raises(ValueError):
        mlp_forward(p, [np.nan, 0.0])
    with pytest.raises(ValueError):
        mlp_forward(p, [1.0, 2.0, 3.0])


def test_forward_is_pure():
    p = mlp_init(MlpSpec(3, 2, (4, 4)), 1)
    before = p.values.copy()
    x = np.ones((5, 3))
    a, _ = mlp_forward(p, x)
    b, _ = mlp_forward(p, x)
    assert np.array_equal(a, b)
    assert np.array_equal(p.values, before)


def test_backward_zero_output_grad():
    p = mlp_init(MlpSpec(3, 2, (4,)), 0)
    _, cache = mlp_forward(p, np.ones((6, 3)))
    g, gx = mlp_backward(p, cache, np.zeros((6, 2)))
    assert not g.any() and not gx.any()


def test_backward_shape_mismatch():
    p = mlp_init(MlpSpec(3, 2, (4,)), 0)
    _, cache = mlp_forward(p, np.ones((6, 3)))
    with pytest.raises(ValueError):
        mlp_backward(p, cache, np.zeros((6, 3)))


def test_two_linear_layers_chain_rule():
    # identity hidden activation is emulated with relu on a positive region
    W1 = np.array([[1.0, 2.0], [3.0, 4.0]])
    W2 = np.array([[0.5, -1.0], [2.0, 1.5]])
    p = ParameterSet(MlpSpec(2, 2, (2,), hidden_activation="relu"))
    p.weights[0][...] = W1.T  # stored as (fan_in, fan_out)
    p.weights[1][...] = W2.T
    x = np.array([1.0, 1.0])  # keeps W1 x > 0
    out, cache = mlp_forward(p, x)
    assert np.allclose(out, W2 @ W1 @ x)
    og = np.array([0.7, -0.2])
    _, gx = mlp_backward(p, cache, og)
    assert np.allclose(gx, W1.T @ W2.T @ og, rtol=0, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    hidden=st.lists(st.integers(1, 6), min_size=0, max_size=3),
    act=st.sampled_from(["tanh", "relu"]),
    out_act=st.sampled_from(["linear", "sigmoid"]),
)
def test_backward_matches_finite_differences(seed, hidden, act, out_act):
    rng = np.random.default_rng(seed)
    spec = MlpSpec(3, 2, tuple(hidden), act, out_act)
    p = mlp_init(spec, rng)
    for b in p.biases:
        b[...] = rng.normal(size=b.shape) * 0.3
    x = rng.normal(size=(4, 3))
    w = rng.normal(size=(4, 2))
    if act == "relu":
        # keep relu pre-activations off the kink (recomputed here independently)
        h = x
        for W, b in list(zip(p.weights, p.biases))[:-1]:
            z = h @ W + b
            assume(np.min(np.abs(z)) > 1e-3)
            h = np.maximum(z, 0)

    def f():
        return float(np.sum(mlp_forward(p, x)[0] * w))

    _, cache = mlp_forward(p, x)
    g, gx = mlp_backward(p, cache, w)
    assert rel_err(g, central_diff(f, p.values)) < 1e-4
    x0 = x.copy()

    def fx():
        return float(np.sum(mlp_forward(p, x0)[0] * w))

    assert rel_err(gx, central_diff(fx, x0)) < 1e-4


def test_adam_zero_grad_leaves_params():
    p = mlp_init(MlpSpec(2, 1, (3,)), 0)
    before = p.values.copy()
    st_ = AdamState.for_params(p)
    adam_step(st_, p, np.zeros(len(p)))
    assert np.array_equal(p.values, before)
    assert st_.t == 1


def test_adam_first_step_moves_by_lr():
    values = np.array([0.0])
    st_ = AdamState.for_params(values, lr=1e-3)
    adam_step(st_, values, np.array([1.0]))
    # m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
    assert values[0] == pytest.approx(-1e-3 / (1 + 1e-8), abs=1e-15)


def test_adam_deterministic_and_skips_non_finite():
    values = np.array([0.3, -0.2])
    a, b = AdamState.for_params(values), AdamState.for_params(values)
    va, vb = values.copy(), values.copy()
    g = np.array([0.5, -2.0])
    adam_step(a, va, g)
    adam_step(b, vb, g)
    assert np.array_equal(va, vb) and np.array_equal(a.m, b.m) and np.array_equal(a.v, b.v)
    assert not adam_step(a, va, np.array([np.inf, 0.0]))
    assert a.skipped == 1 and a.t == 1
    assert np.all(a.v >= 0)


def test_soft_update_examples():
    spec = MlpSpec(1, 1, ())
    t = ParameterSet(spec, np.zeros(2))
    o = ParameterSet(spec, np.ones(2))
    soft_update(t, o, 0.1)
    assert np.array_equal(t.values, np.full(2, 0.1))
    soft_update(t, o, 0.0)
    assert np.array_equal(t.values, np.full(2, 0.1))
    soft_update(t, o, 1.0)
    assert np.array_equal(t.values, o.values)


def test_soft_update_layout_mismatch():
    with pytest.raises(ValueError):
        soft_update(ParameterSet(MlpSpec(1, 1, ())), ParameterSet(MlpSpec(2, 1, ())), 0.5)


@settings(max_examples=20, deadline=None)
@given(tau=st.floats(0.01, 0.9), k=st.integers(1, 30), seed=st.integers(0, 1000))
def test_soft_update_geometric_convergence(tau, k, seed):
    spec = MlpSpec(2, 2, (3,))
    t = mlp_init(spec, seed)
    o = mlp_init(spec, seed + 1)
    gap0 = t.values - o.values
    for _ in range(k):
        soft_update(t, o, tau)
    assert np.allclose(t.values - o.values, (1 - tau) ** k * gap0, rtol=1e-9, atol=1e-13)


def test_blob_roundtrip():
    p = mlp_init(MlpSpec(4, 2, (7, 3), "relu", "sigmoid"), 3)
    blob = p.to_bytes()
    assert blob[:4] == b"ERCP"
    q = ParameterSet.from_bytes(blob)
    assert q.spec == p.spec
    assert np.array_equal(q.values, p.values)


def test_blob_rejects_garbage():
    with pytest.raises(ValueError):
        ParameterSet.from_bytes(b"NOPE" + bytes(64))
