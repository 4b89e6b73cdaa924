import numpy as np
import pytest

from ganfolio import autodiff as ad
from ganfolio.errors import ConfigError, NonFiniteError, ShapeError

from oracles import central_difference, rel_error


def small_mlp(rng, in_dim=6, widths=(8, 5), out_dim=1, dropout=0.0):
    specs = []
    prev = in_dim
    for w in widths:
        specs.append(ad.LayerSpec(prev, w, "leaky_rectifier", 0.2, dropout))
        prev = w
    specs.append(ad.LayerSpec(prev, out_dim))
    return ad.ParamSet.from_specs(specs, rng)


def loss_for_params(params, x, build):
    """Evaluate a scalar loss after overwriting flattened parameter values."""
    def f(theta):
        pos = 0
        for p in params.parameters():
            n = p.data.size
            p.data = theta[pos:pos + n].reshape(p.shape)
            pos += n
        return build()
    return f


def flat_params(params):
    return np.concatenate([p.data.ravel() for p in params.parameters()])


def flat_grads(gs):
    return np.concatenate([g.data.ravel() for g in gs])


# -- affine ------------------------------------------------------------------

def test_affine_identity():
    x = ad.constant([[1.0, 2.0]])
    w = ad.constant([[1.0, 0.0], [0.0, 1.0]])
    b = ad.constant([[0.0, 0.0]])
    out = ad.forward_affine(x, w, b)
    assert np.array_equal(out.data, [[1.0, 2.0]])


def test_affine_hand_value():
    out = ad.forward_affine(ad.constant([[1.0, 1.0]]),
                            ad.constant([[2.0], [3.0]]),
                            ad.constant([[1.0]]))
    assert out.item() == pytest.approx(6.0)


def test_affine_shape_error_names_both_shapes():
    with pytest.raises(ShapeError) as err:
        ad.forward_affine(ad.constant(np.ones((2, 3))),
                          ad.constant(np.ones((4, 2))),
                          ad.constant(np.ones((1, 2))))
    assert "(2, 3)" in str(err.value) and "(4, 2)" in str(err.value)


def test_affine_weight_gradient_matches_finite_differences():
    rng = ad.make_rng(7)
    x = ad.constant(rng.normal(size=(3, 4)))
    w0 = rng.normal(size=(4, 2))
    b = ad.constant(np.zeros((1, 2)))

    w = ad.leaf(w0)
    out = ad.sum_all(ad.forward_affine(x, w, b))
    analytic = ad.grad(out, [w])[0].data

    def f(wv):
        return ad.sum_all(ad.forward_affine(x, ad.constant(wv), b)).item()

    fd = central_difference(f, w0.copy())
    assert rel_error(analytic, fd) <= 1e-6


# -- activations and dropout ---------------------------------------------------

def test_leaky_rectifier_values():
    out = ad.leaky_rectifier(ad.constant([[-1.0, 0.0, 2.0]]), 0.2)
    assert np.allclose(out.data, [[-0.2, 0.0, 2.0]])


def test_leaky_rectifier_positive_identity():
    x = np.abs(np.random.default_rng(0).normal(size=(2, 5))) + 0.1
    out = ad.leaky_rectifier(ad.constant(x), 0.2)
    assert np.array_equal(out.data, x)


def test_leaky_rectifier_gradient_negative_branch():
    x = ad.leaf([[-3.0]])
    out = ad.sum_all(ad.leaky_rectifier(x, 0.2))
    g = ad.grad(out, [x])[0].data
    assert g[0, 0] == pytest.approx(0.2)
    fd = central_difference(
        lambda v: float(ad.leaky_rectifier(ad.constant(v), 0.2).data.sum()),
        np.array([[-3.0]]))
    assert rel_error(g, fd) <= 1e-6


def test_leaky_rectifier_slope_range():
    with pytest.raises(ConfigError):
        ad.leaky_rectifier(ad.constant([[1.0]]), 1.5)


def test_dropout_infer_identity():
    x = ad.constant(np.random.default_rng(1).normal(size=(4, 4)))
    assert ad.dropout(x, 0.4, "infer", None) is x


def test_dropout_zero_rate_identity():
    x = ad.constant(np.ones((3, 3)))
    assert ad.dropout(x, 0.0, "train", ad.make_rng(0)) is x


def test_dropout_zeroed_fraction():
    x = ad.constant(np.ones((100, 100)))
    out = ad.dropout(x, 0.4, "train", ad.make_rng(123))
    zeroed = float((out.data == 0.0).mean())
    assert abs(zeroed - 0.4) <= 0.02
    survivors = out.data[out.data != 0.0]
    assert np.allclose(survivors, 1.0 / 0.6)


def test_dropout_bad_rate():
    with pytest.raises(ConfigError):
        ad.dropout(ad.constant([[1.0]]), 1.0, "train", ad.make_rng(0))


# -- primitive gradients vs finite differences --------------------------------

UNARY_OPS = [
    ("tanh", lambda t: ad.tanh(t), None),
    ("leaky", lambda t: ad.leaky_rectifier(t, 0.2), None),
    ("sqrt", lambda t: ad.sqrt(t), "positive"),
    ("reciprocal", lambda t: ad.reciprocal(t), "positive"),
    ("neg", lambda t: ad.neg(t), None),
    ("scale", lambda t: ad.scale(t, -1.7), None),
    ("shift", lambda t: ad.shift(t, 0.3), None),
    ("transpose", lambda t: ad.transpose(t), None),
    ("sum_cols", lambda t: ad.sum_cols(t), None),
    ("sum_rows", lambda t: ad.sum_rows(t), None),
    ("square", lambda t: ad.square(t), None),
    ("norm", lambda t: ad.row_l2_norm(t), "positive"),
    ("slice", lambda t: ad.slice_cols(t, 1, 3), None),
    ("broadcast", lambda t: ad.broadcast_to(ad.sum_cols(t), (3, 5)), None),
]


@pytest.mark.parametrize("name,op,domain", UNARY_OPS, ids=[u[0] for u in UNARY_OPS])
def test_unary_gradients(name, op, domain):
    rng = ad.make_rng(hash(name) % 2**31)
    x0 = rng.normal(size=(3, 4))
    if domain == "positive":
        x0 = np.abs(x0) + 0.5

    x = ad.leaf(x0)
    total = ad.sum_all(op(x))
    analytic = ad.grad(total, [x])[0].data
    fd = central_difference(lambda v: ad.sum_all(op(ad.constant(v))).item(),
                            x0.copy())
    assert rel_error(analytic, fd) <= 1e-5, name


def test_binary_and_matmul_gradients():
    rng = ad.make_rng(99)
    a0 = rng.normal(size=(3, 4))
    b0 = rng.normal(size=(4, 2))
    c0 = rng.normal(size=(3, 4))

    a, b, c = ad.leaf(a0), ad.leaf(b0), ad.leaf(c0)
    total = ad.sum_all(ad.mul(ad.matmul(a, b), ad.matmul(ad.add(a, c), b)))
    ga, gb, gc = (g.data for g in ad.grad(total, [a, b, c]))

    def f(which, v):
        aa, bb, cc = a0.copy(), b0.copy(), c0.copy()
        {"a": aa, "b": bb, "c": cc}[which][...] = v
        t = ad.sum_all(ad.mul(ad.matmul(ad.constant(aa), ad.constant(bb)),
                              ad.matmul(ad.add(ad.constant(aa), ad.constant(cc)),
                                        ad.constant(bb))))
        return t.item()

    assert rel_error(ga, central_difference(lambda v: f("a", v), a0.copy())) <= 1e-5
    assert rel_error(gb, central_difference(lambda v: f("b", v), b0.copy())) <= 1e-5
    assert rel_error(gc, central_difference(lambda v: f("c", v), c0.copy())) <= 1e-5


def test_randomized_gradient_sweep():
    """Analytic vs central differences on random compositions, many trials."""
    failures = 0
    for trial in range(100):
        rng = ad.make_rng(1000 + trial)
        x0 = rng.normal(size=(2, 3))
        w0 = rng.normal(size=(3, 3))

        def build(xv, wv):
            h = ad.forward_affine(ad.constant(xv) if not isinstance(xv, ad.Tensor) else xv,
                                  wv, ad.constant(np.zeros((1, 3))))
            h = ad.tanh(h)
            h = ad.leaky_rectifier(h, 0.2)
            return ad.mean_all(ad.mul(h, h))

        w = ad.leaf(w0)
        analytic = ad.grad(build(x0, w), [w])[0].data
        fd = central_difference(lambda v: build(x0, ad.constant(v)).item(),
                                w0.copy())
        if rel_error(analytic, fd) > 1e-5:
            failures += 1
    assert failures == 0


# -- input gradients and second-order behaviour --------------------------------

def test_input_gradient_linear_map_is_exact():
    a = np.array([[0.3], [-1.2], [2.0]])
    net = ad.ParamSet([ad.DenseLayer(ad.leaf(a), ad.leaf(np.zeros((1, 1))))])
    g, _, _ = ad.input_gradient(net, np.array([[1.0, 2.0, 3.0]]))
    assert np.array_equal(g.data, a.T)


def test_input_gradient_constant_network_penalty():
    net = ad.ParamSet([ad.DenseLayer(ad.leaf(np.zeros((3, 1))),
                                     ad.leaf(np.array([[5.0]])))])
    g, _, _ = ad.input_gradient(net, np.ones((1, 3)))
    assert np.array_equal(g.data, np.zeros((1, 3)))
    penalty = ad.mean_all(ad.square(ad.shift(ad.row_l2_norm(g), -1.0)))
    assert penalty.item() == pytest.approx(1.0)


def test_input_gradient_matches_finite_differences():
    rng = ad.make_rng(4242)
    net = small_mlp(rng, in_dim=5, widths=(7, 6))
    x0 = rng.normal(size=(1, 5))

    g, _, _ = ad.input_gradient(net, x0)
    fd = central_difference(lambda v: float(ad.run_network_values(net, v).sum()),
                            x0.copy())
    assert rel_error(g.data, fd) <= 1e-5


def test_gradient_penalty_is_differentiable_wrt_parameters():
    rng = ad.make_rng(777)
    net = small_mlp(rng, in_dim=4, widths=(6, 5))
    x0 = rng.normal(size=(2, 4))

    def penalty():
        g, _, _ = ad.input_gradient(net, x0)
        return ad.mean_all(ad.square(ad.shift(ad.row_l2_norm(g), -1.0)))

    analytic = flat_grads(ad.grad(penalty(), net.parameters()))
    theta0 = flat_params(net)
    f = loss_for_params(net, x0, lambda: penalty().item())
    fd = central_difference(f, theta0.copy())
    f(theta0)  # restore
    assert rel_error(analytic, fd) <= 1e-4


# -- optimizer -----------------------------------------------------------------

def test_adam_zero_gradient_keeps_params_and_decays_moments():
    rng = ad.make_rng(5)
    net = small_mlp(rng, in_dim=3, widths=(4,))
    state = ad.AdamState.for_params(net, learning_rate=0.01, beta1=0.5, beta2=0.9)
    state.first_moment[0][...] = 1.0
    state.second_moment[0][...] = 1.0
    before = [p.data.copy() for p in net.parameters()]

    ad.adam_step(net, [np.zeros(p.shape) for p in net.parameters()], state)

    # zero moments stay zero; seeded moments shrink by their decay factors
    assert np.allclose(state.first_moment[0], 0.5)
    assert np.allclose(state.second_moment[0], 0.9)
    # the seeded-moment parameter moves, the untouched ones do not
    for prev, p in list(zip(before, net.parameters()))[1:]:
        assert np.array_equal(prev, p.data)
    assert state.step_count == 1


def test_adam_single_step_hand_recurrence():
    p = ad.leaf([[0.0]])
    net = ad.ParamSet([ad.DenseLayer(p, ad.leaf(np.zeros((1, 1))))])
    state = ad.AdamState.for_params(net, learning_rate=0.01, beta1=0.5, beta2=0.999)
    ad.adam_step(net, [np.array([[1.0]]), np.zeros((1, 1))], state)
    # bias correction makes m_hat = v_hat = 1 on the first unit-gradient step
    expected = -0.01 * 1.0 / (1.0 + 1e-8)
    assert p.data[0, 0] == pytest.approx(expected, rel=1e-9)
    assert p.data[0, 0] < 0


def test_adam_converges_on_quadratic():
    p = ad.leaf([[3.0]])
    net = ad.ParamSet([ad.DenseLayer(p, ad.leaf(np.zeros((1, 1))))])
    state = ad.AdamState.for_params(net, learning_rate=0.01, beta1=0.5, beta2=0.999)
    for _ in range(5000):
        g = 2.0 * p.data[0, 0]
        ad.adam_step(net, [np.array([[g]]), np.zeros((1, 1))], state)
        if p.data[0, 0] ** 2 < 1e-6:
            break
    assert p.data[0, 0] ** 2 < 1e-6
    assert state.step_count <= 5000


def test_adam_shape_mismatch():
    rng = ad.make_rng(6)
    net = small_mlp(rng, in_dim=3, widths=(4,))
    state = ad.AdamState.for_params(net, 0.01)
    bad = [np.zeros((1, 1)) for _ in net.parameters()]
    with pytest.raises(ShapeError):
        ad.adam_step(net, bad, state)


# -- tape, determinism, finiteness ----------------------------------------------

def test_tape_replay_reproduces_values_bit_exactly():
    rng = ad.make_rng(11)
    net = small_mlp(rng, in_dim=4, widths=(5,), dropout=0.3)
    with ad.Tape() as tape:
        out = ad.run_network(net, ad.constant(rng.normal(size=(3, 4))),
                             mode="train", rng=ad.make_rng(2))
        ad.grad(ad.sum_all(out), net.parameters())
    assert len(tape.nodes) > 10
    assert tape.replay()


def test_seeded_runs_are_bit_identical():
    def run():
        rng = ad.make_rng(31)
        net = small_mlp(rng, in_dim=4, widths=(6,), dropout=0.4)
        x = ad.constant(ad.make_rng(32).normal(size=(5, 4)))
        out = ad.run_network(net, x, mode="train", rng=ad.make_rng(33))
        gs = ad.grad(ad.mean_all(out), net.parameters())
        return out.data.copy(), [g.data.copy() for g in gs]

    out1, gs1 = run()
    out2, gs2 = run()
    assert np.array_equal(out1, out2)
    for a, b in zip(gs1, gs2):
        assert np.array_equal(a, b)


def test_graph_and_value_forward_agree_bitwise():
    rng = ad.make_rng(88)
    net = small_mlp(rng, in_dim=6, widths=(9, 4), dropout=0.25)
    x = rng.normal(size=(4, 6))
    a = ad.run_network(net, ad.constant(x), mode="train", rng=ad.make_rng(3)).data
    b = ad.run_network_values(net, x, mode="train", rng=ad.make_rng(3))
    assert np.array_equal(a, b)


def test_non_finite_is_a_hard_error():
    with pytest.raises(NonFiniteError):
        ad.Tensor(np.array([[np.nan]]))
    with pytest.raises(NonFiniteError):
        ad.reciprocal(ad.constant([[0.0]]))


def test_grad_skips_unreachable_branches():
    x = ad.leaf([[1.0, 2.0]])
    unused = ad.leaf([[5.0]])
    out = ad.sum_all(ad.mul(x, x))
    g = ad.grad(out, [unused])[0]
    assert np.array_equal(g.data, np.zeros((1, 1)))
