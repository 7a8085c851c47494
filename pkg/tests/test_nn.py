"""Per-layer gradient checks against central finite differences."""

import numpy as np

from srdarena import nn


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def test_conv2d_gradients():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 3, 7, 7))
    params = {"w": rng.normal(size=(4, 3, 3, 3)), "b": rng.normal(size=4)}

    def loss():
        out, _ = nn.conv2d_forward(x, params["w"], params["b"])
        return float((out ** 2).sum())

    out, cache = nn.conv2d_forward(x, params["w"], params["b"])
    dx, dw, db = nn.conv2d_backward(2 * out, cache)
    for key, grad in (("w", dw), ("b", db)):
        for index in [(0,), (1,)] if key == "b" else [(0, 0, 0, 0), (3, 2, 2, 1)]:
            numeric = nn.finite_difference(loss, params, key, index)
            assert rel_err(grad[index], numeric) < 1e-6

    # input gradient via a wrapper parameter dict
    holder = {"x": x}

    def loss_x():
        out2, _ = nn.conv2d_forward(holder["x"], params["w"], params["b"])
        return float((out2 ** 2).sum())

    for index in [(0, 0, 0, 0), (1, 2, 6, 6), (0, 1, 3, 4)]:
        numeric = nn.finite_difference(loss_x, holder, "x", index)
        assert rel_err(dx[index], numeric) < 1e-6


def test_linear_gradients():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 8))
    params = {"w": rng.normal(size=(8, 3)), "b": rng.normal(size=3)}

    def loss():
        out, _ = nn.linear_forward(x, params["w"], params["b"])
        return float((out ** 2).sum())

    out, cache = nn.linear_forward(x, params["w"], params["b"])
    dx, dw, db = nn.linear_backward(2 * out, cache, params["w"])
    for index in [(0, 0), (7, 2), (3, 1)]:
        assert rel_err(dw[index], nn.finite_difference(loss, params, "w", index)) < 1e-6
    for index in [(0,), (2,)]:
        assert rel_err(db[index], nn.finite_difference(loss, params, "b", index)) < 1e-6


def test_relu_gradient_masks_negatives():
    x = np.array([[-1.0, 0.5], [2.0, -0.1]])
    out, mask = nn.relu_forward(x)
    assert np.array_equal(out, [[0.0, 0.5], [2.0, 0.0]])
    dx = nn.relu_backward(np.ones_like(x), mask)
    assert np.array_equal(dx, [[0.0, 1.0], [1.0, 0.0]])


def test_embedding_gradients_accumulate_repeats():
    rng = np.random.default_rng(2)
    params = {"table": rng.normal(size=(6, 4))}
    ids = np.array([1, 1, 5, 0])

    def loss():
        out, _ = nn.embedding_forward(params["table"], ids)
        return float((out ** 2).sum())

    out, _ = nn.embedding_forward(params["table"], ids)
    dtable = nn.embedding_backward(2 * out, ids, vocab=6)
    for index in [(1, 0), (5, 3), (0, 2), (2, 0)]:
        assert rel_err(dtable[index], nn.finite_difference(loss, params, "table", index)) < 1e-6
    assert np.all(dtable[2] == 0)  # untouched row


def test_adam_zero_gradient_leaves_params_untouched():
    params = {"w": np.ones((3, 3))}
    adam = nn.Adam(params)
    before = params["w"].copy()
    adam.step(params, {"w": np.zeros((3, 3))}, lr=0.1)
    assert np.array_equal(params["w"], before)


def test_adam_descends_a_quadratic():
    params = {"w": np.array([5.0])}
    adam = nn.Adam(params)
    for _ in range(800):
        grads = {"w": 2 * params["w"]}
        adam.step(params, grads, lr=0.05)
    assert abs(params["w"][0]) < 1e-2


def test_he_uniform_deterministic_by_seed():
    a = nn.he_uniform(np.random.default_rng(9), (4, 4), 16)
    b = nn.he_uniform(np.random.default_rng(9), (4, 4), 16)
    assert np.array_equal(a, b)
    assert np.max(np.abs(a)) <= np.sqrt(6 / 16)
