"""Minimal dense/conv/embedding layers with hand-derived gradients.

The arena's value network is small enough (< 100k parameters) that a
few einsums outperform framework overhead on CPU, and an explicit
backward pass lets tests pin analytic gradients against central finite
differences layer by layer.  Everything is float64 for reproducibility
and well-conditioned gradient checks.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


# ---------------------------------------------------------------------------
# Layer primitives: forward returns (out, cache), backward consumes cache
# ---------------------------------------------------------------------------


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Valid cross-correlation, stride 1.  x: (B,C,H,W), w: (F,C,KH,KW)."""
    kh, kw = w.shape[2], w.shape[3]
    cols = sliding_window_view(x, (kh, kw), axis=(2, 3))  # (B,C,OH,OW,KH,KW)
    out = np.einsum("bcxykl,fckl->bfxy", cols, w, optimize=True)
    out += b[None, :, None, None]
    return out, (x, w, cols)


def conv2d_backward(dout: np.ndarray, cache):
    x, w, cols = cache
    kh, kw = w.shape[2], w.shape[3]
    dw = np.einsum("bcxykl,bfxy->fckl", cols, dout, optimize=True)
    db = dout.sum(axis=(0, 2, 3))
    padded = np.pad(dout, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
    dcols = sliding_window_view(padded, (kh, kw), axis=(2, 3))
    w_flipped = w[:, :, ::-1, ::-1]
    dx = np.einsum("bfxykl,fckl->bcxy", dcols, w_flipped, optimize=True)
    return dx, dw, db


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    return x @ w + b, x


def linear_backward(dout: np.ndarray, cache, w: np.ndarray):
    x = cache
    dw = x.T @ dout
    db = dout.sum(axis=0)
    dx = dout @ w.T
    return dx, dw, db


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout: np.ndarray, mask: np.ndarray):
    return dout * mask


def embedding_forward(table: np.ndarray, ids: np.ndarray):
    return table[ids], ids


def embedding_backward(dout: np.ndarray, ids: np.ndarray, vocab: int) -> np.ndarray:
    dtable = np.zeros((vocab, dout.shape[-1]))
    np.add.at(dtable, ids, dout)
    return dtable


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


class Adam:
    """Adaptive-moment optimizer over a named parameter dict."""

    def __init__(self, params: dict[str, np.ndarray], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             lr: float) -> None:
        self.t += 1
        bc1 = 1 - self.beta1 ** self.t
        bc2 = 1 - self.beta2 ** self.t
        for key, grad in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1 - self.beta1) * grad
            v *= self.beta2
            v += (1 - self.beta2) * grad * grad
            params[key] -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------


def finite_difference(loss_fn, params: dict[str, np.ndarray], key: str,
                      index: tuple[int, ...], h: float = 1e-5) -> float:
    """Central-difference derivative of loss_fn w.r.t. one coordinate."""
    original = params[key][index]
    params[key][index] = original + h
    up = loss_fn()
    params[key][index] = original - h
    down = loss_fn()
    params[key][index] = original
    return (up - down) / (2 * h)


def gradient_check(loss_and_grads, params: dict[str, np.ndarray],
                   coordinates: list[tuple[str, tuple[int, ...]]],
                   h: float = 1e-5) -> float:
    """Worst relative error between analytic and numeric gradients.

    ``loss_and_grads()`` must return (loss, grads-dict) at the current
    parameters.
    """
    _, grads = loss_and_grads()
    worst = 0.0
    for key, index in coordinates:
        numeric = finite_difference(lambda: loss_and_grads()[0], params, key, index, h)
        analytic = grads[key][index]
        denom = max(abs(numeric), abs(analytic), 1e-8)
        worst = max(worst, abs(numeric - analytic) / denom)
    return worst
