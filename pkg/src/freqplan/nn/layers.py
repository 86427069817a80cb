"""Forward/backward pairs for the layers used by the policy networks.

Every forward returns ``(out, cache)``; the matching backward takes the
upstream gradient and that cache. Arrays keep whatever float dtype they come
in with, so the same code serves float32 training and float64 gradient checks.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from freqplan.errors import ShapeError

LN_EPS = 1e-5


def conv2d(x, w, b):
    """Stride-1 cross-correlation with zero "same" padding.

    x: (N, C, H, W); w: (F, C, k, k) with odd k; b: (F,). Returns (N, F, H, W).
    """
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv2d: input {x.shape} incompatible with kernels {w.shape}")
    F, C, kh, kw = w.shape
    if kh != kw or kh % 2 == 0:
        raise ShapeError(f"conv2d: need odd square kernels, got {kh}x{kw}")
    if b.shape != (F,):
        raise ShapeError(f"conv2d: bias shape {b.shape} != ({F},)")
    N, _, H, W = x.shape
    p = kh // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    cols = sliding_window_view(xp, (kh, kw), axis=(2, 3))          # N,C,H,W,k,k
    cols = cols.transpose(0, 2, 3, 1, 4, 5).reshape(N * H * W, C * kh * kw)
    wmat = w.reshape(F, -1)
    y = cols @ wmat.T + b
    y = y.reshape(N, H, W, F).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(y), (x.shape, cols, w)


def conv2d_backward(dy, cache):
    xshape, cols, w = cache
    N, C, H, W = xshape
    F, _, k, _ = w.shape
    p = k // 2
    dym = dy.transpose(0, 2, 3, 1).reshape(-1, F)
    dw = (dym.T @ cols).reshape(w.shape)
    db = dym.sum(axis=0)
    dcols = (dym @ w.reshape(F, -1)).reshape(N, H, W, C, k, k)
    dxp = np.zeros((N, C, H + 2 * p, W + 2 * p), dtype=dy.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i:i + H, j:j + W] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return dxp[:, :, p:p + H, p:p + W], dw, db


def dense(x, w, b):
    """Affine map; x: (N, D), w: (D, M), b: (M,)."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeError(f"dense: x {x.shape}, w {w.shape}, b {b.shape} do not line up")
    return x @ w + b, (x, w)


def dense_backward(dy, cache):
    x, w = cache
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def relu(x):
    return np.maximum(x, 0), x > 0


def relu_backward(dy, cache):
    return dy * cache


def _reduce_to(a, shape):
    """Sum ``a`` (N, ...) down to a parameter of ``shape`` broadcast against a[0]."""
    a = a.sum(axis=0)
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and a.shape[i] != 1)
    return a.sum(axis=axes, keepdims=True) if axes else a


def layer_norm(x, gain, offset):
    """Normalize each sample over all of its features, then scale and shift.

    ``gain``/``offset`` broadcast against one sample, e.g. (D,) for dense
    features or (C, 1, 1) for per-channel conv parameters.
    """
    axes = tuple(range(1, x.ndim))
    mu = x.mean(axis=axes, keepdims=True)
    var = x.var(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return gain * xhat + offset, (xhat, inv, gain)


def layer_norm_backward(dy, cache):
    xhat, inv, gain = cache
    axes = tuple(range(1, xhat.ndim))
    D = xhat[0].size
    dgain = _reduce_to(dy * xhat, gain.shape)
    doffset = _reduce_to(dy, gain.shape)
    dxhat = dy * gain
    dx = (inv / D) * (D * dxhat
                      - dxhat.sum(axis=axes, keepdims=True)
                      - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True))
    return dx, dgain, doffset


def sigmoid(x):
    # split by sign to stay finite for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_step(x, h, c, wx, wh, b):
    """One LSTM step with gate layout [input, forget, output, cell].

    x: (N, D); h, c: (N, H); wx: (D, 4H); wh: (H, 4H); b: (4H,).
    """
    H = h.shape[1]
    if wx.shape != (x.shape[1], 4 * H) or wh.shape != (H, 4 * H) or c.shape != h.shape:
        raise ShapeError(f"lstm_step: x {x.shape}, h {h.shape}, c {c.shape}, "
                         f"wx {wx.shape}, wh {wh.shape} do not line up")
    z = x @ wx + h @ wh + b
    ifo = sigmoid(z[:, :3 * H])
    i, f, o = ifo[:, :H], ifo[:, H:2 * H], ifo[:, 2 * H:]
    g = np.tanh(z[:, 3 * H:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (x, h, c, wx, wh, i, f, o, g, tc)


def lstm_step_backward(dh_new, dc_new, cache):
    x, h, c, wx, wh, i, f, o, g, tc = cache
    do = dh_new * tc
    dc = dc_new + dh_new * o * (1 - tc * tc)
    di = dc * g
    df = dc * c
    dg = dc * i
    dc_prev = dc * f
    dz = np.concatenate([di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g * g)], axis=1)
    return dz @ wx.T, dz @ wh.T, dc_prev, x.T @ dz, h.T @ dz, dz.sum(axis=0)


def lstm_sequence(xs, h0, c0, wx, wh, b, resets=None):
    """Run the LSTM over a segment xs: (T, N, D).

    ``resets[t, n]`` zeroes the carried state of stream ``n`` before step ``t``
    (an episode started there). Returns hs: (T, N, H), final (h, c), cache.
    """
    T = xs.shape[0]
    h, c = h0, c0
    hs = np.empty((T,) + h0.shape, dtype=np.result_type(xs, h0))
    caches, keeps = [], []
    for t in range(T):
        keep = None
        if resets is not None:
            keep = (1.0 - resets[t].astype(h.dtype))[:, None]
            h, c = h * keep, c * keep
        h, c, cache = lstm_step(xs[t], h, c, wx, wh, b)
        hs[t] = h
        caches.append(cache)
        keeps.append(keep)
    return hs, (h, c), (caches, keeps)


def lstm_sequence_backward(dhs, cache, dh_final=None, dc_final=None):
    caches, keeps = cache
    x0, h0, *_ = caches[0]
    wx, wh = caches[0][3], caches[0][4]
    dxs = np.empty((len(caches),) + x0.shape, dtype=dhs.dtype)
    dwx, dwh = np.zeros_like(wx), np.zeros_like(wh)
    db = np.zeros(wx.shape[1], dtype=wx.dtype)
    dh = np.zeros_like(h0) if dh_final is None else dh_final
    dc = np.zeros_like(h0) if dc_final is None else dc_final
    for t in reversed(range(len(caches))):
        dx, dh, dc, gwx, gwh, gb = lstm_step_backward(dhs[t] + dh, dc, caches[t])
        dxs[t] = dx
        dwx += gwx
        dwh += gwh
        db += gb
        if keeps[t] is not None:
            dh, dc = dh * keeps[t], dc * keeps[t]
    return dxs, dh, dc, dwx, dwh, db


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits):
    return np.exp(log_softmax(logits))
