"""CNN backbone with an MLP or LSTM head, plus optional value head."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from freqplan.errors import ConfigError, ContractError, ShapeError
from freqplan.nn import layers as L


@dataclass(frozen=True)
class PolicyConfig:
    in_channels: int
    n_fg: int
    n_fs: int
    n_outputs: int
    head: str = "mlp"               # "mlp" or "lstm"
    with_value_head: bool = False
    conv1_filters: int = 64
    conv1_kernel: int = 5
    conv2_filters: int = 128
    conv2_kernel: int = 3
    mlp_units: tuple[int, int] = (512, 256)
    lstm_units: int = 256
    out_init_scale: float = 0.01

    def __post_init__(self):
        if self.n_outputs < 2:
            raise ConfigError(f"n_outputs must be >= 2, got {self.n_outputs}")
        if self.head not in ("mlp", "lstm"):
            raise ConfigError(f"head must be 'mlp' or 'lstm', got {self.head!r}")
        object.__setattr__(self, "mlp_units", tuple(self.mlp_units))

    @property
    def feature_dim(self) -> int:
        return self.lstm_units if self.head == "lstm" else self.mlp_units[-1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mlp_units"] = list(self.mlp_units)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        return cls(**d)


def param_shapes(cfg: PolicyConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Parameter names and shapes in declaration order."""
    c1, c2 = cfg.conv1_filters, cfg.conv2_filters
    shapes = [
        ("conv1.w", (c1, cfg.in_channels, cfg.conv1_kernel, cfg.conv1_kernel)),
        ("conv1.b", (c1,)),
        ("ln1.g", (c1, 1, 1)), ("ln1.b", (c1, 1, 1)),
        ("conv2.w", (c2, c1, cfg.conv2_kernel, cfg.conv2_kernel)),
        ("conv2.b", (c2,)),
        ("ln2.g", (c2, 1, 1)), ("ln2.b", (c2, 1, 1)),
    ]
    flat = c2 * cfg.n_fg * cfg.n_fs
    if cfg.head == "mlp":
        u1, u2 = cfg.mlp_units
        shapes += [("fc1.w", (flat, u1)), ("fc1.b", (u1,)), ("ln3.g", (u1,)), ("ln3.b", (u1,)),
                   ("fc2.w", (u1, u2)), ("fc2.b", (u2,)), ("ln4.g", (u2,)), ("ln4.b", (u2,))]
    else:
        H = cfg.lstm_units
        shapes += [("lstm.wx", (flat, 4 * H)), ("lstm.wh", (H, 4 * H)), ("lstm.b", (4 * H,))]
    F = cfg.feature_dim
    shapes += [("out.w", (F, cfg.n_outputs)), ("out.b", (cfg.n_outputs,))]
    if cfg.with_value_head:
        shapes += [("value.w", (F, 1)), ("value.b", (1,))]
    return shapes


def init_params(cfg: PolicyConfig, rng: np.random.Generator, dtype=np.float32) -> dict[str, np.ndarray]:
    """Fan-in scaled uniform weights, zero biases, unit LN gains; small output layer."""
    params = {}
    for name, shape in param_shapes(cfg):
        kind = name.split(".")[1]
        if name.startswith("ln"):
            params[name] = np.full(shape, 1.0 if kind == "g" else 0.0, dtype=dtype)
        elif kind == "b":
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in = int(np.prod(shape[1:])) if name.startswith("conv") else shape[0]
            bound = 1.0 / np.sqrt(fan_in)
            if name == "out.w":
                bound *= cfg.out_init_scale
            params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return params


class PolicyNet:
    """Parameters plus forward/backward for one policy architecture.

    MLP heads take ``x`` of shape (N, C, n_fg, n_fs) and return outputs (N, A).
    LSTM heads take (T, N, C, n_fg, n_fs) with a ``hidden=(h, c)`` pair and
    return outputs (T, N, A).
    """

    def __init__(self, cfg: PolicyConfig, params: dict[str, np.ndarray] | None = None,
                 rng: np.random.Generator | None = None):
        self.cfg = cfg
        if params is None:
            params = init_params(cfg, rng if rng is not None else np.random.default_rng(0))
        self.params = params

    @property
    def recurrent(self) -> bool:
        return self.cfg.head == "lstm"

    def copy(self) -> "PolicyNet":
        return PolicyNet(self.cfg, {k: v.copy() for k, v in self.params.items()})

    def astype(self, dtype) -> "PolicyNet":
        return PolicyNet(self.cfg, {k: v.astype(dtype) for k, v in self.params.items()})

    def initial_hidden(self, n: int):
        dt = self.params["out.w"].dtype
        return (np.zeros((n, self.cfg.lstm_units), dtype=dt), np.zeros((n, self.cfg.lstm_units), dtype=dt))

    def _backbone(self, x):
        p = self.params
        y, c1 = L.conv2d(x, p["conv1.w"], p["conv1.b"])
        y, n1 = L.layer_norm(y, p["ln1.g"], p["ln1.b"])
        y, r1 = L.relu(y)
        y, c2 = L.conv2d(y, p["conv2.w"], p["conv2.b"])
        y, n2 = L.layer_norm(y, p["ln2.g"], p["ln2.b"])
        y, r2 = L.relu(y)
        return y.reshape(len(y), -1), (c1, n1, r1, c2, n2, r2, y.shape)

    def _backbone_backward(self, dflat, cache, grads):
        c1, n1, r1, c2, n2, r2, shape = cache
        dy = L.relu_backward(dflat.reshape(shape), r2)
        dy, grads["ln2.g"], grads["ln2.b"] = L.layer_norm_backward(dy, n2)
        dy, grads["conv2.w"], grads["conv2.b"] = L.conv2d_backward(dy, c2)
        dy = L.relu_backward(dy, r1)
        dy, grads["ln1.g"], grads["ln1.b"] = L.layer_norm_backward(dy, n1)
        _, grads["conv1.w"], grads["conv1.b"] = L.conv2d_backward(dy, c1)

    def forward(self, x, hidden=None, resets=None):
        """Returns ``(outputs, value or None, hidden' or None, cache)``."""
        cfg, p = self.cfg, self.params
        expect = (cfg.in_channels, cfg.n_fg, cfg.n_fs)
        if tuple(x.shape[-3:]) != expect:
            raise ShapeError(f"state shape {x.shape[-3:]} does not match policy input {expect}")
        if self.recurrent:
            if hidden is None:
                raise ContractError("an LSTM policy needs a hidden state")
            if x.ndim != 5:
                raise ShapeError("LSTM policies take (T, N, C, H, W) input")
            T, N = x.shape[:2]
            flat, bcache = self._backbone(x.reshape((T * N,) + expect))
            hs, hidden, lcache = L.lstm_sequence(flat.reshape(T, N, -1), hidden[0], hidden[1],
                                                 p["lstm.wx"], p["lstm.wh"], p["lstm.b"], resets)
            feat = hs.reshape(T * N, -1)
            head_cache = ("lstm", lcache, T, N)
        else:
            if x.ndim != 4:
                raise ShapeError("MLP policies take (N, C, H, W) input")
            flat, bcache = self._backbone(x)
            y, d1 = L.dense(flat, p["fc1.w"], p["fc1.b"])
            y, n3 = L.layer_norm(y, p["ln3.g"], p["ln3.b"])
            y, r3 = L.relu(y)
            y, d2 = L.dense(y, p["fc2.w"], p["fc2.b"])
            y, n4 = L.layer_norm(y, p["ln4.g"], p["ln4.b"])
            feat, r4 = L.relu(y)
            head_cache = ("mlp", (d1, n3, r3, d2, n4, r4))
            hidden = None
        out, ocache = L.dense(feat, p["out.w"], p["out.b"])
        value = vcache = None
        if cfg.with_value_head:
            v, vcache = L.dense(feat, p["value.w"], p["value.b"])
            value = v[:, 0]
        if self.recurrent:
            T, N = head_cache[2], head_cache[3]
            out = out.reshape(T, N, -1)
            value = None if value is None else value.reshape(T, N)
        return out, value, hidden, (bcache, head_cache, ocache, vcache)

    def backward(self, dout, dvalue, cache, dhidden=None):
        """Gradients of a scalar loss given d(loss)/d(outputs) and d(loss)/d(value)."""
        bcache, head_cache, ocache, vcache = cache
        grads: dict[str, np.ndarray] = {}
        dout = dout.reshape(-1, dout.shape[-1])
        dfeat, grads["out.w"], grads["out.b"] = L.dense_backward(dout, ocache)
        if self.cfg.with_value_head:
            dv = np.zeros((dout.shape[0], 1), dtype=dout.dtype) if dvalue is None \
                else dvalue.reshape(-1, 1).astype(dout.dtype)
            dfv, grads["value.w"], grads["value.b"] = L.dense_backward(dv, vcache)
            dfeat = dfeat + dfv
        if head_cache[0] == "mlp":
            d1, n3, r3, d2, n4, r4 = head_cache[1]
            dy = L.relu_backward(dfeat, r4)
            dy, grads["ln4.g"], grads["ln4.b"] = L.layer_norm_backward(dy, n4)
            dy, grads["fc2.w"], grads["fc2.b"] = L.dense_backward(dy, d2)
            dy = L.relu_backward(dy, r3)
            dy, grads["ln3.g"], grads["ln3.b"] = L.layer_norm_backward(dy, n3)
            dflat, grads["fc1.w"], grads["fc1.b"] = L.dense_backward(dy, d1)
        else:
            _, lcache, T, N = head_cache
            dh_T, dc_T = (None, None) if dhidden is None else dhidden
            dxs, _, _, grads["lstm.wx"], grads["lstm.wh"], grads["lstm.b"] = L.lstm_sequence_backward(
                dfeat.reshape(T, N, -1), lcache, dh_T, dc_T)
            dflat = dxs.reshape(T * N, -1)
        self._backbone_backward(dflat, bcache, grads)
        return {k: grads[k] for k in self.params}


def policy_forward(net: PolicyNet, state: np.ndarray, hidden=None):
    """Evaluate a single observation (C, n_fg, n_fs).

    Returns ``(outputs (A,), value or None, hidden' or None)``.
    """
    if net.recurrent:
        if hidden is None:
            raise ContractError("an LSTM policy needs a hidden state")
        out, value, hidden, _ = net.forward(state[None, None], hidden)
        return out[0, 0], None if value is None else float(value[0, 0]), hidden
    out, value, _, _ = net.forward(state[None])
    return out[0], None if value is None else float(value[0]), None
