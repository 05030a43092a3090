"""Neural-net layers with explicit forward and backward passes.

1-D convolutions use (batch, time, channels) layout. Strided convolutions pad
SAME-style (left pad = floor((kernel - stride)/2)); transposed convolutions
produce exactly stride * input_length samples by cropping the full output with
the matching offsets, so analysis and synthesis stacks mirror each other.

Gradients are assigned (not accumulated) on each backward call; every layer
keeps the forward activations it needs, so backward without a prior forward
raises RuntimeError.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._ctx = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gy: np.ndarray, param_grads: bool = True) -> np.ndarray:
        raise NotImplementedError

    def _require_ctx(self):
        if self._ctx is None:
            raise RuntimeError(f"{type(self).__name__}.backward called before forward")
        return self._ctx


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.params["W"] = glorot_uniform(rng, (n_in, n_out), n_in, n_out, dtype)
        self.params["b"] = np.zeros(n_out, dtype=dtype)

    def forward(self, x):
        self._ctx = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, gy, param_grads=True):
        x = self._require_ctx()
        if param_grads:
            self.grads["W"] = x.T @ gy
            self.grads["b"] = gy.sum(axis=0)
        return gy @ self.params["W"].T


class Conv1d(Layer):
    """Strided 1-D convolution, SAME padding; input length must divide the stride."""

    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int,
                 rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.c_in, self.c_out, self.kernel, self.stride = c_in, c_out, kernel, stride
        fan = kernel * c_in, kernel * c_out
        self.params["W"] = glorot_uniform(rng, (kernel, c_in, c_out), *fan, dtype)
        self.params["b"] = np.zeros(c_out, dtype=dtype)

    def forward(self, x):
        b, t, _ = x.shape
        k, s = self.kernel, self.stride
        if t % s != 0:
            raise ValueError(f"input length {t} not divisible by stride {s}")
        t_out = t // s
        pad_total = (t_out - 1) * s + k - t
        pl = pad_total // 2
        xp = np.pad(x, ((0, 0), (pl, pad_total - pl), (0, 0)))
        v = sliding_window_view(xp, k, axis=1)[:, ::s]  # (b, t_out, c_in, k)
        v = np.ascontiguousarray(v)
        w = self.params["W"]
        wm = w.transpose(1, 0, 2).reshape(self.c_in * k, self.c_out)
        y = v.reshape(b * t_out, self.c_in * k) @ wm + self.params["b"]
        self._ctx = (v, t, pl)
        return y.reshape(b, t_out, self.c_out)

    def backward(self, gy, param_grads=True):
        v, t, pl = self._require_ctx()
        b, t_out, _ = gy.shape
        k, s = self.kernel, self.stride
        g2 = gy.reshape(b * t_out, self.c_out)
        w = self.params["W"]
        wm = w.transpose(1, 0, 2).reshape(self.c_in * k, self.c_out)
        if param_grads:
            gw = (v.reshape(b * t_out, self.c_in * k).T @ g2)
            self.grads["W"] = gw.reshape(self.c_in, k, self.c_out).transpose(1, 0, 2)
            self.grads["b"] = g2.sum(axis=0)
        contrib = (g2 @ wm.T).reshape(b, t_out, self.c_in, k)
        gxp = np.zeros((b, (t_out - 1) * s + k, self.c_in), dtype=gy.dtype)
        for j in range(k):
            gxp[:, j : j + t_out * s : s, :] += contrib[:, :, :, j]
        return gxp[:, pl : pl + t, :]


class ConvTranspose1d(Layer):
    """Strided 1-D transposed convolution producing stride * input_length samples."""

    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int,
                 rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.c_in, self.c_out, self.kernel, self.stride = c_in, c_out, kernel, stride
        fan = kernel * c_in, kernel * c_out
        self.params["W"] = glorot_uniform(rng, (kernel, c_in, c_out), *fan, dtype)
        self.params["b"] = np.zeros(c_out, dtype=dtype)

    def forward(self, x):
        b, t, _ = x.shape
        k, s = self.kernel, self.stride
        w = self.params["W"]
        wm = w.transpose(1, 0, 2).reshape(self.c_in, k * self.c_out)
        contrib = (x.reshape(b * t, self.c_in) @ wm).reshape(b, t, k, self.c_out)
        full = np.zeros((b, (t - 1) * s + k, self.c_out), dtype=x.dtype)
        for j in range(k):
            full[:, j : j + t * s : s, :] += contrib[:, :, j, :]
        crop = (k - s) // 2
        self._ctx = (x, crop)
        return full[:, crop : crop + t * s, :] + self.params["b"]

    def backward(self, gy, param_grads=True):
        x, crop = self._require_ctx()
        b, t, _ = x.shape
        k, s = self.kernel, self.stride
        gfull = np.zeros((b, (t - 1) * s + k, self.c_out), dtype=gy.dtype)
        gfull[:, crop : crop + t * s, :] = gy
        v = sliding_window_view(gfull, k, axis=1)[:, ::s]  # (b, t, c_out, k)
        v = np.ascontiguousarray(v).reshape(b * t, self.c_out * k)
        w = self.params["W"]
        gx = v @ w.transpose(2, 0, 1).reshape(self.c_out * k, self.c_in)
        if param_grads:
            gw = x.reshape(b * t, self.c_in).T @ v
            self.grads["W"] = gw.reshape(self.c_in, self.c_out, k).transpose(2, 0, 1)
            self.grads["b"] = gy.sum(axis=(0, 1))
        return gx.reshape(b, t, self.c_in)


class ReLU(Layer):
    def forward(self, x):
        self._ctx = x > 0
        return np.where(self._ctx, x, 0)

    def backward(self, gy, param_grads=True):
        mask = self._require_ctx()
        return np.where(mask, gy, 0)


class LeakyReLU(Layer):
    def __init__(self, slope: float = 0.2):
        super().__init__()
        self.slope = slope

    def forward(self, x):
        self._ctx = x > 0
        return np.where(self._ctx, x, x * x.dtype.type(self.slope))

    def backward(self, gy, param_grads=True):
        mask = self._require_ctx()
        return np.where(mask, gy, gy * gy.dtype.type(self.slope))


class Tanh(Layer):
    def forward(self, x):
        y = np.tanh(x)
        self._ctx = y
        return y

    def backward(self, gy, param_grads=True):
        y = self._require_ctx()
        return gy * (1.0 - y * y)


class Reshape(Layer):
    """(batch, n) <-> (batch, *shape)."""

    def __init__(self, *shape: int):
        super().__init__()
        self.shape = shape

    def forward(self, x):
        self._ctx = x.shape
        return x.reshape(x.shape[0], *self.shape)

    def backward(self, gy, param_grads=True):
        return gy.reshape(self._require_ctx())


class Flatten(Layer):
    def forward(self, x):
        self._ctx = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gy, param_grads=True):
        return gy.reshape(self._require_ctx())


class PhaseShuffle(Layer):
    """Shift feature maps in time by a small integer, reflecting at the edges.

    The shift is drawn by the caller (one draw per application, shared across
    the batch); radius 0 disables the layer. Linear, so backward just scatters
    gradients through the cached index map.
    """

    def __init__(self, radius: int):
        super().__init__()
        self.radius = radius

    def index_map(self, t: int, shift: int) -> np.ndarray:
        idx = np.abs(np.arange(t) - shift)
        over = idx > t - 1
        idx[over] = 2 * (t - 1) - idx[over]
        return idx

    def forward(self, x, shift: int = 0):
        idx = self.index_map(x.shape[1], shift)
        self._ctx = (idx, x.shape[1])
        return x[:, idx, :]

    def backward(self, gy, param_grads=True):
        idx, t = self._require_ctx()
        gx = np.zeros((gy.shape[0], t, gy.shape[2]), dtype=gy.dtype)
        np.add.at(gx, (slice(None), idx), gy)
        return gx
