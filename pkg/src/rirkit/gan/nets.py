"""Generator and critic networks for 1-D waveform synthesis.

The generator maps a 100-dim latent vector through a dense stage and five
stride-4 transposed convolutions (kernel 25) to a 16384-sample waveform in
(-1, 1). The critic mirrors it with five stride-4 convolutions, leaky ReLU,
optional phase shuffle between layers, and a dense head producing one
unbounded realness score per input. The width multiplier d scales channel
counts (d=4 desk-scale, d=64 full-scale).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import (
    Conv1d,
    ConvTranspose1d,
    Dense,
    Flatten,
    Layer,
    LeakyReLU,
    PhaseShuffle,
    ReLU,
    Reshape,
    Tanh,
)

LATENT_DIM = 100
OUTPUT_LENGTH = 16384
KERNEL = 25
STRIDE = 4
LEAKY_SLOPE = 0.2


def sample_latent(rng: np.random.Generator, n: int | None = None,
                  dist: str = "uniform") -> np.ndarray:
    """Draw latent vectors: i.i.d. Uniform[-1, 1] by default, or standard
    Gaussian with dist="gaussian". Shape (LATENT_DIM,) or (n, LATENT_DIM)."""
    shape = (LATENT_DIM,) if n is None else (n, LATENT_DIM)
    if dist == "uniform":
        return rng.uniform(-1.0, 1.0, size=shape)
    if dist == "gaussian":
        return rng.standard_normal(size=shape)
    raise ValueError(f"unknown latent distribution {dist!r}")


class _Net:
    """Shared bookkeeping: an ordered layer stack with named parameter tensors."""

    def __init__(self):
        self._stack: list[Layer] = []
        self._names: list[str] = []  # parallel to _stack; "" for parameterless

    def _add(self, layer: Layer, name: str = "") -> Layer:
        self._stack.append(layer)
        self._names.append(name)
        return layer

    def named_params(self) -> list[tuple[str, str, np.ndarray]]:
        out = []
        for name, layer in zip(self._names, self._stack):
            if name:
                for pname, arr in layer.params.items():
                    out.append((name, pname, arr))
        return out

    def param_arrays(self) -> list[np.ndarray]:
        return [arr for _, _, arr in self.named_params()]

    def grad_arrays(self) -> list[np.ndarray]:
        out = []
        for name, layer in zip(self._names, self._stack):
            if name:
                for pname in layer.params:
                    out.append(layer.grads[pname])
        return out

    def set_param(self, layer_name: str, param_name: str, value: np.ndarray) -> None:
        for name, layer in zip(self._names, self._stack):
            if name == layer_name:
                current = layer.params[param_name]
                if current.shape != value.shape:
                    raise ValueError(
                        f"{layer_name}.{param_name}: shape {value.shape} != {current.shape}"
                    )
                layer.params[param_name] = value.astype(current.dtype)
                return
        raise KeyError(layer_name)


class Generator(_Net):
    def __init__(self, d: int = 4, rng: np.random.Generator | None = None,
                 dtype=np.float32):
        super().__init__()
        if d < 1:
            raise ValueError("model-size multiplier d must be >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.d = d
        self.dtype = np.dtype(dtype)
        widths = [16 * d, 8 * d, 4 * d, 2 * d, d, 1]
        self._add(Dense(LATENT_DIM, 16 * 16 * d, rng, dtype), "dense")
        self._add(Reshape(16, 16 * d))
        self._add(ReLU())
        for i in range(5):
            self._add(
                ConvTranspose1d(widths[i], widths[i + 1], KERNEL, STRIDE, rng, dtype),
                f"tconv{i + 1}",
            )
            self._add(Tanh() if i == 4 else ReLU())

    def forward(self, z: np.ndarray) -> np.ndarray:
        """(n, 100) latent batch -> (n, 16384) waveforms in (-1, 1)."""
        z = np.asarray(z, dtype=self.dtype)
        squeeze = z.ndim == 1
        if squeeze:
            z = z[None, :]
        if z.shape[1] != LATENT_DIM:
            raise ValueError(f"latent vectors must have {LATENT_DIM} dims, got {z.shape}")
        h = z
        for layer in self._stack:
            h = layer.forward(h)
        out = h[:, :, 0]
        return out[0] if squeeze else out

    def backward(self, gy: np.ndarray) -> np.ndarray:
        g = np.asarray(gy, dtype=self.dtype)
        if g.ndim == 1:
            g = g[None, :]
        g = g[:, :, None]
        for layer in reversed(self._stack):
            g = layer.backward(g)
        return g


class Critic(_Net):
    def __init__(self, d: int = 4, shuffle_radius: int = 2,
                 rng: np.random.Generator | None = None, dtype=np.float32):
        super().__init__()
        if d < 1:
            raise ValueError("model-size multiplier d must be >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.d = d
        self.shuffle_radius = shuffle_radius
        self.dtype = np.dtype(dtype)
        widths = [1, d, 2 * d, 4 * d, 8 * d, 16 * d]
        for i in range(5):
            self._add(Conv1d(widths[i], widths[i + 1], KERNEL, STRIDE, rng, dtype),
                      f"conv{i + 1}")
            self._add(LeakyReLU(LEAKY_SLOPE))
            if i < 4:
                self._add(PhaseShuffle(shuffle_radius))
        self._add(Flatten())
        self._add(Dense(16 * 16 * d, 1, rng, dtype), "dense")
        self._trace: list[Layer] | None = None

    def forward(self, x: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        """(n, 16384) waveforms -> (n,) scores.

        Phase shuffle only fires when an rng is supplied and the radius is
        positive; evaluation and gradient checks pass rng=None for an exactly
        reproducible, shuffle-free pass.
        """
        x = np.asarray(x, dtype=self.dtype)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != OUTPUT_LENGTH:
            raise ValueError(f"critic input must have {OUTPUT_LENGTH} samples, got {x.shape}")
        h = x[:, :, None]
        trace = []
        for layer in self._stack:
            if isinstance(layer, PhaseShuffle):
                if rng is None or layer.radius == 0:
                    continue
                shift = int(rng.integers(-layer.radius, layer.radius + 1))
                h = layer.forward(h, shift)
            else:
                h = layer.forward(h)
            trace.append(layer)
        self._trace = trace
        out = h[:, 0]
        return out[0] if squeeze else out

    def backward(self, gscores: np.ndarray, param_grads: bool = True) -> np.ndarray:
        if self._trace is None:
            raise RuntimeError("Critic.backward called before forward")
        g = np.asarray(gscores, dtype=self.dtype)
        if g.ndim == 0:
            g = g[None]
        g = g[:, None]
        for layer in reversed(self._trace):
            g = layer.backward(g, param_grads=param_grads)
        return g[:, :, 0]


@dataclass
class GanModel:
    """A checkpointable generator/critic pair plus the settings that built it."""

    generator: Generator
    critic: Critic
    d: int
    step: int
    seed: int
    latent_dist: str = "uniform"


def generator_forward(net: Generator, z: np.ndarray) -> np.ndarray:
    return net.forward(z)


def critic_forward(net: Critic, x: np.ndarray,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    return net.forward(x, rng=rng)
