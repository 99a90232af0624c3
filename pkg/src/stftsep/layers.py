"""Trainable layer primitives on plain numpy arrays.

Everything the networks need besides the fixed filter bank lives here:
pointwise (1x1) convolution, batch normalization, LeakyReLU, 2x2 max
pooling, global average pooling, softmax cross-entropy, orthogonal
initialization and Adam. Layers follow one small protocol:

* ``forward(x, training=False)`` returns the output and caches whatever
  the backward pass needs,
* ``backward(grad)`` consumes the cache, stores parameter gradients and
  returns the gradient w.r.t. the input,
* ``params()`` / ``grads()`` expose aligned name -> array dicts,
* ``state()`` exposes non-trainable buffers (running statistics).

Gradients are overwritten on every backward call, one optimizer step per
batch. All hot paths reduce to batched GEMMs or elementwise kernels so a
single CPU core gets the full benefit of the BLAS backing numpy.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeError
from .stft import CHANNELS_PER_INPUT, build_basis, stft_backward, stft_forward
from .tensor import as_tensor4


def orthogonal_init(rows: int, cols: int, rng: np.random.Generator,
                    dtype=np.float32) -> np.ndarray:
    """Orthogonal (rows, cols) matrix from a seeded QR factorization.

    The thin Q of a Gaussian matrix, with column signs fixed by the sign
    of diag(R) so the result is unique given the draw. Columns are
    orthonormal when rows >= cols, rows otherwise.
    """
    if min(rows, cols) < 1:
        raise ParameterError(f"matrix dims must be positive, got {(rows, cols)}")
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(q, dtype=dtype)


class Layer:
    """Minimal layer protocol; stateless layers inherit the empty dicts."""

    def params(self) -> dict:
        return {}

    def grads(self) -> dict:
        return {}

    def state(self) -> dict:
        return {}


class PointwiseConv(Layer):
    """1x1 convolution: a channel-mixing matrix applied at every position.

    Weight is (c_out, c_in), orthogonally initialized. The spatial grid is
    flattened so forward and backward are plain batched GEMMs.
    """

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator,
                 bias: bool = False, dtype=np.float32):
        self.c_in = int(c_in)
        self.c_out = int(c_out)
        self.weight = orthogonal_init(self.c_out, self.c_in, rng, dtype=dtype)
        self.bias = np.zeros(self.c_out, dtype=dtype) if bias else None
        self._grads = {}
        self._cache = None

    def forward(self, x, training: bool = False):
        x = as_tensor4(x)
        B, C, H, W = x.shape
        if C != self.c_in:
            raise ShapeError(f"expected {self.c_in} channels, got {C}")
        flat = x.reshape(B, C, H * W)
        out = np.matmul(self.weight, flat)
        if self.bias is not None:
            out += self.bias[:, None]
        self._cache = (flat, (B, C, H, W))
        return out.reshape(B, self.c_out, H, W)

    def backward(self, grad):
        flat, (B, C, H, W) = self._cache
        g = as_tensor4(grad).reshape(B, self.c_out, H * W)
        self._grads = {"weight": np.matmul(g, flat.transpose(0, 2, 1)).sum(axis=0)}
        if self.bias is not None:
            self._grads["bias"] = g.sum(axis=(0, 2))
        return np.matmul(self.weight.T, g).reshape(B, C, H, W)

    def params(self):
        out = {"weight": self.weight}
        if self.bias is not None:
            out["bias"] = self.bias
        return out

    def grads(self):
        return self._grads


class BatchNorm(Layer):
    """Per-channel batch normalization over (batch, height, width).

    eps 1e-3, running statistics tracked with momentum 0.99 as
    running = momentum * running + (1 - momentum) * batch. Training mode
    normalizes with batch statistics (biased variance) and updates the
    running buffers; eval mode normalizes with the buffers.
    """

    def __init__(self, channels: int, eps: float = 1e-3, momentum: float = 0.99,
                 dtype=np.float32):
        self.channels = int(channels)
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.gamma = np.ones(self.channels, dtype=dtype)
        self.beta = np.zeros(self.channels, dtype=dtype)
        self.running_mean = np.zeros(self.channels, dtype=dtype)
        self.running_var = np.ones(self.channels, dtype=dtype)
        self._grads = {}
        self._cache = None

    def forward(self, x, training: bool = False):
        x = as_tensor4(x)
        if x.shape[1] != self.channels:
            raise ShapeError(f"expected {self.channels} channels, got {x.shape[1]}")
        if training:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = self.momentum
            self.running_mean[...] = m * self.running_mean + (1 - m) * mean
            self.running_var[...] = m * self.running_var + (1 - m) * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[:, None, None]) * inv[:, None, None]
        self._cache = (xhat, inv, training)
        return self.gamma[:, None, None] * xhat + self.beta[:, None, None]

    def backward(self, grad):
        xhat, inv, training = self._cache
        g = as_tensor4(grad)
        self._grads = {
            "gamma": (g * xhat).sum(axis=(0, 2, 3)),
            "beta": g.sum(axis=(0, 2, 3)),
        }
        gx = g * self.gamma[:, None, None]
        if not training:
            return gx * inv[:, None, None]
        # batch statistics depend on x: subtract the per-channel mean
        # components the normalization introduced
        mean_gx = gx.mean(axis=(0, 2, 3))
        mean_gx_xhat = (gx * xhat).mean(axis=(0, 2, 3))
        return inv[:, None, None] * (
            gx - mean_gx[:, None, None] - xhat * mean_gx_xhat[:, None, None]
        )

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def grads(self):
        return self._grads

    def state(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}


class LeakyReLU(Layer):
    """max(x, alpha * x) with alpha 0.3; slope 1 on the zero boundary."""

    def __init__(self, alpha: float = 0.3):
        self.alpha = float(alpha)
        self._mask = None

    def forward(self, x, training: bool = False):
        x = as_tensor4(x)
        self._mask = x >= 0
        return np.where(self._mask, x, self.alpha * x)

    def backward(self, grad):
        g = as_tensor4(grad)
        return np.where(self._mask, g, self.alpha * g)


class MaxPool2(Layer):
    """2x2 max pooling with stride 2; ties go to the first window entry."""

    def forward(self, x, training: bool = False):
        x = as_tensor4(x)
        B, C, H, W = x.shape
        if H % 2 or W % 2:
            raise ShapeError(f"spatial dims must be even to pool, got {(H, W)}")
        win = x.reshape(B, C, H // 2, 2, W // 2, 2)
        win = win.transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H // 2, W // 2, 4)
        self._argmax = win.argmax(axis=-1)[..., None]
        self._shape = (B, C, H, W)
        return np.take_along_axis(win, self._argmax, axis=-1)[..., 0]

    def backward(self, grad):
        B, C, H, W = self._shape
        g = as_tensor4(grad)
        spread = np.zeros((B, C, H // 2, W // 2, 4), dtype=g.dtype)
        np.put_along_axis(spread, self._argmax, g[..., None], axis=-1)
        spread = spread.reshape(B, C, H // 2, W // 2, 2, 2)
        return spread.transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H, W)


class GlobalAvgPool(Layer):
    """Spatial mean per channel: (B, C, H, W) -> (B, C)."""

    def forward(self, x, training: bool = False):
        x = as_tensor4(x)
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, grad):
        B, C, H, W = self._shape
        g = np.asarray(grad)
        return np.broadcast_to(g[:, :, None, None], (B, C, H, W)) / (H * W)


class Dense(Layer):
    """Fully connected head on (B, features): weight (K, features) plus bias."""

    def __init__(self, features: int, classes: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.features = int(features)
        self.classes = int(classes)
        self.weight = orthogonal_init(self.classes, self.features, rng, dtype=dtype)
        self.bias = np.zeros(self.classes, dtype=dtype)
        self._grads = {}
        self._cache = None

    def forward(self, x, training: bool = False):
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[1] != self.features:
            raise ShapeError(f"expected (B, {self.features}), got {x.shape}")
        self._cache = x
        return x @ self.weight.T + self.bias

    def backward(self, grad):
        x = self._cache
        g = np.asarray(grad)
        self._grads = {"weight": g.T @ x, "bias": g.sum(axis=0)}
        return g @ self.weight

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def grads(self):
        return self._grads


class StftLayer(Layer):
    """Fixed channelwise filter bank: (B, C, H, W) -> (B, 8C, H, W).

    No trainable parameters; backward is the exact adjoint. ``path``
    selects the separable (default) or patchwise evaluation.
    """

    def __init__(self, side: int, path: str = "separable"):
        if path not in ("separable", "direct"):
            raise ParameterError(f"unknown evaluation path {path!r}")
        self.side = int(side)
        self.path = path
        self.basis = build_basis(self.side)
        self._in_shape = None

    @property
    def channel_factor(self) -> int:
        return CHANNELS_PER_INPUT

    def forward(self, x, training: bool = False):
        x = as_tensor4(x)
        self._in_shape = x.shape
        return stft_forward(x, self.basis, path=self.path)

    def backward(self, grad):
        return stft_backward(grad, self.basis, self._in_shape)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(logits)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch and its gradient w.r.t. logits.

    ``labels`` is either an int vector of class indices or a (B, K) array
    of target distributions. Returns (loss, grad_logits).
    """
    z = np.asarray(logits)
    if z.ndim != 2:
        raise ShapeError(f"logits must be (B, K), got {z.shape}")
    B, K = z.shape
    labels = np.asarray(labels)
    if labels.ndim == 1:
        if labels.shape[0] != B:
            raise ShapeError(f"got {labels.shape[0]} labels for batch {B}")
        if labels.min() < 0 or labels.max() >= K:
            raise ParameterError(f"labels out of range for {K} classes")
        target = np.zeros((B, K), dtype=z.dtype)
        target[np.arange(B), labels] = 1.0
    elif labels.shape == (B, K):
        target = labels.astype(z.dtype, copy=False)
    else:
        raise ShapeError(f"labels shape {labels.shape} does not match logits {z.shape}")
    shifted = z - z.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-(target * log_probs).sum() / B)
    grad = (np.exp(log_probs) - target) / B
    return loss, grad.astype(z.dtype, copy=False)


class Adam:
    """Adam with bias correction; updates parameter arrays in place.

    Slot buffers are keyed by parameter name, so the same optimizer
    instance must always see the same name -> array mapping.
    """

    def __init__(self, lr: float = 0.01, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict) -> None:
        self.step_count += 1
        t = self.step_count
        scale = self.lr * np.sqrt(1.0 - self.beta2 ** t) / (1.0 - self.beta1 ** t)
        for name, p in params.items():
            g = grads.get(name)
            if g is None:
                raise ParameterError(f"no gradient for parameter {name!r}")
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m = self.m[name]
            v = self.v[name]
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= (scale * m / (np.sqrt(v) + self.eps)).astype(p.dtype, copy=False)
