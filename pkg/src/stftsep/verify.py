"""Self-check suites behind the ``verify`` subcommand.

Five suites, each reporting its worst observed error against a fixed
tolerance: the bank matrix against a literal re-evaluation of its
defining exponentials, agreement of the two forward paths (with oracle
spot checks), the adjoint identity, rejection of constant inputs, and
central finite differences through every trainable layer, both block
kinds, and a small two-block network.

The finite-difference helpers live here so tests can reuse them; the
relative error of a coordinate is |fd - an| / max(|fd|, |an|, 1e-6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .layers import (
    BatchNorm,
    LeakyReLU,
    MaxPool2,
    PointwiseConv,
    softmax_cross_entropy,
)
from .netgraph import Block, BlockSpec, NetSpec, StageSpec, build_network
from .stft import (
    build_basis,
    neighborhood_offsets,
    oracle_stft,
    stft_backward,
    stft_forward_direct,
    stft_forward_separable,
)


@dataclass
class SuiteResult:
    suite: str
    passed: bool
    max_error: float
    tolerance: float

    def __post_init__(self):
        # plain builtins so results serialize (numpy bools/floats do not)
        self.passed = bool(self.passed)
        self.max_error = float(self.max_error)
        self.tolerance = float(self.tolerance)

    def as_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed,
                "max_error": self.max_error, "tolerance": self.tolerance}


def rel_error(fd, analytic) -> float:
    fd = np.asarray(fd, dtype=np.float64)
    analytic = np.asarray(analytic, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(fd), np.abs(analytic)), 1e-6)
    return float((np.abs(fd - analytic) / denom).max())


def numeric_grad(loss_fn, arr, eps: float = 1e-5) -> np.ndarray:
    """Central differences of a niladic loss w.r.t. an array it reads."""
    grad = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = loss_fn()
        flat[i] = keep - eps
        lo = loss_fn()
        flat[i] = keep
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad


def fd_max_error(loss_fn, arr, analytic, eps: float = 1e-5) -> float:
    return rel_error(numeric_grad(loss_fn, arr, eps), analytic)


def _literal_matrix(n: int) -> np.ndarray:
    """Independent re-evaluation of the bank entries with math.cos/sin."""
    a = 1.0 / n
    points = ((a, 0.0), (0.0, a), (a, a), (a, -a))
    offsets = neighborhood_offsets(n)
    out = np.empty((8, n * n))
    for q, (vr, vc) in enumerate(points):
        for i, (yr, yc) in enumerate(offsets):
            angle = -2.0 * math.pi * (vr * yr + vc * yc)
            out[2 * q, i] = math.cos(angle)
            out[2 * q + 1, i] = math.sin(angle)
    return out


def _suite_basis(perturb: bool) -> SuiteResult:
    tol = 1e-12
    worst = 0.0
    for n in (3, 5, 7):
        basis = build_basis(n)
        w = basis.matrix.copy()
        if perturb and n == 3:
            w[0, 0] += 1e-6
        worst = max(worst, float(np.abs(w - _literal_matrix(n)).max()))
        # separable factors must reconstruct every complex entry
        r = n // 2
        for q, (row_k, col_k) in enumerate(basis.factors):
            for i, (yr, yc) in enumerate(neighborhood_offsets(n)):
                entry = complex(basis.matrix[2 * q, i], basis.matrix[2 * q + 1, i])
                worst = max(worst,
                            abs(row_k[yr + r] * col_k[yc + r] - entry))
    return SuiteResult("basis", worst <= tol, worst, tol)


_EQUIV_SHAPES = ((1, 1, 1, 1), (1, 1, 5, 5), (2, 3, 8, 8), (1, 2, 9, 6))


def _suite_equivalence(rng) -> SuiteResult:
    tol = 1e-10
    worst = 0.0
    for n in (3, 5, 7):
        basis = build_basis(n)
        for shape in _EQUIV_SHAPES:
            x = rng.standard_normal(shape)
            direct = stft_forward_direct(x, basis)
            sep = stft_forward_separable(x, basis)
            # floor at 1: inputs are standard normal, so a tensor whose
            # largest output is far below 1 is (near) identically zero
            # and only roundoff remains to compare
            scale = max(float(np.abs(direct).max()), 1.0)
            worst = max(worst, float(np.abs(direct - sep).max()) / scale)
            # spot-check a few coefficients against the literal oracle
            B, C, H, W = shape
            for _ in range(3):
                b = int(rng.integers(B))
                c = int(rng.integers(C))
                y = int(rng.integers(H))
                xx = int(rng.integers(W))
                q = int(rng.integers(4))
                re, im = oracle_stft(x, n, (y, xx), c, q, batch=b)
                got_re = direct[b, 8 * c + 2 * q, y, xx]
                got_im = direct[b, 8 * c + 2 * q + 1, y, xx]
                worst = max(worst,
                            abs(re - got_re) / scale, abs(im - got_im) / scale)
    return SuiteResult("path-equivalence", worst <= tol, worst, tol)


def _suite_adjoint(rng) -> SuiteResult:
    tol = 1e-10
    worst = 0.0
    for n in (3, 5):
        basis = build_basis(n)
        for shape in ((1, 1, 4, 4), (2, 2, 6, 5)):
            x = rng.standard_normal(shape)
            g = rng.standard_normal((shape[0], 8 * shape[1]) + shape[2:])
            lhs = float(np.vdot(stft_forward_direct(x, basis), g))
            rhs = float(np.vdot(x, stft_backward(g, basis, shape)))
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1.0))
    return SuiteResult("adjoint", worst <= tol, worst, tol)


def _suite_dc() -> SuiteResult:
    tol = 1e-9
    const = 5.0
    worst = 0.0
    for n in (3, 5, 7):
        basis = build_basis(n)
        x = np.full((1, 2, 6, 6), const)
        for fn in (stft_forward_direct, stft_forward_separable):
            worst = max(worst, float(np.abs(fn(x, basis)).max()) / const)
    return SuiteResult("dc-rejection", worst <= tol, worst, tol)


def _fd_through(layer, x, rng, training: bool = True, params=True) -> float:
    """FD check of one layer: loss = <forward(x), G> for a fixed random G."""
    out = layer.forward(x, training=training)
    g = rng.standard_normal(out.shape)
    analytic_x = layer.backward(g)

    def loss():
        return float(np.vdot(layer.forward(x, training=training), g))

    worst = fd_max_error(loss, x, analytic_x)
    if params:
        layer.forward(x, training=training)
        layer.backward(g)
        grads = layer.grads()
        for name, p in layer.params().items():
            worst = max(worst, fd_max_error(loss, p, grads[name]))
    return worst


def _suite_fd_layers(rng) -> SuiteResult:
    tol = 1e-5
    worst = 0.0
    x = rng.standard_normal((2, 3, 4, 4))
    worst = max(worst, _fd_through(
        PointwiseConv(3, 5, rng, bias=True, dtype=np.float64), x, rng))
    worst = max(worst, _fd_through(
        BatchNorm(3, dtype=np.float64), x, rng))
    worst = max(worst, _fd_through(LeakyReLU(0.3), x, rng, params=False))
    worst = max(worst, _fd_through(MaxPool2(), x, rng, params=False))

    logits = rng.standard_normal((4, 5))
    labels = rng.integers(0, 5, size=4)
    _, analytic = softmax_cross_entropy(logits, labels)

    def xent_loss():
        return softmax_cross_entropy(logits, labels)[0]

    worst = max(worst, fd_max_error(xent_loss, logits, analytic))

    for kind in ("plain", "residual"):
        spec = BlockSpec(kind, c=6, b=2, f=6)
        block = Block(spec, rng, dtype=np.float64)
        xb = rng.standard_normal((2, 6, 4, 4))
        worst = max(worst, _fd_through(block, xb, rng))
    return SuiteResult("finite-differences-layers", worst <= tol, worst, tol)


def _suite_fd_network(rng) -> SuiteResult:
    tol = 1e-4
    spec = NetSpec(stages=(StageSpec(blocks=2, b=2, f=6, pool=True),),
                   classes=3, input_shape=(3, 8, 8))
    net = build_network(spec, seed=7, dtype=np.float64)
    x = rng.standard_normal((2, 3, 8, 8))
    labels = rng.integers(0, 3, size=2)

    def loss():
        return softmax_cross_entropy(net.forward(x, training=True), labels)[0]

    _, grad = softmax_cross_entropy(net.forward(x, training=True), labels)
    net.backward(grad)
    grads = net.grads()
    params = net.params()
    worst = 0.0
    eps = 1e-5
    names = sorted(params)
    for _ in range(10):
        name = names[int(rng.integers(len(names)))]
        p = params[name]
        j = int(rng.integers(p.size))
        keep = p.reshape(-1)[j]
        p.reshape(-1)[j] = keep + eps
        hi = loss()
        p.reshape(-1)[j] = keep - eps
        lo = loss()
        p.reshape(-1)[j] = keep
        fd = (hi - lo) / (2.0 * eps)
        worst = max(worst, rel_error(fd, grads[name].reshape(-1)[j]))
    return SuiteResult("finite-differences-network", worst <= tol, worst, tol)


def run_suites(seed: int = 0, perturb_basis: bool = False):
    """All suites in order; deterministic given seed."""
    rng = np.random.default_rng([9, seed])
    return [
        _suite_basis(perturb_basis),
        _suite_equivalence(rng),
        _suite_adjoint(rng),
        _suite_dc(),
        _suite_fd_layers(rng),
        _suite_fd_network(rng),
    ]
