"""Fixed local-Fourier filter bank: basis, forward/backward paths, oracle.

Per input channel, the bank evaluates the 2D local Fourier coefficients on
the n x n neighborhood of every position at the four lowest non-zero
frequency points

    v1 = [a, 0],  v2 = [0, a],  v3 = [a, a],  v4 = [a, -a],   a = 1/n,

with the negative exponent convention exp(-j*2*pi*v^T*y). Real and
imaginary parts are split, so each input channel yields 8 output channels
in the fixed order [Re v1, Im v1, Re v2, Im v2, Re v3, Im v3, Re v4, Im v4].
The first component of a frequency vector pairs with the row offset, the
second with the column offset.

Borders are extended by nearest-pixel replication of width r = (n-1)/2,
which preserves spatial dims. Replication rather than zero fill is what
makes the bank's defining property hold at every position: each basis row
sums to zero, so constant inputs are annihilated exactly, borders
included. Zero fill would leak spurious edge responses into otherwise
DC-free outputs.

The coefficients are fixed: the bank is a non-trainable linear map. Three
evaluation routes are provided:

* ``stft_forward_direct``    -- one 8 x n^2 matrix applied per patch,
* ``stft_forward_separable`` -- successive 1D row/column passes exploiting
                                the rank-1 structure of each basis plane,
* ``oracle_stft``            -- literal per-element neighborhood sum in
                                plain Python, kept as the reference the
                                vectorized paths are tested against.

``stft_backward`` is the exact adjoint, which is the full gradient of the
layer (no weights exist).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError, ShapeError
from .tensor import Tensor4, as_tensor4, check_shape4

#: number of output channels produced per input channel (4 freqs x Re/Im)
CHANNELS_PER_INPUT = 8


def _check_side(n: int) -> int:
    n = int(n)
    if n < 3 or n % 2 == 0:
        raise ParameterError(f"neighborhood side must be odd and >= 3, got {n}")
    return n


def frequency_points(n: int) -> np.ndarray:
    """The four frequency vectors as a (4, 2) float64 array, a = 1/n."""
    _check_side(n)
    a = 1.0 / n
    return np.array([[a, 0.0], [0.0, a], [a, a], [a, -a]])


def neighborhood_offsets(n: int) -> np.ndarray:
    """(n^2, 2) integer offsets over {-r..r} x {-r..r}, row-major.

    Index i enumerates rows from -r to r, and columns from -r to r within
    each row; this ordering fixes the column layout of the basis matrix.
    """
    n = _check_side(n)
    r = n // 2
    span = np.arange(-r, r + 1)
    rows, cols = np.meshgrid(span, span, indexing="ij")
    return np.stack([rows.ravel(), cols.ravel()], axis=1)


@dataclass(frozen=True)
class FrequencySet:
    """The four fixed low frequency points for a given neighborhood side."""

    side: int                 # n, odd >= 3
    radius: int               # r with n = 2r + 1
    step: float               # a = 1/n
    points: np.ndarray        # (4, 2) in the order v1, v2, v3, v4

    @classmethod
    def for_side(cls, n: int) -> "FrequencySet":
        n = _check_side(n)
        return cls(side=n, radius=n // 2, step=1.0 / n, points=frequency_points(n))


@dataclass(frozen=True)
class StftBasis:
    """The fixed bank: 8 x n^2 real matrix plus separable 1D factors.

    ``matrix`` row k, column i holds Re or Im of exp(-j*2*pi*v^T*y_i) with
    rows ordered [Re v1, Im v1, ..., Re v4, Im v4] and columns ordered by
    ``neighborhood_offsets``. ``factors`` holds, per frequency point, a
    (row_kernel, col_kernel) pair of length-n complex vectors indexed by
    offset + r whose outer product reconstructs that point's basis plane.
    """

    side: int
    matrix: np.ndarray
    factors: tuple


def build_basis(n: int) -> StftBasis:
    """Construct the bank for neighborhood side n (odd, >= 3). Deterministic."""
    n = _check_side(n)
    freqs = frequency_points(n)                       # (4, 2)
    offsets = neighborhood_offsets(n)                 # (n^2, 2)
    phase = -2.0 * np.pi * (offsets @ freqs.T)        # (n^2, 4)
    table = np.exp(1j * phase)
    matrix = np.empty((CHANNELS_PER_INPUT, n * n))
    matrix[0::2] = table.real.T
    matrix[1::2] = table.imag.T

    r = n // 2
    axis = np.arange(-r, r + 1)
    osc = np.exp(-2j * np.pi * axis / n)              # exp(-j*2*pi*a*y)
    flat = np.ones(n, dtype=complex)
    factors = (
        (osc, flat),            # v1 = [a, 0]: oscillates along rows only
        (flat, osc),            # v2 = [0, a]: oscillates along columns only
        (osc, osc),             # v3 = [a, a]
        (osc, np.conj(osc)),    # v4 = [a, -a]
    )
    return StftBasis(side=n, matrix=matrix, factors=factors)


def _check_forward_input(x, basis) -> Tensor4:
    x = as_tensor4(x)
    if not isinstance(basis, StftBasis):
        raise ParameterError("basis must be a StftBasis")
    return x


def _pad_edge(x: Tensor4, r: int) -> Tensor4:
    return np.pad(x, ((0, 0), (0, 0), (r, r), (r, r)), mode="edge")


def stft_forward_direct(x: Tensor4, basis: StftBasis) -> Tensor4:
    """Patchwise evaluation: (B, C, H, W) -> (B, 8C, H, W).

    Input channel c maps to output channels 8c .. 8c+7 in the bank's row
    order. A raw n x n window holds the sample at offset +y while bank
    column i weights the sample at offset -y_i; the symmetric row-major
    offset ordering turns one into the other by plain index reversal, so
    windows contract against the column-reversed matrix.
    """
    x = _check_forward_input(x, basis)
    B, C, H, W = x.shape
    n = basis.side
    padded = _pad_edge(x, n // 2)
    win = sliding_window_view(padded, (n, n), axis=(2, 3))
    flat = win.reshape(-1, n * n)
    wrev = np.ascontiguousarray(basis.matrix[:, ::-1].T, dtype=x.dtype)
    out = flat @ wrev                                  # (B*C*H*W, 8)
    out = out.reshape(B, C, H, W, CHANNELS_PER_INPUT).transpose(0, 1, 4, 2, 3)
    return out.reshape(B, CHANNELS_PER_INPUT * C, H, W)


def _slide1d(x, taps, axis):
    """Same-size sliding dot product along axis with edge replication."""
    n = len(taps)
    pad = [(0, 0)] * x.ndim
    pad[axis] = (n // 2, n // 2)
    win = sliding_window_view(np.pad(x, pad, mode="edge"), n, axis=axis)
    return win @ taps


def stft_forward_separable(x: Tensor4, basis: StftBasis) -> Tensor4:
    """Separable evaluation via 1D row passes then 1D column passes.

    Same contract as the direct path; border replication factorizes per
    axis, so each pass pads its own axis. The basis planes share their
    oscillating 1D factor, which leaves only two row passes: a complex
    one (reused by v1, v3, v4) and a flat running sum (v2).
    """
    x = _check_forward_input(x, basis)
    B, C, H, W = x.shape
    ctype = np.complex64 if x.dtype == np.float32 else np.complex128
    # Reversal turns the offset-indexed factors into sliding-window taps,
    # mirroring the index reversal of the direct path.
    osc = np.ascontiguousarray(basis.factors[0][0][::-1]).astype(ctype)
    flat = np.ones(basis.side, dtype=x.dtype)
    rows_osc = _slide1d(x, osc, axis=2)
    rows_flat = _slide1d(x, flat, axis=2)
    per_freq = (
        _slide1d(rows_osc, flat, axis=3),           # v1: columns are flat
        _slide1d(rows_flat, osc, axis=3),           # v2: rows were flat
        _slide1d(rows_osc, osc, axis=3),            # v3
        _slide1d(rows_osc, np.conj(osc), axis=3),   # v4
    )
    out = np.empty((B, C, CHANNELS_PER_INPUT, H, W), dtype=x.dtype)
    for q, coeff in enumerate(per_freq):
        out[:, :, 2 * q] = coeff.real
        out[:, :, 2 * q + 1] = coeff.imag
    return out.reshape(B, CHANNELS_PER_INPUT * C, H, W)


def stft_forward(x: Tensor4, basis: StftBasis, path: str = "separable") -> Tensor4:
    """Dispatch between the two equivalent forward implementations."""
    if path == "separable":
        return stft_forward_separable(x, basis)
    if path == "direct":
        return stft_forward_direct(x, basis)
    raise ParameterError(f"unknown evaluation path {path!r}")


def stft_backward(grad_out: Tensor4, basis: StftBasis, in_shape) -> Tensor4:
    """Adjoint of the forward map: gradient w.r.t. the layer input.

    The bank is fixed, so this is the only gradient that exists. Two
    stages mirror the forward factorization "replicate-pad then sweep the
    bank": the adjoint of the patch sweep spreads each position's 8
    coefficient gradients over its n x n support (a channel-mixing GEMM
    followed by shifted accumulation onto the padded grid), then the
    adjoint of the padding folds the border ring onto the edge pixels.
    """
    B, C, H, W = check_shape4(in_shape)
    g = as_tensor4(grad_out)
    if g.shape != (B, CHANNELS_PER_INPUT * C, H, W):
        raise ShapeError(
            f"grad shape {g.shape} inconsistent with input shape {(B, C, H, W)}"
        )
    n = basis.side
    r = n // 2
    # mix the 8 coefficient channels into one map per neighborhood offset
    wt = np.ascontiguousarray(basis.matrix.T, dtype=g.dtype)     # (n^2, 8)
    mixed = np.matmul(wt, g.reshape(B, C, CHANNELS_PER_INPUT, H * W))
    mixed = mixed.reshape(B, C, n * n, H, W)
    gp = np.zeros((B, C, H + 2 * r, W + 2 * r), dtype=g.dtype)
    for i, (yr, yc) in enumerate(neighborhood_offsets(n)):
        gp[:, :, r - yr:r - yr + H, r - yc:r - yc + W] += mixed[:, :, i]
    # fold the padded ring back onto the edges (adjoint of replication)
    cols = gp[:, :, :, r:W + r].copy()
    cols[:, :, :, 0] += gp[:, :, :, :r].sum(axis=3)
    cols[:, :, :, W - 1] += gp[:, :, :, W + r:].sum(axis=3)
    out = cols[:, :, r:H + r, :].copy()
    out[:, :, 0, :] += cols[:, :, :r, :].sum(axis=2)
    out[:, :, H - 1, :] += cols[:, :, H + r:, :].sum(axis=2)
    return out


def oracle_stft(x: Tensor4, n: int, position, channel: int, freq_index: int,
                batch: int = 0):
    """Literal neighborhood sum for one output coefficient.

    Walks the n x n offsets in plain Python and accumulates
    sample(pos - y) * exp(-j*2*pi*v^T*y) in double precision, reading the
    nearest pixel when pos - y falls outside the borders. Returns
    (real, imag). Deliberately loop-based with no shared code: this is
    the reference the vectorized paths are verified against.
    """
    x = as_tensor4(x)
    n = _check_side(n)
    B, C, H, W = x.shape
    py, px = (int(position[0]), int(position[1]))
    if not (0 <= batch < B and 0 <= channel < C):
        raise ParameterError(f"batch/channel ({batch}, {channel}) out of range")
    if not (0 <= py < H and 0 <= px < W):
        raise ParameterError(f"position {(py, px)} out of range for {(H, W)}")
    if not 0 <= freq_index < 4:
        raise ParameterError(f"freq_index must be in [0, 4), got {freq_index}")
    v_row, v_col = frequency_points(n)[freq_index]
    r = n // 2
    re = 0.0
    im = 0.0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            sy = min(max(py - dy, 0), H - 1)
            sx = min(max(px - dx, 0), W - 1)
            sample = float(x[batch, channel, sy, sx])
            angle = -2.0 * math.pi * (v_row * dy + v_col * dx)
            re += sample * math.cos(angle)
            im += sample * math.sin(angle)
    return re, im


def _check_dims(n, channels, height, width):
    _check_side(n)
    if min(channels, height, width) < 1:
        raise ParameterError(
            f"dims must be positive, got {(channels, height, width)}"
        )


def flops_direct(n: int, channels: int, height: int, width: int) -> int:
    """Multiply-accumulate count of the patchwise path: 8 rows x n^2 taps."""
    _check_dims(n, channels, height, width)
    return 8 * n * n * channels * height * width


def flops_separable(n: int, channels: int, height: int, width: int) -> int:
    """Multiply-accumulate count of the separable path as implemented.

    Per position and channel, counting a real*real tap as 1 MAC, a
    real*complex tap as 2 and a complex*complex tap as 4:

        row passes (shared):  flat n         + complex 2n
        column passes:        v1 2n  +  v2 2n  +  v3 4n  +  v4 4n

    for a total of 15n. Strictly below the direct path's 8n^2 for every
    odd n >= 3.
    """
    _check_dims(n, channels, height, width)
    return 15 * n * channels * height * width


def format_basis(basis: StftBasis) -> str:
    """Plain-text dump of the bank matrix: one row per line, 17 significant digits."""
    lines = [" ".join("%.17g" % v for v in row) for row in basis.matrix]
    return "\n".join(lines) + "\n"
