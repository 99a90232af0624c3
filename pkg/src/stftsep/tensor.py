"""Dense rank-4 tensor helpers.

Every activation in this package is a plain numpy array in NCHW order:
(batch, channels, height, width). Verification code runs in float64,
training usually in float32. These helpers only add shape discipline and
the handful of layout operations the rest of the package needs; anything
fancier (broadcasting, views, other ranks) is out of scope on purpose.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

# Alias used in signatures for readability; a Tensor4 is just an ndarray
# with ndim == 4 and all dims >= 1.
Tensor4 = np.ndarray


def check_shape4(shape) -> tuple[int, int, int, int]:
    """Validate a (B, C, H, W) shape tuple and return it as plain ints."""
    dims = tuple(int(d) for d in shape)
    if len(dims) != 4:
        raise ShapeError(f"expected 4 dimensions, got {len(dims)}")
    if any(d < 1 for d in dims):
        raise ShapeError(f"all shape components must be >= 1, got {dims}")
    return dims


def zeros(shape, dtype=np.float64) -> Tensor4:
    """Allocate a zero-filled (B, C, H, W) tensor."""
    return np.zeros(check_shape4(shape), dtype=dtype)


def as_tensor4(x, dtype=None) -> Tensor4:
    """Coerce to an ndarray and validate that it is rank 4."""
    arr = np.asarray(x) if dtype is None else np.asarray(x, dtype=dtype)
    check_shape4(arr.shape)
    return arr


def flat_index(shape, b: int, c: int, y: int, x: int) -> int:
    """Row-major flat offset of element (b, c, y, x)."""
    _, C, H, W = check_shape4(shape)
    return ((b * C + c) * H + y) * W + x


def pad_spatial(x: Tensor4, r: int) -> Tensor4:
    """Zero-pad height and width by r on every side."""
    if r < 0:
        raise ShapeError(f"pad width must be >= 0, got {r}")
    as_tensor4(x)
    return np.pad(x, ((0, 0), (0, 0), (r, r), (r, r)))


def crop_spatial(x: Tensor4, r: int) -> Tensor4:
    """Inverse of pad_spatial: drop a border ring of width r."""
    if r < 0:
        raise ShapeError(f"crop width must be >= 0, got {r}")
    if r == 0:
        return x.copy()
    _, _, H, W = check_shape4(x.shape)
    if H <= 2 * r or W <= 2 * r:
        raise ShapeError(f"cannot crop {r} from spatial dims {(H, W)}")
    return x[:, :, r:-r, r:-r].copy()


def concat_channels(xs) -> Tensor4:
    """Concatenate tensors along the channel axis, preserving list order."""
    xs = list(xs)
    if not xs:
        raise ShapeError("concat_channels needs at least one tensor")
    first = as_tensor4(xs[0])
    for x in xs[1:]:
        x = as_tensor4(x)
        same = (
            x.shape[0] == first.shape[0]
            and x.shape[2] == first.shape[2]
            and x.shape[3] == first.shape[3]
        )
        if not same:
            raise ShapeError(
                f"batch/spatial dims differ: {first.shape} vs {x.shape}"
            )
    return np.concatenate(xs, axis=1)


def dump_txt(x: Tensor4, path) -> None:
    """Debug dump: header line `B C H W`, then one scalar per line, row-major."""
    x = as_tensor4(x)
    with open(path, "w") as fh:
        fh.write("%d %d %d %d\n" % x.shape)
        for v in x.ravel():
            fh.write("%.17g\n" % v)


def load_txt(path) -> Tensor4:
    """Read a tensor written by dump_txt."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ShapeError(f"bad tensor header in {path!s}: {header}")
        shape = check_shape4(int(d) for d in header)
        data = np.array([float(line) for line in fh if line.strip()])
    if data.size != int(np.prod(shape)):
        raise ShapeError(
            f"{path!s}: expected {int(np.prod(shape))} scalars, got {data.size}"
        )
    return data.reshape(shape)
