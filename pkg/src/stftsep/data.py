"""CIFAR-style dataset ingestion, normalization, and augmentation.

The binary formats are the standard ones: CIFAR-10 records are one label
byte followed by 3072 pixel bytes (red plane, green plane, blue plane,
each 32x32 row-major) in files data_batch_1.bin .. data_batch_5.bin plus
test_batch.bin; CIFAR-100 records carry a coarse and a fine label byte
before the pixels, in train.bin and test.bin, and the fine label is the
class id. Loading preserves pixel bytes exactly and ``serialize_records``
is its byte-exact inverse.

Augmentation draws, in a fixed order, a horizontal-flip coin, a column
shift, a row shift (each uniform on [-4, 4] with zero fill) and a
rotation angle uniform on [-20, 20] degrees (bilinear, zero fill), all
from a caller-supplied generator so streams can be split per image.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateDataError, FormatError, ParameterError

IMAGE_SHAPE = (3, 32, 32)
_PIXELS = 3 * 32 * 32

_LAYOUTS = {
    10: {
        "record": 1 + _PIXELS,
        "label_offset": 0,
        "classes": 10,
        "train_files": tuple(f"data_batch_{i}.bin" for i in range(1, 6)),
        "test_files": ("test_batch.bin",),
    },
    100: {
        "record": 2 + _PIXELS,
        "label_offset": 1,        # fine label; the coarse byte is ignored
        "classes": 100,
        "train_files": ("train.bin",),
        "test_files": ("test.bin",),
    },
}


@dataclass
class LabeledDataset:
    """Images (N, 3, 32, 32), integer labels (N,), and a split tag."""

    images: np.ndarray
    labels: np.ndarray
    split: str


def _layout(variant: int) -> dict:
    try:
        return _LAYOUTS[int(variant)]
    except (KeyError, ValueError):
        raise ParameterError(f"variant must be 10 or 100, got {variant!r}") from None


def _read_file(path, layout) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    record = layout["record"]
    if len(raw) == 0 or len(raw) % record:
        raise FormatError(
            f"{path}: size {len(raw)} is not a positive multiple of "
            f"the {record}-byte record"
        )
    return np.frombuffer(raw, dtype=np.uint8).reshape(-1, record)


def _decode(records: np.ndarray, layout, path) -> tuple:
    off = layout["label_offset"]
    labels = records[:, off].astype(np.int64)
    if labels.max(initial=0) >= layout["classes"]:
        raise FormatError(f"{path}: label byte out of range for the variant")
    images = records[:, off + 1:].reshape(-1, *IMAGE_SHAPE).copy()
    return images, labels


def load_cifar(path, variant: int = 10):
    """Load (train, test) LabeledDatasets from a directory of batch files.

    Pixel bytes are preserved exactly (uint8). Missing files surface as
    the underlying I/O error naming the file; malformed files raise a
    format error.
    """
    layout = _layout(variant)
    splits = []
    for tag, names in (("train", layout["train_files"]),
                       ("test", layout["test_files"])):
        images = []
        labels = []
        for name in names:
            full = os.path.join(path, name)
            img, lab = _decode(_read_file(full, layout), layout, full)
            images.append(img)
            labels.append(lab)
        splits.append(LabeledDataset(
            images=np.concatenate(images),
            labels=np.concatenate(labels),
            split=tag,
        ))
    return tuple(splits)


def serialize_records(images: np.ndarray, labels: np.ndarray,
                      variant: int = 10,
                      coarse_labels: np.ndarray | None = None) -> bytes:
    """Inverse of record decoding: pack images and labels into file bytes."""
    layout = _layout(variant)
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels)
    if images.ndim != 4 or images.shape[1:] != IMAGE_SHAPE:
        raise FormatError(f"images must be (N, 3, 32, 32), got {images.shape}")
    n = images.shape[0]
    if labels.shape != (n,):
        raise FormatError(f"need {n} labels, got shape {labels.shape}")
    records = np.empty((n, layout["record"]), dtype=np.uint8)
    off = layout["label_offset"]
    if variant == 100:
        coarse = (np.zeros(n, dtype=np.uint8) if coarse_labels is None
                  else np.asarray(coarse_labels, dtype=np.uint8))
        records[:, 0] = coarse
    records[:, off] = labels.astype(np.uint8)
    records[:, off + 1:] = images.reshape(n, _PIXELS)
    return records.tobytes()


def normalize(ds: LabeledDataset, stats=None):
    """Per-channel standardization; returns (dataset, (mean, std)).

    Without stats, per-channel mean and standard deviation are computed
    over the whole split in double precision and applied; with stats (the
    training split's), they are applied as given. Images come out float32.
    """
    x = ds.images.astype(np.float64)
    if stats is None:
        mean = x.mean(axis=(0, 2, 3))
        std = x.std(axis=(0, 2, 3))
        if np.any(std == 0.0):
            flat = np.flatnonzero(std == 0.0)
            raise DegenerateDataError(
                f"channel(s) {flat.tolist()} have zero standard deviation"
            )
        stats = (mean, std)
    mean, std = stats
    out = ((x - np.asarray(mean)[:, None, None])
           / np.asarray(std)[:, None, None]).astype(np.float32)
    return LabeledDataset(images=out, labels=ds.labels, split=ds.split), stats


def subset_per_class(ds: LabeledDataset, per_class=None,
                     classes=None) -> LabeledDataset:
    """Deterministic subset: optionally keep labels < classes, then the
    first per_class examples of each kept class, in original order."""
    keep = np.ones(len(ds.labels), dtype=bool)
    if classes is not None:
        if classes < 2:
            raise ParameterError(f"need at least 2 classes, got {classes}")
        keep &= ds.labels < classes
    if per_class is not None:
        if per_class < 1:
            raise ParameterError(f"per-class cap must be positive, got {per_class}")
        seen = {}
        for i in np.flatnonzero(keep):
            label = int(ds.labels[i])
            seen[label] = seen.get(label, 0) + 1
            if seen[label] > per_class:
                keep[i] = False
    return LabeledDataset(images=ds.images[keep], labels=ds.labels[keep],
                          split=ds.split)


def flip_horizontal(image: np.ndarray) -> np.ndarray:
    return image[:, :, ::-1].copy()


def shift_image(image: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Integer translation by dx columns and dy rows with zero fill."""
    out = np.zeros_like(image)
    h, w = image.shape[1:]
    ys = slice(max(dy, 0), h + min(dy, 0))
    xs = slice(max(dx, 0), w + min(dx, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    out[:, ys, xs] = image[:, ys_src, xs_src]
    return out


def rotate_image(image: np.ndarray, degrees: float) -> np.ndarray:
    """Rotation about the image center, bilinear, zero fill outside."""
    return ndimage.rotate(image, degrees, axes=(2, 1), reshape=False,
                          order=1, mode="constant", cval=0.0, prefilter=False)


def augment(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One augmentation draw per image; see the module docstring for order.

    Identity draws (no flip, zero shift, zero angle) return the input
    unchanged; shape and label are never touched.
    """
    image = np.asarray(image)
    if image.ndim != 3:
        raise ParameterError(f"augment expects one (C, H, W) image, got {image.shape}")
    flip = rng.random() < 0.5
    dx = int(rng.integers(-4, 5))
    dy = int(rng.integers(-4, 5))
    angle = float(rng.uniform(-20.0, 20.0))
    out = image
    if flip:
        out = flip_horizontal(out)
    if dx or dy:
        out = shift_image(out, dx, dy)
    if angle != 0.0:
        out = rotate_image(out, angle)
    return out


# rng stream tags; disjoint leading elements keep the streams independent
_AUG_TAG = 1
_ORDER_TAG = 2


def image_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Per-image augmentation stream, split deterministically from seed."""
    return np.random.default_rng([_AUG_TAG, int(seed), int(epoch), int(index)])


def epoch_order_rng(seed: int, epoch: int) -> np.random.Generator:
    """Batch shuffling stream for one epoch."""
    return np.random.default_rng([_ORDER_TAG, int(seed), int(epoch)])
