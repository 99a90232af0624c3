import os

import numpy as np
import pytest

from stftsep.data import (
    LabeledDataset,
    augment,
    epoch_order_rng,
    flip_horizontal,
    image_rng,
    load_cifar,
    normalize,
    rotate_image,
    serialize_records,
    shift_image,
    subset_per_class,
)
from stftsep.errors import DegenerateDataError, FormatError, ParameterError


def random_images(n, seed):
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(n, 3, 32, 32), dtype=np.uint8)
    labels = rng.integers(0, 10, size=n).astype(np.int64)
    return images, labels


# ---------------------------------------------------------------- io

def test_load_cifar10_round_trip(tmp_path):
    blobs = {}
    for i in range(1, 6):
        im, lb = random_images(7, i)
        blob = serialize_records(im, lb, variant=10)
        blobs[i] = (im, lb, blob)
        (tmp_path / f"data_batch_{i}.bin").write_bytes(blob)
    te_im, te_lb = random_images(9, 99)
    te_blob = serialize_records(te_im, te_lb, variant=10)
    (tmp_path / "test_batch.bin").write_bytes(te_blob)

    train, test = load_cifar(str(tmp_path), variant=10)
    assert train.split == "train" and test.split == "test"
    assert train.images.shape == (35, 3, 32, 32)
    assert train.images.dtype == np.uint8
    # batch order is data_batch_1 .. data_batch_5
    np.testing.assert_array_equal(train.images[:7], blobs[1][0])
    np.testing.assert_array_equal(train.labels[7:14], blobs[2][1])
    # byte-exact inverse
    assert serialize_records(test.images, test.labels, variant=10) == te_blob


def test_load_cifar100_uses_fine_label(tmp_path):
    im, lb = random_images(6, 0)
    fine = (lb * 7 % 100).astype(np.int64)
    coarse = (lb % 20).astype(np.int64)
    blob = serialize_records(im, fine, variant=100, coarse_labels=coarse)
    (tmp_path / "train.bin").write_bytes(blob)
    (tmp_path / "test.bin").write_bytes(blob)
    train, test = load_cifar(str(tmp_path), variant=100)
    np.testing.assert_array_equal(train.labels, fine)
    # records are 3074 bytes: coarse byte + fine byte + pixels
    assert len(blob) == 6 * 3074
    assert serialize_records(train.images, train.labels, variant=100,
                             coarse_labels=coarse) == blob


def test_load_rejects_partial_record(tmp_path):
    im, lb = random_images(2, 1)
    (tmp_path / "test_batch.bin").write_bytes(
        serialize_records(im, lb, variant=10) + b"\x01\x02"
    )
    for i in range(1, 6):
        (tmp_path / f"data_batch_{i}.bin").write_bytes(
            serialize_records(*random_images(2, i), variant=10)
        )
    with pytest.raises(FormatError) as err:
        load_cifar(str(tmp_path), variant=10)
    assert "test_batch.bin" in str(err.value)


def test_load_rejects_empty_file(tmp_path):
    (tmp_path / "data_batch_1.bin").write_bytes(b"")
    with pytest.raises(FormatError):
        load_cifar(str(tmp_path), variant=10)


def test_load_rejects_out_of_range_label(tmp_path):
    im, lb = random_images(3, 1)
    lb[1] = 10
    for i in range(1, 6):
        (tmp_path / f"data_batch_{i}.bin").write_bytes(
            serialize_records(im, lb, variant=10)
        )
    with pytest.raises(FormatError) as err:
        load_cifar(str(tmp_path), variant=10)
    assert "label" in str(err.value)


def test_load_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_cifar(str(tmp_path), variant=10)


def test_bad_variant():
    with pytest.raises(ParameterError):
        load_cifar(".", variant=20)


def test_serialize_validates_shapes():
    with pytest.raises(FormatError):
        serialize_records(np.zeros((2, 3, 16, 16), np.uint8), np.zeros(2))
    with pytest.raises(FormatError):
        serialize_records(np.zeros((2, 3, 32, 32), np.uint8), np.zeros(3))


# ---------------------------------------------------------------- normalize

def test_normalize_stats_and_reuse():
    im, lb = random_images(50, 3)
    ds = LabeledDataset(images=im, labels=lb, split="train")
    out, (mean, std) = normalize(ds)
    assert out.images.dtype == np.float32
    np.testing.assert_allclose(out.images.mean(axis=(0, 2, 3)), 0.0, atol=1e-4)
    np.testing.assert_allclose(out.images.std(axis=(0, 2, 3)), 1.0, atol=1e-4)
    np.testing.assert_allclose(mean, im.astype(np.float64).mean(axis=(0, 2, 3)))
    # applying train stats to another split uses them as given
    im2, lb2 = random_images(20, 4)
    ds2 = LabeledDataset(images=im2, labels=lb2, split="test")
    out2, stats2 = normalize(ds2, stats=(mean, std))
    assert stats2 == (mean, std)
    expect = (im2.astype(np.float64) - mean[:, None, None]) / std[:, None, None]
    np.testing.assert_allclose(out2.images, expect.astype(np.float32))


def test_normalize_rejects_constant_channel():
    im = np.zeros((4, 3, 32, 32), np.uint8)
    im[:, 0] = 7   # channel 0 constant
    im[:, 1:] = np.random.default_rng(0).integers(0, 256, (4, 2, 32, 32))
    ds = LabeledDataset(images=im, labels=np.zeros(4, np.int64), split="train")
    with pytest.raises(DegenerateDataError) as err:
        normalize(ds)
    assert "0" in str(err.value)


# ---------------------------------------------------------------- subset

def test_subset_per_class_keeps_first_in_order():
    labels = np.array([0, 1, 0, 2, 1, 0, 2, 1, 0], np.int64)
    images = np.arange(9, dtype=np.uint8).repeat(3072).reshape(9, 3, 32, 32)
    ds = LabeledDataset(images=images, labels=labels, split="train")
    sub = subset_per_class(ds, per_class=2)
    np.testing.assert_array_equal(sub.labels, [0, 1, 0, 2, 1, 2])
    np.testing.assert_array_equal(sub.images[:, 0, 0, 0], [0, 1, 2, 3, 4, 6])


def test_subset_class_filter():
    labels = np.arange(10, dtype=np.int64)
    images = np.zeros((10, 3, 32, 32), np.uint8)
    ds = LabeledDataset(images=images, labels=labels, split="train")
    sub = subset_per_class(ds, classes=3)
    np.testing.assert_array_equal(sub.labels, [0, 1, 2])
    both = subset_per_class(
        LabeledDataset(images=np.zeros((6, 3, 32, 32), np.uint8),
                       labels=np.array([0, 0, 1, 1, 2, 2], np.int64),
                       split="train"),
        per_class=1, classes=2)
    np.testing.assert_array_equal(both.labels, [0, 1])
    with pytest.raises(ParameterError):
        subset_per_class(ds, per_class=0)
    with pytest.raises(ParameterError):
        subset_per_class(ds, classes=1)


# ---------------------------------------------------------------- augment

def test_flip_and_shift_ops():
    img = np.arange(2 * 3 * 3, dtype=np.float32).reshape(2, 3, 3)
    np.testing.assert_array_equal(flip_horizontal(img), img[:, :, ::-1])
    s = shift_image(img, 1, 0)   # one column right, zero fill on the left
    assert np.all(s[:, :, 0] == 0)
    np.testing.assert_array_equal(s[:, :, 1:], img[:, :, :-1])
    s = shift_image(img, 0, -1)  # one row up
    assert np.all(s[:, -1, :] == 0)
    np.testing.assert_array_equal(s[:, :-1, :], img[:, 1:, :])


def test_rotate_preserves_shape_and_identity():
    rng = np.random.default_rng(0)
    img = rng.random((3, 32, 32)).astype(np.float32)
    out = rotate_image(img, 15.0)
    assert out.shape == img.shape
    np.testing.assert_allclose(rotate_image(img, 0.0), img, atol=1e-6)
    # rotating by a tiny angle keeps the center pixel roughly in place
    assert abs(float(out[0, 16, 16]) - float(img[0, 16, 16])) < 0.5


def test_augment_deterministic_streams():
    rng = np.random.default_rng(0)
    img = rng.random((3, 32, 32)).astype(np.float32)
    a = augment(img, image_rng(7, 2, 5))
    b = augment(img, image_rng(7, 2, 5))
    np.testing.assert_array_equal(a, b)
    c = augment(img, image_rng(7, 2, 6))
    d = augment(img, image_rng(8, 2, 5))
    assert not np.array_equal(a, c) or not np.array_equal(a, d)
    assert a.shape == img.shape


def test_augment_rejects_batched_input():
    with pytest.raises(ParameterError):
        augment(np.zeros((2, 3, 32, 32), np.float32), np.random.default_rng(0))


def test_epoch_order_rng_is_stable():
    p1 = epoch_order_rng(3, 1).permutation(10)
    p2 = epoch_order_rng(3, 1).permutation(10)
    p3 = epoch_order_rng(3, 2).permutation(10)
    np.testing.assert_array_equal(p1, p2)
    assert not np.array_equal(p1, p3)
