"""Shared fixtures: synthetic CIFAR-format datasets written to temp dirs."""

import os

import numpy as np
import pytest

from stftsep.data import serialize_records


def striped_image(rng, cls):
    """Render one 3x32x32 uint8 image whose class is its stripe orientation.

    Class 0 gets horizontal bands and a red bias, class 1 vertical bands and
    a blue bias.  Stripe phase/period and additive noise vary per image so
    the classes overlap in pixel space but not in local frequency content.
    """
    base = np.zeros((3, 32, 32), np.float64)
    phase = int(rng.integers(0, 4))
    period = int(rng.integers(3, 6))
    idx = (np.arange(32) + phase) // period % 2
    stripes = np.where(idx == 0, 60.0, 190.0)
    if cls == 0:
        base += stripes[None, :, None]
        base[0] += 30.0
    else:
        base += stripes[None, None, :]
        base[2] += 30.0
    base += rng.normal(0.0, 25.0, size=base.shape)
    return np.clip(base, 0.0, 255.0).astype(np.uint8)


def striped_split(n_per_class, seed):
    rng = np.random.default_rng(seed)
    images = []
    labels = []
    for i in range(2 * n_per_class):
        cls = i % 2
        images.append(striped_image(rng, cls))
        labels.append(cls)
    order = rng.permutation(len(labels))
    return np.stack(images)[order], np.asarray(labels, np.int64)[order]


def write_cifar10_dir(root, train_images, train_labels, test_images, test_labels):
    os.makedirs(root, exist_ok=True)
    per = len(train_labels) // 5
    assert per * 5 == len(train_labels)
    for i in range(5):
        sl = slice(i * per, (i + 1) * per)
        path = os.path.join(root, "data_batch_%d.bin" % (i + 1))
        with open(path, "wb") as fh:
            fh.write(serialize_records(train_images[sl], train_labels[sl], variant=10))
    with open(os.path.join(root, "test_batch.bin"), "wb") as fh:
        fh.write(serialize_records(test_images, test_labels, variant=10))


@pytest.fixture(scope="session")
def stripes_dir(tmp_path_factory):
    """CIFAR-10-format directory with 500 striped images (250/class) + 60 test."""
    root = tmp_path_factory.mktemp("stripes")
    tr_im, tr_lb = striped_split(250, seed=11)
    te_im, te_lb = striped_split(30, seed=12)
    write_cifar10_dir(str(root), tr_im, tr_lb, te_im, te_lb)
    return str(root)


@pytest.fixture(scope="session")
def random_cifar_dir(tmp_path_factory):
    """Small CIFAR-10-format directory of pure-noise images, 10 labels."""
    root = tmp_path_factory.mktemp("randcifar")
    rng = np.random.default_rng(3)
    tr_im = rng.integers(0, 256, size=(50, 3, 32, 32), dtype=np.uint8)
    tr_lb = (np.arange(50) % 10).astype(np.int64)
    te_im = rng.integers(0, 256, size=(20, 3, 32, 32), dtype=np.uint8)
    te_lb = (np.arange(20) % 10).astype(np.int64)
    write_cifar10_dir(str(root), tr_im, tr_lb, te_im, te_lb)
    return str(root)


DESK_CONFIG = """\
# four stages of one block each, pooling between the first three
classes = 2
input = 3x32x32
seed = 0

[stage.1]
blocks = 1
b = 4
f = 32
pool = yes

[stage.2]
blocks = 1
b = 4
f = 32
pool = yes

[stage.3]
blocks = 1
b = 4
f = 32
pool = yes

[stage.4]
blocks = 1
b = 4
f = 32
"""


@pytest.fixture(scope="session")
def desk_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "desk.cfg"
    path.write_text(DESK_CONFIG)
    return str(path)
