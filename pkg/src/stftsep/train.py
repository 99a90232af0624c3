"""Training loop: Adam at a fixed learning rate with a batch-size switch.

The schedule is epochs1 at batch1 followed by epochs2 at batch2 (defaults
300 at 64, then 100 at 128) with the learning rate held constant across
the switch. Each epoch shuffles with its own deterministic stream,
augments every image through a per-image stream, standardizes the
augmented batch with the training statistics, and takes one Adam step
per batch.

Bookkeeping per epoch: train_loss is the mean of the training-mode batch
losses; train_accuracy and test_accuracy come from eval-mode passes over
the unaugmented splits, so evaluating the final checkpoint on the same
subset reproduces the last logged train_accuracy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset, augment, epoch_order_rng, image_rng
from .errors import DegenerateDataError
from .layers import Adam, softmax_cross_entropy


@dataclass
class TrainConfig:
    lr: float = 0.01
    epochs1: int = 300
    epochs2: int = 100
    batch1: int = 64
    batch2: int = 128
    seed: int = 0
    augment: bool = True
    eval_batch: int = 256


def compute_stats(images: np.ndarray):
    """Per-channel mean and std of raw images, double precision."""
    x = np.asarray(images, dtype=np.float64)
    mean = x.mean(axis=(0, 2, 3))
    std = x.std(axis=(0, 2, 3))
    if np.any(std == 0.0):
        flat = np.flatnonzero(std == 0.0)
        raise DegenerateDataError(
            f"channel(s) {flat.tolist()} have zero standard deviation"
        )
    return mean, std


def standardize(images: np.ndarray, stats) -> np.ndarray:
    """(x - mean) / std in double precision, emitted as float32."""
    mean, std = stats
    x = np.asarray(images, dtype=np.float64)
    return ((x - mean[:, None, None]) / std[:, None, None]).astype(np.float32)


def predict_labels(net, images: np.ndarray, batch: int = 256) -> np.ndarray:
    out = []
    for i in range(0, len(images), batch):
        logits = net.forward(images[i:i + batch], training=False)
        out.append(np.argmax(logits, axis=1))
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


def accuracy(net, images: np.ndarray, labels: np.ndarray,
             batch: int = 256) -> float:
    if len(labels) == 0:
        return 0.0
    return float(np.mean(predict_labels(net, images, batch) == labels))


def train(net, train_ds: LabeledDataset, test_ds: LabeledDataset,
          cfg: TrainConfig, stats=None, log=None):
    """Run the schedule on a built network, mutating it in place.

    ``stats`` defaults to the training split's own statistics. Returns
    (epoch rows, stats); rows follow the training CSV schema.
    """
    raw = np.asarray(train_ds.images, dtype=np.float32)
    labels = np.asarray(train_ds.labels, dtype=np.int64)
    if stats is None:
        stats = compute_stats(raw)
    train_eval = standardize(raw, stats)
    test_eval = standardize(test_ds.images, stats)
    test_labels = np.asarray(test_ds.labels, dtype=np.int64)

    adam = Adam(lr=cfg.lr)
    rows = []
    epoch = 0
    for batch_size, epochs in ((cfg.batch1, cfg.epochs1),
                               (cfg.batch2, cfg.epochs2)):
        for _ in range(epochs):
            epoch += 1
            started = time.perf_counter()
            order = epoch_order_rng(cfg.seed, epoch).permutation(len(labels))
            losses = []
            for lo in range(0, len(order), batch_size):
                idx = order[lo:lo + batch_size]
                if cfg.augment:
                    xb = np.stack([
                        augment(raw[i], image_rng(cfg.seed, epoch, int(i)))
                        for i in idx
                    ])
                else:
                    xb = raw[idx]
                logits = net.forward(standardize(xb, stats), training=True)
                loss, grad = softmax_cross_entropy(logits, labels[idx])
                net.backward(grad)
                adam.step(net.params(), net.grads())
                losses.append(loss)
            row = {
                "epoch": epoch,
                "train_loss": float(np.mean(losses)),
                "train_accuracy": accuracy(net, train_eval, labels,
                                           cfg.eval_batch),
                "test_accuracy": accuracy(net, test_eval, test_labels,
                                          cfg.eval_batch),
                "wall_clock_seconds": time.perf_counter() - started,
                "batch_size": batch_size,
            }
            rows.append(row)
            if log is not None:
                log(row)
    return rows, stats
