"""Block and network assembly, configuration parsing, parameter counting.

Two block flavors share one pipeline: pointwise reduce c -> b, parallel
fixed filter banks at sides 3 and 5 (each b -> 8b channels), channel
concat, pointwise expand 16b -> f, batch norm, LeakyReLU. The residual
flavor adds the block input to the expansion output before the norm,
which requires c = f.

A network is a stem pointwise conv mapping the input channels to the
first stage's f (so every block sees c equal to its stage width),
stages of blocks with an optional 2x2 max pool after each stage, global
average pooling, and a dense classifier head. The first block of the
network, and the first block of any stage that changes the channel
count, is plain; all other blocks are residual.

Configs are plain text: top-level ``key = value`` lines (classes, input,
seed, branches) followed by ``[stage.N]`` sections with keys blocks, b,
f, pool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError, SpecError
from .layers import (
    BatchNorm,
    Dense,
    GlobalAvgPool,
    LeakyReLU,
    MaxPool2,
    PointwiseConv,
    StftLayer,
    softmax,
)
from .stft import CHANNELS_PER_INPUT
from .tensor import concat_channels

DEFAULT_BRANCHES = (3, 5)


def _check_branches(branches) -> tuple:
    branches = tuple(int(n) for n in branches)
    if not branches:
        raise SpecError("at least one branch filter size is required")
    for n in branches:
        if n < 3 or n % 2 == 0:
            raise SpecError(f"branch filter sizes must be odd and >= 3, got {n}")
    return branches


@dataclass(frozen=True)
class BlockSpec:
    """One block: plain or residual, with its channel plan."""

    kind: str
    c: int
    b: int
    f: int
    branches: tuple = DEFAULT_BRANCHES

    def __post_init__(self):
        if self.kind not in ("plain", "residual"):
            raise SpecError(f"unknown block kind {self.kind!r}")
        if min(self.c, self.b, self.f) < 1:
            raise SpecError(f"channel counts must be positive: {self}")
        if not self.b < self.c:
            raise SpecError(f"bottleneck must satisfy b < c, got b={self.b}, c={self.c}")
        if not self.f > self.b:
            raise SpecError(f"expansion must satisfy f > b, got f={self.f}, b={self.b}")
        if self.kind == "residual" and self.c != self.f:
            raise SpecError(
                f"residual block needs c = f for the skip, got c={self.c}, f={self.f}"
            )
        object.__setattr__(self, "branches", _check_branches(self.branches))

    @property
    def concat_channels(self) -> int:
        return CHANNELS_PER_INPUT * self.b * len(self.branches)


@dataclass(frozen=True)
class StageSpec:
    """A run of same-width blocks with an optional trailing 2x2 pool."""

    blocks: int
    b: int
    f: int
    pool: bool = False

    def __post_init__(self):
        if self.blocks < 1:
            raise SpecError(f"stage needs at least one block, got {self.blocks}")
        if min(self.b, self.f) < 1:
            raise SpecError(f"stage widths must be positive: {self}")


@dataclass(frozen=True)
class NetSpec:
    """Whole-network plan: stages, class count, input shape, seed."""

    stages: tuple
    classes: int
    input_shape: tuple = (3, 32, 32)
    seed: int = 0
    branches: tuple = DEFAULT_BRANCHES

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "branches", _check_branches(self.branches))
        if not self.stages:
            raise SpecError("network needs at least one stage")
        for st in self.stages:
            if not isinstance(st, StageSpec):
                raise SpecError(f"stages must be StageSpec, got {type(st).__name__}")
        if self.classes < 2:
            raise SpecError(f"need at least 2 classes, got {self.classes}")
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise SpecError(f"input shape must be (C, H, W), got {self.input_shape}")
        h, w = self.input_shape[1:]
        for st in self.stages:
            if st.pool:
                if h % 2 or w % 2:
                    raise SpecError(
                        f"spatial dims {(h, w)} must be even before a pool"
                    )
                h, w = h // 2, w // 2

    def block_specs(self):
        """(name, BlockSpec) pairs in construction order."""
        out = []
        c = self.stages[0].f
        first = True
        for si, st in enumerate(self.stages, 1):
            for bi in range(1, st.blocks + 1):
                kind = "plain" if first or c != st.f else "residual"
                out.append(
                    (f"stage{si}.block{bi}",
                     BlockSpec(kind, c, st.b, st.f, self.branches))
                )
                c = st.f
                first = False
        return out


class Block:
    """One plain or residual block; see the module docstring for the pipeline."""

    def __init__(self, spec: BlockSpec, rng: np.random.Generator,
                 dtype=np.float32, path: str = "separable"):
        self.spec = spec
        self.reduce = PointwiseConv(spec.c, spec.b, rng, bias=False, dtype=dtype)
        self.banks = tuple(StftLayer(n, path=path) for n in spec.branches)
        self.expand = PointwiseConv(spec.concat_channels, spec.f, rng,
                                    bias=False, dtype=dtype)
        self.bn = BatchNorm(spec.f, dtype=dtype)
        self.act = LeakyReLU(0.3)

    def forward(self, x, training: bool = False):
        if x.shape[1] != self.spec.c:
            raise ShapeError(f"expected {self.spec.c} channels, got {x.shape[1]}")
        u = self.reduce.forward(x, training)
        cat = concat_channels([bank.forward(u, training) for bank in self.banks])
        e = self.expand.forward(cat, training)
        if self.spec.kind == "residual":
            e = e + x
        return self.act.forward(self.bn.forward(e, training), training)

    def backward(self, grad):
        g = self.bn.backward(self.act.backward(grad))
        gcat = self.expand.backward(g)
        width = CHANNELS_PER_INPUT * self.spec.b
        gu = None
        for k, bank in enumerate(self.banks):
            gb = bank.backward(gcat[:, k * width:(k + 1) * width])
            gu = gb if gu is None else gu + gb
        gx = self.reduce.backward(gu)
        if self.spec.kind == "residual":
            gx = gx + g
        return gx

    def named_layers(self):
        return (("reduce", self.reduce), ("expand", self.expand), ("bn", self.bn))

    def params(self) -> dict:
        return _prefixed(self.named_layers(), lambda l: l.params())

    def grads(self) -> dict:
        return _prefixed(self.named_layers(), lambda l: l.grads())

    def state(self) -> dict:
        return _prefixed(self.named_layers(), lambda l: l.state())


def _prefixed(pairs, getter):
    out = {}
    for prefix, layer in pairs:
        for name, arr in getter(layer).items():
            out[f"{prefix}.{name}"] = arr
    return out


class Network:
    """Built network instance with flat name -> array parameter access."""

    def __init__(self, spec: NetSpec, seed: int, dtype=np.float32,
                 path: str = "separable"):
        self.spec = spec
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        c_in = spec.input_shape[0]
        self.stem = PointwiseConv(c_in, spec.stages[0].f, rng, bias=False,
                                  dtype=dtype)
        self._stages = []
        named = iter(spec.block_specs())
        for st in spec.stages:
            blocks = [next(named) for _ in range(st.blocks)]
            blocks = [(name, Block(bs, rng, dtype=dtype, path=path))
                      for name, bs in blocks]
            self._stages.append((blocks, MaxPool2() if st.pool else None))
        self.gap = GlobalAvgPool()
        self.classifier = Dense(spec.stages[-1].f, spec.classes, rng, dtype=dtype)

    def forward(self, x, training: bool = False):
        """(B, C, H, W) -> logits (B, classes)."""
        h = self.stem.forward(x, training)
        for blocks, pool in self._stages:
            for _, block in blocks:
                h = block.forward(h, training)
            if pool is not None:
                h = pool.forward(h, training)
        return self.classifier.forward(self.gap.forward(h, training), training)

    def backward(self, grad_logits):
        g = self.gap.backward(self.classifier.backward(grad_logits))
        for blocks, pool in reversed(self._stages):
            if pool is not None:
                g = pool.backward(g)
            for _, block in reversed(blocks):
                g = block.backward(g)
        return self.stem.backward(g)

    def predict_proba(self, x):
        return softmax(self.forward(x, training=False))

    def _layer_pairs(self):
        pairs = [("stem", self.stem)]
        for blocks, _ in self._stages:
            for name, block in blocks:
                pairs.extend((f"{name}.{sub}", layer)
                             for sub, layer in block.named_layers())
        pairs.append(("classifier", self.classifier))
        return pairs

    def params(self) -> dict:
        return _prefixed(self._layer_pairs(), lambda l: l.params())

    def grads(self) -> dict:
        return _prefixed(self._layer_pairs(), lambda l: l.grads())

    def state(self) -> dict:
        return _prefixed(self._layer_pairs(), lambda l: l.state())


def build_network(spec: NetSpec, seed: int, dtype=np.float32,
                  path: str = "separable") -> Network:
    """Deterministic construction: same spec and seed give identical params."""
    return Network(spec, seed, dtype=dtype, path=path)


LAYER_KINDS = ("standard", "depthwise_separable", "stft_separable")


def count_params_layer(layer_kind: str, c: int, n: int, f: int) -> int:
    """Closed-form trainable parameter count of one spatial layer.

    standard             c * n^2 * f
    depthwise_separable  n^2 * c + c * f
    stft_separable       8 * c * f       (independent of n)
    """
    c, n, f = int(c), int(n), int(f)
    if min(c, n, f) < 1:
        raise ParameterError(f"arguments must be positive, got {(c, n, f)}")
    if n % 2 == 0:
        raise ParameterError(f"filter size must be odd, got {n}")
    if layer_kind == "standard":
        return c * n * n * f
    if layer_kind == "depthwise_separable":
        return n * n * c + c * f
    if layer_kind == "stft_separable":
        return CHANNELS_PER_INPUT * c * f
    raise ParameterError(f"unknown layer kind {layer_kind!r}")


def count_params_block(spec: BlockSpec) -> int:
    """Analytic count: reduce + expand + BN scale/shift."""
    return (spec.c * spec.b
            + spec.concat_channels * spec.f
            + 2 * spec.f)


def count_params_network(spec: NetSpec):
    """(total, breakdown) where breakdown rows are (name, kind, count).

    Counts are analytic; construction-based totals must agree exactly,
    which the tests enforce by brute-force enumeration of a built net.
    """
    rows = [("stem", "pointwise", spec.input_shape[0] * spec.stages[0].f)]
    for name, bs in spec.block_specs():
        rows.append((name, bs.kind, count_params_block(bs)))
    f_last = spec.stages[-1].f
    rows.append(("classifier", "dense", f_last * spec.classes + spec.classes))
    total = sum(count for _, _, count in rows)
    return total, rows


_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _parse_bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise SpecError(f"bad boolean for {key}: {value!r}")


def _parse_int(value: str, key: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise SpecError(f"bad integer for {key}: {value!r}") from None


def parse_config(text: str) -> NetSpec:
    """Parse the plain-text network config format into a NetSpec."""
    top = {}
    stages = []
    current = top
    section_no = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise SpecError(f"line {lineno}: malformed section header {raw!r}")
            name = line[1:-1].strip()
            parts = name.split(".")
            if len(parts) != 2 or parts[0] != "stage":
                raise SpecError(f"line {lineno}: unknown section {name!r}")
            section_no += 1
            if _parse_int(parts[1], "stage number") != section_no:
                raise SpecError(
                    f"line {lineno}: stage sections must be numbered 1..N in order"
                )
            current = {}
            stages.append(current)
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if current is top:
            if key not in ("classes", "input", "seed", "branches"):
                raise SpecError(f"line {lineno}: unknown top-level key {key!r}")
        else:
            if key not in ("blocks", "b", "f", "pool"):
                raise SpecError(f"line {lineno}: unknown stage key {key!r}")
        if key in current:
            raise SpecError(f"line {lineno}: duplicate key {key!r}")
        current[key] = value

    if "classes" not in top:
        raise SpecError("config is missing the top-level 'classes' key")
    classes = _parse_int(top["classes"], "classes")
    seed = _parse_int(top.get("seed", "0"), "seed")
    shape_text = top.get("input", "3x32x32")
    dims = shape_text.lower().split("x")
    if len(dims) != 3:
        raise SpecError(f"input must be CxHxW, got {shape_text!r}")
    input_shape = tuple(_parse_int(d, "input") for d in dims)
    branches = tuple(
        _parse_int(part, "branches")
        for part in top.get("branches", "3,5").split(",")
    )

    if not stages:
        raise SpecError("config defines no [stage.N] sections")
    stage_specs = []
    for idx, st in enumerate(stages, 1):
        for key in ("blocks", "b", "f"):
            if key not in st:
                raise SpecError(f"[stage.{idx}] is missing key {key!r}")
        stage_specs.append(StageSpec(
            blocks=_parse_int(st["blocks"], "blocks"),
            b=_parse_int(st["b"], "b"),
            f=_parse_int(st["f"], "f"),
            pool=_parse_bool(st.get("pool", "no"), "pool"),
        ))
    return NetSpec(stages=tuple(stage_specs), classes=classes,
                   input_shape=input_shape, seed=seed, branches=branches)


def load_config(path) -> NetSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
