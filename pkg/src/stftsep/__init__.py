"""Separable convolution networks built on a fixed local-Fourier filter bank.

The spatial stage of every block is a non-trainable channelwise 2D
filter bank evaluating four low-frequency local Fourier coefficients;
all learning happens in the surrounding pointwise (1x1) convolutions.
The package provides the bank itself (direct, separable, and oracle
evaluations with exact adjoints), from-scratch trainable layers, block
and network assembly, CIFAR-format data handling, a training harness,
and a scikit-learn style estimator facade. The ``stftsep`` command
exposes train/eval/verify/bench/count-params.
"""

from .errors import (
    DegenerateDataError,
    FormatError,
    ParameterError,
    ShapeError,
    SpecError,
)
from .estimators import DepthwiseSTFT, STFTSepNetClassifier
from .netgraph import (
    BlockSpec,
    NetSpec,
    StageSpec,
    build_network,
    count_params_layer,
    count_params_network,
    load_config,
    parse_config,
)
from .stft import (
    StftBasis,
    build_basis,
    flops_direct,
    flops_separable,
    oracle_stft,
    stft_backward,
    stft_forward,
    stft_forward_direct,
    stft_forward_separable,
)

__version__ = "0.1.0"

__all__ = [
    "BlockSpec",
    "DegenerateDataError",
    "DepthwiseSTFT",
    "FormatError",
    "NetSpec",
    "ParameterError",
    "STFTSepNetClassifier",
    "ShapeError",
    "SpecError",
    "StageSpec",
    "StftBasis",
    "build_basis",
    "build_network",
    "count_params_layer",
    "count_params_network",
    "flops_direct",
    "flops_separable",
    "load_config",
    "oracle_stft",
    "parse_config",
    "stft_backward",
    "stft_forward",
    "stft_forward_direct",
    "stft_forward_separable",
    "__version__",
]
