"""Monotone constrained neural networks in numpy, with numba-accelerated activations."""
from ._kernels import HAVE_NUMBA, active_backend
from .activations import ActivationKind, ActivationSelector, combined, combined_derivative, heavyside_approximant
from .data import (DataError, DatasetDescriptor, TabularDataset, builtin_descriptor, generate_synthetic, load_csv,
                   normalize, split_80_20, synthetic_target)
from .layer import MonotoneDenseLayer, apply_indicator, init_layer, layer_backward, layer_forward
from .network import (FeatureUnitSpec, HiddenSpec, ModelFormatError, Network, NetworkSpec, build_network,
                      load_model, network_backward, network_forward, rescale_equivalent, save_model)
from .training import (SearchSpace, TrainConfig, TrainingDivergedError, TrainReport, grid_search, repeated_runs,
                       train)
from .verification import (check_convexity, check_gradient_sign, check_pairwise_monotonicity,
                           universal_fit_battery)

__version__ = "0.1.0"
