"""Synchronization analysis for diffusively coupled heterogeneous networks.

The package builds the closed-loop system ``x' = F(x) - sigma (L kron I_n) x``
from a weighted digraph and per-node vector fields, splits it into the
weighted-average ("blended") state ``x_m`` and the disagreement ``e_v``, and
provides simulation, orbit detection, Floquet analysis and coupling-strength
sweeps on top of that split.
"""
from .errors import (
    ConsistencyError,
    DisconnectedGraphError,
    InvalidOrbitError,
    NetsyncError,
    NotPeriodicError,
    NumericalError,
    ValidationError,
)
from .graph import SpectralSplit, WeightedDigraph, build_laplacian, check_connectivity, spectral_split
from .integrate import Section, SolverConfig, Trajectory, find_crossings, integrate, monodromy
from .models import (
    HopfParams,
    ReducedHopfParams,
    VectorField,
    hopf_field,
    linear_field,
    polynomial_field,
    reduced_hopf_params,
)
from .network import BarState, NetworkSystem, from_bar, full_field, to_bar
from .analysis import (
    classify,
    detect_limit_cycle,
    floquet_classify,
    linearize_origin,
    sweep_sigma,
    tikhonov_compare,
    ultimate_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BarState",
    "ConsistencyError",
    "DisconnectedGraphError",
    "HopfParams",
    "InvalidOrbitError",
    "NetsyncError",
    "NetworkSystem",
    "NotPeriodicError",
    "NumericalError",
    "ReducedHopfParams",
    "Section",
    "SolverConfig",
    "SpectralSplit",
    "Trajectory",
    "ValidationError",
    "VectorField",
    "WeightedDigraph",
    "build_laplacian",
    "check_connectivity",
    "classify",
    "detect_limit_cycle",
    "find_crossings",
    "floquet_classify",
    "from_bar",
    "full_field",
    "hopf_field",
    "integrate",
    "linear_field",
    "linearize_origin",
    "monodromy",
    "polynomial_field",
    "reduced_hopf_params",
    "spectral_split",
    "sweep_sigma",
    "tikhonov_compare",
    "to_bar",
    "ultimate_bound",
]
