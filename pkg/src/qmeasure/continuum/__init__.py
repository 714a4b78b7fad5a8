"""A particle on the line: propagators, restricted evolution through
homogeneous events, and the continuum decoherence functional."""

from .esck import EsckResult, check_esck
from .evolution import (
    ContinuumSystem,
    decoherence_continuum,
    evolve_back_to_initial,
    initial_inner,
    restricted_evolution_homogeneous,
    tail_correction,
)
from .propagators import DeltaTag, PropagatorSpec, propagator_value
from .quadrature import ConvergenceLadder, Grid, extrapolate_to_zero
from .reconstruct import Reconstruction, lemma4_reconstruct, reconstruct_step_function
from .states import (
    AnalyticWaveFunction,
    EvolvedWaveFunction,
    LinearCombination,
    SampledWaveFunction,
    WaveFunction,
    ZeroWaveFunction,
    free_gaussian,
    gaussian_packet,
    halfline_packet,
    inner,
    l2_distance,
    mass_inside,
)

__all__ = [
    "AnalyticWaveFunction",
    "ContinuumSystem",
    "ConvergenceLadder",
    "DeltaTag",
    "EsckResult",
    "EvolvedWaveFunction",
    "Grid",
    "LinearCombination",
    "PropagatorSpec",
    "Reconstruction",
    "SampledWaveFunction",
    "WaveFunction",
    "ZeroWaveFunction",
    "check_esck",
    "decoherence_continuum",
    "evolve_back_to_initial",
    "extrapolate_to_zero",
    "free_gaussian",
    "gaussian_packet",
    "halfline_packet",
    "initial_inner",
    "inner",
    "l2_distance",
    "lemma4_reconstruct",
    "mass_inside",
    "propagator_value",
    "reconstruct_step_function",
    "restricted_evolution_homogeneous",
    "tail_correction",
]
