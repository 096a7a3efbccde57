from .basis import CONDENSATE, ModeBasis, ModeIndex, TrapSpec, enumerate_modes, mode_count, mode_energy
from .coupling import AlphaTensor, TensorKey, build_alpha_tensor
from .decay import (
    BarValidity,
    DecayMachinery,
    DecayOutcome,
    averaged_outcome,
    bar_validity,
    condensate_update,
    p_plus_s,
    p_zero_s,
)
from .dynamics import (
    BiorthoDecomp,
    EffectiveGenerator,
    a1_time_kernel,
    biortho_decompose,
    build_generator,
    infinite_time_overlap,
    propagate_A0,
)
from .engine import build_machinery, build_tensor, scan_cell
from .franck_condon import FranckCondonTable, fc_1d, fc_3d
from .loading import LoadingTrajectory, run_loading
from .oracle import FockBasis, integrate_cascade, quantum_jump_estimate
from .quadrature import SphereQuadrature, build_sphere_quadrature, pv_integrate
from .thermal import OccupationState, fraction_to_temperature, sample_initial

__all__ = [
    "CONDENSATE",
    "AlphaTensor",
    "BarValidity",
    "BiorthoDecomp",
    "DecayMachinery",
    "DecayOutcome",
    "EffectiveGenerator",
    "FockBasis",
    "FranckCondonTable",
    "LoadingTrajectory",
    "ModeBasis",
    "ModeIndex",
    "OccupationState",
    "SphereQuadrature",
    "TensorKey",
    "TrapSpec",
    "a1_time_kernel",
    "averaged_outcome",
    "bar_validity",
    "biortho_decompose",
    "build_alpha_tensor",
    "build_generator",
    "build_machinery",
    "build_sphere_quadrature",
    "build_tensor",
    "condensate_update",
    "enumerate_modes",
    "fc_1d",
    "fc_3d",
    "fraction_to_temperature",
    "infinite_time_overlap",
    "integrate_cascade",
    "mode_count",
    "mode_energy",
    "p_plus_s",
    "p_zero_s",
    "propagate_A0",
    "pv_integrate",
    "quantum_jump_estimate",
    "run_loading",
    "sample_initial",
    "scan_cell",
]
