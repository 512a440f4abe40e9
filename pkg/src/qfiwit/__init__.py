"""SLD quantum Fisher information and QFI-based entanglement witnesses."""

__version__ = "0.1.0"

from .errors import (DomainError, InfiniteDivergenceError, IntegratorError, NotHermitianError,
                     QfiwitError, RankChangeError, UnboundedInformationError)
from .qmat import (DensityMatrix, bell_diagonal, bloch_to_density, density_to_bloch, eig_hermitian,
                   is_density, kron, partial_trace)
from .fisher import (Povm, SldResult, classical_fisher, commutation_superop, f_divergence,
                     fisher_from_divergence, optimal_povm, povm_fisher, qfi, sld_operator)
from .channels import (LindbladSpec, ParamChannelFamily, channel_from_descriptor,
                       depolarizing_channel, finite_difference_derivative, iid_extend,
                       lindblad_channel, lindblad_evolve, ptm, rotation_channel, transpose_channel)
from .optimize import (GStarResult, gstar, gstar_unitary, lemma1_equality_check,
                       open_system_gstar, variance)
from .witness import (EntRegion, RegionUnion, StateFamily, WitnessReport, convexity_gap,
                      open_system_witness, r_ent_interval, r_ent_union, rho_minus, rho_plus,
                      separable_sampler_check, table1, witness_value)

__all__ = [
    "__version__",
    "DomainError",
    "InfiniteDivergenceError",
    "IntegratorError",
    "NotHermitianError",
    "QfiwitError",
    "RankChangeError",
    "UnboundedInformationError",
    "DensityMatrix",
    "bell_diagonal",
    "bloch_to_density",
    "density_to_bloch",
    "eig_hermitian",
    "is_density",
    "kron",
    "partial_trace",
    "Povm",
    "SldResult",
    "classical_fisher",
    "commutation_superop",
    "f_divergence",
    "fisher_from_divergence",
    "optimal_povm",
    "povm_fisher",
    "qfi",
    "sld_operator",
    "LindbladSpec",
    "ParamChannelFamily",
    "channel_from_descriptor",
    "depolarizing_channel",
    "finite_difference_derivative",
    "iid_extend",
    "lindblad_channel",
    "lindblad_evolve",
    "ptm",
    "rotation_channel",
    "transpose_channel",
    "GStarResult",
    "gstar",
    "gstar_unitary",
    "lemma1_equality_check",
    "open_system_gstar",
    "variance",
    "EntRegion",
    "RegionUnion",
    "StateFamily",
    "WitnessReport",
    "convexity_gap",
    "open_system_witness",
    "r_ent_interval",
    "r_ent_union",
    "rho_minus",
    "rho_plus",
    "separable_sampler_check",
    "table1",
    "witness_value",
]
