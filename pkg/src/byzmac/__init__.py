"""Byzantine multiple-access classical-quantum channels."""

from .adversarial import (
    OrthoVerdict,
    check_orthogonally_symmetrizable,
    check_symmetrizable,
)
from .capacity import (
    OptimizerConfig,
    RateRegion,
    corollary_region,
    maxmin_rate,
    region_2user,
    region_3user,
    region_kuser,
)
from .channel import (
    AvcView,
    CqMacChannel,
    InputDistribution,
    avc_view,
    example_channel,
    example_povms,
    freeze_slots,
    product_extend,
)
from .entropic import conditional_holevo, holevo, mutual_info, relative_entropy, von_neumann_entropy
from .errors import ByzmacError
from .simulator import (
    RandomCode,
    Setup,
    error_probability,
    exact_errors,
    paper_example_demo,
    run_episode,
    simulate,
    worst_case_adversary,
)
from .states import DensityOperator, Povm, QuantumChannel, induced_channel, lueders_branch

__all__ = [
    "AvcView", "ByzmacError", "CqMacChannel", "DensityOperator", "InputDistribution",
    "OptimizerConfig", "OrthoVerdict", "Povm", "QuantumChannel", "RandomCode", "RateRegion",
    "Setup", "avc_view", "check_orthogonally_symmetrizable", "check_symmetrizable",
    "conditional_holevo", "corollary_region", "error_probability", "exact_errors",
    "example_channel", "example_povms", "freeze_slots", "holevo", "induced_channel",
    "lueders_branch", "maxmin_rate", "mutual_info", "paper_example_demo", "product_extend",
    "region_2user", "region_3user", "region_kuser", "relative_entropy", "run_episode",
    "simulate", "von_neumann_entropy", "worst_case_adversary",
]
