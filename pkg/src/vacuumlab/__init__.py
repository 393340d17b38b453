"""Interaction-free discrimination of quantum channels with a vacuum state."""

from .channels import (
    ChannelWithVacuum,
    Decision,
    QuantumChannel,
    TransmissionFunctional,
    bomb_channel,
    build_t_down,
    decide_discriminability,
    identity_channel,
    interaction_functional,
    interaction_lower_constant,
    maximal_vacuum_subspace,
)
from .kwiat import KwiatConfig, KwiatReport, simulate_kwiat
from .linops import Subspace
from .nogo import NoGoAudit, OrthogonalDecomposition, c_vw_constant, helstrom_error
from .reduction import Superchannel, TwirlGroupSpec, apply_superchannel, build_reduction, twirl_channel
from .strategies import DiscriminationStrategy, TwoValuedPOVM

__version__ = "0.1.0"
