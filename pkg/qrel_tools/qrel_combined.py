"""
Qrel Combined Module

This module combines all the separate tool modules into a single QrelToolkit
class that provides all functionality in one interface.
"""

from .qrel_base import QrelBase, QrelError
from .qrel_tools_linalg import LinalgCoreMixin
from .qrel_tools_states import StatesMixin
from .qrel_tools_channels import ChannelsMixin
from .qrel_tools_entropy import EntropyMixin
from .qrel_tools_petz import PetzMixin
from .qrel_tools_uhlmann import UhlmannMixin
from .qrel_tools_harness import HarnessMixin


class QrelToolkit(
    QrelBase,
    LinalgCoreMixin,
    StatesMixin,
    ChannelsMixin,
    EntropyMixin,
    PetzMixin,
    UhlmannMixin,
    HarnessMixin
):
    """
    Combined toolkit class that includes all functionality from separate modules.

    This class inherits from QrelBase and all mixin classes to provide a complete
    interface organized by functional area:

    - Linear algebra: spectral decompositions, matrix functions, Loewner order
    - States: density operators, supports, regularization, random states
    - Channels: Kraus channels, partial trace, Stinespring dilation
    - Entropy: support-based and regularized relative entropy, DPI
    - Petz: modular operators, V_rho, corrected chain, recovery map
    - Uhlmann: forms, interpolations, geometric mean, entropy form
    - Harness: randomized campaigns and witness replay
    """

    def __init__(self, config=None):
        """
        Initialize the combined toolkit with all functionality.

        Args:
            config: Configuration object; defaults to Config.from_env()
        """
        super().__init__(config)


__all__ = ['QrelToolkit', 'QrelError']
