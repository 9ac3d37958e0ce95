"""
Qrel Tools Package

This package provides a numerical toolkit for quantum relative entropy and the
data-processing inequality, organized into separate modules per area.

The main QrelToolkit class combines all functionality from the separate modules:
- Linear algebra: certified spectra, matrix functions, Loewner order
- States and channels: density operators, Kraus channels, partial trace
- Entropy: support-based, regularized, DPI via Stinespring
- Petz: modular operators, corrected monotonicity chain, recovery map
- Uhlmann: sesquilinear forms, interpolations, entropy form
- Harness: seeded randomized campaigns

Usage:
    from qrel_tools import QrelToolkit, BipartiteDims

    toolkit = QrelToolkit(config)
    rho = toolkit.random_density(4, seed=1)
    sigma = toolkit.random_density(4, seed=2)
    certificate = toolkit.corrected_monotonicity(rho, sigma, BipartiteDims(d_a=2, d_b=2))
"""

from .qrel_combined import QrelToolkit
from .qrel_base import (
    BasisError, Certificate, ChannelError, DegenerateFormError, DimensionError, DomainError, EigensolverError,
    ExtendedReal, InfiniteBranchError, InvalidStateError, OrderError, PreconditionError, QrelError, ScheduleError,
    SingularOperatorError, UnknownCheckError, WitnessSchemaError, matrix_from_json, matrix_to_json
)
from .qrel_tools_channels import BipartiteDims, QuantumChannel
from .qrel_tools_states import DensityOperator
from .qrel_tools_harness import CHECKS, RANK_MODES, Campaign, Report, Witness, dump_json, json_safe, rank_pairs

# Also export individual modules for advanced usage
from . import qrel_base
from . import qrel_tools_linalg
from . import qrel_tools_states
from . import qrel_tools_channels
from . import qrel_tools_entropy
from . import qrel_tools_petz
from . import qrel_tools_uhlmann
from . import qrel_tools_harness

__all__ = [
    'QrelToolkit',
    'QrelError',
    'BasisError',
    'ChannelError',
    'DegenerateFormError',
    'DimensionError',
    'DomainError',
    'EigensolverError',
    'InfiniteBranchError',
    'InvalidStateError',
    'OrderError',
    'PreconditionError',
    'ScheduleError',
    'SingularOperatorError',
    'UnknownCheckError',
    'WitnessSchemaError',
    'Certificate',
    'ExtendedReal',
    'BipartiteDims',
    'QuantumChannel',
    'DensityOperator',
    'Campaign',
    'Report',
    'Witness',
    'CHECKS',
    'RANK_MODES',
    'rank_pairs',
    'matrix_from_json',
    'matrix_to_json',
    'dump_json',
    'json_safe',
    'qrel_base',
    'qrel_tools_linalg',
    'qrel_tools_states',
    'qrel_tools_channels',
    'qrel_tools_entropy',
    'qrel_tools_petz',
    'qrel_tools_uhlmann',
    'qrel_tools_harness'
]
