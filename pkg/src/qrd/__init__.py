"""Quantum rate-distortion numerics: states, channels, entropies, distortion
observables, entanglement measures, rate-distortion functions and rate regions.
"""

__version__ = "0.1.0"

from .config import Tolerances, get_tolerances, tolerances  # noqa: E402
from .distortion import DistortionObservable, distortion, fidelity_observable  # noqa: E402
from .entropy import conditional, conditional_mutual_information, mutual_information, von_neumann  # noqa: E402
from .measures import eof_search, eof_two_qubit, eop_search  # noqa: E402
from .qchannel import Isometry, QuantumChannel, clifford_twirl, depolarizing, random_channel  # noqa: E402
from .qstate import DensityMatrix, PureState, partial_trace, purify, tensor, trace_distance  # noqa: E402
from .ratefuncs import (  # noqa: E402
    RateCurve,
    cl_isotropic_closed_form,
    cl_rate_single_letter,
    convex_hull,
    ea_isotropic_closed_form,
    ea_qsi_rate_optimize,
    ea_rate_optimize,
)
from .regions import RateRegion, max_identity_check, qsr_region, tradeoff_region  # noqa: E402
