"""Kinetically constrained two-qubit dissipation: generators, dynamics and correlations."""

from .linalg import ToleranceError
from .models import (
    BipartiteModel,
    DissipativeChannel,
    bloch_state,
    build_liouvillian,
    build_two_qubit_model,
    named_state,
    product_state,
    qubit_operator,
)
from .propagator import propagate, stationary_from_initial, steady_states
from .correlations import concurrence, correlation_report

__version__ = "0.1.0"
