"""Ginzburg-Landau two-fluid model of superfluid helium near the lambda transition."""

from .core import (ComplexState, FieldState, Grid, ModelParams, StateError, new_state,
                   read_snapshot, validate_params, write_snapshot)
from .dynamics import StepConfig, StepError, integrate, step
from .gridops import PoissonError, poisson_neumann
from .gauge import GaugeField, complex_step, gauge_backward, gauge_forward
from .phase_diagram import equilibrium_phase, relax_to_equilibrium, sweep

__all__ = [
    "ComplexState", "FieldState", "GaugeField", "Grid", "ModelParams", "PoissonError",
    "StateError", "StepConfig", "StepError", "complex_step", "equilibrium_phase",
    "gauge_backward", "gauge_forward", "integrate", "new_state", "poisson_neumann",
    "read_snapshot", "relax_to_equilibrium", "step", "sweep", "validate_params",
    "write_snapshot",
]
