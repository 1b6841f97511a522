"""Tunnelling of a two-particle composite with spin through a rectangular barrier
in a localised magnetic field, solved with variable reflection amplitudes."""

from .model import (DOWN, UP, ChannelSet, Convention, Domain, InvalidEnergyError,
                    ModelParams, channel_energies, integration_domain, open_channels)
from .matelem import (CouplingMatrix, assemble_coupling, barrier_matrix_element,
                      field_matrix_element, well_overlap_integral)
from .odeint import (IntegrationError, IntegrationReport, IntegratorConfig,
                     StepSizeUnderflow, TooManyEvaluations, integrate)
from .vra import AmplitudeMatrices, ScatteringRecord, amplitude_rhs, solve_amplitudes
from .oracle import (Segmentation, analytic_single_barrier, larmor_flip_analytic,
                     transfer_matrix_solve)
from .sweep import (SweepPlan, SweepResult, convergence_check, peak_analysis,
                    run_sweep, spacing_ratio)

__version__ = "0.1.0"

__all__ = [
    "UP", "DOWN", "ChannelSet", "Convention", "Domain", "InvalidEnergyError",
    "ModelParams", "channel_energies", "integration_domain", "open_channels",
    "CouplingMatrix", "assemble_coupling", "barrier_matrix_element",
    "field_matrix_element", "well_overlap_integral",
    "IntegrationError", "IntegrationReport", "IntegratorConfig", "StepSizeUnderflow",
    "TooManyEvaluations", "integrate",
    "AmplitudeMatrices", "ScatteringRecord", "amplitude_rhs", "solve_amplitudes",
    "Segmentation", "analytic_single_barrier", "larmor_flip_analytic",
    "transfer_matrix_solve",
    "SweepPlan", "SweepResult", "convergence_check", "peak_analysis", "run_sweep",
    "spacing_ratio",
]
