"""Simulation toolkit for heralded noiseless amplification of coherent light.

Truncated Fock-space states and operators, the ideal amplifier operators and
their closed forms, heralded addition/subtraction pipelines with realistic
detectors, homodyne tomography with maximum-likelihood reconstruction, and
Wigner functions.
"""

__version__ = "0.1.0"

from .fock import (
    CutoffError,
    DensityOperator,
    FockVector,
    ModeOperator,
    TwoModeOperator,
    TwoModeState,
    ZeroProbabilityError,
    beam_splitter,
    coherent_state,
    displacement_operator,
    fidelity,
    fock_state,
    ladder_operators,
    number_operator,
    partial_trace,
    project_mode,
    purity,
    quadrature_covariance,
    tensor,
    two_mode_squeezer,
    vacuum,
)
from .amplifier import (
    AmplifierSpec,
    amplified_state,
    amplifier_operator,
    coherent_fidelity,
    deterministic_bound,
    displaced_photon_distribution,
    gain,
    multiplexed_operator,
    mutual_fidelity,
    normalization,
    quadrature_variances,
)
from .herald import (
    Detector,
    ExperimentConfig,
    HeraldOutcome,
    add_photons,
    click_povm,
    run_pipeline,
    subtract_photons,
    success_probability_scan,
)
from .tomography import (
    QuadratureDataset,
    ReconstructionResult,
    apply_loss,
    maxlik_reconstruct,
    quadrature_pdf,
    report_metrics,
    sample_quadratures,
)
from .wigner import WignerGrid, squeezing_ellipse, wigner

__all__ = [name for name in dir() if not name.startswith("_")]
