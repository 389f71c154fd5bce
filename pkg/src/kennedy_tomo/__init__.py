"""Displacement photon counter for single-rail qubits: theory, click simulation and ML detector tomography."""

__version__ = "0.1.0"

from .detector import (
    DetectorModel,
    FrequencyTable,
    ProbeEnsemble,
    click_probability,
    default_probe_ensemble,
    detector_povm,
    loss_rescale,
    simulate_frequency_table,
)
from .fock import coherent_vector, displacement_matrix, hermitian_eig, plus_minus_states, psd_pinv, psd_sqrt
from .metrics import discrimination_error, povm_fidelity, theory_curves
from .povm import PovmSet
from .receivers import (
    GaussianParams,
    closest_to_vacuum_beta,
    gaussian_decision_rule,
    gaussian_error,
    gaussian_povm_element,
    kennedy_error,
    kennedy_povm,
    min_gaussian_error,
    optimal_kennedy_beta,
)
from .tomography import MlConfig, MlReport, log_likelihood, ml_reconstruct, truncate_povm
