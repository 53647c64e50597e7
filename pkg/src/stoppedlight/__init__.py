"""Simulator for a photon counter built from EIT light storage and fluorescence readout."""

from .estimator import (
    ConfusionMatrix,
    PoissonChannel,
    classify,
    confusion_matrix,
    counting_efficiency,
    decision_thresholds,
    max_countable_n,
    required_measurement_time,
)
from .pipeline import Scenario, ScenarioResult, nominal_scenario, run_scenario, sweep
from .polariton import (
    AtomicSpecies,
    CouplingRamp,
    EnsembleConfig,
    PhotonStatistics,
    ProbePulse,
    StorageReport,
    analyze_storage,
)
from .readout import CountRecord, ReadoutModel, ReadoutSpec, run_trials, simulate_trial

__version__ = "0.1.0"
