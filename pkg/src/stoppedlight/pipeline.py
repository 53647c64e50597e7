"""End-to-end scenarios: storage, readout and estimation composed."""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import estimator as est
from .polariton import (
    AtomicSpecies,
    CouplingRamp,
    EnsembleConfig,
    PhotonStatistics,
    ProbePulse,
    StorageReport,
    analyze_storage,
)
from .readout import (
    CountRecords,
    ReadoutModel,
    ReadoutSpec,
    background_mean,
    max_ground_atoms,
    mean_signal_per_excitation,
    off_resonant_ratio,
    run_trials,
)

TWO_PI = 2.0 * math.pi


def derive_seed(seed: int, index: int) -> int:
    """Independent, reproducible child seed for sub-run ``index``."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class EstimatorSettings:
    n_top: Optional[int] = None
    epsilon: float = 0.01


def rb_like_species() -> AtomicSpecies:
    """Rb-87 D2-like constants."""
    return AtomicSpecies(
        gamma_e=TWO_PI * 6.0e6,
        wavelength=780e-9,
        hyperfine_splitting=TWO_PI * 6.8e9,
        gamma_mg=100.0,
    )


def reference_geometry(n_atoms: float = 1e5) -> EnsembleConfig:
    """Cigar-shaped cold cloud: 100 um beam (50 um radius) over 1 mm."""
    return EnsembleConfig(n_atoms=n_atoms, area=math.pi * (50e-6) ** 2, length=1e-3, g_single=TWO_PI * 1.63e6)


@dataclass(frozen=True)
class Scenario:
    species: AtomicSpecies = field(default_factory=rb_like_species)
    ensemble: EnsembleConfig = field(default_factory=reference_geometry)
    ramp: CouplingRamp = field(default_factory=lambda: CouplingRamp(omega_c_max=TWO_PI * 5e6, switch_time=1e-6))
    pulse: ProbePulse = field(
        default_factory=lambda: ProbePulse(duration=1e-6, photon_statistics=PhotonStatistics("fock", 0, 5))
    )
    readout: ReadoutSpec = field(default_factory=lambda: ReadoutSpec(scatter_rate=1e7, eta_s=0.1, measure_time=1e-3, n_ground=1e5))
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    trials: int = 100_000
    seed: int = 0
    eta_store: Optional[float] = None  # None: use the storage model
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed is None or self.seed < 0:
            raise ValueError("seed is mandatory and must be >= 0")
        if self.eta_store is not None and not 0.0 <= self.eta_store <= 1.0:
            raise ValueError("eta_store must lie in [0, 1]")


def nominal_scenario(**overrides) -> Scenario:
    """Abstract-claim scenario: 10% detection, 100 ns scattering, 1 ms window, ideal storage."""
    return dataclasses.replace(Scenario(eta_store=1.0), **overrides)


@dataclass
class ScenarioResult:
    storage: StorageReport
    eta_store: float
    mu1: float
    bg: float
    off_resonant_ratio: float
    n_max_atoms: float
    n_max: int
    n_max_heuristic: float
    channel: est.PoissonChannel
    readout_matrix: est.ConfusionMatrix  # P(n_hat | m stored)
    exact_matrix: est.ConfusionMatrix  # P(n_hat | n incident)
    empirical_matrix: np.ndarray
    empirical_stderr: np.ndarray
    row_trials: np.ndarray
    efficiency_exact: float
    efficiency_empirical: float
    efficiency_stderr: float
    warnings: list[str] = field(default_factory=list)
    records: list[CountRecords] = field(default_factory=list, repr=False)

    def summary(self) -> dict[str, Any]:
        s = self.storage
        return {
            "optical_depth": s.optical_depth,
            "transparency_bandwidth_rad_s": s.transparency_bandwidth,
            "eta_store": self.eta_store,
            "mu1": self.mu1,
            "bg": self.bg,
            "n_max": self.n_max,
            "n_max_heuristic": self.n_max_heuristic,
            "N_max": self.n_max_atoms,
            "efficiency_exact": self.efficiency_exact,
            "efficiency_empirical": self.efficiency_empirical,
            "efficiency_stderr": self.efficiency_stderr,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "storage": dataclasses.asdict(self.storage),
            "derived": self.summary(),
            "channel": {"mu1": self.channel.mu1, "bg": self.channel.bg, "n_top": self.channel.top},
            "thresholds": est.decision_thresholds(self.channel).tolist(),
            "readout_confusion": self.readout_matrix.entries.tolist(),
            "exact_confusion": self.exact_matrix.entries.tolist(),
            "empirical_confusion": np.nan_to_num(self.empirical_matrix, nan=-1.0).tolist(),
            "empirical_stderr": np.nan_to_num(self.empirical_stderr, nan=-1.0).tolist(),
            "row_trials": self.row_trials.tolist(),
            "warnings": list(self.warnings),
        }


def readout_channel(s: Scenario) -> tuple[float, float, float]:
    """(mu1, bg, off-resonant ratio) for the scenario's readout."""
    ratio = off_resonant_ratio(s.species)
    tau = s.species.dephasing_time
    return (
        mean_signal_per_excitation(s.readout, tau),
        background_mean(s.readout, ratio, tau),
        ratio,
    )


def _support_top(s: Scenario, mu1: float, bg: float) -> int:
    if s.estimator.n_top is not None:
        return s.estimator.n_top
    return max(est.PoissonChannel(mu1, bg).top, s.pulse.photon_statistics.upper_support())


def _simulate(s: Scenario, model_kwargs: dict, channel: est.PoissonChannel):
    stats = s.pulse.photon_statistics
    top = channel.top
    counts = np.zeros((top + 1, top + 1), dtype=np.int64)
    records = []
    if stats.kind == "fock":
        groups = [PhotonStatistics("fock", n) for n in stats.fock_states]
    else:
        groups = [stats]
    for i, g in enumerate(groups):
        model = ReadoutModel(statistics=g, **model_kwargs)
        rec = run_trials(s.trials, model, derive_seed(s.seed, i), workers=s.workers)
        records.append(rec)
        n_hat = est.classify(rec.detected_counts, channel)
        inside = rec.true_n <= top
        np.add.at(counts, (rec.true_n[inside], n_hat[inside]), 1)
    row_trials = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / row_trials[:, None]
        stderr = np.sqrt(p * (1 - p) / row_trials[:, None])

    if stats.kind == "fock":
        diag = np.array([p[n, n] for n in stats.fock_states])
        eff = float(diag.mean())
        eff_err = float(np.sqrt(np.sum(diag * (1 - diag) / s.trials)) / len(diag))
    else:
        rec = records[0]
        correct = rec.true_n == est.classify(rec.detected_counts, channel)
        eff = float(correct.mean())
        eff_err = float(math.sqrt(eff * (1 - eff) / len(rec)))
    return p, stderr, row_trials, eff, eff_err, records


def run_scenario(s: Scenario, keep_records: bool = False) -> ScenarioResult:
    """Evaluate one scenario: closed forms, exact matrices and Monte Carlo."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        storage = analyze_storage(s.species, s.ensemble, s.ramp, s.pulse)
        eta = storage.eta_storage if s.eta_store is None else s.eta_store
        mu1, bg, ratio = readout_channel(s)

    messages = []
    for w in caught:
        msg = str(w.message)
        if msg not in messages:
            messages.append(msg)

    channel = est.PoissonChannel(mu1, bg, _support_top(s, mu1, bg))
    readout_cm = est.confusion_matrix(channel)
    exact_cm = est.end_to_end(readout_cm, eta)
    dist = s.pulse.photon_statistics.pmf(channel.top)
    efficiency_exact = float(min(1.0, dist @ exact_cm.diagonal))
    n_max = est.max_countable_n(est.PoissonChannel(mu1, bg), s.estimator.epsilon)

    model_kwargs = dict(
        spec=s.readout,
        eta_store=eta,
        off_resonant_ratio=ratio,
        dephasing_time=s.species.dephasing_time,
    )
    p, stderr, row_trials, eff, eff_err, records = _simulate(s, model_kwargs, channel)

    return ScenarioResult(
        storage=storage,
        eta_store=eta,
        mu1=mu1,
        bg=bg,
        off_resonant_ratio=ratio,
        n_max_atoms=max_ground_atoms(s.species),
        n_max=n_max,
        n_max_heuristic=mu1,
        channel=channel,
        readout_matrix=readout_cm,
        exact_matrix=exact_cm,
        empirical_matrix=p,
        empirical_stderr=stderr,
        row_trials=row_trials,
        efficiency_exact=efficiency_exact,
        efficiency_empirical=eff,
        efficiency_stderr=eff_err,
        warnings=messages,
        records=records if keep_records else [],
    )


def numeric_paths(obj=None, prefix: str = "") -> list[str]:
    """Dotted paths of every numeric leaf of a scenario."""
    obj = Scenario() if obj is None else obj
    paths = []
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        path = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(value):
            paths.extend(numeric_paths(value, path + "."))
        elif f.name in ("seed", "workers"):
            continue
        elif any(t in str(f.type) for t in ("float", "int")):
            paths.append(path)
    return paths


def set_path(obj, path: str, value):
    head, _, rest = path.partition(".")
    if rest:
        return dataclasses.replace(obj, **{head: set_path(getattr(obj, head), rest, value)})
    ftype = str(next(f.type for f in dataclasses.fields(obj) if f.name == head))
    if "int" in ftype and "float" not in ftype and value is not None and float(value).is_integer():
        value = int(value)
    return dataclasses.replace(obj, **{head: value})


def sweep(s: Scenario, path: str, values) -> list[tuple[float, dict[str, Any]]]:
    """Re-run the scenario with one numeric leaf set to each value in turn."""
    valid = numeric_paths(s)
    if path not in valid:
        raise ValueError(f"unknown parameter path {path!r}; valid paths: {', '.join(valid)}")
    out = []
    for i, v in enumerate(values):
        point = dataclasses.replace(set_path(s, path, v), seed=derive_seed(s.seed, i))
        out.append((v, run_scenario(point).summary()))
    return out
