"""Monte Carlo model of state-selective fluorescence readout.

Random streams are counter based: trials are grouped in fixed blocks of
``BLOCK_SIZE`` and block ``b`` always draws from the Philox stream keyed by
``(seed, b)``. A trial's record therefore depends only on the model, the seed
and its index, whatever the trial count or the number of worker threads.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .polariton import AtomicSpecies, PhotonStatistics, store_pulse

BLOCK_SIZE = 4096


@dataclass(frozen=True)
class ReadoutSpec:
    scatter_rate: float = 1e7  # single-atom resonant scattering rate, 1/s
    eta_s: float = 0.1  # collection x detection efficiency
    measure_time: float = 1e-3  # s
    leak_prob: float = 0.0  # per scattering event
    n_ground: float = 0.0  # atoms left in |g> under the detection beam
    detector_dark_rate: float = 0.0  # counts/s

    def __post_init__(self):
        for name in ("scatter_rate", "measure_time", "n_ground", "detector_dark_rate", "eta_s", "leak_prob"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if self.scatter_rate < 0 or self.n_ground < 0 or self.detector_dark_rate < 0:
            raise ValueError("rates and atom numbers must be >= 0")
        if self.measure_time <= 0:
            raise ValueError("measure_time must be > 0")
        if not 0.0 <= self.eta_s <= 1.0:
            raise ValueError("eta_s must lie in [0, 1]")
        if not 0.0 <= self.leak_prob < 1.0:
            raise ValueError("leak_prob must lie in [0, 1)")


@dataclass(frozen=True)
class CountRecord:
    true_n: int
    stored_m: int
    detected_counts: int
    background_counts: int


def effective_time(spec: ReadoutSpec, dephasing_time: Optional[float] = None) -> float:
    """Measurement window, capped by the ground-coherence dephasing time."""
    if dephasing_time is None or spec.measure_time <= dephasing_time:
        return spec.measure_time
    warnings.warn(
        f"measure_time {spec.measure_time:.3g} s exceeds dephasing time {dephasing_time:.3g} s; "
        "window capped",
        RuntimeWarning,
        stacklevel=2,
    )
    return dephasing_time


def mean_scatter_events(spec: ReadoutSpec, dephasing_time: Optional[float] = None) -> float:
    """E[min(Geometric(p), Poisson(R_s T))] = (1 - exp(-p R_s T)) / p."""
    lam = spec.scatter_rate * effective_time(spec, dephasing_time)
    p = spec.leak_prob
    if p == 0.0:
        return lam
    return -math.expm1(-p * lam) / p


def mean_signal_per_excitation(spec: ReadoutSpec, dephasing_time: Optional[float] = None) -> float:
    """Expected detected photons per stored excitation."""
    return spec.eta_s * mean_scatter_events(spec, dephasing_time)


def off_resonant_ratio(species: AtomicSpecies) -> float:
    """Scattering rate of a ground-state atom relative to a resonant one.

    Lorentzian response at a detuning equal to the ground hyperfine splitting.
    """
    if species.hyperfine_splitting < 10 * species.gamma_e:
        warnings.warn(
            "hyperfine splitting < 10 Gamma_e: Lorentzian-wing estimate is unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    x = (species.gamma_e / (2.0 * species.hyperfine_splitting)) ** 2
    return x / (1.0 + x)


def max_ground_atoms(species: AtomicSpecies) -> float:
    """Ground-state atom number whose background equals one excitation's signal."""
    return 1.0 / off_resonant_ratio(species)


def background_mean(
    spec: ReadoutSpec, ratio: float = 0.0, dephasing_time: Optional[float] = None
) -> float:
    """Mean background counts in the window: off-resonant ground atoms plus detector dark counts."""
    rate = spec.n_ground * ratio * spec.scatter_rate * spec.eta_s + spec.detector_dark_rate
    return rate * effective_time(spec, dephasing_time)


def scatter_counts(rng: np.random.Generator, n_excitations: int, spec: ReadoutSpec, window: float) -> np.ndarray:
    """Scattering events per excitation in ``window`` seconds.

    An atom cycles at rate R_s and leaves the cycling transition on each event
    with probability ``leak_prob``; the leaking event is itself counted.
    """
    allowed = rng.poisson(spec.scatter_rate * window, n_excitations)
    if spec.leak_prob == 0.0:
        return allowed
    until_leak = rng.geometric(spec.leak_prob, n_excitations)
    return np.minimum(allowed, until_leak)


@dataclass(frozen=True)
class ReadoutModel:
    """Everything a trial needs: input statistics, storage and readout."""

    statistics: PhotonStatistics
    spec: ReadoutSpec
    eta_store: float = 1.0
    off_resonant_ratio: float = 0.0
    dephasing_time: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.eta_store <= 1.0:
            raise ValueError("eta_store must lie in [0, 1]")
        if self.statistics.kind == "fock" and len(self.statistics.fock_states) != 1:
            raise ValueError("a readout model takes a single fock state")

    @property
    def window(self) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return effective_time(self.spec, self.dephasing_time)

    @property
    def mu1(self) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return mean_signal_per_excitation(self.spec, self.dephasing_time)

    @property
    def bg(self) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return background_mean(self.spec, self.off_resonant_ratio, self.dephasing_time)


def block_stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def simulate_block(model: ReadoutModel, seed: int, block: int) -> np.ndarray:
    """Records for trials ``block*BLOCK_SIZE .. (block+1)*BLOCK_SIZE - 1`` as an (4, B) array."""
    rng = block_stream(seed, block)
    n, m = store_pulse(model.statistics, model.eta_store, rng, size=BLOCK_SIZE)
    spec = model.spec
    window = model.window
    if spec.leak_prob == 0.0:
        signal = rng.poisson(m * (spec.eta_s * spec.scatter_rate * window))
    else:
        total = int(m.sum())
        scattered = scatter_counts(rng, total, spec, window)
        detected = rng.binomial(scattered, spec.eta_s)
        owner = np.repeat(np.arange(BLOCK_SIZE), m)
        signal = np.bincount(owner, weights=detected, minlength=BLOCK_SIZE).astype(np.int64)
    background = rng.poisson(model.bg, BLOCK_SIZE)
    return np.stack([n, m, signal + background, background]).astype(np.int64)


class CountRecords:
    """Column-oriented batch of :class:`CountRecord` in trial-index order."""

    def __init__(self, true_n, stored_m, detected_counts, background_counts):
        self.true_n = np.asarray(true_n, dtype=np.int64)
        self.stored_m = np.asarray(stored_m, dtype=np.int64)
        self.detected_counts = np.asarray(detected_counts, dtype=np.int64)
        self.background_counts = np.asarray(background_counts, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.true_n)

    def __getitem__(self, i: int) -> CountRecord:
        return CountRecord(
            int(self.true_n[i]), int(self.stored_m[i]), int(self.detected_counts[i]), int(self.background_counts[i])
        )

    def __iter__(self) -> Iterator[CountRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def signal_counts(self) -> np.ndarray:
        return self.detected_counts - self.background_counts

    def to_csv(self, path) -> None:
        table = np.column_stack([np.arange(len(self)), self.true_n, self.stored_m, self.detected_counts, self.background_counts])
        np.savetxt(
            path,
            table,
            fmt="%d",
            delimiter=",",
            header="trial,true_n,stored_m,detected_counts,background_counts",
            comments="",
        )

    @classmethod
    def concat(cls, parts) -> "CountRecords":
        parts = list(parts)
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("true_n", "stored_m", "detected_counts", "background_counts")))


def run_trials(n_trials: int, model: ReadoutModel, seed: int, workers: int = 1) -> CountRecords:
    """Simulate ``n_trials`` independent readouts."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    n_blocks = -(-n_trials // BLOCK_SIZE)
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda b: simulate_block(model, seed, b), range(n_blocks)))
    else:
        blocks = [simulate_block(model, seed, b) for b in range(n_blocks)]
    data = np.concatenate(blocks, axis=1)[:, :n_trials]
    return CountRecords(*data)


def simulate_trial(model: ReadoutModel, seed: int, trial_index: int) -> CountRecord:
    """The record of a single trial; identical to ``run_trials(...)[trial_index]``."""
    block, offset = divmod(trial_index, BLOCK_SIZE)
    return CountRecords(*simulate_block(model, seed, block))[offset]
