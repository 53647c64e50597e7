"""YAML scenario files with explicit unit suffixes.

Every key names its unit. Frequencies are written in Hz (cyclic) and become
angular (rad/s) on load; plain rates (``_per_s``) are taken as given.
"""

from __future__ import annotations

import math
from typing import Any, Optional

import yaml

from .pipeline import EstimatorSettings, Scenario, nominal_scenario
from .polariton import AtomicSpecies, CouplingRamp, EnsembleConfig, PhotonStatistics, ProbePulse
from .readout import ReadoutSpec

SCHEMA_VERSION = 1
TWO_PI = 2.0 * math.pi

# section -> key -> (scale to internal units, kind)
SCHEMA: dict[str, dict[str, tuple[float, str]]] = {
    "species": {
        "gamma_e_hz": (TWO_PI, "float"),
        "wavelength_m": (1.0, "float"),
        "hyperfine_splitting_hz": (TWO_PI, "float"),
        "gamma_mg_per_s": (1.0, "float"),
        "sigma_abs_m2": (1.0, "float?"),
    },
    "ensemble": {
        "n_atoms": (1.0, "float"),
        "area_m2": (1.0, "float"),
        "length_m": (1.0, "float"),
        "g_single_hz": (TWO_PI, "float"),
    },
    "ramp": {
        "omega_c_max_hz": (TWO_PI, "float"),
        "switch_time_s": (1.0, "float"),
        "shape": (1.0, "str"),
    },
    "pulse": {
        "duration_s": (1.0, "float"),
        "bandwidth_hz": (TWO_PI, "float?"),
        "statistics": (1.0, "str"),
        "n": (1.0, "float"),
        "n_hi": (1.0, "int?"),
    },
    "readout": {
        "scatter_rate_per_s": (1.0, "float"),
        "eta_s": (1.0, "float"),
        "measure_time_s": (1.0, "float"),
        "leak_prob": (1.0, "float"),
        "n_ground": (1.0, "float"),
        "detector_dark_rate_per_s": (1.0, "float"),
    },
    "estimator": {
        "n_top": (1.0, "int?"),
        "epsilon": (1.0, "float"),
    },
    "run": {
        "trials": (1.0, "int"),
        "seed": (1.0, "int"),
        "eta_store": (1.0, "float?"),
        "workers": (1.0, "int"),
    },
}


class ConfigError(ValueError):
    pass


def _scaled(x: Optional[float], scale: float) -> Optional[float]:
    return None if x is None else x * scale


def scenario_to_config(s: Scenario) -> dict[str, dict[str, Any]]:
    """File-unit representation of a scenario."""
    sp, en, ra, pu, ro = s.species, s.ensemble, s.ramp, s.pulse, s.readout
    st = pu.photon_statistics
    return {
        "species": {
            "gamma_e_hz": sp.gamma_e / TWO_PI,
            "wavelength_m": sp.wavelength,
            "hyperfine_splitting_hz": sp.hyperfine_splitting / TWO_PI,
            "gamma_mg_per_s": sp.gamma_mg,
            "sigma_abs_m2": sp.sigma_abs,
        },
        "ensemble": {
            "n_atoms": en.n_atoms,
            "area_m2": en.area,
            "length_m": en.length,
            "g_single_hz": en.g_single / TWO_PI,
        },
        "ramp": {"omega_c_max_hz": ra.omega_c_max / TWO_PI, "switch_time_s": ra.switch_time, "shape": ra.shape},
        "pulse": {
            "duration_s": pu.duration,
            "bandwidth_hz": _scaled(pu.bandwidth, 1 / TWO_PI),
            "statistics": st.kind,
            "n": st.n,
            "n_hi": st.n_hi,
        },
        "readout": {
            "scatter_rate_per_s": ro.scatter_rate,
            "eta_s": ro.eta_s,
            "measure_time_s": ro.measure_time,
            "leak_prob": ro.leak_prob,
            "n_ground": ro.n_ground,
            "detector_dark_rate_per_s": ro.detector_dark_rate,
        },
        "estimator": {"n_top": s.estimator.n_top, "epsilon": s.estimator.epsilon},
        "run": {"trials": s.trials, "seed": s.seed, "eta_store": s.eta_store, "workers": s.workers},
    }


def config_to_scenario(cfg: dict[str, dict[str, Any]]) -> Scenario:
    def get(section, key):
        scale, _ = SCHEMA[section][key]
        v = cfg[section][key]
        return v * scale if isinstance(v, float) and scale != 1.0 else v

    try:
        return Scenario(
            species=AtomicSpecies(
                gamma_e=get("species", "gamma_e_hz"),
                wavelength=get("species", "wavelength_m"),
                hyperfine_splitting=get("species", "hyperfine_splitting_hz"),
                gamma_mg=get("species", "gamma_mg_per_s"),
                sigma_abs=get("species", "sigma_abs_m2"),
            ),
            ensemble=EnsembleConfig(
                n_atoms=get("ensemble", "n_atoms"),
                area=get("ensemble", "area_m2"),
                length=get("ensemble", "length_m"),
                g_single=get("ensemble", "g_single_hz"),
            ),
            ramp=CouplingRamp(
                omega_c_max=get("ramp", "omega_c_max_hz"),
                switch_time=get("ramp", "switch_time_s"),
                shape=get("ramp", "shape"),
            ),
            pulse=ProbePulse(
                duration=get("pulse", "duration_s"),
                bandwidth=get("pulse", "bandwidth_hz"),
                photon_statistics=PhotonStatistics(get("pulse", "statistics"), get("pulse", "n"), get("pulse", "n_hi")),
            ),
            readout=ReadoutSpec(
                scatter_rate=get("readout", "scatter_rate_per_s"),
                eta_s=get("readout", "eta_s"),
                measure_time=get("readout", "measure_time_s"),
                leak_prob=get("readout", "leak_prob"),
                n_ground=get("readout", "n_ground"),
                detector_dark_rate=get("readout", "detector_dark_rate_per_s"),
            ),
            estimator=EstimatorSettings(n_top=get("estimator", "n_top"), epsilon=get("estimator", "epsilon")),
            trials=get("run", "trials"),
            seed=get("run", "seed"),
            eta_store=get("run", "eta_store"),
            workers=get("run", "workers"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def _coerce(value, kind: str, where: str):
    optional = kind.endswith("?")
    base = kind.rstrip("?")
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{where}: value required")
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    try:
        # PyYAML reads 1e5 (no dot) as a string
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if base == "int":
        if not number.is_integer():
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(number)
    return number


def _tidy(cfg):
    # strip 2*pi round-off so defaults echo as written, and type them as a parsed file would be
    return {
        sec: {
            k: _coerce(float(f"{v:.15g}") if isinstance(v, float) else v, SCHEMA[sec][k][1], f"{sec}.{k}")
            for k, v in vals.items()
        }
        for sec, vals in cfg.items()
    }


DEFAULTS = _tidy(scenario_to_config(nominal_scenario()))


def parse_config(text: str, source: str = "<config>") -> tuple[dict[str, dict[str, Any]], list[str]]:
    """Validate a config document; returns (materialized config, keys filled from defaults)."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{source}{line}: YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    cfg = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    given: set[tuple[str, str]] = set()
    if root is not None:
        if not isinstance(root, yaml.MappingNode):
            raise ConfigError(f"{source} line {root.start_mark.line + 1}: top level must be a mapping of sections")
        for sec_node, body in root.value:
            sec = sec_node.value
            where = f"{source} line {sec_node.start_mark.line + 1}"
            if sec not in SCHEMA:
                raise ConfigError(f"{where}: unknown section {sec!r}; expected one of {', '.join(SCHEMA)}")
            if not isinstance(body, yaml.MappingNode):
                raise ConfigError(f"{where}: section {sec!r} must be a mapping")
            for key_node, val_node in body.value:
                key = key_node.value
                where = f"{source} line {key_node.start_mark.line + 1}"
                if key not in SCHEMA[sec]:
                    raise ConfigError(
                        f"{where}: unknown key {sec}.{key}; valid keys: {', '.join(SCHEMA[sec])}"
                    )
                value = yaml.safe_load(yaml.serialize(val_node))
                cfg[sec][key] = _coerce(value, SCHEMA[sec][key][1], f"{where}: {sec}.{key}")
                given.add((sec, key))
    defaulted = [f"{sec}.{key}" for sec in SCHEMA for key in SCHEMA[sec] if (sec, key) not in given]
    return cfg, defaulted


def load_config(path: Optional[str]) -> tuple[Scenario, dict[str, dict[str, Any]], list[str]]:
    if path is None:
        text, source = "", "<defaults>"
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        source = path
    cfg, defaulted = parse_config(text, source)
    return config_to_scenario(cfg), cfg, defaulted


def dump_config(cfg: dict[str, dict[str, Any]]) -> str:
    return yaml.safe_dump(cfg, sort_keys=False, default_flow_style=False)
