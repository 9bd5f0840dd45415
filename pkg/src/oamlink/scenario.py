"""Scenario configuration: parsing, fail-closed validation, materialization.

A scenario file is JSON with blocks ``geometry``, ``power``, ``model``,
``sweep``, ``seed`` (plus optional ``detect`` and ``approx_error`` blocks for
the corresponding subcommands).  Unknown keys anywhere are rejected.  The
swept quantity lives only in the sweep block: its base field must be omitted
from the geometry/power block.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .geometry import ConcentricArray, LinkGeometry

SPEED_OF_LIGHT = 299792458.0

SWEEP_VARIABLES = ("snr", "distance", "budget")
MODELS = ("CIF", "CIC")


class ConfigError(ValueError):
    """Config file is structurally invalid (bad JSON, unknown/missing keys, wrong types)."""


class ScenarioValidationError(ValueError):
    """Config parsed but its values are inconsistent or out of domain."""


def _require_keys(block: dict, name: str, required: tuple, optional: tuple = ()):
    if not isinstance(block, dict):
        raise ConfigError(f"{name} must be an object")
    unknown = set(block) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    missing = [k for k in required if k not in block]
    if missing:
        raise ConfigError(f"missing keys in {name}: {missing}")


def _positive(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number") from None
    if not out > 0:
        raise ScenarioValidationError(f"{name} must be positive, got {out}")
    return out


@dataclass(frozen=True)
class GeometrySpec:
    tx_radii: tuple[float, ...]
    rx_radii: tuple[float, ...]
    tx_elements: int
    rx_elements: int
    distance_m: float | None
    wavelength_m: float
    beta: complex
    far_field_ratio: float


@dataclass(frozen=True)
class PowerSpec:
    budget_w: float | None
    bandwidth_hz: float
    element_noise_w: float | None
    mode_noise_w: tuple[float, ...] | None  # ordered by ascending mode number


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class DetectSpec:
    symbols: int = 100_000
    constellation: str = "qpsk"


@dataclass(frozen=True)
class ApproxErrorSpec:
    element_counts: tuple[int, ...] = (4, 8, 12, 16, 24, 32)
    modes: tuple[int, ...] = (0, 1, 2, 3)


@dataclass(frozen=True)
class Scenario:
    geometry: GeometrySpec
    power: PowerSpec
    model: str
    sweep: SweepSpec
    seed: int
    detect: DetectSpec
    approx_error: ApproxErrorSpec
    scenario_hash: str


def _parse_geometry(block: dict, swept: str) -> GeometrySpec:
    _require_keys(
        block,
        "geometry",
        required=("tx_radii", "rx_radii", "tx_elements", "rx_elements"),
        optional=("distance_m", "carrier_hz", "wavelength_m", "beta", "far_field_ratio"),
    )
    has_carrier = "carrier_hz" in block
    has_lambda = "wavelength_m" in block
    if has_carrier == has_lambda:
        raise ScenarioValidationError(
            "exactly one of carrier_hz and wavelength_m must be given"
        )
    wavelength = (
        SPEED_OF_LIGHT / _positive(block["carrier_hz"], "carrier_hz")
        if has_carrier
        else _positive(block["wavelength_m"], "wavelength_m")
    )
    if swept == "distance":
        if "distance_m" in block:
            raise ScenarioValidationError(
                "distance_m must be omitted when sweeping distance"
            )
        distance = None
    else:
        if "distance_m" not in block:
            raise ConfigError("missing keys in geometry: ['distance_m']")
        distance = _positive(block["distance_m"], "distance_m")
    beta_raw = block.get("beta", [1.0, 0.0])
    if not (isinstance(beta_raw, (list, tuple)) and len(beta_raw) == 2):
        raise ConfigError("beta must be a [real, imag] pair")
    tx_radii = tuple(float(r) for r in block["tx_radii"])
    rx_radii = tuple(float(r) for r in block["rx_radii"])
    if not tx_radii or not rx_radii:
        raise ScenarioValidationError("radius lists must be non-empty")
    return GeometrySpec(
        tx_radii=tx_radii,
        rx_radii=rx_radii,
        tx_elements=int(block["tx_elements"]),
        rx_elements=int(block["rx_elements"]),
        distance_m=distance,
        wavelength_m=wavelength,
        beta=complex(float(beta_raw[0]), float(beta_raw[1])),
        far_field_ratio=float(block.get("far_field_ratio", 10.0)),
    )


def _parse_power(block: dict, swept: str, mode_count: int) -> PowerSpec:
    _require_keys(
        block,
        "power",
        required=("bandwidth_hz",),
        optional=("budget_w", "element_noise_w", "mode_noise_w"),
    )
    bandwidth = _positive(block["bandwidth_hz"], "bandwidth_hz")
    if swept == "budget":
        if "budget_w" in block:
            raise ScenarioValidationError("budget_w must be omitted when sweeping budget")
        budget = None
    else:
        if "budget_w" not in block:
            raise ConfigError("missing keys in power: ['budget_w']")
        budget = _positive(block["budget_w"], "budget_w")
    has_elem = "element_noise_w" in block
    has_mode = "mode_noise_w" in block
    if swept == "snr":
        if has_elem or has_mode:
            raise ScenarioValidationError("noise fields must be omitted when sweeping snr")
        return PowerSpec(budget, bandwidth, None, None)
    if has_elem == has_mode:
        raise ScenarioValidationError(
            "exactly one of element_noise_w and mode_noise_w must be given"
        )
    if has_elem:
        return PowerSpec(budget, bandwidth, _positive(block["element_noise_w"], "element_noise_w"), None)
    raw = block["mode_noise_w"]
    if np.isscalar(raw):
        values = (_positive(raw, "mode_noise_w"),) * mode_count
    else:
        values = tuple(_positive(v, "mode_noise_w") for v in raw)
        if len(values) != mode_count:
            raise ScenarioValidationError(
                f"mode_noise_w needs one entry per mode ({mode_count}), got {len(values)}"
            )
    return PowerSpec(budget, bandwidth, None, values)


def _parse_sweep(block: dict) -> SweepSpec:
    _require_keys(
        block,
        "sweep",
        required=("variable",),
        optional=("values", "start", "stop", "steps", "scale"),
    )
    variable = block["variable"]
    if variable not in SWEEP_VARIABLES:
        raise ScenarioValidationError(
            f"sweep variable must be one of {SWEEP_VARIABLES}, got {variable!r}"
        )
    if "values" in block:
        if any(k in block for k in ("start", "stop", "steps", "scale")):
            raise ConfigError("sweep: give either values or start/stop/steps, not both")
        values = tuple(float(v) for v in block["values"])
        if not values:
            raise ScenarioValidationError("sweep values must be non-empty")
    else:
        if "start" not in block or "steps" not in block:
            raise ConfigError("sweep needs start and steps (or an explicit values list)")
        steps = int(block["steps"])
        if steps < 1:
            raise ScenarioValidationError("sweep steps must be >= 1")
        start = float(block["start"])
        if steps == 1:
            if "stop" in block and float(block["stop"]) != start:
                raise ScenarioValidationError("single-step sweep requires stop == start")
            values = (start,)
        else:
            if "stop" not in block:
                raise ConfigError("sweep with steps > 1 needs stop")
            stop = float(block["stop"])
            scale = block.get("scale", "linear")
            if scale == "linear":
                values = tuple(float(v) for v in np.linspace(start, stop, steps))
            elif scale == "log":
                if start <= 0 or stop <= 0:
                    raise ScenarioValidationError("log sweep needs positive endpoints")
                values = tuple(float(v) for v in np.geomspace(start, stop, steps))
            else:
                raise ScenarioValidationError(f"unknown sweep scale {scale!r}")
    return SweepSpec(variable=variable, values=values)


def _parse_detect(block: dict) -> DetectSpec:
    _require_keys(block, "detect", required=(), optional=("symbols", "constellation"))
    symbols = int(block.get("symbols", 100_000))
    if symbols < 1:
        raise ScenarioValidationError("detect.symbols must be >= 1")
    constellation = block.get("constellation", "qpsk")
    if constellation not in ("qpsk", "16qam"):
        raise ScenarioValidationError("detect.constellation must be qpsk or 16qam")
    return DetectSpec(symbols=symbols, constellation=constellation)


def _parse_approx_error(block: dict) -> ApproxErrorSpec:
    _require_keys(block, "approx_error", required=(), optional=("element_counts", "modes"))
    counts = tuple(int(u) for u in block.get("element_counts", (4, 8, 12, 16, 24, 32)))
    if any(u < 1 for u in counts):
        raise ScenarioValidationError("element_counts must be >= 1")
    modes = tuple(int(l) for l in block.get("modes", (0, 1, 2, 3)))
    return ApproxErrorSpec(element_counts=counts, modes=modes)


def parse_scenario(raw: dict, seed_override: int | None = None) -> Scenario:
    _require_keys(
        raw,
        "scenario",
        required=("geometry", "power", "model", "sweep", "seed"),
        optional=("detect", "approx_error"),
    )
    sweep = _parse_sweep(raw["sweep"])
    geometry = _parse_geometry(raw["geometry"], sweep.variable)
    power = _parse_power(raw["power"], sweep.variable, geometry.tx_elements)
    model = raw["model"]
    if model not in MODELS:
        raise ScenarioValidationError(f"model must be one of {MODELS}, got {model!r}")
    seed = int(raw["seed"]) if seed_override is None else int(seed_override)
    if seed < 0:
        raise ScenarioValidationError("seed must be >= 0")
    digest_src = dict(raw)
    digest_src["seed"] = seed
    digest = hashlib.sha256(
        json.dumps(digest_src, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    detect = _parse_detect(raw.get("detect", {}))
    approx = _parse_approx_error(raw.get("approx_error", {}))
    return Scenario(
        geometry=geometry,
        power=power,
        model=model,
        sweep=sweep,
        seed=seed,
        detect=detect,
        approx_error=approx,
        scenario_hash=digest,
    )


def load_scenario(path, seed_override: int | None = None) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_scenario(raw, seed_override)


@dataclass(frozen=True)
class SweepPoint:
    """One materialized operating point of a sweep."""

    sweep_value: float
    geom: LinkGeometry
    budget_w: float
    bandwidth_hz: float
    element_noise_w: float | None
    mode_noise_w: tuple[float, ...] | None

    def mode_noise(self, modes) -> dict[int, float]:
        """Per-mode decomposed noise variance sigma_l^2."""
        if self.mode_noise_w is not None:
            return dict(zip(modes, self.mode_noise_w))
        v = self.geom.rx.element_count
        return {l: v * self.element_noise_w for l in modes}


def materialize(scenario: Scenario, sweep_value: float) -> SweepPoint:
    geo = scenario.geometry
    pw = scenario.power
    distance = geo.distance_m
    budget = pw.budget_w
    element_noise = pw.element_noise_w
    mode_noise = pw.mode_noise_w
    if scenario.sweep.variable == "distance":
        distance = float(sweep_value)
        if distance <= 0:
            raise ScenarioValidationError("swept distance must be positive")
    elif scenario.sweep.variable == "budget":
        budget = float(sweep_value)
        if budget <= 0:
            raise ScenarioValidationError("swept budget must be positive")
    elif scenario.sweep.variable == "snr":
        element_noise = budget / 10.0 ** (float(sweep_value) / 10.0)
    geom = LinkGeometry(
        tx=ConcentricArray.from_radii(geo.tx_radii, geo.tx_elements),
        rx=ConcentricArray.from_radii(geo.rx_radii, geo.rx_elements),
        axial_distance=distance,
        wavelength=geo.wavelength_m,
        beta=geo.beta,
        far_field_ratio=geo.far_field_ratio,
    )
    return SweepPoint(
        sweep_value=float(sweep_value),
        geom=geom,
        budget_w=budget,
        bandwidth_hz=pw.bandwidth_hz,
        element_noise_w=element_noise,
        mode_noise_w=mode_noise,
    )
