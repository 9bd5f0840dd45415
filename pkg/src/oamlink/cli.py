"""Scenario runner and figure-reproduction harness.

Subcommands: ``channel`` (dump per-mode matrices), ``approx-error``,
``capacity``, ``allocate``, ``detect-demo``, ``sweep`` (full pipeline:
capacity + allocation).  Output is CSV (UTF-8, ``.`` decimal point) with a
header row and a leading metadata comment carrying the scenario hash and
seed; byte-identical for identical (config, seed, version).

Exit codes: 0 success, 2 config parse error, 3 validation error,
4 numerical failure (e.g. a rank-deficient channel).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .allocation import (
    allocate_cic,
    capacity_cic,
    capacity_cif,
    svd_gains,
    waterfill_cif,
)
from .channel import approximation_error, mode_channel_set
from .geometry import ConcentricArray, LinkGeometry
from .linalg import SingularChannelError, checked_pinv
from .scenario import (
    ConfigError,
    Scenario,
    ScenarioValidationError,
    SweepPoint,
    load_scenario,
    materialize,
)
from .sic import Constellation, chi_of, sic_detect
from .transceiver import RNG_ALGORITHM, zf_detect

EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


@dataclass(frozen=True)
class RunRecord:
    scenario_hash: str
    tool_version: str
    seed: int
    elapsed_s: float
    outputs: tuple[str, ...]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, scenario: Scenario, header: list[str], rows: list[tuple]):
    lines = [
        f"# oamlink={__version__} scenario={scenario.scenario_hash} "
        f"seed={scenario.seed} rng={RNG_ALGORITHM}",
        ",".join(header),
    ]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _point_allocation(point: SweepPoint, model: str):
    """Run channel -> ordering/gains -> allocation -> capacity at one point."""
    modes = mode_channel_set(point.geom)
    sigma = point.mode_noise(modes.modes)
    if model == "CIF":
        gains = svd_gains(modes)
        plan, _mu = waterfill_cif(gains, sigma, point.budget_w, point.bandwidth_hz)
        report = capacity_cif(plan, gains, sigma)
    else:
        chi = chi_of(modes)
        plan, _nu = allocate_cic(chi, sigma, point.budget_w, point.bandwidth_hz)
        report = capacity_cic(plan, chi, sigma)
    return modes, plan, report


def _capacity_rows(scenario: Scenario, point: SweepPoint) -> list[tuple]:
    _, _, report = _point_allocation(point, scenario.model)
    rows = []
    for l in sorted(report.terms):
        for i, rate in enumerate(report.terms[l], start=1):
            rows.append((point.sweep_value, l, i, float(rate), report.total))
    return rows


def _allocate_rows(scenario: Scenario, point: SweepPoint) -> list[tuple]:
    _, plan, _ = _point_allocation(point, scenario.model)
    rows = []
    for l in sorted(plan.powers):
        for i, p in enumerate(plan.powers[l], start=1):
            rows.append((point.sweep_value, l, i, float(p)))
    return rows


def _channel_rows(scenario: Scenario, point: SweepPoint) -> list[tuple]:
    modes = mode_channel_set(point.geom)
    rows = []
    for l in modes.modes:
        h = modes.matrix(l)
        for m in range(h.shape[0]):
            for n in range(h.shape[1]):
                g = h[m, n]
                rows.append(
                    (point.sweep_value, l, m + 1, n + 1, g.real, g.imag, abs(g))
                )
    return rows


def _detect_rows(scenario: Scenario, point: SweepPoint) -> list[tuple]:
    """ZF vs SIC symbol error rates on identical noise draws."""
    modes = mode_channel_set(point.geom)
    sigma = point.mode_noise(modes.modes)
    constellation = Constellation(scenario.detect.constellation)
    n_streams = point.geom.tx.ring_count
    n_symbols = scenario.detect.symbols
    per_stream_power = point.budget_w / (n_streams * len(modes.modes))
    rng = np.random.Generator(np.random.Philox(scenario.seed))
    errors = {"zf": 0, "sic": 0}
    total = 0
    for l in modes.modes:
        h = modes.matrix(l) * np.sqrt(per_stream_power)
        sent = constellation.draw(rng, (n_streams, n_symbols))
        noise_scale = np.sqrt(sigma[l] / 2.0)
        w = noise_scale * (
            rng.standard_normal((h.shape[0], n_symbols))
            + 1j * rng.standard_normal((h.shape[0], n_symbols))
        )
        y = h @ sent + w
        zf_hat = constellation.slice(checked_pinv(h) @ y)
        sic_hat = sic_detect(y, h, constellation)
        errors["zf"] += int(np.count_nonzero(zf_hat != sent))
        errors["sic"] += int(np.count_nonzero(sic_hat != sent))
        total += sent.size
    return [
        (point.sweep_value, det, total, errors[det], errors[det] / total)
        for det in ("zf", "sic")
    ]


_SUBCOMMAND_HEADERS = {
    "capacity": ["sweep_value", "mode", "stream", "rate_bits_per_s", "total_bits_per_s"],
    "allocate": ["sweep_value", "mode", "stream", "power_w"],
    "channel": ["sweep_value", "mode", "rx_ring", "tx_ring", "gain_real", "gain_imag", "gain_abs"],
    "detect-demo": ["sweep_value", "detector", "symbols", "symbol_errors", "ser"],
}

_SUBCOMMAND_ROWS = {
    "capacity": _capacity_rows,
    "allocate": _allocate_rows,
    "channel": _channel_rows,
    "detect-demo": _detect_rows,
}


def _eval_points(scenario: Scenario, row_fn, threads: int) -> list[tuple]:
    points = [materialize(scenario, v) for v in scenario.sweep.values]
    if threads == 1 or len(points) == 1:
        chunks = [row_fn(scenario, p) for p in points]
    else:
        workers = threads if threads > 0 else min(32, os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda p: row_fn(scenario, p), points))
    return [row for chunk in chunks for row in chunk]


def run_subcommand(
    subcommand: str,
    config_path: str,
    out_dir: str,
    seed: int | None = None,
    threads: int = 0,
) -> RunRecord:
    started = time.perf_counter()
    scenario = load_scenario(config_path, seed_override=seed)
    os.makedirs(out_dir, exist_ok=True)
    outputs: list[str] = []
    if subcommand == "approx-error":
        rows = _approx_error_rows(scenario)
        path = os.path.join(out_dir, "approx_error.csv")
        _write_csv(path, scenario, ["elements", "mode", "error_abs"], rows)
        outputs.append(path)
    elif subcommand == "sweep":
        for name in ("capacity", "allocate"):
            rows = _eval_points(scenario, _SUBCOMMAND_ROWS[name], threads)
            path = os.path.join(out_dir, f"{name}.csv")
            _write_csv(path, scenario, _SUBCOMMAND_HEADERS[name], rows)
            outputs.append(path)
    else:
        rows = _eval_points(scenario, _SUBCOMMAND_ROWS[subcommand], threads)
        path = os.path.join(out_dir, f"{subcommand.replace('-', '_')}.csv")
        _write_csv(path, scenario, _SUBCOMMAND_HEADERS[subcommand], rows)
        outputs.append(path)
    record = RunRecord(
        scenario_hash=scenario.scenario_hash,
        tool_version=__version__,
        seed=scenario.seed,
        elapsed_s=time.perf_counter() - started,
        outputs=tuple(outputs),
    )
    with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "scenario_hash": record.scenario_hash,
                "tool_version": record.tool_version,
                "seed": record.seed,
                "rng": RNG_ALGORITHM,
                "elapsed_s": record.elapsed_s,
                "outputs": list(record.outputs),
                "subcommand": subcommand,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    return record


def _approx_error_rows(scenario: Scenario) -> list[tuple]:
    """Discretization error |Er| versus element count for the configured modes."""
    if len(scenario.sweep.values) != 1:
        raise ScenarioValidationError("approx-error runs on a single sweep point")
    point = materialize(scenario, scenario.sweep.values[0])
    base = point.geom
    rows = []
    for count in scenario.approx_error.element_counts:
        geom = LinkGeometry(
            tx=ConcentricArray.from_radii(base.tx.radii, count),
            rx=ConcentricArray.from_radii(base.rx.radii, count),
            axial_distance=base.axial_distance,
            wavelength=base.wavelength,
            beta=base.beta,
            far_field_ratio=base.far_field_ratio,
        )
        for l in scenario.approx_error.modes:
            err = approximation_error(geom, 1, 1, 1, l)
            rows.append((count, l, abs(err)))
    return rows


def run_scenario(
    config_path: str, out_dir: str, seed: int | None = None, threads: int = 0
) -> RunRecord:
    """Full pipeline at every sweep point: capacity plus allocation CSVs."""
    return run_subcommand("sweep", config_path, out_dir, seed=seed, threads=threads)


def sweep(config_path: str, out_dir: str, seed: int | None = None, threads: int = 0) -> RunRecord:
    return run_scenario(config_path, out_dir, seed=seed, threads=threads)


def approx_error_report(config_path: str, out_dir: str, seed: int | None = None) -> RunRecord:
    return run_subcommand("approx-error", config_path, out_dir, seed=seed)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamlink",
        description="Concentric-UCA OAM link simulator: channels, detection, power allocation.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, doc in (
        ("channel", "dump per-mode channel matrices"),
        ("approx-error", "discretization error vs element count"),
        ("capacity", "allocated capacity per mode/stream"),
        ("allocate", "optimal power allocation per mode/stream"),
        ("detect-demo", "ZF vs SIC symbol-error comparison"),
        ("sweep", "full pipeline: capacity and allocation"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--threads", type=int, default=0, help="sweep workers (0 = auto)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        record = run_subcommand(
            args.subcommand, args.config, args.out, seed=args.seed, threads=args.threads
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularChannelError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ScenarioValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in record.outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
