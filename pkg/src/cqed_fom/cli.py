"""Command-line front end emitting plot-ready tables.

Commands
--------
    fom-sweep      efficiency/indistinguishability over g or mode volume
    spectrum       reflection spectrum (spin-resolved when configured)
    contrast       spin contrast against cavity-emitter detuning
    modevol        mode volume of a stored or synthesized field grid
    gmap           per-voxel coupling-rate map
    implant-stats  median/percentile tables over implantation disks
    synth-field    write the analytic test mode to a grid file

Shared flags: ``--config`` (JSON, unit-tagged), ``--out`` output
directory, ``--threads`` worker count for sweeps, ``--format`` csv or
json for tables. Exit codes: 0 success, 2 config error, 3 numerical
non-convergence, 4 I/O error; failures print a machine-readable JSON
object to stderr. ``CQED_FOM_LOG`` sets the log level.

Outputs are deterministic: floats print as shortest round-trip decimals
(``repr``), JSON keys are sorted, tables carry no timestamps, and row
order never depends on ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from . import fieldgrid
from .config import RunConfig, parse_config
from .errors import ConfigError, GridFormatError, NonConvergedError
from .fom import fom_sweep, mode_volume_from_coupling
from .implant import ImplantRegion, implant_distribution, median_vs_D_curve, violin_export
from .params import DipoleSpec
from .reflection import contrast_curve, reflectivity, spin_spectra
from .units import debye, to_ghz

log = logging.getLogger("cqed_fom")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4

DEFAULT_DIPOLE = DipoleSpec(mu=debye(2.31))
DEFAULT_MEDIUM_INDEX = 2.4


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return repr(int(value))
    return repr(float(value))


def _json_safe(value):
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def _write_table(path: str, columns, rows, fmt: str) -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    else:
        doc = {
            "columns": list(columns),
            "rows": [[_json_safe(v) for v in row] for row in rows],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    log.info("wrote %s", path)


def _table_name(stem: str, fmt: str) -> str:
    return f"{stem}.{'json' if fmt == 'json' else 'csv'}"


def _load_field(cfg: RunConfig, command: str) -> fieldgrid.FieldGrid:
    """Grid file when configured, else the synthetic mode; one is required."""
    if cfg.grid is not None:
        g = cfg.grid
        return fieldgrid.load_grid(
            g.path, fmt=g.fmt, wavelength=g.wavelength, n_ref=g.n_ref
        )
    if cfg.synth is not None:
        return fieldgrid.synth_mode(cfg.synth)
    raise ConfigError(f"command {command!r} needs a 'grid' or 'synth' block")


def _medium_index(cfg: RunConfig) -> float:
    if cfg.grid is not None:
        return cfg.grid.n_ref
    if cfg.synth is not None:
        return cfg.synth.n_ref
    return DEFAULT_MEDIUM_INDEX


def cmd_fom_sweep(cfg: RunConfig, out: str, fmt: str, threads: int) -> None:
    base = cfg.require("system", "fom-sweep")
    sweep = cfg.require("sweep", "fom-sweep")
    dipole = cfg.dipole or DEFAULT_DIPOLE
    medium = _medium_index(cfg)
    results = fom_sweep(
        base,
        g_values=sweep.g_values,
        volumes=sweep.volumes,
        volume_units=sweep.volume_units,
        dipole=dipole,
        medium_index=medium,
        spec=cfg.hilbert,
        numerics=cfg.numerics,
        workers=threads,
    )
    rows = []
    for r in results:
        v_norm = r.v_norm
        if v_norm is None and r.g > 0.0:
            v_norm = mode_volume_from_coupling(
                r.g, dipole, base.omega, units="lambda_n3", medium_index=medium
            )
        rows.append(
            [
                to_ghz(r.g),
                v_norm if v_norm is not None else float("nan"),
                r.beta,
                r.beta_wg,
                r.indist,
                r.cooperativity,
                r.status,
            ]
        )
    _write_table(
        os.path.join(out, _table_name("fom_sweep", fmt)),
        ["g_GHz", "V_lambda_n3", "beta", "beta_wg", "indist", "cooperativity", "status"],
        rows,
        fmt,
    )


def cmd_spectrum(cfg: RunConfig, out: str, fmt: str, threads: int) -> None:
    params = cfg.require("system", "spectrum")
    probe = cfg.require("probe", "spectrum")
    if cfg.spin is not None:
        down, up = spin_spectra(params, cfg.spin, probe)
        columns = ["detuning_GHz", "R_down", "R_up"]
        rows = [
            [to_ghz(d), rd, ru]
            for d, rd, ru in zip(probe, down.values, up.values)
        ]
    else:
        spec = reflectivity(params, -params.delta_ca, probe)
        columns = ["detuning_GHz", "R"]
        rows = [[to_ghz(d), v] for d, v in zip(probe, spec.values)]
    _write_table(os.path.join(out, _table_name("spectrum", fmt)), columns, rows, fmt)


def cmd_contrast(cfg: RunConfig, out: str, fmt: str, threads: int) -> None:
    params = cfg.require("system", "contrast")
    spin = cfg.require("spin", "contrast")
    detunings = cfg.require("contrast_detunings", "contrast")
    curve = contrast_curve(params, spin, detunings, probe_policy=cfg.probe_policy)
    rows = [
        [to_ghz(d), to_ghz(p), c, a]
        for d, p, c, a in zip(
            curve.cavity_detunings, curve.best_probe, curve.contrast, curve.abs_diff
        )
    ]
    _write_table(
        os.path.join(out, _table_name("contrast", fmt)),
        ["cavity_detuning_GHz", "probe_GHz", "contrast", "abs_diff"],
        rows,
        fmt,
    )


def cmd_modevol(cfg: RunConfig, out: str, fmt: str, threads: int) -> None:
    grid = _load_field(cfg, "modevol")
    res = fieldgrid.mode_volume(grid)
    columns = [
        "V_m3",
        "V_lambda_n3",
        "argmax_ix",
        "argmax_iy",
        "argmax_iz",
        "argmax_x_m",
        "argmax_y_m",
        "argmax_z_m",
        "max_energy_density",
    ]
    row = [
        res.v_m3,
        res.v_norm,
        res.argmax_index[0],
        res.argmax_index[1],
        res.argmax_index[2],
        res.argmax_position[0],
        res.argmax_position[1],
        res.argmax_position[2],
        res.max_energy_density,
    ]
    _write_table(os.path.join(out, _table_name("modevol", fmt)), columns, [row], fmt)


def cmd_gmap(cfg: RunConfig, out: str, fmt: str, threads: int) -> None:
    grid = _load_field(cfg, "gmap")
    dipole = cfg.dipole or DEFAULT_DIPOLE
    field = fieldgrid.g_field(grid, dipole)
    nx, ny, nz = field.shape
    xs, ys, zs = field.axes()
    g_ghz = to_ghz(1.0) * field.values.ravel(order="F")
    mask = field.dielectric_mask.ravel(order="F").astype(int)
    rows = zip(
        np.tile(xs, ny * nz),
        np.tile(np.repeat(ys, nx), nz),
        np.repeat(zs, nx * ny),
        g_ghz,
        mask,
    )
    _write_table(
        os.path.join(out, _table_name("gmap", fmt)),
        ["x_m", "y_m", "z_m", "g_GHz", "dielectric"],
        rows,
        fmt,
    )


def cmd_implant_stats(cfg: RunConfig, out: str, fmt: str, threads: int) -> None:
    settings = cfg.require("implant", "implant-stats")
    grid = _load_field(cfg, "implant-stats")
    dipole = cfg.dipole or DEFAULT_DIPOLE
    field = fieldgrid.g_field(grid, dipole)
    curve = median_vs_D_curve(
        field, settings.diameters, center=settings.center, plane=settings.plane
    )
    _write_table(
        os.path.join(out, _table_name("implant_median", fmt)),
        ["D_nm", "median_GHz", "p40_GHz", "p60_GHz"],
        [
            [d * 1e9, to_ghz(m), to_ghz(p40), to_ghz(p60)]
            for d, m, p40, p60 in curve
        ],
        fmt,
    )
    violin_d = settings.violin_diameter
    if violin_d is None:
        violin_d = float(settings.diameters.max())
    dist = implant_distribution(
        field,
        ImplantRegion(diameter=violin_d, center=settings.center, plane=settings.plane),
    )
    violin = violin_export(dist, n_bins=settings.bins)
    _write_table(
        os.path.join(out, _table_name("implant_violin", fmt)),
        ["bin_center_GHz", "density"],
        [[to_ghz(c), v / to_ghz(1.0)] for c, v in zip(violin.bin_centers, violin.density)],
        fmt,
    )
    summary = {
        "D_nm": violin_d * 1e9,
        "center_x_m": dist.center[0],
        "center_y_m": dist.center[1],
        "center_ix": dist.center_index[0],
        "center_iy": dist.center_index[1],
        "plane_index": dist.plane_index,
        "median_GHz": to_ghz(dist.median),
        "p25_GHz": to_ghz(dist.p25),
        "p40_GHz": to_ghz(dist.p40),
        "p60_GHz": to_ghz(dist.p60),
        "p75_GHz": to_ghz(dist.p75),
        "whisker_low_GHz": to_ghz(violin.whisker_low),
        "whisker_high_GHz": to_ghz(violin.whisker_high),
        "min_GHz": to_ghz(dist.min),
        "max_GHz": to_ghz(dist.max),
    }
    path = os.path.join(out, "implant_summary.json")
    with open(path, "w") as fh:
        json.dump({k: _json_safe(v) for k, v in summary.items()}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    log.info("wrote %s", path)


def cmd_synth_field(cfg: RunConfig, out: str, fmt: str, threads: int) -> None:
    spec = cfg.require("synth", "synth-field")
    grid = fieldgrid.synth_mode(spec)
    path = os.path.join(out, cfg.synth_output)
    fieldgrid.save_grid(grid, path)
    log.info("wrote %s", path)


COMMANDS = {
    "fom-sweep": cmd_fom_sweep,
    "spectrum": cmd_spectrum,
    "contrast": cmd_contrast,
    "modevol": cmd_modevol,
    "gmap": cmd_gmap,
    "implant-stats": cmd_implant_stats,
    "synth-field": cmd_synth_field,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqed-fom",
        description="Cavity QED figure-of-merit tables from unit-tagged JSON configs.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    return parser


def _emit_error(kind: str, message: str, code: int) -> None:
    doc = {"error": {"type": kind, "message": message, "exit_code": code}}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    level = os.environ.get("CQED_FOM_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _build_parser().parse_args(argv)
    if args.threads < 1:
        _emit_error("ConfigError", "--threads must be >= 1", EXIT_CONFIG)
        return EXIT_CONFIG
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out, args.fmt, args.threads)
    except ConfigError as exc:
        _emit_error("ConfigError", str(exc), EXIT_CONFIG)
        return EXIT_CONFIG
    except ValueError as exc:
        _emit_error("ValueError", str(exc), EXIT_CONFIG)
        return EXIT_CONFIG
    except NonConvergedError as exc:
        _emit_error("NonConvergedError", str(exc), EXIT_NONCONVERGED)
        return EXIT_NONCONVERGED
    except GridFormatError as exc:
        _emit_error("GridFormatError", str(exc), EXIT_IO)
        return EXIT_IO
    except OSError as exc:
        _emit_error("IOError", str(exc), EXIT_IO)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
