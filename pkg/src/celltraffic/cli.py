"""Batch command-line front end.

Subcommands: fit-stable, generate, predict, eval, sparsity.  Every run is
deterministic given its inputs, seed, and configuration: outputs carry no
timestamps or timings unless --timing is requested, files are written
atomically (temp file + rename), and floats are emitted in shortest
round-trip form.

Exit codes: 0 success, 2 usage/configuration, 3 data format, 4 numerical
failure.

Configuration can come from a flat `key = value` file (# comments
allowed) via --config; command-line flags win over the file, which wins
over the CELLTRAFFIC_SEED environment variable and built-in defaults.
Unknown keys in the file are errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import evaluation as ev
from .adm import AdmConfig
from .errors import DataFormatError, NumericalError
from .predictors import LinearPredictorSpec
from .stable import StableParams, default_omega_grid, fit_stable
from .traffic import (
    ScenarioSpec,
    emit_cells_csv,
    emit_traffic_csv,
    emit_wide_csv,
    generate_synthetic,
    ingest_csv,
)
from .voronoi import voronoi_sparsity

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

SEED_ENV_VAR = "CELLTRAFFIC_SEED"


class ConfigError(Exception):
    pass


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default, help); one flat namespace shared by the config
# file and the flags of every subcommand
SCHEMA: dict[str, tuple] = {
    "seed": (int, 0, "random seed for generation"),
    "service": (str, None, "service label filter / scenario service"),
    "resolution": (int, None, "interval length in seconds (inferred if omitted)"),
    "merge_colocated": (_parse_bool, False, "merge cells at identical coordinates"),
    "quantization_levels": (int, 100, "CDF quantization levels"),
    # linear predictor
    "n": (int, 36, "training window length"),
    "m": (int, 10, "number of prediction coefficients"),
    "k": (int, 1, "forecast lag"),
    "alpha": (float, 1.61, "fallback exponent when estimation is off/short"),
    "ridge": (float, None, "absolute ridge added to the normal equations"),
    "estimate_alpha": (_parse_bool, True, "estimate per-cell exponents from history"),
    # ADM
    "lambda1": (float, 10.0, "noise-split weight"),
    "lambda2": (float, 1.0, "sparse-reconstruction weight"),
    "gamma0": (float, 1.0, "initial code-mass multiplier"),
    "eta0": (float, 1e-4, "initial penalty factor"),
    "rho": (float, 1.1, "penalty growth ratio per iteration"),
    "outer_iterations": (int, 20, "alternating-direction rounds"),
    "inner_iterations": (int, 3, "dictionary-learning passes per round"),
    "early_stop_tol": (float, 1e-6, "relative change triggering early stop"),
    "sparsity_budget": (float, 0.0, "code-mass target (0 = initial code mass)"),
    "clamp_nonnegative": (_parse_bool, True, "floor final predictions at zero"),
    "omp_nonzeros": (int, None, "OMP budget (default: all usable atoms)"),
    "dictionary_size": (int, None, "number of dictionary atoms (default: one per cell)"),
    "zero_init_dictionary": (_parse_bool, False, "start from an all-zero dictionary"),
    "literal_gamma_growth": (_parse_bool, False, "unbounded code-mass multiplier growth"),
    # scenario generation
    "cells": (int, 113, "number of cells"),
    "intervals": (int, 288, "number of intervals"),
    "stable_alpha": (float, 1.61, "scenario stable exponent"),
    "stable_beta": (float, 1.0, "scenario stable skewness"),
    "stable_sigma": (float, 188.67, "scenario stable scale"),
    "stable_mu": (float, 221.83, "scenario stable shift"),
    "hotspots": (int, 5, "number of active hotspot atoms"),
    "dictionary_rank": (int, 8, "rank of the generating spatial mixture"),
    "hotspot_gain": (float, 5.0, "hotspot amplitude multiplier"),
    "flat_profile": (_parse_bool, False, "disable the diurnal profile"),
    # evaluation
    "t_end": (int, None, "observed history length"),
    "timestamps": (str, None, "comma-separated history lengths to evaluate"),
    "methods": (str, "adm-lars,adm-omp,linear,ls-ar", "comma-separated methods"),
    "method": (str, "adm-lars", "prediction method"),
    "sweep": (str, None, "parameter to sweep"),
    "sweep_values": (str, None, "comma-separated sweep values"),
    "timestamp_index": (int, 0, "column index for the sparsity report"),
    "timing": (_parse_bool, False, "include wall-clock timings in reports"),
}


def read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            parser = SCHEMA[key][0]
            try:
                values[key] = parser(text)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


class Settings:
    """Flat configuration: defaults < environment < file < flags."""

    def __init__(self, args: argparse.Namespace, file_values: dict):
        self._values = {}
        for key, (_, default, _help) in SCHEMA.items():
            self._values[key] = default
        env_seed = os.environ.get(SEED_ENV_VAR)
        if env_seed is not None:
            try:
                self._values["seed"] = int(env_seed)
            except ValueError:
                raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}")
        self._values.update(file_values)
        for key in SCHEMA:
            flag_val = getattr(args, key, None)
            if flag_val is not None:
                self._values[key] = flag_val

    def __getattr__(self, key):
        try:
            return self._values[key]
        except KeyError:
            raise AttributeError(key)

    def echo(self) -> dict:
        return dict(sorted(self._values.items()))

    def predictor(self) -> LinearPredictorSpec:
        return LinearPredictorSpec(
            n=self.n, m=self.m, k=self.k, alpha=self.alpha, ridge=self.ridge
        )

    def adm_config(self, coder: str = "lars") -> AdmConfig:
        return AdmConfig(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            gamma0=self.gamma0,
            eta0=self.eta0,
            rho=self.rho,
            outer_iterations=self.outer_iterations,
            inner_iterations=self.inner_iterations,
            early_stop_tol=self.early_stop_tol,
            sparsity_budget=self.sparsity_budget,
            clamp_nonnegative=self.clamp_nonnegative,
            coder=coder,
            omp_nonzeros=self.omp_nonzeros,
            dictionary_size=self.dictionary_size,
            zero_init_dictionary=self.zero_init_dictionary,
            literal_gamma_growth=self.literal_gamma_growth,
        )

    def scenario(self) -> ScenarioSpec:
        return ScenarioSpec(
            n_cells=self.cells,
            n_intervals=self.intervals,
            resolution_seconds=self.resolution or 300,
            service_label=self.service or "IM",
            stable=StableParams(
                self.stable_alpha, self.stable_beta, self.stable_sigma, self.stable_mu
            ),
            hotspot_count=self.hotspots,
            dictionary_rank=self.dictionary_rank,
            hotspot_gain=self.hotspot_gain,
            flat_profile=self.flat_profile,
        )


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_atomic(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-celltraffic-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _load_matrix(settings: Settings, traffic, cells):
    return ingest_csv(
        traffic,
        cells,
        service=settings.service,
        resolution_seconds=settings.resolution,
        merge_colocated=settings.merge_colocated,
    )


def _parse_int_list(text: str, what: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad {what}: {text!r}")


def _parse_float_list(text: str, what: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad {what}: {text!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_fit_stable(settings: Settings, args) -> int:
    matrix = _load_matrix(settings, args.traffic, args.cells)
    rows = []
    levels = settings.quantization_levels
    for i, cell in enumerate(matrix.cells):
        series = matrix.values[i]
        report = fit_stable(series, quantization_levels=levels)
        rows.append(_fit_row(cell.cell_id, report))
    pooled = fit_stable(matrix.values.ravel(), quantization_levels=levels)
    rows.append(_fit_row("__pooled__", pooled))
    header = [
        "cell_id", "alpha", "beta", "sigma", "mu",
        "ks_stat", "ks_thresh", "psi_err", "estimator_used",
    ]
    write_atomic(args.output, _csv_text(header, rows))
    return EXIT_OK


def _fit_row(cell_id, report):
    p = report.params
    return [
        cell_id, p.alpha, p.beta, p.sigma, p.mu,
        report.ks_statistic, report.ks_threshold_95,
        report.psi_fit_error, report.estimator_used,
    ]


def cmd_generate(settings: Settings, args) -> int:
    matrix = generate_synthetic(settings.scenario(), settings.seed)
    tmp_traffic = args.output_traffic
    tmp_cells = args.output_cells
    emit_traffic_csv(matrix, tmp_traffic)
    emit_cells_csv(matrix, tmp_cells)
    if args.output_wide:
        emit_wide_csv(matrix, args.output_wide)
    return EXIT_OK


def cmd_predict(settings: Settings, args) -> int:
    matrix = _load_matrix(settings, args.traffic, args.cells)
    method = settings.method
    if method not in ev.METHODS:
        raise ConfigError(
            f"invalid method {method!r}; valid methods: {', '.join(ev.METHODS)}"
        )
    t_end = settings.t_end if settings.t_end is not None else matrix.n_intervals
    predictor = settings.predictor()
    alphas = None
    if settings.estimate_alpha:
        from .adm import per_cell_alphas

        alphas = per_cell_alphas(matrix, t_end, predictor.alpha)
    prediction = ev.predict_one(
        matrix, t_end, method, predictor, settings.adm_config(), alphas
    )
    target = matrix.start_timestamp + (t_end + predictor.k - 1) * matrix.resolution_seconds
    rows = [
        (cell.cell_id, target, prediction[i]) for i, cell in enumerate(matrix.cells)
    ]
    write_atomic(args.output, _csv_text(["cell_id", "timestamp", "predicted_bytes"], rows))
    return EXIT_OK


def cmd_eval(settings: Settings, args) -> int:
    matrix = _load_matrix(settings, args.traffic, args.cells)
    if settings.timestamps is None:
        raise ConfigError("eval requires --timestamps")
    t_ends = _parse_int_list(settings.timestamps, "timestamps")
    methods = [m.strip() for m in settings.methods.split(",") if m.strip()]
    predictor = settings.predictor()
    config = settings.adm_config()
    common = dict(
        seed=settings.seed,
        estimate_alpha=settings.estimate_alpha,
        config_echo=settings.echo(),
    )
    if settings.sweep:
        if settings.sweep_values is None:
            raise ConfigError("--sweep requires --sweep-values")
        values = _parse_float_list(settings.sweep_values, "sweep values")
        try:
            reports = ev.sweep(
                matrix, t_ends, methods, predictor, config,
                settings.sweep, values, **common,
            )
        except ValueError as exc:
            raise ConfigError(str(exc))
        labeled = [(f"{settings.sweep}={v}", rep) for v, rep in reports.items()]
    else:
        labeled = [("", ev.evaluate(matrix, t_ends, methods, predictor, config, **common))]

    nmae_rows = []
    error_rows = []
    for label, report in labeled:
        for r in report.results:
            runtime = r.runtime_seconds if settings.timing else ""
            nmae_rows.append([label, r.t_end, r.method, r.nmae, runtime])
            for i, cell in enumerate(matrix.cells):
                error_rows.append(
                    [label, r.t_end, r.method, cell.cell_id, r.per_cell_abs_error[i]]
                )
    write_atomic(
        args.output,
        _csv_text(["sweep", "t_end", "method", "nmae", "runtime_seconds"], nmae_rows),
    )
    if args.output_errors:
        write_atomic(
            args.output_errors,
            _csv_text(["sweep", "t_end", "method", "cell_id", "abs_error"], error_rows),
        )
    payload = {
        "seed": settings.seed,
        "config": settings.echo(),
        "results": [
            {
                "sweep": label,
                "t_end": r.t_end,
                "method": r.method,
                "nmae": r.nmae,
                **({"runtime_seconds": r.runtime_seconds} if settings.timing else {}),
            }
            for label, report in labeled
            for r in report.results
        ],
    }
    write_atomic(args.output_json, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_sparsity(settings: Settings, args) -> int:
    matrix = _load_matrix(settings, args.traffic, args.cells)
    report = voronoi_sparsity(matrix, settings.timestamp_index)
    rows = [(cid, density, area) for cid, density, area in report.per_cell_density]
    rows.append(("__gini__", report.gini, 0.0))
    write_atomic(args.output, _csv_text(["cell_id", "density", "voronoi_area"], rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_schema_flags(parser: argparse.ArgumentParser, keys) -> None:
    for key in keys:
        parser_fn, _default, help_text = SCHEMA[key]
        flag = "--" + key.replace("_", "-")
        if parser_fn is _parse_bool:
            parser.add_argument(flag, type=_parse_bool, default=None,
                                metavar="BOOL", help=help_text)
        else:
            parser.add_argument(flag, type=parser_fn, default=None, help=help_text)


_PREDICT_KEYS = (
    "n", "m", "k", "alpha", "ridge", "estimate_alpha",
    "lambda1", "lambda2", "gamma0", "eta0", "rho",
    "outer_iterations", "inner_iterations", "early_stop_tol", "sparsity_budget",
    "clamp_nonnegative", "omp_nonzeros", "dictionary_size",
    "zero_init_dictionary", "literal_gamma_growth",
)
_INGEST_KEYS = ("service", "resolution", "merge_colocated")
_SCENARIO_KEYS = (
    "seed", "cells", "intervals", "resolution", "service",
    "stable_alpha", "stable_beta", "stable_sigma", "stable_mu",
    "hotspots", "dictionary_rank", "hotspot_gain", "flat_profile",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="celltraffic",
        description="Heavy-tailed modeling, sparse recovery, and per-cell traffic forecasting",
    )
    parser.add_argument("--config", help="flat key = value configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-stable", help="fit stable laws per cell and pooled")
    p.add_argument("traffic", help="long-form traffic CSV")
    p.add_argument("cells", help="cells CSV")
    p.add_argument("-o", "--output", required=True, help="fit report CSV")
    _add_schema_flags(p, _INGEST_KEYS + ("quantization_levels",))
    p.set_defaults(func=cmd_fit_stable)

    p = sub.add_parser("generate", help="generate a synthetic scenario")
    p.add_argument("--output-traffic", required=True, help="long-form traffic CSV")
    p.add_argument("--output-cells", required=True, help="cells CSV")
    p.add_argument("--output-wide", help="optional wide-form matrix CSV")
    _add_schema_flags(p, _SCENARIO_KEYS)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("predict", help="forecast the next interval")
    p.add_argument("traffic")
    p.add_argument("cells")
    p.add_argument("-o", "--output", required=True, help="forecast CSV")
    _add_schema_flags(p, _INGEST_KEYS + ("method", "t_end") + _PREDICT_KEYS)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score methods against ground truth")
    p.add_argument("traffic")
    p.add_argument("cells")
    p.add_argument("-o", "--output", required=True, help="NMAE table CSV")
    p.add_argument("--output-json", required=True, help="full report JSON")
    p.add_argument("--output-errors", help="optional per-cell absolute error CSV")
    _add_schema_flags(
        p,
        _INGEST_KEYS
        + ("timestamps", "methods", "seed", "timing", "sweep", "sweep_values")
        + _PREDICT_KEYS,
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sparsity", help="Voronoi traffic-density report")
    p.add_argument("traffic")
    p.add_argument("cells")
    p.add_argument("-o", "--output", required=True, help="density table CSV")
    _add_schema_flags(p, _INGEST_KEYS + ("timestamp_index",))
    p.set_defaults(func=cmd_sparsity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        settings = Settings(args, file_values)
        return args.func(settings, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FileNotFoundError) as exc:
        code = EXIT_DATA if isinstance(exc, FileNotFoundError) else EXIT_NUMERICAL
        print(f"error: {exc}", file=sys.stderr)
        return code
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
