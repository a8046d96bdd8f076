"""Command-line entry point.

Every run is described by one JSON configuration file::

    bo-scattering <command> config.json [--output-dir DIR] [--verbose]

with ``command`` one of ``transform``, ``verify``, ``evolve``, ``recover``
and ``spectrum``.  Exit codes: 0 success, 1 a residual exceeded its
threshold, 2 invalid configuration, 3 solver failure.  Errors are written
to stderr as a JSON object.  The environment variable
``BO_SCATTERING_OUTPUT_DIR`` overrides the output directory.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asymptotics import check_k0, check_kinf, recover_potential
from .evolution import EvolutionConfig, crossvalidate
from .fredholm import SolverError
from .grid_transforms import Grid, Potential, family_potential, load_tabulated
from .kernels import CutoffChi, ChiViolation
from .modified_jost import find_nongeneric
from .scattering import (NotResolved, TransformConfig, default_lambda_grid,
                         direct_transform, verify_relations)
from .spectrum import eigen_data

log = logging.getLogger("bo_scattering")

COMMANDS = ("transform", "verify", "evolve", "recover", "spectrum")
OUTPUT_ENV = "BO_SCATTERING_OUTPUT_DIR"

EXIT_OK, EXIT_BREACH, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

DEFAULT_GRID = {"L": 40.0, "N": 2048}
# The evolution check needs a wider box: radiation leaving the bump must not
# wrap around before t_final.
DEFAULT_GRID_EVOLVE = {"L": 160.0, "N": 2048}

DEFAULT_LAMBDAS = {
    "transform": {"count": 48, "lo": 0.05, "hi": 50.0},
    "verify": {"values": [0.3, 0.5, 1.0, 2.0, 5.0]},
    "evolve": {"count": 24, "lo": 0.05, "hi": 16.0},
    "recover": None,
    "spectrum": None,
}

DEFAULT_TOLERANCES = {
    "transform": {"tol_edge": 1e-3},
    "spectrum": {"tol_edge": 1e-3},
    "verify": {
        "tol_edge": 1e-3,
        "R1_me_jump": 1e-5, "R2_m1_jump": 1e-5, "R3_unitarity": 1e-6,
        "R4_f_beta": 1e-5, "R5_beta_square": 1e-5, "R6_gamma_ode": 1e-3,
        "gamma_forms": 1e-6, "me_derivative": 1e-5,
        "kinf_slope_min": -2.3, "kinf_slope_max": -1.7,
        "kinf_gamma_error": 0.05, "kinf_me_phase_error": 0.05,
        # ``None`` reports the small-k ratio without enforcing it.
        "k0_beta_ratio": None,
    },
    "evolve": {
        "tol_edge": 1e-3,
        "eigenvalue_drift": 1e-4, "gamma_law_relative": 5e-3, "gamma_law_absolute": 1e-4,
        "beta_error": 1e-3, "gamma_coeff_error": 1e-3, "beta_phase_error": 1e-2,
    },
    "recover": {"recovery_error": 1e-3},
}

DEFAULT_OPTIONS = {
    "transform": {"with_derivatives": True, "relations": True},
    "spectrum": {},
    "verify": {"k0_exponents": [2, 3, 4, 5], "kinf_K": [20, 40, 80, 160],
               "kinf_lambdas": [25.0, 50.0, 100.0], "kinf_beta_lambdas": [10.0, 20.0, 40.0]},
    "evolve": {"t": 0.25, "dt": 2e-4, "dealias_fraction": 2.0 / 3.0,
               "phase_lambdas": [0.5, 1.0, 2.0]},
    "recover": {"K_list": None},
}

TOP_KEYS = {"grid", "potential", "lambda_grid", "chi", "tolerances", "output_dir",
            "workers", "options"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


@dataclass
class RunConfig:
    """Parsed configuration of one run.

    Attributes
    ----------
    grid : Grid
    potential : dict
        Potential descriptor, e.g. ``{"kind": "gaussian", "a": 0.5}``.
    lambda_grid : numpy.ndarray or None
    chi : CutoffChi
    tolerances : dict
    output_dir : Path
    workers : int or None
    options : dict
    """

    command: str
    grid: Grid
    potential: dict
    lambda_grid: np.ndarray | None
    chi: CutoffChi
    tolerances: dict
    output_dir: Path
    workers: int | None
    options: dict
    base_dir: Path = field(default_factory=Path.cwd)


def _check_keys(section: str, given: dict, allowed) -> None:
    if not isinstance(given, dict):
        raise ConfigError(section, "must be a JSON object")
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"{section}.{unknown[0]}" if section else unknown[0], "unknown key")


def _number(name: str, value, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, "must be a number")
    if positive and not value > 0:
        raise ConfigError(name, "must be positive")
    return float(value)


def _parse_grid(doc, command: str) -> Grid:
    base = DEFAULT_GRID_EVOLVE if command == "evolve" else DEFAULT_GRID
    doc = {} if doc is None else doc
    _check_keys("grid", doc, ("L", "N"))
    L = _number("grid.L", doc.get("L", base["L"]), positive=True)
    N = doc.get("N", base["N"])
    if isinstance(N, bool) or not isinstance(N, int) or N <= 0:
        raise ConfigError("grid.N", "must be a positive integer")
    if N % 2:
        raise ConfigError("grid.N", f"must be even, got {N}")
    return Grid(L, N)


def _parse_lambdas(doc, command: str):
    doc = DEFAULT_LAMBDAS[command] if doc is None else doc
    if doc is None:
        return None
    if not isinstance(doc, dict):
        raise ConfigError("lambda_grid", "must be a JSON object")
    if "values" in doc:
        _check_keys("lambda_grid", doc, ("values",))
        vals = doc["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError("lambda_grid.values", "must be a non-empty list")
        lams = np.array([_number("lambda_grid.values", v, positive=True) for v in vals])
    else:
        _check_keys("lambda_grid", doc, ("count", "lo", "hi"))
        count = doc.get("count", 48)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError("lambda_grid.count", "must be a positive integer")
        lo = _number("lambda_grid.lo", doc.get("lo", 0.05), positive=True)
        hi = _number("lambda_grid.hi", doc.get("hi", 50.0), positive=True)
        if hi < lo:
            raise ConfigError("lambda_grid.hi", "must not be below lo")
        lams = default_lambda_grid(count, lo, hi)
    return lams


def _parse_potential(doc) -> dict:
    if doc is None:
        raise ConfigError("potential", "is required")
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError("potential.kind", "is required")
    kind = doc["kind"]
    allowed = {
        "gaussian": ("a", "sigma", "x0"),
        "lorentzian": ("a", "nu", "x0"),
        "sech2": ("a", "w", "x0"),
        "zero": (),
        "tabulated": ("path",),
        "nongeneric": ("amplitude",),
    }
    if kind not in allowed:
        raise ConfigError("potential.kind", f"unknown family {kind!r}")
    _check_keys("potential", doc, ("kind",) + allowed[kind])
    for key in allowed[kind]:
        if key in doc and key != "path":
            _number(f"potential.{key}", doc[key])
    if kind in ("gaussian", "lorentzian", "sech2") and "a" not in doc:
        raise ConfigError("potential.a", "is required")
    if kind == "tabulated" and not isinstance(doc.get("path"), str):
        raise ConfigError("potential.path", "is required")
    return dict(doc)


def _merge(section: str, given, defaults: dict) -> dict:
    given = {} if given is None else given
    _check_keys(section, given, defaults)
    return {**defaults, **given}


def parse_config(doc: dict, command: str, base_dir: Path | None = None,
                 output_override: str | None = None) -> RunConfig:
    """Validate a configuration document and fill in defaults.

    Raises
    ------
    ConfigError
        On unknown keys, missing required entries or invalid values.
    """
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {COMMANDS}")
    _check_keys("", doc, TOP_KEYS)
    grid = _parse_grid(doc.get("grid"), command)
    potential = _parse_potential(doc.get("potential"))
    lams = _parse_lambdas(doc.get("lambda_grid"), command)
    chi_doc = doc.get("chi") or {}
    _check_keys("chi", chi_doc, ("c",))
    try:
        chi = CutoffChi(_number("chi.c", chi_doc.get("c", 1.0), positive=True))
        chi.check()
    except ChiViolation as exc:
        raise ConfigError("chi.c", str(exc)) from None
    tolerances = _merge("tolerances", doc.get("tolerances"), DEFAULT_TOLERANCES[command])
    for key, value in tolerances.items():
        if value is not None:
            _number(f"tolerances.{key}", value)
    options = _merge("options", doc.get("options"), DEFAULT_OPTIONS[command])
    if command == "recover":
        K = options.get("K_list")
        if K is None:
            raise ConfigError("options.K_list", "is required for recover")
        if (not isinstance(K, list) or len(K) < 2
                or any(isinstance(k, bool) or not isinstance(k, (int, float)) or k <= 0 for k in K)
                or any(b <= a for a, b in zip(K, K[1:]))):
            raise ConfigError("options.K_list", "needs at least two increasing positive values")
    if command == "evolve":
        for key in ("t", "dt", "dealias_fraction"):
            _number(f"options.{key}", options[key])
        if not options["dt"] > 0:
            raise ConfigError("options.dt", "must be positive")
        if not options["t"] >= 0:
            raise ConfigError("options.t", "must be non-negative")
    workers = doc.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers", "must be a positive integer or null")
    out = output_override or os.environ.get(OUTPUT_ENV) or doc.get("output_dir") or "output"
    if not isinstance(out, str):
        raise ConfigError("output_dir", "must be a string")
    base = base_dir or Path.cwd()
    out_path = Path(out) if Path(out).is_absolute() else base / out
    return RunConfig(command, grid, potential, lams, chi, tolerances, out_path, workers, options, base)


def build_potential(cfg: RunConfig) -> Potential:
    """Sample the configured potential on the configured grid."""
    desc = dict(cfg.potential)
    kind = desc.pop("kind")
    if kind == "tabulated":
        path = Path(desc["path"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        try:
            return load_tabulated(cfg.grid, path)
        except (OSError, ValueError) as exc:
            raise ConfigError("potential.path", str(exc)) from None
    if kind == "nongeneric":
        _, u = find_nongeneric(cfg.grid, float(desc.get("amplitude", 0.5)), bracket=(-0.1, 0.0),
                               chi=cfg.chi)
        return u
    return family_potential(cfg.grid, kind, **{k: float(v) for k, v in desc.items()})


# ---------------------------------------------------------------------------
# output helpers


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        return [float(np.real(obj)), float(np.imag(obj))]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _coeff_rows(lams, values):
    return [(lam, z.real, z.imag, abs(z)) for lam, z in zip(lams, np.asarray(values, dtype=complex))]


def _eigen_rows(eigen):
    return [(e.lambda_j, e.gamma_j.real, e.gamma_j.imag, e.residue_residual) for e in eigen]


EIGEN_HEADER = ("lambda_j", "gamma_j_re", "gamma_j_im", "residue_residual")
COEFF_HEADER = ("lambda", "re", "im", "abs")


def _breaches(values: dict, limits: dict) -> list:
    """Names whose value exceeds its limit (limits of ``None`` are skipped)."""
    out = []
    for name, value in values.items():
        limit = limits.get(name)
        if limit is not None and not value <= limit:
            out.append(name)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_transform(cfg: RunConfig) -> int:
    """Write ``scattering_data.json``, ``beta.csv``, ``gamma_coeff.csv`` and ``eigen.csv``."""
    u = build_potential(cfg)
    opts = cfg.options
    tcfg = TransformConfig(lambda_grid=cfg.lambda_grid, chi=cfg.chi,
                           tol_edge=cfg.tolerances["tol_edge"], workers=cfg.workers,
                           with_derivatives=bool(opts["with_derivatives"]),
                           relations=bool(opts["relations"]))
    data = direct_transform(u, tcfg)
    out = cfg.output_dir
    (out / "scattering_data.json").write_text(data.to_json(indent=2, sort_keys=True) + "\n")
    _write_csv(out / "beta.csv", COEFF_HEADER, _coeff_rows(data.lambda_grid, data.beta))
    _write_csv(out / "gamma_coeff.csv", COEFF_HEADER, _coeff_rows(data.lambda_grid, data.gamma_coeff))
    _write_csv(out / "eigen.csv", EIGEN_HEADER, _eigen_rows(data.eigen))
    log.info("transform: %d eigenvalues, %d lambda values", len(data.eigen), len(data.lambda_grid))
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    """Write ``eigen.csv`` and ``spectrum.json``."""
    u = build_potential(cfg)
    eigen = eigen_data(u, cfg.tolerances["tol_edge"])
    out = cfg.output_dir
    _write_csv(out / "eigen.csv", EIGEN_HEADER, _eigen_rows(eigen))
    _write_json(out / "spectrum.json", {"eigen": [e.to_dict() for e in eigen]})
    log.info("spectrum: %d eigenvalues", len(eigen))
    return EXIT_OK


def _verify_report(cfg: RunConfig, u: Potential) -> dict:
    tol, opts = cfg.tolerances, cfg.options
    relations = verify_relations(u, cfg.lambda_grid, cfg.chi, cfg.workers)
    failures = _breaches(relations, tol)
    report = {"relations": relations}

    try:
        kinf = check_kinf(u, opts["kinf_K"], opts["kinf_lambdas"], opts["kinf_beta_lambdas"])
        report["kinf"] = kinf.to_dict()
        slope = kinf.second_order_slope
        exact = max(kinf.second_order) == 0
        if not exact and not tol["kinf_slope_min"] <= slope <= tol["kinf_slope_max"]:
            failures.append("kinf_slope")
        failures += _breaches({"kinf_gamma_error": max(kinf.gamma_error),
                               "kinf_me_phase_error": max(kinf.me_phase_error)}, tol)
    except NotResolved as exc:
        report["kinf"] = {"not_resolved": str(exc)}
        failures.append("kinf_not_resolved")

    k0 = check_k0(u, cfg.chi, tuple(opts["k0_exponents"]))
    report["k0"] = k0.to_dict()
    if k0.is_generic and k0.beta_ratio:
        dev = max(abs(r - 1) for r in k0.beta_ratio)
        report["k0"]["max_ratio_deviation"] = dev
        failures += _breaches({"k0_beta_ratio": dev}, tol)
    report["failures"] = failures
    report["passed"] = not failures
    return report


def cmd_verify(cfg: RunConfig) -> int:
    """Relation residuals and asymptotic checks; exit 1 on any breach."""
    u = build_potential(cfg)
    report = _verify_report(cfg, u)
    report["thresholds"] = cfg.tolerances
    _write_json(cfg.output_dir / "verify_report.json", report)
    if report["failures"]:
        log.warning("verify: thresholds exceeded: %s", ", ".join(report["failures"]))
        return EXIT_BREACH
    log.info("verify: all residuals within thresholds")
    return EXIT_OK


def cmd_evolve(cfg: RunConfig) -> int:
    """Cross-validate the scattering-data flow against the PDE solver."""
    u = build_potential(cfg)
    opts, tol = cfg.options, cfg.tolerances
    ecfg = EvolutionConfig(t_final=float(opts["t"]), dt=float(opts["dt"]),
                           dealias_fraction=float(opts["dealias_fraction"]))
    tcfg = TransformConfig(lambda_grid=cfg.lambda_grid, chi=cfg.chi, tol_edge=tol["tol_edge"],
                           workers=cfg.workers, with_derivatives=False, relations=False)
    cv = crossvalidate(u, ecfg.t_final, ecfg, tcfg, tuple(opts["phase_lambdas"]))
    failures = []
    if cv.eigen_count[0] != cv.eigen_count[1]:
        failures.append("eigen_count")
    if any(d > tol["eigenvalue_drift"] for d in cv.eigenvalue_drift):
        failures.append("eigenvalue_drift")
    for err, shift in zip(cv.gamma_law_error, cv.gamma_shift_expected):
        if err > tol["gamma_law_relative"] * abs(shift) + tol["gamma_law_absolute"]:
            failures.append("gamma_law")
            break
    failures += _breaches({"beta_error": cv.beta_error, "gamma_coeff_error": cv.gamma_coeff_error,
                           "beta_phase_error": max(cv.beta_phase_error.values(), default=0.0)}, tol)
    report = {**cv.to_dict(), "thresholds": tol, "failures": failures, "passed": not failures}
    _write_json(cfg.output_dir / "evolution_report.json", report)
    if failures:
        log.warning("evolve: thresholds exceeded: %s", ", ".join(failures))
        return EXIT_BREACH
    return EXIT_OK


def cmd_recover(cfg: RunConfig) -> int:
    """Write ``recovered_u.csv`` and ``recover_report.json``."""
    u = build_potential(cfg)
    res = recover_potential(u, tuple(float(k) for k in cfg.options["K_list"]))
    out = cfg.output_dir
    _write_csv(out / "recovered_u.csv", ("x", "u_true", "u_rec", "abs_err"),
               zip(res.x, res.u_true, res.u_rec, res.abs_err))
    limit = cfg.tolerances["recovery_error"]
    passed = res.error <= limit
    _write_json(out / "recover_report.json", {"error": res.error, "level_errors": res.level_errors,
                                              "K_list": cfg.options["K_list"], "threshold": limit,
                                              "passed": passed})
    log.info("recover: sup error %.3e", res.error)
    return EXIT_OK if passed else EXIT_BREACH


HANDLERS = {"transform": cmd_transform, "verify": cmd_verify, "evolve": cmd_evolve,
            "recover": cmd_recover, "spectrum": cmd_spectrum}


# ---------------------------------------------------------------------------
# entry point


def _error(code: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message, **extra}) + "\n")


def run(command: str, config_path: str, output_dir: str | None = None) -> int:
    """Run one command and return its exit code."""
    path = Path(config_path)
    try:
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        cfg = parse_config(doc, command, path.parent.resolve(), output_dir)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        return HANDLERS[command](cfg)
    except ConfigError as exc:
        _error("config_error", exc.message, field=exc.field)
        return EXIT_CONFIG
    except SolverError as exc:
        _error(getattr(exc, "code", "solver_error"), str(exc))
        return EXIT_SOLVER


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bo-scattering", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="JSON configuration file")
    parser.add_argument("--output-dir", help="override the configured output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return run(args.command, args.config, args.output_dir)


if __name__ == "__main__":
    sys.exit(main())
