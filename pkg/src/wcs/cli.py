"""Command line interface: certify, recover, construct, experiment.

Every command reads a JSON config with a fixed key schema (unknown keys are
rejected), emits a schema-versioned JSON report on stdout, and isolates
timing in a separate telemetry object so everything else is byte
reproducible for a given config and seed. Exit codes: 0 success/satisfied,
2 property violated or checks failed, 1 errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from .certify import (
    CertificationReport,
    check_robust_nsp_kernel,
    nsp_constant,
    rip_constant,
)
from .construct import (
    ConstructionError,
    build_counterexample,
    dft_matrix,
    sample_partial_unitary,
    unitary_with_flat_first_row,
)
from .core import BudgetError, EnumerationCapError, SparseModel
from .experiments import EXPERIMENTS
from .matrixio import MatrixFormatError, read_matrix, read_vector, write_matrix, write_vector
from .solver import (
    ConvergenceError,
    InfeasibleProblemError,
    solve_weighted_bp,
    solve_weighted_bpdn,
)

REPORT_SCHEMA = "wcs-report/1"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATED = 2


class ConfigError(ValueError):
    """Config file fails schema validation."""


# ---------------------------------------------------------------------------
# config schema handling

_SCHEMAS: dict[str, dict[str, set[str]]] = {
    "certify": {
        "required": {"property", "model", "s", "weights"},
        "optional": {"matrix", "generator", "rho", "gamma", "samples", "threshold", "seed"},
    },
    "recover": {
        "required": {"weights", "epsilon"},
        "optional": {"matrix", "generator", "y", "y_file", "rel_tol", "max_iter", "seed"},
    },
    "construct": {
        "required": {"kind"},
        "optional": {
            "n", "m", "s", "seed", "exclude_first_row", "with_replacement",
            "model", "weights", "certify_inner", "base",
        },
    },
    "experiment": {
        "required": {"name"},
        "optional": {
            "trials", "seed", "noise_levels", "weight_floors", "factors",
            "budget_seconds", "start_index", "robust_dim", "robust_budget",
        },
    },
}


def _load_config(path: str, command: str) -> dict[str, Any]:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    schema = _SCHEMAS[command]
    unknown = set(cfg) - schema["required"] - schema["optional"]
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    missing = schema["required"] - set(cfg)
    if missing:
        raise ConfigError(f"missing required config keys for {command}: {sorted(missing)}")
    return cfg


def _parse_model(name: str) -> SparseModel:
    try:
        return SparseModel(name)
    except ValueError:
        raise ConfigError(
            f"unknown model {name!r}; expected 'cardinality' or 'weighted-cardinality'"
        ) from None


def _require(obj: dict[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise ConfigError(f"{where} needs the key {key!r}")
    return obj[key]


def _load_matrix(cfg: dict[str, Any]) -> np.ndarray:
    if ("matrix" in cfg) == ("generator" in cfg):
        raise ConfigError("exactly one of 'matrix' (a file path) or 'generator' is required")
    if "matrix" in cfg:
        M, _ = read_matrix(cfg["matrix"])
        return M
    gen = cfg["generator"]
    if not isinstance(gen, dict) or "kind" not in gen:
        raise ConfigError("'generator' must be an object with a 'kind' key")
    kind = gen["kind"]
    if kind == "identity":
        return np.eye(int(_require(gen, "n", "identity generator")))
    if kind == "dft-rows":
        sm = sample_partial_unitary(
            dft_matrix(int(_require(gen, "n", "dft-rows generator"))),
            int(_require(gen, "m", "dft-rows generator")),
            seed=int(gen.get("seed", 0)),
            exclude_first_row=bool(gen.get("exclude_first_row", False)),
            with_replacement=bool(gen.get("with_replacement", False)),
        )
        return sm.matrix
    if kind == "orthogonal-rows":
        base = unitary_with_flat_first_row(
            int(_require(gen, "n", "orthogonal-rows generator")), seed=int(gen.get("seed", 0)), real=True
        )
        sm = sample_partial_unitary(
            base,
            int(_require(gen, "m", "orthogonal-rows generator")),
            seed=int(gen.get("seed", 0)),
            exclude_first_row=bool(gen.get("exclude_first_row", False)),
        )
        return sm.matrix
    if kind == "gaussian":
        rng = np.random.default_rng(int(gen.get("seed", 0)))
        A = rng.standard_normal((int(_require(gen, "m", "gaussian generator")), int(_require(gen, "n", "gaussian generator"))))
        if gen.get("normalize_columns", True):
            A /= np.linalg.norm(A, axis=0)
        return A
    raise ConfigError(f"unknown generator kind {kind!r}")


def _load_weights(cfg: dict[str, Any], n: int) -> np.ndarray:
    spec = cfg["weights"]
    if isinstance(spec, list):
        spec = {"kind": "explicit", "values": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("'weights' must be a list or an object with a 'kind' key")
    kind = spec["kind"]
    if kind == "uniform":
        return np.full(n, float(spec.get("value", 1.0)))
    if kind == "explicit":
        w = np.asarray(spec["values"], dtype=float)
        if w.size != n:
            raise ConfigError(f"weights have length {w.size}, matrix has {n} columns")
        return w
    if kind == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        return rng.uniform(float(spec["low"]), float(spec["high"]), n)
    raise ConfigError(f"unknown weights kind {kind!r}")


def _parse_measurements(cfg: dict[str, Any], m: int) -> np.ndarray:
    if ("y" in cfg) == ("y_file" in cfg):
        raise ConfigError("exactly one of 'y' or 'y_file' is required")
    if "y_file" in cfg:
        y, _ = read_vector(cfg["y_file"])
    else:
        raw = cfg["y"]
        entries = []
        complex_seen = False
        for item in raw:
            if isinstance(item, (list, tuple)):
                if len(item) != 2:
                    raise ConfigError("complex measurement entries must be [re, im] pairs")
                entries.append(complex(item[0], item[1]))
                complex_seen = True
            else:
                entries.append(float(item))
        y = np.asarray(entries, dtype=complex if complex_seen else float)
    if y.size != m:
        raise ConfigError(f"measurement vector has length {y.size}, matrix has {m} rows")
    return y


# ---------------------------------------------------------------------------
# JSON emission


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), float("-inf"))):
        return repr(obj)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"real": obj.real.tolist(), "imag": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    if isinstance(obj, SparseModel):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__}
    return obj


def _emit(command: str, result: Any, started: float, out_dir: Path | None) -> None:
    report = {
        "schema": REPORT_SCHEMA,
        "command": command,
        "result": _jsonable(result),
        "telemetry": {"wall_time_s": round(time.monotonic() - started, 6)},
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out_dir is not None:
        (out_dir / "report.json").write_text(text + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_certify(cfg: dict[str, Any], out_dir: Path | None, started: float, workers: int) -> int:
    A = _load_matrix(cfg)
    w = _load_weights(cfg, A.shape[1])
    model = _parse_model(cfg["model"])
    s = float(cfg["s"])
    prop = cfg["property"]
    if prop == "rip":
        result = rip_constant(A, w, model, s)
        threshold = cfg.get("threshold")
        report = CertificationReport.from_rip(
            result, w, None if threshold is None else float(threshold)
        )
    elif prop == "nsp":
        report = CertificationReport.from_nsp(
            nsp_constant(A, w, model, s, seed=int(cfg.get("seed", 0))), w
        )
    elif prop == "robust-nsp":
        if model is not SparseModel.WEIGHTED_CARDINALITY:
            raise ConfigError("robust-nsp certification uses the weighted-cardinality model")
        if "rho" not in cfg or "gamma" not in cfg:
            raise ConfigError("robust-nsp certification needs 'rho' and 'gamma'")
        report = CertificationReport.from_robust(
            check_robust_nsp_kernel(
                A, w, s, float(cfg["rho"]), float(cfg["gamma"]),
                samples=int(cfg.get("samples", 100)), seed=int(cfg.get("seed", 0)),
            ),
            w,
        )
    else:
        raise ConfigError(f"unknown property {prop!r}; expected rip, nsp, or robust-nsp")
    _emit("certify", report, started, out_dir)
    return EXIT_VIOLATED if report.satisfied is False else EXIT_OK


def cmd_recover(cfg: dict[str, Any], out_dir: Path | None, started: float, workers: int) -> int:
    A = _load_matrix(cfg)
    w = _load_weights(cfg, A.shape[1])
    y = _parse_measurements(cfg, A.shape[0])
    epsilon = float(cfg["epsilon"])
    kwargs: dict[str, Any] = {}
    if "rel_tol" in cfg:
        kwargs["rel_tol"] = float(cfg["rel_tol"])
    if "max_iter" in cfg:
        kwargs["max_iter"] = int(cfg["max_iter"])
    if epsilon == 0:
        outcome = solve_weighted_bp(A, y, w, **kwargs)
    else:
        outcome = solve_weighted_bpdn(A, y, w, epsilon, **kwargs)
    if out_dir is not None:
        write_vector(out_dir / "solution.wcsvec", outcome.x)
    payload = _jsonable(outcome)
    payload.pop("diagnostics", None)
    payload.pop("x", None)
    _emit("recover", payload, started, out_dir)
    return EXIT_OK


def cmd_construct(cfg: dict[str, Any], out_dir: Path | None, started: float, workers: int) -> int:
    out = out_dir if out_dir is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    kind = cfg["kind"]
    if kind in ("partial-dft", "orthogonal-rows", "partial-unitary"):
        m = int(_require(cfg, "m", kind))
        if kind == "partial-unitary":
            if "base" not in cfg:
                raise ConfigError("'partial-unitary' needs 'base', a unitary matrix file")
            base, _ = read_matrix(cfg["base"])
            n = base.shape[0]
        else:
            n = int(_require(cfg, "n", kind))
            base = (
                dft_matrix(n)
                if kind == "partial-dft"
                else unitary_with_flat_first_row(n, seed=int(cfg.get("seed", 0)), real=True)
            )
        sm = sample_partial_unitary(
            base, m, seed=int(cfg.get("seed", 0)),
            exclude_first_row=bool(cfg.get("exclude_first_row", False)),
            with_replacement=bool(cfg.get("with_replacement", False)),
        )
        write_matrix(
            out / "matrix.wcsmat",
            sm.matrix,
            provenance=[
                f"source {kind}",
                f"rows {list(sm.provenance.rows)}",
                f"seed {cfg.get('seed', 0)}",
            ],
        )
        _emit("construct", {"kind": kind, "provenance": sm.provenance}, started, out_dir)
        return EXIT_OK
    if kind != "counterexample":
        raise ConfigError(f"unknown construct kind {kind!r}")

    n = int(_require(cfg, "n", "counterexample"))
    m = int(_require(cfg, "m", "counterexample"))
    s = float(_require(cfg, "s", "counterexample"))
    model = _parse_model(cfg.get("model", "weighted-cardinality"))
    w = _load_weights(cfg, n)
    bundle = build_counterexample(
        w, s, m, n, model, seed=int(cfg.get("seed", 0)),
        certify_inner=cfg.get("certify_inner", "auto"),
    )
    write_matrix(out / "phi.wcsmat", bundle.phi.matrix, provenance=[f"seed {cfg.get('seed', 0)}"])
    write_matrix(out / "inner.wcsmat", bundle.inner.matrix)
    for name, vec in [
        ("d", bundle.d), ("phi1", bundle.phi1), ("x0", bundle.x0),
        ("xhat", bundle.xhat), ("z", bundle.z), ("y", bundle.y), ("weights", bundle.weights),
    ]:
        write_vector(out / f"{name}.wcsvec", vec)
    checks = {
        "orthonormality": bundle.diagnostics["orthonormality_error"] <= 1e-10,
        "d_in_kernel": bundle.diagnostics["d_kernel_residual"] <= 1e-9,
        "phi1_orthogonal_to_d": bundle.diagnostics["phi1_dot_d"] <= 1e-10,
        "rho_residual": bundle.diagnostics["rho_residual_relative"] <= 1e-8,
        "alpha_in_bracket": bundle.diagnostics["alpha_in_bracket"],
    }
    manifest = {
        "kind": "counterexample",
        "model": model.value,
        "dimensions": {"N": n, "m": m, "s": s, "k": bundle.k},
        "alpha": bundle.alpha,
        "phi_normalizer": bundle.phi_normalizer,
        "inner_gamma": bundle.inner_gamma,
        "inner_certified": bundle.inner_certified,
        "diagnostics": bundle.diagnostics,
        "premises": bundle.premises,
        "invariant_checks": checks,
    }
    (out / "manifest.json").write_text(
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n"
    )
    _emit("construct", manifest, started, out_dir)
    return EXIT_OK if all(checks.values()) else EXIT_VIOLATED


def cmd_experiment(cfg: dict[str, Any], out_dir: Path | None, started: float, workers: int) -> int:
    name = cfg["name"]
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")
    rows, summary = EXPERIMENTS[name](cfg, workers=workers)
    out = out_dir if out_dir is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    if rows:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    _emit("experiment", {"summary": summary, "csv": csv_path.name}, started, out_dir)
    return EXIT_VIOLATED if summary.get("violations", 0) else EXIT_OK


_COMMANDS = {
    "certify": cmd_certify,
    "recover": cmd_recover,
    "construct": cmd_construct,
    "experiment": cmd_experiment,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wcs",
        description="Weighted l1 recovery, certification, and counterexample tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="directory for output files")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    started = time.monotonic()
    try:
        cfg = _load_config(args.config, args.command)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out_dir = None
        if args.out is not None:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out_dir, started, max(1, args.workers))
    except (
        ConfigError,
        MatrixFormatError,
        ConstructionError,
        BudgetError,
        EnumerationCapError,
        InfeasibleProblemError,
        ConvergenceError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
