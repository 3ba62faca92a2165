"""qleak: leakage, encoder search, qubit sweeps and bound audits from the command line.

Usage:
  qleak leakage --ensemble basis --alphabet 4 --dim 4
  qleak optimize --alphabet 8 --dim 8 --restarts 100 --iters 100 --mu 0.1 --seed 1 --out runs/
  qleak sweep --alphabet 8 --qubits 1:4 --out sweep.csv
  qleak verify --trials 200 --dim-max 4 --seed 3 --out audit.csv

Results go to stdout (or the --out path), logs to stderr. Exit codes: 0 ok,
1 bad configuration, 2 invalid input, 3 solver did not converge, 4 leakage
bound violated.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import pydantic
from pydantic import BaseModel, ConfigDict, Field

from ..config import EncodingProblem, OptimizerConfig, SolverConfig, get_runtime_config
from ..core.convergence import detect_convergence_index, summarize_traces
from ..core.encoder import basis_encoding, optimize_encoding, sweep_qubits
from ..core.encodings import angle_encoding
from ..core.errors import InvalidArgumentError, QuantumLeakageError
from ..core.inference import audit_bounds, audit_sweep, counterexample_pipeline, AUDIT_COLUMNS
from ..core.leakage import compute_leakage
from ..core.serialize import (
    CSV_FLOAT_FORMAT,
    ensemble_to_json,
    load_ensemble,
    runs_frame,
    sweep_frame,
    trace_frame,
    write_csv,
    write_json,
)
from ..core.stochastic import STREAM_ENSEMBLE, derive_rng, random_pure_ensemble

logger = logging.getLogger("quantum_leakage.cli")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_BOUND_VIOLATION = 4

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class ConfigError(Exception):
    """Configuration could not be read or failed schema validation."""


# ---- Run configurations ----

class _RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = 0
    out: Optional[str] = None
    workers: Optional[int] = Field(default=None, ge=1)


class LeakageRunConfig(_RunConfig):
    ensemble: Literal["basis", "random", "angle", "file"] = "basis"
    ensemble_file: Optional[str] = None
    alphabet: int = Field(default=2, ge=1)
    dim: int = Field(default=2, ge=1)
    tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=5000, ge=1)
    restarts: int = Field(default=5, ge=1)
    outcomes: Optional[int] = Field(default=None, ge=1)
    trace: Optional[str] = None

    def solver(self) -> SolverConfig:
        return SolverConfig(tol=self.tol, max_iter=self.max_iter, restarts=self.restarts,
                            outcome_count=self.outcomes, seed=self.seed)


class OptimizeRunConfig(_RunConfig):
    alphabet: int = Field(default=8, ge=1)
    dim: int = Field(default=8, ge=1)
    mu: float = Field(default=0.1, gt=0)
    iters: int = Field(default=100, ge=0)
    restarts: int = Field(default=100, ge=1)
    tol: float = Field(default=1e-9, gt=0)

    def optimizer(self) -> OptimizerConfig:
        base = OptimizerConfig().solver
        return OptimizerConfig(step_size=self.mu, iterations=self.iters, restarts=self.restarts,
                               seed=self.seed, solver=base.model_copy(update={"tol": self.tol}))


class SweepRunConfig(OptimizeRunConfig):
    qubits: str = "1:4"
    iters: int = Field(default=30, ge=0)
    restarts: int = Field(default=10, ge=1)

    def qubit_range(self) -> range:
        lo, sep, hi = self.qubits.partition(":")
        try:
            start = int(lo)
            stop = int(hi) if sep else start
        except ValueError:
            raise InvalidArgumentError(f"qubit range must look like 'a:b', got {self.qubits!r}")
        if start < 0 or stop < start:
            raise InvalidArgumentError(f"empty or negative qubit range {self.qubits!r}")
        return range(start, stop + 1)


class VerifyRunConfig(_RunConfig):
    trials: int = Field(default=200, ge=0)
    dim_max: int = Field(default=4, ge=1)
    alphabet_max: int = Field(default=4, ge=1)
    tol: float = Field(default=1e-10, gt=0)
    counterexample: bool = False
    counterexample_dim: int = Field(default=8, ge=1)


RUN_CONFIGS = {
    "leakage": LeakageRunConfig,
    "optimize": OptimizeRunConfig,
    "sweep": SweepRunConfig,
    "verify": VerifyRunConfig,
}


def load_run_config(command: str, flags: Dict[str, Any], config_path: Optional[str]) -> _RunConfig:
    """Merge a JSON config file with command-line flags (flags win) and validate."""
    values: Dict[str, Any] = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {config_path} must hold a JSON object")
        values.update(loaded)
    values.update(flags)
    try:
        return RUN_CONFIGS[command].model_validate(values)
    except pydantic.ValidationError as exc:
        raise ConfigError(str(exc)) from exc


# ---- Commands ----

def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _qubits_for(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or 2 ** n != dim:
        raise InvalidArgumentError(f"angle encoding needs a power-of-two dim >= 2, got {dim}")
    return n


def cmd_leakage(cfg: LeakageRunConfig) -> int:
    if cfg.ensemble_file:
        ensemble = load_ensemble(cfg.ensemble_file)
    elif cfg.ensemble == "file":
        raise InvalidArgumentError("--ensemble file needs --ensemble-file")
    elif cfg.ensemble == "basis":
        ensemble = basis_encoding(cfg.alphabet, cfg.dim)
    elif cfg.ensemble == "angle":
        ensemble = angle_encoding(cfg.alphabet, _qubits_for(cfg.dim))
    else:
        ensemble = random_pure_ensemble(cfg.alphabet, cfg.dim, derive_rng(cfg.seed, STREAM_ENSEMBLE, 0))

    result = compute_leakage(ensemble, cfg.solver(), workers=cfg.workers)
    _emit(json.dumps(result.to_dict(), indent=2) + "\n", cfg.out)
    if cfg.trace:
        write_csv(trace_frame(result.objective_trace), cfg.trace)
    if not result.converged:
        logger.error("solver stopped after %d iterations without converging", result.iterations)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_optimize(cfg: OptimizeRunConfig) -> int:
    problem = EncodingProblem(alphabet_size=cfg.alphabet, dim=cfg.dim)
    run = optimize_encoding(problem, cfg.optimizer(), workers=cfg.workers)
    summary = summarize_traces(run.traces)
    report = {
        "best_leakage_bits": run.best_leakage_bits,
        "best_restart": run.best_restart,
        "final_median_bits": float(summary["median_bits"].iloc[-1]),
        "final_min_bits": float(summary["min_bits"].iloc[-1]),
        "final_max_bits": float(summary["max_bits"].iloc[-1]),
        "convergence_iteration": detect_convergence_index(summary["median_bits"].tolist()),
        "non_converged_solves": len(run.non_converged),
    }
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(runs_frame(run.traces), out / "runs.csv")
        write_csv(summary, out / "summary.csv")
        write_json(ensemble_to_json(run.best_ensemble), out / "best_ensemble.json")
    sys.stdout.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_sweep(cfg: SweepRunConfig) -> int:
    points = sweep_qubits(cfg.alphabet, cfg.qubit_range(), cfg.optimizer(), workers=cfg.workers)
    frame = sweep_frame(points)
    if cfg.out:
        write_csv(frame, cfg.out)
    else:
        sys.stdout.write(frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT))
    return EXIT_OK


def cmd_verify(cfg: VerifyRunConfig) -> int:
    solver = SolverConfig(tol=cfg.tol, seed=cfg.seed)
    if cfg.counterexample:
        pipeline, joint = counterexample_pipeline(cfg.counterexample_dim)
        report = audit_bounds(pipeline, joint, solver, workers=cfg.workers)
        payload = {"dim": cfg.counterexample_dim, **report.to_dict()}
        _emit(json.dumps(payload, indent=2) + "\n", cfg.out)
        return EXIT_OK if report.corrected_holds else EXIT_BOUND_VIOLATION

    frame = audit_sweep(cfg.trials, cfg.dim_max, cfg.alphabet_max, cfg.seed, solver, workers=cfg.workers)
    frame = frame[AUDIT_COLUMNS]
    if cfg.out:
        write_csv(frame, cfg.out)
    else:
        sys.stdout.write(frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT))
    violations = int((~frame["corrected_holds"].astype(bool)).sum())
    if violations:
        logger.error("%d of %d pipelines violate accuracy <= 2^Q max P(z)", violations, len(frame))
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


COMMANDS = {
    "leakage": cmd_leakage,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


# ---- Argument parsing ----

def build_parser() -> argparse.ArgumentParser:
    # Flags default to SUPPRESS so only the ones given override the config file.
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--out", help="Output path (file, or directory for optimize)")
    common.add_argument("--config", default=None, help="JSON config file; flags override its values")
    common.add_argument("--tol", type=float, help="Relative objective change at which the solver stops")
    common.add_argument("--workers", type=int, help="Worker processes for restarts/trials")
    common.add_argument("--log-level", dest="log_level", default=None, help="Logging level (default from QLEAK_LOG_LEVEL)")

    p = argparse.ArgumentParser(prog="qleak", description="Maximal quantum leakage toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    lk = sub.add_parser("leakage", parents=[common], argument_default=argparse.SUPPRESS,
                        help="Leakage of one ensemble")
    lk.add_argument("--ensemble", choices=["basis", "random", "angle", "file"])
    lk.add_argument("--ensemble-file", dest="ensemble_file", help="JSON ensemble file")
    lk.add_argument("--alphabet", type=int)
    lk.add_argument("--dim", type=int)
    lk.add_argument("--max-iter", dest="max_iter", type=int)
    lk.add_argument("--restarts", type=int)
    lk.add_argument("--outcomes", type=int, help="POVM outcome count (default dim^2)")
    lk.add_argument("--trace", help="Write the objective trace CSV here")

    op = sub.add_parser("optimize", parents=[common], argument_default=argparse.SUPPRESS,
                        help="Search for the leakage-maximizing encoder")
    op.add_argument("--alphabet", type=int)
    op.add_argument("--dim", type=int)
    sw = sub.add_parser("sweep", parents=[common], argument_default=argparse.SUPPRESS,
                        help="Best leakage versus number of qubits")
    sw.add_argument("--alphabet", type=int)
    sw.add_argument("--qubits", help="Inclusive range a:b")
    for sp in (op, sw):
        sp.add_argument("--mu", type=float, help="Ascent step size")
        sp.add_argument("--iters", type=int, help="Ascent iterations per restart")
        sp.add_argument("--restarts", type=int)

    vf = sub.add_parser("verify", parents=[common], argument_default=argparse.SUPPRESS,
                        help="Audit accuracy bounds on random pipelines")
    vf.add_argument("--trials", type=int)
    vf.add_argument("--dim-max", dest="dim_max", type=int)
    vf.add_argument("--alphabet-max", dest="alphabet_max", type=int)
    vf.add_argument("--counterexample", action="store_true")
    vf.add_argument("--counterexample-dim", dest="counterexample_dim", type=int)
    return p


def _setup_logging(level: Optional[str]) -> None:
    name = (level or get_runtime_config().log_level).upper()
    logging.basicConfig(level=getattr(logging, name, logging.WARNING), format=LOG_FORMAT,
                        stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    _setup_logging(args.pop("log_level", None))
    try:
        cfg = load_run_config(command, args, config_path)
    except ConfigError as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    try:
        return COMMANDS[command](cfg)
    except (InvalidArgumentError, QuantumLeakageError, ValueError) as exc:
        logger.error("invalid input: %s", exc)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
