"""Command-line entry point: theory | simulate | reconstruct | evaluate | sweep."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .detector import (
    DetectorModel,
    ProbeEnsemble,
    default_probe_ensemble,
    read_frequency_csv,
    simulate_frequency_table,
    write_frequency_csv,
)
from .errors import SchemaError
from .metrics import (
    discrimination_error,
    imperfect_error,
    povm_fidelity,
    reference_povm,
    theory_curves,
    write_curves_csv,
)
from .pipeline import DEFAULT_BETAS, run_cell, summarize
from .povm import PovmSet
from .receivers import HOMODYNE_MIN_ERROR, kennedy_error
from .tomography import ml_reconstruct, truncate_povm

log = logging.getLogger("kennedy_tomo")

SINGLE_BETA_DEFAULT = -0.70
THEORY_GRID = (-1.5, 0.0, 201)
SWEEP_HEADER = (
    "beta", "n_ok", "n_failed", "pe_mean", "pe_std", "f_plus_mean", "f_minus_mean",
    "pe_ideal", "pe_imperfect", "pe_homodyne",
)


@dataclass
class RunConfig:
    beta: list[float] | None = None
    shots: int = 50_000
    reps: int = 5
    dim: int = 4
    visibility: float = 1.0
    dark_prob: float = 0.0
    seed: int = 0
    out: str = "."
    jobs: int = 1
    input: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def single_beta(self) -> float:
        return self.beta[0] if self.beta else SINGLE_BETA_DEFAULT

    def echo(self, command: str, **more) -> dict[str, Any]:
        d = {k: v for k, v in asdict(self).items() if k != "extra"}
        d.update(command=command, version=__version__, **more)
        return d


_META_KEYS = {"command", "version"}


def load_config_file(path: str) -> dict[str, Any]:
    """Flat JSON object whose keys mirror the long flags (dashes or underscores)."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: cannot read config ({exc})") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: config must be a flat key/value object")
    known = {f.name for f in fields(RunConfig)} - {"extra"}
    out = {}
    for key, value in raw.items():
        name = key.replace("-", "_")
        if name in _META_KEYS:
            continue
        if name not in known:
            raise SchemaError(f"{path}: unknown config key {key!r}")
        if isinstance(value, (dict, list)) and name != "beta":
            raise SchemaError(f"{path}: config value for {key!r} must be scalar")
        out[name] = value
    if "beta" in out and out["beta"] is not None and not isinstance(out["beta"], list):
        out["beta"] = [out["beta"]]
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < flags."""
    values: dict[str, Any] = {}
    if args.config:
        values.update(load_config_file(args.config))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    cfg = RunConfig(**values)
    if cfg.beta is not None:
        cfg.beta = [float(b) for b in cfg.beta]
    return cfg


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".config.json")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# commands


def cmd_theory(cfg: RunConfig) -> int:
    lo, hi, n = THEORY_GRID
    grid = cfg.beta if cfg.beta else list(np.linspace(lo, hi, n))
    model = DetectorModel(0.0, visibility=cfg.visibility, dark_prob=cfg.dark_prob)
    rows = theory_curves(grid, model)
    path = _outdir(cfg) / "theory.csv"
    write_curves_csv(path, rows)
    _write_json(_sidecar(path), cfg.echo("theory"))
    log.info("wrote %d rows to %s", len(rows), path)
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    beta = cfg.single_beta()
    model = DetectorModel(beta, visibility=cfg.visibility, dark_prob=cfg.dark_prob)
    ens = default_probe_ensemble(cfg.dim, shots=cfg.shots, seed=cfg.seed)
    table = simulate_frequency_table(model, ens)
    path = _outdir(cfg) / "frequencies.csv"
    write_frequency_csv(path, ens.probes, table)
    _write_json(_sidecar(path), cfg.echo("simulate", beta=[beta]))
    log.info("wrote %d probes x %d shots to %s", len(ens), cfg.shots, path)
    return 0


def _beta_from_sidecar(csv_path: Path) -> float | None:
    side = _sidecar(csv_path)
    if not side.exists():
        return None
    betas = json.loads(side.read_text(encoding="utf-8")).get("beta")
    return float(betas[0]) if betas else None


def cmd_reconstruct(cfg: RunConfig) -> int:
    if not cfg.input:
        raise SchemaError("reconstruct needs a frequency CSV")
    src = Path(cfg.input)
    probes, table = read_frequency_csv(src)
    shots = table.shots
    beta = cfg.beta[0] if cfg.beta else _beta_from_sidecar(src)
    ens = ProbeEnsemble(probes, shots_per_probe=int(shots.max()), truncation_dim=cfg.dim, seed=cfg.seed)
    povm, report = ml_reconstruct(ens, table)
    echo = cfg.echo("reconstruct", input=str(src), beta=None if beta is None else [beta])
    meta = {"config": echo, "beta_nominal": beta}
    out = _outdir(cfg)
    PovmSet(povm.elements, povm.labels, meta=meta).save(out / "povm.json")
    qubit = truncate_povm(povm, 2)
    PovmSet(qubit.elements, qubit.labels, complete=False, meta=meta).save(out / "povm_qubit.json")
    _write_json(out / "ml_report.json", {"config": echo, **report.to_dict(with_trace=True)})
    if not report.converged:
        log.error("ML iteration did not converge after %d iterations", report.iterations_run)
        return 2
    if not report.constraints_ok:
        log.error("POVM constraints violated by %.3e", report.max_constraint_violation)
        return 2
    return 0


def evaluate_povm(povm: PovmSet, beta: float | None) -> dict:
    qubit = povm if povm.dim == 2 else truncate_povm(povm, 2)
    disc = discrimination_error(qubit, beta)
    doc: dict[str, Any] = {"discrimination": disc.to_dict()}
    if beta is not None:
        doc["fidelity"] = asdict(povm_fidelity(qubit, reference_povm(beta)))
        doc["pe_ideal_theory"] = kennedy_error(beta)
    doc["pe_homodyne"] = HOMODYNE_MIN_ERROR
    return doc


def cmd_evaluate(cfg: RunConfig) -> int:
    if not cfg.input:
        raise SchemaError("evaluate needs a POVM document")
    povm = PovmSet.load(cfg.input)
    if set(povm.labels) != {"+", "-"}:
        raise SchemaError(f"{cfg.input}: POVM labels must be '+' and '-', got {list(povm.labels)}")
    if povm.dim < 2:
        raise SchemaError(f"{cfg.input}: POVM dimension {povm.dim} does not contain the qubit block")
    beta = cfg.beta[0] if cfg.beta else povm.meta.get("beta_nominal")
    doc = evaluate_povm(povm, beta)
    doc["config"] = cfg.echo("evaluate", beta=None if beta is None else [beta])
    _write_json(_outdir(cfg) / "evaluation.json", doc)
    print(json.dumps({k: v for k, v in doc.items() if k != "config"}, indent=1))
    return 0


def _cell_job(args: tuple) -> dict:
    beta, seed, cfg = args
    try:
        res = run_cell(beta, seed, shots=cfg.shots, dim=cfg.dim, visibility=cfg.visibility, dark_prob=cfg.dark_prob)
    except Exception as exc:  # a failed cell is recorded and the sweep goes on
        return {"beta": beta, "seed": seed, "status": "failed", "error": repr(exc)}
    status = "ok" if res.converged else "not_converged"
    return {**res.to_dict(), "status": status}


def sweep_rows(cfg: RunConfig) -> tuple[list[dict], list[dict]]:
    betas = cfg.beta if cfg.beta else list(DEFAULT_BETAS)
    jobs = [(b, cfg.seed + rep, cfg) for b in betas for rep in range(cfg.reps)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            cells = list(pool.map(_cell_job, jobs))
    else:
        cells = [_cell_job(j) for j in jobs]
    rows = []
    for b in betas:
        mine = [c for c in cells if c["beta"] == b]
        ok = [c for c in mine if c["status"] == "ok"]
        pe_mean, pe_std = summarize([c["p_error"] for c in ok])
        fp, _ = summarize([c["f_plus"] for c in ok])
        fm, _ = summarize([c["f_minus"] for c in ok])
        model = DetectorModel(b, visibility=cfg.visibility, dark_prob=cfg.dark_prob)
        rows.append(
            {
                "beta": b, "n_ok": len(ok), "n_failed": len(mine) - len(ok),
                "pe_mean": pe_mean, "pe_std": pe_std, "f_plus_mean": fp, "f_minus_mean": fm,
                "pe_ideal": kennedy_error(b), "pe_imperfect": imperfect_error(model, cfg.dim),
                "pe_homodyne": HOMODYNE_MIN_ERROR,
            }
        )
    return rows, cells


def sweep_csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([r[k] if isinstance(r[k], int) else repr(float(r[k])) for k in SWEEP_HEADER])
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    rows, cells = sweep_rows(cfg)
    cell_dir = out / "cells"
    cell_dir.mkdir(exist_ok=True)
    for c in cells:
        _write_json(cell_dir / f"beta{c['beta']:+.4f}_seed{c['seed']}.json", c)
    path = out / "sweep.csv"
    path.write_text(sweep_csv_text(rows), encoding="utf-8", newline="")
    _write_json(_sidecar(path), cfg.echo("sweep", beta=cfg.beta if cfg.beta else list(DEFAULT_BETAS)))
    failed = sum(r["n_failed"] for r in rows)
    if failed:
        log.error("%d sweep cells failed", failed)
    return 0 if failed == 0 else 1


COMMANDS = {
    "theory": cmd_theory,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--beta", type=float, action="append", help="displacement amplitude (repeatable)")
    common.add_argument("--shots", type=int, help="shots per probe (default 50000)")
    common.add_argument("--reps", type=int, help="repetitions per beta in a sweep (default 5)")
    common.add_argument("--dim", type=int, help="reconstruction dimension (default 4)")
    common.add_argument("--visibility", type=float, help="interference visibility (default 1.0)")
    common.add_argument("--dark-prob", dest="dark_prob", type=float, help="dark-count probability per gate")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--jobs", type=int, help="parallel sweep workers (default 1)")
    common.add_argument("--config", help="JSON file of flag values; flags take precedence")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kennedy-tomo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("theory", parents=[common], help="error-probability curves")
    sub.add_parser("simulate", parents=[common], help="synthetic click counts for the probe ensemble")
    p = sub.add_parser("reconstruct", parents=[common], help="ML POVM from a frequency CSV")
    p.add_argument("input", nargs="?", help="frequency CSV")
    p = sub.add_parser("evaluate", parents=[common], help="error and fidelity of a POVM document")
    p.add_argument("input", nargs="?", help="POVM JSON document")
    sub.add_parser("sweep", parents=[common], help="repeated simulate/reconstruct/evaluate over beta")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
