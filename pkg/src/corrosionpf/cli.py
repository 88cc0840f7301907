"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 solver or self-test failure,
4 wall-clock budget exceeded (a checkpoint is written first).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, format_config, load_config
from .solver import BudgetExceeded, SolverFailure, load_checkpoint, save_checkpoint

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BUDGET = 0, 2, 3, 4
CHECKPOINT = "checkpoint.bin"

log = logging.getLogger("corrosionpf")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="corrosionpf", description="Phase-field pitting and stress-corrosion simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("config", help="configuration file (section.key = value)")
        sp.add_argument("--seed", type=int, help="override scenario.seed")
        sp.add_argument("--out-dir", help="override output.out_dir")
        sp.add_argument("--max-wall-sec", type=float, help="wall-clock budget in seconds")

    r = sub.add_parser("run", help="run one scenario")
    common(r)
    r.add_argument("--resume", action="store_true", help="continue from the checkpoint in the output directory")
    b = sub.add_parser("batch", help="microstructure statistics study")
    common(b)
    b.add_argument("--workers", type=int, help="parallel worker processes")
    b.add_argument("--full-matrix", action="store_true", help="use the full published study matrix")
    c = sub.add_parser("convergence", help="mesh and time-step refinement table")
    common(c)
    sub.add_parser("validate", help="fast built-in self-checks")
    return p


def _load(args) -> RunConfig:
    rc = load_config(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out_dir is not None:
        over["out_dir"] = args.out_dir
    if over:
        rc.scenario = rc.scenario.replace(**over)
    return rc


def cmd_run(args) -> int:
    from .scenarios import simulate

    rc = _load(args)
    cfg = rc.scenario
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.used").write_text(format_config(cfg))
    state, records = None, None
    if args.resume:
        ck = out / CHECKPOINT
        if not ck.exists():
            raise ConfigError(f"--resume: no checkpoint at {ck}")
        state = load_checkpoint(ck)
        records = _read_records(out / "metrics.csv")
        log.info("resuming at t = %.4g s", state.t)
    counter = {"n": 0}

    def on_output(built, s, recs):
        io.write_run_outputs(out, recs)
        every = cfg.snapshot_every
        if s.t == 0 or s.t >= cfg.t_end * (1 - 1e-12) or (every and counter["n"] % every == 0):
            io.write_snapshot(out, counter["n"], s, built.setup.grid)
        counter["n"] += 1
        log.info("t = %9.4g s  pit depth = %.4g m", s.t, recs[-1]["pit_depth"])

    def checkpoint(s):
        save_checkpoint(out / CHECKPOINT, s)

    if state is not None:
        counter["n"] = len(records)
    built, final, records = simulate(cfg, callback=on_output, max_wall_sec=args.max_wall_sec,
                                     checkpoint=checkpoint, state=state, records=records)
    io.write_run_outputs(out, records)
    ck = out / CHECKPOINT
    if ck.exists():
        ck.unlink()
    print(f"finished t = {final.t:.6g} s, pit depth = {records[-1]['pit_depth']:.6g} m; outputs in {out}")
    return EXIT_OK


def _read_records(path) -> list[dict]:
    if not Path(path).exists():
        return []
    cols = io.read_metrics(path)
    n = len(cols["t"])
    recs = [{k: float(v[i]) for k, v in cols.items()} for i in range(n)]
    for r in recs:
        r["max_defect_depth"] = r["pit_depth"]
    return recs


def cmd_batch(args) -> int:
    from .studies import BATCH_COLUMNS, FULL_MATRIX, batch_study, write_table

    rc = _load(args)
    b = rc.batch
    matrix = dict(n_realizations=b.n_realizations, grain_sizes=b.grain_sizes, delta_E=b.delta_E,
                   strains=b.strains, potentials=b.potentials)
    if args.full_matrix or b.full_matrix:
        matrix.update(FULL_MATRIX)
    rows = batch_study(rc.scenario, matrix["n_realizations"], matrix["grain_sizes"], matrix["delta_E"],
                       matrix["strains"], matrix["potentials"], args.workers or b.workers)
    out = Path(rc.scenario.out_dir)
    write_table(out / "batch.csv", [r.as_record() for r in rows], BATCH_COLUMNS)
    failed = sum(r.n_failed for r in rows)
    print(f"{len(rows)} conditions written to {out / 'batch.csv'} ({failed} failed realisations)")
    return EXIT_OK


def cmd_convergence(args) -> int:
    from .studies import CONVERGENCE_COLUMNS, convergence_study, write_table

    rc = _load(args)
    rows = convergence_study(rc.scenario, rc.convergence.levels, rc.convergence.dt_halving)
    out = Path(rc.scenario.out_dir)
    write_table(out / "convergence.csv", rows, CONVERGENCE_COLUMNS)
    for r in rows:
        print(f"{r['label']:>12s}  dx = {r['dx']:.3e}  dt_max = {r['dt_max']:.3g}  "
              f"pit depth = {r['pit_depth']:.6e}  rel diff = {r['rel_diff']:.2e}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .selfcheck import run_checks

    results = run_checks()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SOLVER


COMMANDS = {"run": cmd_run, "batch": cmd_batch, "convergence": cmd_convergence, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(over="ignore", under="ignore")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}; rerun with --resume to continue", file=sys.stderr)
        return EXIT_BUDGET
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        # inconsistent geometry or parameters detected while building the scenario
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
