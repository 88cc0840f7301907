"""Multi-run studies: microstructure statistics and mesh/time-step convergence."""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenarios import ScenarioConfig, simulate
from .solver import SolverFailure

log = logging.getLogger(__name__)

FULL_MATRIX = dict(n_realizations=10, grain_sizes=(20e-6, 40e-6, 60e-6), delta_E=(0.0, 0.0365, 0.073),
                   strains=(0.0, 0.0005, 0.0006), potentials=(0.6, -0.479))


def realization_seed(base_seed: int, grain_index: int, realization: int) -> int:
    """Deterministic microstructure seed shared by every condition at one grain size."""
    ss = np.random.SeedSequence([int(base_seed), int(grain_index), int(realization)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def final_metrics(cfg: ScenarioConfig) -> dict:
    """Run one configuration and return its last metric record."""
    _, _, records = simulate(cfg)
    r = records[-1]
    return {"max_defect_depth": r["max_defect_depth"], "dissolved_area": r["dissolved_area"],
            "current_density": r["current_density"]}


def _safe_run(cfg: ScenarioConfig):
    try:
        return final_metrics(cfg), None
    except SolverFailure as exc:
        return None, str(exc)


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


STAT_KEYS = ("max_defect_depth", "dissolved_area", "current_density")
BATCH_COLUMNS = ("E_app", "eps_inf", "grain_size", "delta_E_max", "homogeneous", "n_ok", "n_failed") + tuple(
    f"{k}_{s}" for k in STAT_KEYS for s in ("mean", "std", "norm"))


@dataclass
class BatchRow:
    E_app: float
    eps_inf: float
    grain_size: float
    delta_E_max: float
    homogeneous: bool
    n_ok: int
    n_failed: int
    stats: dict
    failures: list

    def as_record(self) -> dict:
        rec = {"E_app": self.E_app, "eps_inf": self.eps_inf, "grain_size": self.grain_size,
               "delta_E_max": self.delta_E_max, "homogeneous": int(self.homogeneous), "n_ok": self.n_ok,
               "n_failed": self.n_failed}
        rec.update(self.stats)
        return rec


def batch_study(base: ScenarioConfig, n_realizations: int = 3, grain_sizes=(20e-6,), delta_E_list=(0.0, 0.073),
                strain_list=(0.0,), potentials=None, workers: int = 1) -> list[BatchRow]:
    """Mean and spread of damage metrics per condition, normalised by the homogeneous run.

    Every (potential, strain) pair gets one homogeneous reference run (no
    microstructure, no potential variation); its row normalises to exactly 1.
    Polycrystal realisations reuse the same seeds across conditions so that
    conditions differ only in the studied parameter. Failed realisations are
    excluded and counted.
    """
    if n_realizations < 2:
        raise ValueError("n_realizations must be at least 2")
    potentials = tuple(potentials) if potentials else (base.E_app,)
    base = base.replace(kind="pitting")
    jobs, keys = [], []
    for E in potentials:
        for eps in strain_list:
            jobs.append(base.replace(E_app=E, eps_inf=eps, microstructure=False, delta_E_max=0.0))
            keys.append((E, eps, None, None, None))
            for gi, d in enumerate(grain_sizes):
                for dE in delta_E_list:
                    for r in range(n_realizations):
                        jobs.append(base.replace(E_app=E, eps_inf=eps, microstructure=True, grain_size=d,
                                                 delta_E_max=dE, seed=realization_seed(base.seed, gi, r)))
                        keys.append((E, eps, d, dE, r))
    results = _map(_safe_run, jobs, workers)
    rows = []
    by_key = dict(zip(keys, results))
    for E in potentials:
        for eps in strain_list:
            ref, err = by_key[(E, eps, None, None, None)]
            if ref is None:
                raise SolverFailure("batch", f"homogeneous reference failed at E={E}, eps={eps}: {err}")
            rows.append(_row(E, eps, 0.0, 0.0, True, [ref], [], ref))
            for d in grain_sizes:
                for dE in delta_E_list:
                    ok, bad = [], []
                    for r in range(n_realizations):
                        res, err = by_key[(E, eps, d, dE, r)]
                        if res is None:
                            log.warning("realisation %d (d=%g, dE=%g) failed: %s", r, d, dE, err)
                            bad.append(err)
                        else:
                            ok.append(res)
                    rows.append(_row(E, eps, d, dE, False, ok, bad, ref))
    return rows


def _row(E, eps, d, dE, homogeneous, ok, bad, ref) -> BatchRow:
    stats = {}
    for k in STAT_KEYS:
        vals = np.array([r[k] for r in ok], dtype=float)
        mean = float(vals.mean()) if vals.size else float("nan")
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        if homogeneous:
            norm = 1.0
        else:
            norm = mean / ref[k] if ref[k] != 0 else float("nan")
        stats.update({f"{k}_mean": mean, f"{k}_std": std, f"{k}_norm": norm})
    return BatchRow(E, eps, d, dE, homogeneous, len(ok), len(bad), stats, bad)


def write_table(path, rows, columns) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([r[c] for c in columns])


CONVERGENCE_COLUMNS = ("label", "dx", "dt_max", "pit_depth", "dissolved_area", "rel_diff", "wall_sec")


def convergence_study(base: ScenarioConfig, levels=(2, 4, 6), dt_halving: bool = True, ell: float = 5e-6):
    """Final pit depth at grid spacings ell/n, plus one run with half the time step.

    The time-step check is made at the ell/4 level when present, otherwise at
    the finest level. ``rel_diff`` compares each run with the finest
    mesh (and the halved-step run with its parent).
    """
    runs = []
    for n in levels:
        runs.append((f"ell/{n}", base.replace(dx=ell / n)))
    if dt_halving:
        n_ref = 4 if 4 in levels else max(levels)
        runs.append((f"ell/{n_ref} dt/2", base.replace(dx=ell / n_ref, dt_max=0.5 * base.dt_max,
                                                       dt_init=0.5 * min(base.dt_init, base.dt_max))))
    out = []
    for label, cfg in runs:
        t0 = time.monotonic()
        _, _, rec = simulate(cfg)
        out.append({"label": label, "dx": cfg.dx, "dt_max": cfg.dt_max, "pit_depth": rec[-1]["pit_depth"],
                    "dissolved_area": rec[-1]["dissolved_area"], "wall_sec": time.monotonic() - t0})
    finest = min(out[:len(levels)], key=lambda r: r["dx"])
    for r in out:
        ref = finest
        if r["label"].endswith("dt/2"):
            ref = next(o for o in out if o["label"] == r["label"].split()[0])
        r["rel_diff"] = abs(r["pit_depth"] - ref["pit_depth"]) / ref["pit_depth"]
    return out
