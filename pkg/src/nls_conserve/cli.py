"""Command-line driver: simulate, verify, convergence, list-identities.

Exit status: 0 every check passed, 1 some check failed, 2 bad config,
3 the solution blew up (partial outputs are still written).
"""
import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import replace
import datetime
import json
import logging
import math
from pathlib import Path
import sys

import numpy as np

from . import _accel
from .config import ConfigError, load_config
from .dynamics import BlowUpError, SolverError, evolve
from .observables import record_observables, write_csv
from .oracle import fit_order, manufactured_master
from .verify import list_identities, master_residual, run_check, tolerance_for

log = logging.getLogger("nls_conserve")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3

#: Relative residuals below this are treated as roundoff in convergence tables.
SATURATION_FLOOR = 1e-11


def _json_target(cfg, name):
    spec = str(cfg.output.get("json_path", "reports"))
    if "{name}" in spec:
        return Path(spec.format(name=name))
    return Path(spec) / f"{name}.json"


def _sidecar(cfg):
    return _json_target(cfg, "run").with_suffix(".log")


def _dump(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False,
                  default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(payload):
    """Replace non-finite floats by None so the JSON stays strict."""
    if isinstance(payload, dict):
        return {k: _clean(v) for k, v in payload.items()}
    if isinstance(payload, list):
        return [_clean(v) for v in payload]
    if isinstance(payload, float) and not math.isfinite(payload):
        return None
    return payload


def _write_sidecar(cfg, lines):
    path = _sidecar(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    with open(path, "a") as fh:
        for line in lines:
            fh.write(f"{stamp} {line}\n")


def simulate(cfg, solver=None):
    """Run the solver and log observables.  Returns ``(traj, blow_up_time)``."""
    solver = solver or cfg.solver
    u0 = cfg.initial_field()
    try:
        traj = evolve(u0, cfg.nl, solver)
        t_bad = None
    except BlowUpError as exc:
        traj, t_bad = exc.trajectory, exc.t
        if traj is None:
            raise
    return record_observables(traj, cfg.nl), t_bad


def _evaluate(cfg, traj, t_bad):
    reports = []
    for name in cfg.checks:
        try:
            rep = run_check(name, traj, cfg.nl, cfg.tolerances,
                            energy_mode=cfg.options.get("energy_mode", "initial"))
        except ValueError as exc:
            if t_bad is None:
                raise
            log.warning("%s not evaluated on the partial trajectory: %s", name, exc)
            continue
        if t_bad is not None:
            rep.warnings.append(f"blow-up detected at t={t_bad:g}; series is partial")
        reports.append(rep)
    return reports


def run(cfg, mode="verify"):
    """Simulate, evaluate the configured checks and write all outputs."""
    _accel.thread_cap()
    traj, t_bad = simulate(cfg)
    csv_path = Path(cfg.output.get("csv_path", "timeseries.csv"))
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(csv_path, traj)
    notes = [f"{mode}: {len(traj)} samples written to {csv_path}"]
    reports = _evaluate(cfg, traj, t_bad) if mode == "verify" else []
    for rep in reports:
        _dump(_json_target(cfg, rep.name), _clean(rep.to_json()))
        notes.append(f"{rep.name}: max relative residual {rep.max_relative:.3e} "
                     f"(tol {rep.tolerance:.1e}) {'pass' if rep.passed else 'FAIL'}")
    if t_bad is not None:
        notes.append(f"blow-up at t={t_bad:g}")
    _write_sidecar(cfg, notes)
    for line in notes:
        log.info(line)
    if t_bad is not None:
        return EXIT_BLOWUP
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


# ---------------------------------------------------------------------------
# convergence study

def _fitted(dts, rels):
    """Order from the non-saturated levels, or ``"saturated"``."""
    keep = [(h, r) for h, r in zip(dts, rels) if r > SATURATION_FLOOR]
    if len(keep) < 2:
        return "saturated"
    h, r = zip(*keep)
    return fit_order(h, r)


def _level_run(cfg, level):
    factor = 2 ** level
    solver = replace(cfg.solver, dt=cfg.solver.dt / factor,
                     store_every=cfg.solver.store_every)
    traj, t_bad = simulate(cfg, solver)
    if t_bad is not None:
        raise BlowUpError(t_bad, None, traj)
    reports = {}
    for name in cfg.checks:
        if name == "master" and cfg.options.get("master_manufactured", False):
            base = int(cfg.options.get("master_samples", 32))
            psi1, psi2, g1, g2 = manufactured_master(cfg.grid, base * factor)
            rep = master_residual(psi1, psi2, g1, g2, 1.0, quad=cfg.solver.quad,
                                  tolerance=tolerance_for("master", solver.dt, cfg.tolerances))
            rep.params["manufactured"] = True
        else:
            rep = run_check(name, traj, cfg.nl, cfg.tolerances,
                            energy_mode=cfg.options.get("energy_mode", "initial"))
        reports[name] = rep
    exact = cfg.exact_solution()
    err = None
    if exact is not None:
        ref = exact.values(float(traj.times[-1]), cfg.grid)
        err = float(np.max(np.abs(traj.states[-1] - ref)))
    return solver.dt, reports, err


def convergence_study(cfg, levels=None):
    """Rerun with ``dt / 2**l`` for ``l < levels``; returns ``(rows, reports)``.

    ``rows`` is the residual table, ``reports`` the finest-level reports with
    ``measured_order`` filled in.
    """
    levels = cfg.refinement_levels if levels is None else levels
    if levels < 2:
        raise ConfigError("convergence mode needs refinement_levels >= 2")
    cap = _accel.thread_cap() or 1
    with ThreadPoolExecutor(max_workers=cap) as pool:
        results = list(pool.map(lambda lv: _level_run(cfg, lv), range(levels)))
    dts = [r[0] for r in results]
    rows = []
    finest = {}
    for name in cfg.checks:
        reps = [r[1][name] for r in results]
        # master on manufactured data refines the sample spacing, not dt
        steps = dts
        if reps[0].params.get("manufactured"):
            steps = [rep.params["dt"] for rep in reps]
        rels = [rep.max_relative for rep in reps]
        order = _fitted(steps, rels)
        for lv, (h, rep) in enumerate(zip(steps, reps)):
            rows.append({"identity": name, "level": lv, "step": h,
                         "max_residual": float(np.max(rep.residual, initial=0.0)),
                         "relative": rep.max_relative, "order": order})
        rep = reps[-1]
        rep.measured_order = order
        finest[name] = rep
    errs = [r[2] for r in results]
    if errs[0] is not None:
        order = _fitted(dts, errs)
        for lv, (h, e) in enumerate(zip(dts, errs)):
            rows.append({"identity": "exact_error", "level": lv, "step": h,
                         "max_residual": e, "relative": e, "order": order})
    return rows, finest


def write_table(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ["identity", "level", "step", "max_residual", "relative", "order"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])


def run_convergence(cfg, levels=None):
    rows, finest = convergence_study(cfg, levels)
    table = Path(cfg.output.get("table_path", "convergence.csv"))
    write_table(table, rows)
    for rep in finest.values():
        _dump(_json_target(cfg, rep.name), _clean(rep.to_json()))
    notes = [f"convergence: {len(rows)} rows written to {table}"]
    notes += [f"{n}: order {r.measured_order}" for n, r in finest.items()]
    _write_sidecar(cfg, notes)
    return EXIT_OK if all(r.passed for r in finest.values()) else EXIT_CHECK


# ---------------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="nls-conserve",
                                 description="Simulate NLS and verify its conservation laws.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in ("simulate", "verify"):
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", required=True)
    sp = sub.add_parser("convergence")
    sp.add_argument("--config", required=True)
    sp.add_argument("--levels", type=int, default=None)
    sub.add_parser("list-identities")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "list-identities":
        for line in list_identities():
            print(line)
        return EXIT_OK
    try:
        cfg = load_config(args.config, mode=args.command)
        if args.command == "convergence":
            return run_convergence(cfg, args.levels)
        return run(cfg, mode=args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
