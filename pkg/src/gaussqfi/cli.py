"""Command line front end: ``gaussqfi {qfi,cfi,optimize,sweep,verify}``.

Exit status: 0 success, 1 usage or config error, 2 verification failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytic, fock, verify
from . import interferometers as ifm
from .qfi import applicable_routes, circuit_qfi, qfi, state_derivative
from .config import COMMANDS, ConfigError, RunSpec, figure_ids, load, load_figure
from .optimize import NonFiniteObjective, analytic_qfi, optimize_scenario, scenario_qfi, sweep, t_critical_sweep

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_NUMERIC = 0, 1, 2, 3

PARAM_COLUMNS = ("r1", "r2", "phi", "alpha_sq", "n_phi")


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, ".12g")
    return str(value)


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


# commands -------------------------------------------------------------------------


def run_qfi(spec: RunSpec):
    """Every applicable QFI route, plus the closed form, with deltas against it."""
    cfg = spec.scenario_for_run()
    pair = state_derivative(ifm.build(cfg), cfg.phi)
    values = {r: qfi(pair, r).value for r in applicable_routes(pair)}
    try:
        reference = analytic_qfi(cfg)
        values["analytic"] = reference
    except ValueError:
        reference = values["eigendecomp"]
    rows = []
    for route, v in values.items():
        delta = v - reference
        rows.append([route, v, abs(delta), abs(delta) / abs(reference) if reference else abs(delta)])
    dose = ifm.n_phi(cfg)
    notes = [f"n_phi={fmt(dose)} snl={fmt(ifm.snl_reference(dose))} mzi={fmt(ifm.mzi_reference(dose, cfg.T, cfg.eta))}"]
    return ["route", "qfi", "abs_delta", "rel_delta"], rows, notes, EXIT_OK


def _result_row(res, dose, cfg, extra_names, extra):
    p = res.best_params
    row = [p.get(c, np.nan) for c in PARAM_COLUMNS]
    alt = res.alternatives[0] if res.alternatives else np.nan
    row += [res.best_value, ifm.snl_reference(dose), ifm.mzi_reference(dose, cfg.T, cfg.eta),
            analytic.qfi_max_lossless(dose)]
    row += [extra.get(n, np.nan) for n in extra_names]
    row += [alt, res.converged]
    return row


def run_optimize(spec: RunSpec):
    cfg = spec.scenario
    res = optimize_scenario(cfg, spec.inner)
    dose = res.best_params["n_phi"]
    header = list(PARAM_COLUMNS) + ["qfi", "snl", "mzi", "iq_max", "phi_alt", "converged", "evaluations"]
    row = _result_row(res, dose, cfg, [], {}) + [res.evaluations]
    notes = ["degenerate phase landscape"] if res.degenerate else []
    return header, [row], notes, EXIT_OK


def run_sweep(spec: RunSpec):
    sw = spec.sweep
    if sw.kind == "threshold":
        rows = t_critical_sweep(sw.values, numeric=sw.numeric, backend=spec.inner.backend)
        header = ["n_phi", "t_c_formula"] + (["t_c_numeric"] if sw.numeric else [])
        bad = sw.numeric and any(math.isnan(r["t_c_numeric"]) for r in rows)
        notes = ["numeric threshold not bracketed for some n_phi"] if bad else []
        return header, [[r[h] for h in header] for r in rows], notes, EXIT_NUMERIC if bad else EXIT_OK
    series = sw.series_values if sw.series_axis else (None,)
    extras = ["companion_qfi"] if sw.companion else []
    params = [c for c in PARAM_COLUMNS if c not in (sw.axis, sw.series_axis)]
    header = ([sw.series_axis] if sw.series_axis else []) + [sw.axis] + params
    header += ["qfi", "snl", "mzi", "iq_max"] + extras + ["phi_alt", "converged", "error"]
    rows, notes, failed = [], [], 0
    base = spec.scenario
    for s in series:
        template = base if s is None else base.replace(**{sw.series_axis: s})
        result = sweep(template, sw.axis, sw.values, spec.inner, jobs=spec.jobs, companion=sw.companion)
        for pt in result.points:
            lead = ([s] if s is not None else []) + [pt.value]
            if pt.result is None:
                failed += 1
                rows.append(lead + [np.nan] * (len(header) - len(lead) - 1) + [pt.error])
                continue
            cfg = template.replace(**{sw.axis: pt.value})
            full = dict(zip(PARAM_COLUMNS, [pt.result.best_params.get(c, np.nan) for c in PARAM_COLUMNS]))
            row = lead + [full[c] for c in params]
            row += [pt.result.best_value, pt.snl, ifm.mzi_reference(pt.n_phi, cfg.T, cfg.eta), pt.extra["iq_max"]]
            row += [pt.extra.get(n, np.nan) for n in extras]
            alt = pt.result.alternatives[0] if pt.result.alternatives else np.nan
            rows.append(row + [alt, pt.result.converged, ""])
    if failed:
        notes.append(f"{failed} sweep point(s) failed; see the error column")
    return header, rows, notes, EXIT_NUMERIC if failed else EXIT_OK


def _variant(cfg: ifm.ScenarioConfig, name: str) -> ifm.ScenarioConfig:
    if name == "as_configured":
        return cfg
    if cfg.family != "mandel":
        raise ConfigError(f"cfi variant {name!r} only applies to the Mandel interferometer")
    return cfg.replace(discard_a=(name == "no_a"))


def _cfi_point(args):
    cfg, phi, cutoff, step, detected, saturate = args
    try:
        r = fock.cfi(cfg, cutoff, step, phi, detected, saturate)
    except ValueError as exc:
        raise NumericalFailure(f"CFI at phi={phi:.12g}: {exc}") from None
    iq = circuit_qfi(ifm.build(cfg), phi).value
    return r.value, iq, r.truncation_mass, r.fd_spread


def run_cfi(spec: RunSpec):
    c = spec.cfi
    cfg = spec.scenario_for_run()
    variants = [(v, _variant(cfg, v)) for v in c.variants]
    tasks = [(vc, phi, spec.cutoff, c.step, c.detected, c.saturate) for phi in c.phis for _, vc in variants]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            out = list(pool.map(_cfi_point, tasks))
    else:
        out = [_cfi_point(t) for t in tasks]
    suffix = {"as_configured": ""} | {v: f"_{v}" for v in ("no_a", "all")}
    header = ["phi"]
    for v, _ in variants:
        header += [f"{k}{suffix[v]}" for k in ("i_c", "i_q", "truncation_mass", "fd_spread")]
    dose = ifm.n_phi(cfg)
    header += ["mzi", "snl", "i_q_ideal"]
    refs = [ifm.mzi_reference(dose, cfg.T, cfg.eta), ifm.snl_reference(dose),
            scenario_qfi(cfg.replace(eta=1.0))]
    rows, k = [], 0
    for phi in c.phis:
        row = [phi]
        for _ in variants:
            row += list(out[k])
            k += 1
        rows.append(row + refs)
    notes = [f"cutoff={spec.cutoff} saturating={'yes' if c.saturate else 'no'}"]
    return header, rows, notes, EXIT_OK


def run_verify(spec: RunSpec):
    v = spec.verify
    checks = verify.run_verification(v.points, v.seed, v.rtol)
    rows = [[c.name, c.points, c.max_rel_error, c.passed] for c in checks]
    notes = []
    for c in checks:
        if not c.passed:
            w = c.worst
            notes.append(f"{c.name}: analytic={fmt(w['analytic'])} numeric={fmt(w['numeric'])} at {w['config']}")
    status = EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY
    return ["formula", "points", "max_rel_error", "passed"], rows, notes, status


RUNNERS = {"qfi": run_qfi, "cfi": run_cfi, "optimize": run_optimize, "sweep": run_sweep, "verify": run_verify}


# entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaussqfi", description="Fisher information of seeded, lossy Gaussian interferometers.")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="overrides [run] command in the config")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="run specification (INI)")
    src.add_argument("--seed-figures", metavar="ID", help="load a shipped figure specification")
    p.add_argument("--out", metavar="PATH", help="CSV output path (default: stdout)")
    p.add_argument("--cutoff", type=int, help="photon-number cutoff for cfi")
    p.add_argument("--r2-cap", type=float, help="upper bound of the r2 search")
    p.add_argument("--jobs", type=int, help="worker processes for sweeps and cfi")
    p.add_argument("--plot", action="store_true", help="also render the table to <out>.png")
    p.add_argument("--list-figures", action="store_true", help="print the shipped figure ids and exit")
    return p


def _spec_from_args(args) -> RunSpec:
    if args.config:
        spec = load(args.config, args.command)
    elif args.seed_figures:
        spec = load_figure(args.seed_figures, args.command)
    elif args.command == "verify":
        spec = RunSpec(command="verify")
    else:
        raise UsageError("give --config or --seed-figures (only 'verify' runs without one)")
    changes = {}
    if args.out is not None:
        changes["out"] = args.out
    if args.cutoff is not None:
        changes["cutoff"] = args.cutoff
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    if args.r2_cap is not None:
        if args.r2_cap < 0:
            raise UsageError("--r2-cap must be non-negative")
        changes["inner"] = replace(spec.inner, r2_cap=args.r2_cap)
    spec = replace(spec, **changes) if changes else spec
    if spec.cutoff > fock.MAX_CUTOFF:
        raise UsageError(f"--cutoff above {fock.MAX_CUTOFF} is not supported")
    return spec


def _check_writable(path: str | None) -> None:
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"output directory {parent} does not exist")


def _plot_x(spec: RunSpec, header: list[str]) -> tuple[str, str | None]:
    if spec.command == "sweep":
        return (spec.sweep.axis if spec.sweep.kind == "optimize" else "n_phi"), spec.sweep.series_axis
    if spec.command == "cfi":
        return "phi", None
    raise UsageError(f"--plot applies to sweep and cfi, not {spec.command}")


def main(argv: list[str] | None = None) -> int:
    err = sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.list_figures:
            print("\n".join(figure_ids()))
            return EXIT_OK
        spec = _spec_from_args(args)
        if args.plot and spec.out is None:
            raise UsageError("--plot needs an output path (--out or [run] out)")
        _check_writable(spec.out)
        if args.plot:
            _plot_x(spec, [])
        header, rows, notes, status = RUNNERS[spec.command](spec)
    except (UsageError, ConfigError) as exc:
        print(f"gaussqfi: error: {exc}", file=err)
        return EXIT_USAGE
    except ifm.InfeasibleDose as exc:
        print(f"gaussqfi: infeasible scenario: {exc}", file=err)
        print(f"feasible bound: r1 <= {exc.r1_max:.12g} at n_phi = {exc.n_phi:.12g}", file=err)
        return EXIT_USAGE
    except (NumericalFailure, NonFiniteObjective, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"gaussqfi: numerical failure: {exc}", file=err)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"gaussqfi: error: {exc}", file=err)
        return EXIT_USAGE
    text = to_csv(header, rows)
    if spec.out is None:
        sys.stdout.write(text)
    else:
        Path(spec.out).write_text(text)
        if args.plot:
            from .plotting import render

            x, series = _plot_x(spec, header)
            try:
                png = render(header, rows, x, spec.plot, Path(spec.out).with_suffix(".png"), series)
            except ValueError as exc:
                print(f"gaussqfi: error: plot: {exc}", file=err)
                return EXIT_USAGE
            notes.append(f"plot written to {png}")
    for line in notes:
        print(line, file=err)
    return status


if __name__ == "__main__":
    sys.exit(main())
