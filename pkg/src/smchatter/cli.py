"""Command-line interface.

Exit codes: 0 success, 1 solver or measurement failure, 2 stability
violation (mu >= 1/(2b)), 3 divergent trajectory, 64 usage error.

Every command records a run manifest with all effective parameters.  It is
written to ``--manifest`` when given, otherwise next to ``--out``, otherwise
to stderr.  ``smchatter replay MANIFEST`` re-runs a command from it.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .describing import ControllerSpec, Variant, neg_reciprocal_locus
from .errors import (DivergenceError, DomainError, NoCrossingError,
                     StabilityViolationError, WindowError)
from .harmonic_balance import (critical_mu_amplitude, critical_mu_frequency,
                               critical_mu_power, predict, sweep)
from .lti import loop_tf, nyquist_locus
from .metrics import empirical_crossover, measure
from .simulation import SimConfig, TimeSeries, simulate, steady_state_window

log = logging.getLogger("smchatter")

EXIT_OK, EXIT_SOLVER, EXIT_STABILITY, EXIT_DIVERGED, EXIT_USAGE = 0, 1, 2, 3, 64
WORKERS_ENV = "SMCHATTER_WORKERS"

DELTA = 5.0
DEFAULTS = dict(k=1.1 * DELTA, b=3.0, k1=2.0 * math.sqrt(DELTA), k2=1.1 * DELTA,
                delta=DELTA, mu=0.05)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """Nine significant digits, scientific below 1e-3 in magnitude."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    if x != 0.0 and abs(x) < 1e-3:
        return f"{x:.8e}"
    return f"{x:.9g}"


@dataclass
class RunManifest:
    command: str
    parameters: dict
    output_path: str | None
    format: str
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


# -- helpers -----------------------------------------------------------------

def _spec_from_args(args, variant=None) -> ControllerSpec:
    variant = Variant(variant or args.controller)
    if variant.is_lcsmc:
        return ControllerSpec(variant, k=args.k, b=args.b, delta=args.delta)
    return ControllerSpec.stc(args.k1, args.k2, args.delta)


def _sim_config(args) -> SimConfig:
    return SimConfig(tau=args.tau, horizon=args.horizon, x1_initial=args.x1_0,
                     mu=args.mu, divergence_threshold=args.divergence_threshold)


def _manifest_path(args) -> Path | None:
    if getattr(args, "manifest", None):
        return Path(args.manifest)
    if getattr(args, "out", None):
        return Path(args.out).with_suffix(".manifest.json")
    return None


def _write_manifest(args, fmt_name: str):
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = RunManifest(args.command, params, getattr(args, "out", None), fmt_name)
    path = _manifest_path(args)
    if path is None:
        print(manifest.to_json(), file=sys.stderr)
    else:
        path.write_text(manifest.to_json() + "\n")


def _emit(args, text: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _complex_json(z: complex):
    return [z.real, z.imag]


# -- commands ----------------------------------------------------------------

PREDICT_COLUMNS = ["controller", "mu", "amplitude", "omega", "power", "status", "residual"]


def cmd_predict(args) -> int:
    spec = _spec_from_args(args)
    _write_manifest(args, args.format)
    try:
        res = predict(spec, args.mu)
    except StabilityViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STABILITY
    if res.status == "boundary":
        print(f"error: {StabilityViolationError(args.mu, spec.stability_bound)}",
              file=sys.stderr)
        return EXIT_STABILITY
    p = res.prediction
    if not res.converged:
        print(f"error: harmonic balance did not converge ({res.status}, "
              f"{res.iterations} iterations, |residual|={abs(res.residual):.3g})",
              file=sys.stderr)
        return EXIT_SOLVER
    if args.format == "json":
        record = {"controller": spec.variant.value, "gains": spec.gains(), "mu": args.mu,
                  "amplitude": p.amplitude, "omega": p.omega, "power": p.average_power,
                  "status": "ok", "residual": abs(res.residual),
                  "iterations": res.iterations}
        _emit(args, json.dumps(record, indent=2) + "\n")
    else:
        row = [spec.variant.value, fmt(args.mu), fmt(p.amplitude), fmt(p.omega),
               fmt(p.average_power), "ok", fmt(abs(res.residual))]
        _emit(args, _csv_text(PREDICT_COLUMNS, [row]))
    return EXIT_OK


def _mu_grid(start, stop, step):
    if not step > 0:
        raise UsageError("--mu-step must be positive")
    if stop < start:
        raise UsageError("--mu-stop must not be below --mu-start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def cmd_sweep(args) -> int:
    names = [c.strip() for c in args.controllers.split(",") if c.strip()]
    try:
        specs = [_spec_from_args(args, name) for name in names]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    grid = _mu_grid(args.mu_start, args.mu_stop, args.mu_step)
    _write_manifest(args, "csv")
    rows = []
    for cell in sweep(specs, grid):
        p = cell.prediction
        rows.append([cell.controller.variant.value, fmt(cell.mu),
                     fmt(p.amplitude) if p else "", fmt(p.omega) if p else "",
                     fmt(p.average_power) if p else "", cell.status])
    _emit(args, _csv_text(["controller", "mu", "amplitude", "omega", "power", "status"], rows))
    return EXIT_OK


TS_COLUMNS = ["t", "x1", "x1dot", "u", "sigma"]


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    cfg = _sim_config(args)
    if args.stride < 1:
        raise UsageError("--stride must be at least 1")
    ts = simulate(spec, cfg)
    s = slice(None, None, args.stride)
    cols = [ts.t[s], ts.x1[s], ts.x1_dot[s], ts.u[s], ts.sigma[s]]
    lines = [",".join(TS_COLUMNS)]
    lines += [",".join(fmt(v) for v in row) for row in zip(*(c.tolist() for c in cols))]
    text = "\n".join(lines) + "\n"

    params = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = RunManifest(args.command, params, args.out, "csv")
    sidecar = {"diverged_at": ts.diverged_at, "tau": cfg.tau * args.stride,
               "samples": len(ts.t[s]), "sim_config": cfg.to_dict(),
               "manifest": dataclasses.asdict(manifest)}
    if args.manifest:
        Path(args.manifest).write_text(manifest.to_json() + "\n")
    if args.out:
        Path(args.out).write_text(text)
        sidecar_path(args.out).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
        print(json.dumps(sidecar, sort_keys=True), file=sys.stderr)
    if ts.diverged_at is not None:
        print(f"trajectory diverged at t={ts.diverged_at:g} s", file=sys.stderr)
    return EXIT_OK


def read_timeseries(path) -> TimeSeries:
    """Load a time-series CSV; a JSON sidecar, if present, supplies divergence."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.size < 2 or "t" not in data.dtype.names or "x1" not in data.dtype.names:
        raise UsageError(f"{path}: need columns t and x1 with at least two rows")
    t = np.asarray(data["t"], dtype=float)
    cols = {name: (np.asarray(data[name], dtype=float) if name in data.dtype.names
                   else np.full(t.size, np.nan))
            for name in ("x1", "x1dot", "u", "sigma")}
    tau = float(np.median(np.diff(t)))
    diverged_at = None
    side = sidecar_path(path)
    if side.exists():
        diverged_at = json.loads(side.read_text()).get("diverged_at")
    return TimeSeries(tau, t, cols["x1"], cols["x1dot"], cols["u"], cols["sigma"],
                      diverged_at)


def cmd_measure(args) -> int:
    if args.input:
        ts = read_timeseries(args.input)
        source = {"input": args.input}
    else:
        spec = _spec_from_args(args)
        ts = simulate(spec, _sim_config(args))
        source = {"controller": spec.variant.value, "mu": args.mu}
    _write_manifest(args, "json")
    try:
        window = steady_state_window(ts, args.transient_fraction)
        m = measure(window, "integral" if args.power_mode == "integral" else "paper")
    except DivergenceError as exc:
        report = {"diverged_at": exc.diverged_at, "source": source,
                  "message": str(exc)}
        print(json.dumps(report), file=sys.stderr)
        return EXIT_DIVERGED
    except WindowError as exc:
        print(f"error: {exc} (try a longer --horizon)", file=sys.stderr)
        return EXIT_SOLVER
    record = dataclasses.asdict(m)
    record["source"] = source
    _emit(args, json.dumps(record, indent=2) + "\n")
    return EXIT_OK


def _report_json(rep):
    return {"mu_values": rep.mu_values,
            "discarded_roots": [_complex_json(z) for z in rep.discarded_roots],
            "stability_bound": rep.stability_bound,
            "note": rep.note}


def _hb_critical(k, k1, k2, b):
    amp = critical_mu_amplitude(k, k1, k2, b)
    freq = critical_mu_frequency(k1, k2, b)
    power = critical_mu_power(k, k1, k2, b)
    return amp, freq, power


def _crossover_job(job):
    metric, spec_a, spec_b, bracket, cfg, frac = job
    try:
        return metric, empirical_crossover(metric, spec_a, spec_b, bracket, cfg,
                                           transient_fraction=frac), None
    except (NoCrossingError, WindowError, DivergenceError) as exc:
        return metric, None, str(exc)


def cmd_critical_mu(args) -> int:
    amp, freq, power = _hb_critical(args.k, args.k1, args.k2, args.b)
    _write_manifest(args, "json")
    if args.method == "hb":
        record = {"method": "hb", "amplitude": _report_json(amp),
                  "frequency": {"mu": freq, "stability_bound": 1.0 / (2.0 * args.b)},
                  "power": _report_json(power)}
        if not amp.mu_values:
            print(f"note: no admissible amplitude crossing. {amp.note}".strip(),
                  file=sys.stderr)
        _emit(args, json.dumps(record, indent=2) + "\n")
        return EXIT_OK

    lsv = ControllerSpec.lsv(args.k, args.b, args.delta)
    stc = ControllerSpec.stc(args.k1, args.k2, args.delta)
    cfg = SimConfig(tau=args.tau, horizon=args.horizon, x1_initial=args.x1_0,
                    divergence_threshold=args.divergence_threshold)
    hb = {"amplitude": amp.mu_values[0] if amp.mu_values else None,
          "frequency": freq,
          "power": power.mu_values[0] if power.mu_values else None}
    jobs = [(m, lsv, stc, tuple(br), cfg, args.transient_fraction)
            for m, br in (("amplitude", args.amp_bracket),
                          ("frequency", args.freq_bracket),
                          ("power", args.power_bracket))]
    workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_crossover_job, jobs))
    else:
        results = [_crossover_job(j) for j in jobs]
    record = {"method": "simulation"}
    failed = False
    for (metric, mu, err), job in zip(results, jobs):
        entry = {"mu": mu, "bracket": list(job[3]), "hb": hb[metric]}
        if mu is not None and hb[metric]:
            entry["relative_to_hb"] = (mu - hb[metric]) / hb[metric]
        if err:
            entry["error"] = err
            failed = True
        record[metric] = entry
    _emit(args, json.dumps(record, indent=2) + "\n")
    return EXIT_SOLVER if failed else EXIT_OK


def _log_grid(lo, hi, n, name):
    if n < 1:
        raise UsageError(f"{name} grid is empty")
    if not (0 < lo <= hi):
        raise UsageError(f"{name} grid bounds must satisfy 0 < min <= max")
    if n == 1:
        return [lo]
    return np.geomspace(lo, hi, n).tolist()


def cmd_nyquist(args) -> int:
    spec = _spec_from_args(args)
    omegas = _log_grid(args.omega_min, args.omega_max, args.omega_points, "omega")
    rows = [["W", fmt(w), "", fmt(z.real), fmt(z.imag)]
            for w, z in nyquist_locus(loop_tf(args.mu), omegas)]

    fixed, centre = args.locus_fixed, None
    if fixed is None or args.locus_min is None or args.locus_max is None:
        try:
            res = predict(spec, args.mu)
        except StabilityViolationError as exc:
            raise UsageError(f"{exc}; pass --locus-fixed, --locus-min and --locus-max") from exc
        if not res.converged:
            raise UsageError("no harmonic-balance solution to centre the locus on; "
                             "pass --locus-fixed, --locus-min and --locus-max")
        p = res.prediction
        if args.locus_sweep == "amplitude":
            fixed = p.omega if fixed is None else fixed
            centre = p.amplitude
        else:
            fixed = p.amplitude if fixed is None else fixed
            centre = p.omega
    lo = args.locus_min if args.locus_min is not None else centre / 100.0
    hi = args.locus_max if args.locus_max is not None else centre * 100.0
    grid = _log_grid(lo, hi, args.locus_points, "locus")
    if args.locus_sweep == "amplitude":
        points = neg_reciprocal_locus(spec, grid, fixed)
    else:
        points = neg_reciprocal_locus(spec, fixed, grid)
    for pt in points:
        re = fmt(pt.value.real) if pt.value is not None else ""
        im = fmt(pt.value.imag) if pt.value is not None else ""
        rows.append(["neg_inv_N", fmt(pt.amplitude), fmt(pt.omega), re, im])
    _write_manifest(args, "csv")
    _emit(args, _csv_text(["curve", "param1", "param2", "re", "im"], rows))
    return EXIT_OK


COMMANDS = {
    "predict": cmd_predict,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "measure": cmd_measure,
    "critical-mu": cmd_critical_mu,
    "nyquist": cmd_nyquist,
}


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest_file).read_text())
    if "command" not in manifest and "manifest" in manifest:
        manifest = manifest["manifest"]  # simulate sidecar
    params = dict(manifest["parameters"])
    command = manifest["command"]
    if command not in COMMANDS:
        raise UsageError(f"manifest names unknown command {command!r}")
    params["out"] = args.out
    params["manifest"] = args.manifest
    return COMMANDS[command](argparse.Namespace(**params))


# -- parser ------------------------------------------------------------------

def _gain_parent():
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("controller")
    g.add_argument("--k", type=float, default=DEFAULTS["k"], help="LCSMC gain")
    g.add_argument("--b", type=float, default=DEFAULTS["b"], help="sliding surface slope")
    g.add_argument("--k1", type=float, default=DEFAULTS["k1"], help="STC square-root gain")
    g.add_argument("--k2", type=float, default=DEFAULTS["k2"], help="STC integral gain")
    g.add_argument("--delta", type=float, default=DEFAULTS["delta"],
                   help="perturbation-derivative bound (gain warnings only)")
    return p


def _sim_parent(horizon=20.0, threshold=5.0):
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("simulation")
    g.add_argument("--tau", type=float, default=1e-4, help="Euler step [s]")
    g.add_argument("--horizon", type=float, default=horizon, help="simulated time [s]")
    g.add_argument("--x1-0", dest="x1_0", type=float, default=1.0, help="initial output")
    g.add_argument("--divergence-threshold", type=float, default=threshold,
                   help="stop once |x1| exceeds this")
    return p


def _out_parent():
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--manifest", default=None, help="run-manifest path")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smchatter", allow_abbrev=False,
                     description="Harmonic-balance chattering prediction and "
                                 "time-domain cross-checks for sliding-mode controllers.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    gains, out = _gain_parent(), _out_parent()
    ctrl = dict(choices=[v.value for v in Variant], default="lsv")

    p = sub.add_parser("predict", parents=[gains, out], allow_abbrev=False,
                       help="harmonic-balance prediction of (A, omega, P)")
    p.add_argument("--controller", **ctrl)
    p.add_argument("--mu", type=float, default=DEFAULTS["mu"], help="actuator time constant [s]")
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("sweep", parents=[gains, out], allow_abbrev=False,
                       help="predictions over a grid of mu")
    p.add_argument("--controllers", default="lsv,tsv,stc")
    p.add_argument("--mu-start", type=float, default=0.01)
    p.add_argument("--mu-stop", type=float, default=0.16)
    p.add_argument("--mu-step", type=float, default=0.01)

    p = sub.add_parser("simulate", parents=[gains, _sim_parent(), out], allow_abbrev=False,
                       help="fixed-step closed-loop simulation to CSV")
    p.add_argument("--controller", **ctrl)
    p.add_argument("--mu", type=float, default=DEFAULTS["mu"])
    p.add_argument("--stride", type=int, default=1, help="write every n-th sample")

    p = sub.add_parser("measure", parents=[gains, _sim_parent(), out], allow_abbrev=False,
                       help="measure chattering from a time-series file or a fresh run")
    p.add_argument("--input", default=None, help="time-series CSV from 'simulate'")
    p.add_argument("--controller", **ctrl)
    p.add_argument("--mu", type=float, default=DEFAULTS["mu"])
    p.add_argument("--transient-fraction", type=float, default=0.5)
    p.add_argument("--power-mode", choices=["paper", "integral"], default="paper")

    p = sub.add_parser("critical-mu", parents=[gains, _sim_parent(160.0, 1e3), out],
                       allow_abbrev=False,
                       help="mu at which LSV and STC chattering coincide")
    p.add_argument("--method", choices=["hb", "simulation"], default="hb")
    p.add_argument("--amp-bracket", type=float, nargs=2, default=[0.08, 0.16])
    p.add_argument("--freq-bracket", type=float, nargs=2, default=[0.05, 0.12])
    p.add_argument("--power-bracket", type=float, nargs=2, default=[0.08, 0.16])
    p.add_argument("--transient-fraction", type=float, default=0.5)

    p = sub.add_parser("nyquist", parents=[gains, out], allow_abbrev=False,
                       help="W(jw) and -1/N curves for graphical harmonic balance")
    p.add_argument("--controller", **ctrl)
    p.add_argument("--mu", type=float, default=DEFAULTS["mu"])
    p.add_argument("--omega-min", type=float, default=1.0)
    p.add_argument("--omega-max", type=float, default=1e4)
    p.add_argument("--omega-points", type=int, default=500)
    p.add_argument("--locus-sweep", choices=["amplitude", "omega"], default="amplitude")
    p.add_argument("--locus-min", type=float, default=None)
    p.add_argument("--locus-max", type=float, default=None)
    p.add_argument("--locus-points", type=int, default=200)
    p.add_argument("--locus-fixed", type=float, default=None,
                   help="value of the coordinate held fixed (default: HB solution)")

    p = sub.add_parser("replay", allow_abbrev=False, help="re-run a command from its manifest")
    p.add_argument("manifest_file")
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)

    for name, func in {**COMMANDS, "replay": cmd_replay}.items():
        sub.choices[name].set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = args.func
    try:
        return func(args)
    except (UsageError, DomainError, OSError) as exc:
        print(f"smchatter {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
