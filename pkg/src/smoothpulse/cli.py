"""Batch command-line front-end.

Subcommands expose pulse synthesis, filter-function diagnostics, curve
exports, noise spectra, and infidelity sweeps as reproducible commands
that emit CSV/JSON plot data plus a run manifest with content checksums.

Exit codes: 0 ok, 1 compute failure (non-convergence / accuracy), 2
invalid input, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .curves import closure_defects, curves_to_csv, r_sequence
from .filters import (
    filter_samples,
    filter_to_csv,
    polynomial_phase,
    slope_fit,
    slope_report_to_json,
    udd_sequence,
)
from .infidelity import AccuracyError, SimConfig, sweep, sweep_to_csv
from .noise import build_bath, empirical_bath_spectrum, rtn_spectrum, vrqb_spectrum
from .phase import GateTarget, PhasePolynomial, sample_waveform, waveform_to_csv
from .solver import (
    ParityError,
    QuadratureError,
    SolverConfig,
    load_solution,
    solution_to_dict,
    solve,
    solve_order_family,
    solve_theta_family,
)

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_INVALID = 2
EXIT_IO = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# atomic artifact plumbing

def _atomic_write(path: str, writer) -> None:
    """Write through a temp file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: str, command: str, params: dict, seed, outputs,
                    t_start: float) -> str:
    manifest = {
        "command": command,
        "parameters": params,
        "seed": seed,
        "version": __version__,
        "wall_time_s": round(time.time() - t_start, 3),
        "outputs": [{"path": os.path.basename(p), "sha256": _sha256(p)}
                    for p in outputs],
    }
    path = os.path.join(out_dir, f"{command}_manifest.json")

    def write(tmp):
        with open(tmp, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _atomic_write(path, write)
    return path


def _ensure_out_dir(out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out_dir}: {exc}", EXIT_IO)


# ---------------------------------------------------------------------------
# synth

def _waveform_is_nonnegative(poly: PhasePolynomial) -> bool:
    wf = sample_waveform(poly, T=1.0, n_t=4097)
    return bool(wf.amplitudes.min() >= -1e-9 * max(wf.amplitudes.max(), 1e-300))


def cmd_synth(args, out_dir: str) -> int:
    if not (0 <= args.k <= 12):
        raise CliError(f"--k must be in [0, 12], got {args.k}", EXIT_INVALID)
    if not (0.0 < args.alpha <= 1.0):
        raise CliError(f"--alpha must be in (0, 1], got {args.alpha}", EXIT_INVALID)
    if args.epsilon <= 0:
        raise CliError("--epsilon must be positive", EXIT_INVALID)
    theta = args.theta_pi_multiple * np.pi
    cfg = SolverConfig(k=args.k, theta=theta, alpha=args.alpha,
                       epsilon=args.epsilon,
                       precision_digits=args.precision_digits)
    report = None
    strategy = args.strategy
    if strategy in ("auto", "direct"):
        try:
            report = solve(cfg)
        except (QuadratureError, ParityError) as exc:
            if strategy == "direct":
                raise CliError(f"synthesis failed: {exc}", EXIT_COMPUTE)
            report = None
        if report is not None and strategy == "auto":
            # direct Newton may land on a spurious oscillatory branch;
            # fall back to order continuation if the pulse dips negative.
            # The smooth non-negative family starts at k = 2, so lower
            # orders keep whatever the direct solve found.
            if report.status != "converged" or \
                    (args.k >= 2 and not _waveform_is_nonnegative(report.coeffs)):
                report = None
    if report is None and strategy in ("auto", "continuation"):
        if args.k < 2:
            raise CliError("continuation synthesis requires k >= 2",
                           EXIT_COMPUTE)
        try:
            fam = solve_order_family(max(args.k, 2),
                                     theta_of_k=lambda kk, th=theta, k0=args.k:
                                     th if kk == k0 else (kk + 1) * np.pi)
            report = fam[max(args.k, 2)]
        except (RuntimeError, QuadratureError, ParityError):
            report = None
        if report is None:
            # the target angle may not be reachable by order continuation
            # alone; anchor the branch at pi/2 and continue in angle
            try:
                kk = max(args.k, 2)
                anchor = solve_order_family(kk, k_min=kk,
                                            theta_of_k=lambda _k: np.pi / 2)
                sols = solve_theta_family(kk, [theta],
                                          base=(np.pi / 2, anchor[kk].coeffs))
                report = sols[float(theta)]
            except (RuntimeError, QuadratureError, ParityError) as exc:
                raise CliError(f"continuation synthesis failed: {exc}",
                               EXIT_COMPUTE)
    if report is None or report.status != "converged":
        status = report.status if report is not None else "no solution"
        raise CliError(f"synthesis did not converge (status: {status})",
                       EXIT_COMPUTE)

    sol_path = os.path.join(out_dir, "solution.json")
    wf_path = os.path.join(out_dir, "waveform.csv")
    _atomic_write(sol_path, lambda tmp: json.dump(
        solution_to_dict(report), open(tmp, "w"), indent=2))
    wf = sample_waveform(report.coeffs, T=args.gate_time, n_t=args.n_t)
    _atomic_write(wf_path, lambda tmp: waveform_to_csv(wf, tmp))
    print(f"status: {report.status} ({report.iterations} iterations, "
          f"final residual {report.residual_history[-1]:.3e})")
    return EXIT_OK, [sol_path, wf_path]


# ---------------------------------------------------------------------------
# filter

def _load_poly(path: str) -> PhasePolynomial:
    if not os.path.exists(path):
        raise CliError(f"solution file not found: {path}", EXIT_IO)
    try:
        poly, _meta = load_solution(path)
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CliError(f"malformed solution file {path}: {exc}", EXIT_INVALID)
    return poly


def cmd_filter(args, out_dir: str) -> int:
    poly = _load_poly(args.solution)
    if args.wt_min <= 0 or args.wt_max <= args.wt_min:
        raise CliError("need 0 < --wt-min < --wt-max", EXIT_INVALID)
    if args.n_points < 16:
        raise CliError("--n-points must be >= 16", EXIT_INVALID)
    grid = np.logspace(np.log10(args.wt_min), np.log10(args.wt_max), args.n_points)
    T = 1.0
    try:
        samples = filter_samples(polynomial_phase(poly, T), T, grid)
        window = (args.window_lo, args.window_hi)
        slope = slope_fit(samples, window)
    except (QuadratureError, ValueError) as exc:
        raise CliError(f"filter evaluation failed: {exc}", EXIT_COMPUTE)
    csv_path = os.path.join(out_dir, "filter.csv")
    slope_path = os.path.join(out_dir, "slope.json")
    _atomic_write(csv_path, lambda tmp: filter_to_csv(samples, tmp))
    _atomic_write(slope_path,
                  lambda tmp: slope_report_to_json(samples, window, slope, tmp))
    print(f"log-log slope over omegaT in [{window[0]}, {window[1]}]: {slope:.4f}")
    return EXIT_OK, [csv_path, slope_path]


# ---------------------------------------------------------------------------
# curves

def cmd_curves(args, out_dir: str) -> int:
    poly = _load_poly(args.solution)
    if args.n_s % 2 == 0 or args.n_s < 65:
        raise CliError(f"--n-s must be odd and >= 65, got {args.n_s}", EXIT_INVALID)
    if args.order < 1:
        raise CliError("--order must be >= 1", EXIT_INVALID)
    h = r_sequence(poly, args.order, n_s=args.n_s)
    defects = closure_defects(h)
    csv_path = os.path.join(out_dir, "curves.csv")
    defects_path = os.path.join(out_dir, "defects.json")
    _atomic_write(csv_path, lambda tmp: curves_to_csv(h, tmp))

    def write_defects(tmp):
        with open(tmp, "w") as fh:
            json.dump({"closure_defects": [float(d) for d in defects]}, fh,
                      indent=2)
            fh.write("\n")
    _atomic_write(defects_path, write_defects)
    for m, d in enumerate(defects):
        print(f"|r_{m}(1)| = {d:.3e}")
    return EXIT_OK, [csv_path, defects_path]


# ---------------------------------------------------------------------------
# spectrum

def cmd_spectrum(args, out_dir: str, seed: int) -> int:
    if args.model == "vrqb":
        if args.omega_b <= 0:
            raise CliError("--omega-b must be positive", EXIT_INVALID)
        omega = np.linspace(-5 * args.omega_b, 5 * args.omega_b, args.n_points)
        S = vrqb_spectrum(omega, args.lam, args.omega_b, args.beta)
        rows = np.column_stack([omega, S])
        header = "omega,S_analytic"
        if args.empirical_seeds > 0:
            t_grid = np.arange(0.0, 40.0 / args.omega_b + 1e-12,
                               0.02 / args.omega_b)
            acc = None
            for i in range(args.empirical_seeds):
                bath = build_bath(args.m, args.omega_b, args.beta, args.lam,
                                  seed + i)
                _, om_e, S_e = empirical_bath_spectrum(bath, t_grid)
                acc = S_e if acc is None else acc + S_e
            S_emp = np.interp(omega, om_e, acc / args.empirical_seeds)
            rows = np.column_stack([omega, S, S_emp])
            header = "omega,S_analytic,S_empirical"
    elif args.model == "rtn":
        if not (0 < args.nu_a < args.nu_b):
            raise CliError("need 0 < --nu-a < --nu-b", EXIT_INVALID)
        omega = np.logspace(np.log10(args.nu_a / 100),
                            np.log10(args.nu_b * 100), args.n_points)
        S = rtn_spectrum(omega, args.lam, args.nu_a, args.nu_b)
        rows = np.column_stack([omega, S])
        header = "omega,S_analytic"
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown model {args.model}", EXIT_INVALID)
    csv_path = os.path.join(out_dir, "spectrum.csv")
    _atomic_write(csv_path, lambda tmp: np.savetxt(
        tmp, rows, fmt="%.17g", delimiter=",", header=header, comments=""))
    print(f"wrote {rows.shape[0]} spectrum samples")
    return EXIT_OK, [csv_path]


# ---------------------------------------------------------------------------
# sweep

_SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["noise", "T_grid", "lambda_over_omegaB", "k",
                 "theta_pi_multiple", "n_steps", "n_traj", "seeds"],
    "properties": {
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["vrqb", "rtn"]},
                "omega_B": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "minimum": 0},
                "m": {"type": "integer", "minimum": 2},
                "nu_a": {"type": "number", "exclusiveMinimum": 0},
                "nu_b": {"type": "number", "exclusiveMinimum": 0},
                "n_components": {"type": "integer", "minimum": 10},
            },
        },
        "T_grid": {"type": "array", "minItems": 1,
                   "items": {"type": "number", "exclusiveMinimum": 0}},
        "lambda_over_omegaB": {"type": "array", "minItems": 1,
                               "items": {"type": "number",
                                         "exclusiveMinimum": 0}},
        "k": {"type": "integer", "minimum": 2, "maximum": 12},
        "theta_pi_multiple": {"type": "number"},
        "n_steps": {"type": "integer", "minimum": 100},
        "n_traj": {"type": "integer", "minimum": 100},
        "seeds": {"type": "array", "minItems": 1, "items": {"type": "integer"}},
    },
}


def _load_sweep_config(path: str) -> dict:
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}", EXIT_IO)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(f"config does not parse as JSON: {exc}", EXIT_INVALID)
    import jsonschema
    validator = jsonschema.Draft202012Validator(_SWEEP_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        lines = [f"  {'/'.join(str(p) for p in e.path) or '<root>'}: {e.message}"
                 for e in errors]
        raise CliError("config schema violations:\n" + "\n".join(lines),
                       EXIT_INVALID)
    return raw


def cmd_sweep(args, out_dir: str, jobs: int) -> int:
    raw = _load_sweep_config(args.config)
    noise = raw["noise"]
    theta = raw["theta_pi_multiple"] * np.pi
    k = raw["k"]
    config = SimConfig(
        n_steps=raw["n_steps"], n_traj=raw["n_traj"],
        lambda_over_omegaB=tuple(raw["lambda_over_omegaB"]),
        T_grid=tuple(raw["T_grid"]), seeds=tuple(raw["seeds"]),
        target=GateTarget(theta=theta, k=k, T=max(raw["T_grid"])),
        omega_B=noise.get("omega_B", 1.0), m=noise.get("m", 200),
        beta=noise.get("beta", 0.0), nu_a=noise.get("nu_a", 0.01),
        nu_b=noise.get("nu_b", 1.0),
        n_components=noise.get("n_components", 20),
    )
    protocols = {}
    for name in args.protocols.split(","):
        name = name.strip()
        if name == "smooth":
            try:
                fam = solve_order_family(
                    k, theta_of_k=lambda kk: theta if kk == k else (kk + 1) * np.pi)
            except (RuntimeError, QuadratureError, ParityError) as exc:
                raise CliError(f"pulse synthesis for sweep failed: {exc}",
                               EXIT_COMPUTE)
            protocols["smooth_pulse"] = fam[k].coeffs
        elif name.startswith("udd"):
            try:
                n_dd = int(name[3:])
            except ValueError:
                raise CliError(f"bad protocol name {name!r}", EXIT_INVALID)
            protocols[f"udd_{n_dd}"] = udd_sequence(n_dd)
        else:
            raise CliError(f"unknown protocol {name!r}", EXIT_INVALID)
    methods = [m.strip() for m in args.methods.split(",")]
    alias = {"quantum": "quantum_full", "classical": "classical_mc"}
    methods = [alias.get(m, m) for m in methods]
    try:
        rows = sweep(config, protocols, methods, noise_kind=noise["kind"],
                     jobs=jobs)
    except (ValueError, AccuracyError) as exc:
        raise CliError(f"sweep failed: {exc}", EXIT_COMPUTE)
    csv_path = os.path.join(out_dir, "sweep.csv")
    _atomic_write(csv_path, lambda tmp: sweep_to_csv(rows, tmp))
    n_failed = sum(1 for r in rows if not np.isfinite(r.infidelity))
    print(f"{len(rows)} sweep points ({n_failed} failed)")
    return EXIT_OK, [csv_path]


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="smoothpulse",
        description="Synthesize noise-filtering control pulses and quantify "
                    "their robustness.")
    p.add_argument("--seed", type=int, default=0, help="base random seed")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers for sweeps")
    p.add_argument("--out-dir", default=".", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("synth", help="synthesize a pulse")
    ps.add_argument("--k", type=int, required=True)
    ps.add_argument("--theta-pi-multiple", type=float, required=True,
                    help="rotation angle as a multiple of pi")
    ps.add_argument("--alpha", type=float, default=1.0)
    ps.add_argument("--epsilon", type=float, default=1e-12)
    ps.add_argument("--precision-digits", type=int, default=0)
    ps.add_argument("--gate-time", type=float, default=1.0)
    ps.add_argument("--n-t", type=int, default=1025)
    ps.add_argument("--strategy", choices=("auto", "direct", "continuation"),
                    default="auto")

    pf = sub.add_parser("filter", help="filter function of a solution")
    pf.add_argument("--solution", required=True)
    pf.add_argument("--wt-min", type=float, default=1e-2)
    pf.add_argument("--wt-max", type=float, default=1e2)
    pf.add_argument("--n-points", type=int, default=200)
    pf.add_argument("--window-lo", type=float, default=0.1)
    pf.add_argument("--window-hi", type=float, default=1.0)

    pc = sub.add_parser("curves", help="iterated-integral curves of a solution")
    pc.add_argument("--solution", required=True)
    pc.add_argument("--order", type=int, required=True)
    pc.add_argument("--n-s", type=int, default=2049)

    pn = sub.add_parser("spectrum", help="noise power spectra")
    pn.add_argument("--model", choices=("vrqb", "rtn"), required=True)
    pn.add_argument("--lam", type=float, default=1.0)
    pn.add_argument("--omega-b", type=float, default=1.0)
    pn.add_argument("--beta", type=float, default=0.0)
    pn.add_argument("--m", type=int, default=200)
    pn.add_argument("--empirical-seeds", type=int, default=0)
    pn.add_argument("--nu-a", type=float, default=0.01)
    pn.add_argument("--nu-b", type=float, default=1.0)
    pn.add_argument("--n-points", type=int, default=201)

    pw = sub.add_parser("sweep", help="infidelity sweep from a config file")
    pw.add_argument("--config", required=True)
    pw.add_argument("--methods", default="leading")
    pw.add_argument("--protocols", default="smooth")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t_start = time.time()
    try:
        _ensure_out_dir(args.out_dir)
        if args.command == "synth":
            code, outputs = cmd_synth(args, args.out_dir)
        elif args.command == "filter":
            code, outputs = cmd_filter(args, args.out_dir)
        elif args.command == "curves":
            code, outputs = cmd_curves(args, args.out_dir)
        elif args.command == "spectrum":
            code, outputs = cmd_spectrum(args, args.out_dir, args.seed)
        elif args.command == "sweep":
            code, outputs = cmd_sweep(args, args.out_dir, args.jobs)
        else:  # pragma: no cover
            return EXIT_INVALID
        params = {k: v for k, v in vars(args).items()
                  if k not in ("command",) and v is not None}
        _write_manifest(args.out_dir, args.command, params, args.seed,
                        outputs, t_start)
        return code
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
