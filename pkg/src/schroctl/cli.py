"""Command-line orchestration: run experiments, persist artifacts, plot.

Artifacts are staged in a temporary sibling directory and renamed into
place on success, so an interrupted run never leaves partial output.
Result JSON and CSV files are byte-deterministic for a fixed config and
seed; manifest.json additionally records wall time and library versions.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import shutil
import sys
import time

import numpy as np

from . import __version__
from .config import COMMANDS, ExperimentConfig, config_hash, parse_config, serialize_config
from .conditions import check_alpha_admissible, check_condition_p
from .errors import InputError, NumericalError, ResourceError
from .lyapunov import FeedbackParams, closed_loop
from .nonlinear import (cubic_closed_loop, linearized_response, make_cubic_tables,
                        propagate_cubic)
from .potentials import evaluate_family, load_potential_csv
from .propagator import ControlSignal, make_tables, sample_control
from .spectral import (Grid, PotentialPair, basis_state, build_basis,
                       random_unit_state, sobolev_norm)
from .steering import steer
from .stochastic import (RandomAmplitudeModel, StoppingConfig, default_model,
                         flat_model, growth_report, tail_statistics)
from .svgplot import line_plot

# component ids for deriving independent seed streams from the run seed
INIT_STREAM = 2          # initial-state draws
TAIL_STREAM = 10         # entrance-time ensemble
GROWTH_STREAM = 11       # growth ensemble

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _state_rng(seed):
    return np.random.default_rng(np.random.SeedSequence((int(seed), INIT_STREAM)))


def _parse_state(spec, truncation, rng, basis):
    parts = spec.split()
    if parts and parts[0] == "mode" and len(parts) == 2:
        return basis_state(truncation, int(parts[1]))
    if spec == "random":
        return random_unit_state(rng, truncation)
    if spec == "random smooth":
        return random_unit_state(rng, truncation, smooth=True, scale=basis.norm_scale)
    raise InputError(f"unknown state spec {spec!r} "
                     "(expected 'mode <k>', 'random' or 'random smooth')")


def _build_setup(cfg):
    g = cfg.sections["grid"]
    grid = Grid(g["n_points"], g["length"])
    p = cfg.sections["potential"]
    if p["csv"]:
        v, q = load_potential_csv(p["csv"], grid)
    else:
        v = evaluate_family(p["v"], grid)
        q = evaluate_family(p["q"], grid)
    pots = PotentialPair(v, q)
    basis = build_basis(grid, pots, g["truncation"])
    return grid, pots, basis


def _feedback_params(cfg):
    c = cfg.sections["control"]
    return FeedbackParams(
        alpha=c["alpha"],
        delta=c["delta"],
        target=c["target"],
        hold=c["hold"],
        u_max=c["u_max"] if c["u_max"] > 0 else None,
        stop_threshold=c["stop_threshold"],
    )


def _write_csv(path, header, columns):
    rows = zip(*columns)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _cmd_spectrum(cfg, out):
    _, _, basis = _build_setup(cfg)
    result = {
        "eigenvalues": [float(x) for x in basis.eigenvalues],
        "norm_scale": [float(x) for x in basis.norm_scale],
        "coupling": [[float(x) for x in row] for row in basis.coupling],
    }
    j = np.arange(1, basis.truncation + 1)
    line_plot(os.path.join(out, "plot.svg"), j,
              {"lambda_j": basis.eigenvalues},
              title="spectrum of -d2/dx2 + V", xlabel="mode", ylabel="eigenvalue")
    return result, f"lambda_1 = {basis.eigenvalues[0]:.6g}"


def _cmd_check_conditions(cfg, out):
    _, _, basis = _build_setup(cfg)
    c = cfg.sections["control"]
    n = c["index_bound"]
    coupling, gap = check_condition_p(basis, n, c["coupling_tol"], c["gap_tol"])
    admiss = check_alpha_admissible(basis, c["alpha"], n, c["coupling_tol"])
    result = {
        "coupling": coupling.to_json_dict(),
        "gap": gap.to_json_dict(),
        "alpha_admissible": admiss.to_json_dict(),
    }
    j = np.arange(1, n + 1)
    line_plot(os.path.join(out, "plot.svg"), j,
              {"|B_1j|": np.abs(basis.coupling[0, :n])},
              title="ground-mode couplings", xlabel="mode j", ylabel="|B_1j|",
              log_y=True)
    status = "pass" if coupling.passed and gap.passed and admiss.passed else "FAIL"
    return result, f"conditions {status} at N={n}"


def _cmd_stabilize(cfg, out):
    _, _, basis = _build_setup(cfg)
    c = cfg.sections["control"]
    tables = make_tables(basis, c["dt"])
    rng = _state_rng(cfg.seed)
    z0 = _parse_state(c["state"], basis.truncation, rng, basis)
    params = _feedback_params(cfg)
    rec = closed_loop(z0, tables, params, c["horizon"])
    rec.write_csv(os.path.join(out, "trajectory.csv"))
    line_plot(os.path.join(out, "plot.svg"), rec.times,
              {"V(z(t))": rec.lyapunov},
              title="Lyapunov value along the closed loop",
              xlabel="t", ylabel="V", log_y=True)
    result = {
        "v_initial": float(rec.lyapunov[0]),
        "v_final": float(rec.lyapunov[-1]),
        "ratio": float(rec.lyapunov[-1] / rec.lyapunov[0]) if rec.lyapunov[0] else None,
        "final_population": float(rec.target_population[-1]),
        "stopped_early": rec.stopped_early,
        "delta_final": rec.delta_final,
        "warnings": list(rec.warnings),
    }
    return result, f"V: {result['v_initial']:.4g} -> {result['v_final']:.4g}"


def _cmd_steer(cfg, out):
    _, _, basis = _build_setup(cfg)
    c = cfg.sections["control"]
    tables = make_tables(basis, c["dt"])
    rng = _state_rng(cfg.seed)
    z0 = _parse_state(c["steer_from"], basis.truncation, rng, basis)
    z1 = _parse_state(c["steer_to"], basis.truncation, rng, basis)
    params = _feedback_params(cfg)
    res = steer(z0, z1, tables, params, c["eps"],
                budget=c["budget"] if c["budget"] > 0 else None,
                max_time=c["max_time"])
    t = np.arange(res.control.values.shape[0]) * tables.dt
    _write_csv(os.path.join(out, "control.csv"), "t,u", [t, res.control.values])
    if t.size:
        line_plot(os.path.join(out, "plot.svg"), t, {"u(t)": res.control.values},
                  title="steering control", xlabel="t", ylabel="u")
    result = {
        "k0": res.k0,
        "k1": res.k1,
        "eps": c["eps"],
        "achieved": res.achieved,
        "sup_u": res.sup_u,
    }
    return result, f"achieved {res.achieved:.4g} < eps {c['eps']} in k = {res.k0 + res.k1}"


def _stochastic_model(cfg):
    s = cfg.sections["stochastic"]
    if s["model"] == "flat":
        return flat_model(s["j_trunc"], s["amplitude"], s["noise"])
    j = np.arange(1, s["j_trunc"] + 1, dtype=float)
    return RandomAmplitudeModel(s["amplitude"] * j ** -2.0, noise_family=s["noise"])


def _cmd_random_growth(cfg, out):
    _, _, basis = _build_setup(cfg)
    s = cfg.sections["stochastic"]
    tables = make_tables(basis, cfg.sections["control"]["dt"])
    rng = _state_rng(cfg.seed)
    z0 = _parse_state(s["state"], basis.truncation, rng, basis)
    model = _stochastic_model(cfg)
    radius = s["radius"] if s["radius"] > 0 else (
        s["radius_scale"] * float(sobolev_norm(z0, -s["order"], basis)))
    stopping = StoppingConfig(radius=radius, order=s["order"], max_steps=s["max_steps"])
    tail = tail_statistics(z0, model, stopping, s["n_max"], s["block"], s["paths"],
                           (cfg.seed, TAIL_STREAM), tables)
    growth = growth_report(z0, model, s["growth_steps"], s["growth_order"],
                           s["paths"], (cfg.seed, GROWTH_STREAM), tables)
    result = {
        "config_hash": config_hash(cfg),
        "paths": tail.paths,
        "censored": tail.censored,
        "radius": radius,
        "tail": tail.to_json_dict()["tail"],
        "log_slope": tail.log_slope,
        "log_slope_stderr": tail.log_slope_stderr,
        "degenerate_tail": tail.degenerate,
        "growth": {
            "checkpoints": [int(k) for k in growth.checkpoints],
            "median_G": [float(x) for x in growth.median_peak],
            "median_L": [float(x) for x in growth.median_floor],
        },
    }
    line_plot(os.path.join(out, "plot.svg"), tail.n_values.astype(float),
              {"P(tau > n*block)": np.maximum(tail.p_hat, 1e-12)},
              title="entrance-time survival", xlabel="n", ylabel="survival",
              log_y=True)
    if s["write_paths"]:
        idx = np.arange(tail.paths)
        _write_csv(os.path.join(out, "paths.csv"), "path,tau",
                   [idx, tail.entrance_times])
    slope = "n/a" if tail.log_slope is None else f"{tail.log_slope:.3f}"
    return result, f"censored {tail.censored}/{tail.paths}, log-slope {slope}"


def _cmd_nonlinear_stabilize(cfg, out):
    grid, pots, basis = _build_setup(cfg)
    c = cfg.sections["control"]
    ctab = make_cubic_tables(grid, pots, c["dt"])
    rng = _state_rng(cfg.seed)
    z0 = _parse_state(c["state"], basis.truncation, rng, basis)
    params = _feedback_params(cfg)
    rec = cubic_closed_loop(z0, ctab, params, c["horizon"])
    rec.write_csv(os.path.join(out, "trajectory.csv"))
    line_plot(os.path.join(out, "plot.svg"), rec.times,
              {"V(z(t))": rec.lyapunov},
              title="Lyapunov value along the cubic closed loop",
              xlabel="t", ylabel="V", log_y=True)
    result = {
        "v_initial": float(rec.lyapunov[0]),
        "v_final": float(rec.lyapunov[-1]),
        "ratio": float(rec.lyapunov[-1] / rec.lyapunov[0]) if rec.lyapunov[0] else None,
        "final_population": float(rec.target_population[-1]),
        "stopped_early": rec.stopped_early,
        "blowup": rec.blowup,
        "warnings": list(rec.warnings),
    }
    return result, f"V: {result['v_initial']:.4g} -> {result['v_final']:.4g}"


def _cmd_linearized_probe(cfg, out):
    grid, pots, _ = _build_setup(cfg)
    c = cfg.sections["control"]
    ctab = make_cubic_tables(grid, pots, c["dt"])
    p, l = c["source_mode"], c["probe_mode"]
    omega = ctab.eigenvalues[p - 1] - ctab.eigenvalues[l - 1]
    u_cos = sample_control(lambda t: np.cos(omega * t), 1.0, ctab.dt)
    u_sin = sample_control(lambda t: np.sin(omega * t), 1.0, ctab.dt)
    r_cos = linearized_response(p, l, u_cos, ctab)
    r_sin = linearized_response(p, l, u_sin, ctab)
    amp = 1e-3
    z = propagate_cubic(basis_state(max(p, l), p),
                        ControlSignal(ctab.dt, amp * u_cos.values), ctab)
    finite = complex(z[l - 1])
    rel = abs(finite - amp * r_cos) / (amp * abs(r_cos)) if abs(r_cos) else None
    rank_map = np.array([[r_sin.real, r_cos.real], [r_sin.imag, r_cos.imag]])
    sv = np.linalg.svd(rank_map, compute_uv=False)
    rank_ok = bool(sv[-1] > 1e-9 * max(sv[0], 1.0))
    result = {
        "source_mode": p,
        "probe_mode": l,
        "closed_form_cos": {"re": r_cos.real, "im": r_cos.imag},
        "closed_form_sin": {"re": r_sin.real, "im": r_sin.imag},
        "finite_amplitude": {"re": finite.real, "im": finite.imag},
        "amplitude": amp,
        "relative_error": rel,
        "rank_map": [[float(x) for x in row] for row in rank_map],
        "rank_ok": rank_ok,
    }
    t = np.arange(u_cos.values.shape[0]) * ctab.dt
    line_plot(os.path.join(out, "plot.svg"), t, {"u(t)": u_cos.values},
              title="resonant probe control", xlabel="t", ylabel="u")
    rel_str = "n/a" if rel is None else f"{rel:.3%}"
    return result, f"linearized response match: {rel_str}"


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "check-conditions": _cmd_check_conditions,
    "stabilize": _cmd_stabilize,
    "steer": _cmd_steer,
    "random-growth": _cmd_random_growth,
    "nonlinear-stabilize": _cmd_nonlinear_stabilize,
    "linearized-probe": _cmd_linearized_probe,
}


def run(cfg, out_dir, quiet=False):
    """Execute the configured experiment; artifacts appear atomically."""
    if os.path.exists(out_dir):
        raise InputError(f"output directory {out_dir!r} already exists")
    stage = f"{out_dir}.tmp-{os.getpid()}"
    os.makedirs(stage)
    t0 = time.time()
    try:
        result, summary = _DISPATCH[cfg.command](cfg, stage)
        with open(os.path.join(stage, "result.json"), "w") as fh:
            json.dump(result, fh, sort_keys=True, indent=2)
            fh.write("\n")
        manifest = {
            "command": cfg.command,
            "config_hash": config_hash(cfg),
            "resolved_config": cfg.sections,
            "versions": {
                "schroctl": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "wall_time_s": time.time() - t0,
            "artifacts": sorted(os.listdir(stage)) + ["manifest.json", "result.json"],
        }
        manifest["artifacts"] = sorted(set(manifest["artifacts"]))
        with open(os.path.join(stage, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        os.rename(stage, out_dir)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    if not quiet:
        print(f"{cfg.command}: {summary} -> {out_dir}")
    return EXIT_OK


def _error_report(out_dir, exc, status):
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "error.json"), "w") as fh:
            json.dump({"error": type(exc).__name__, "message": str(exc),
                       "exit_status": status}, fh, sort_keys=True, indent=2)
            fh.write("\n")
    except OSError:
        pass


def build_parser():
    parser = argparse.ArgumentParser(
        prog="schroctl",
        description="simulation and control experiments for the 1D bilinear "
                    "Schrodinger equation")
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="experiment to run (overrides the config)")
    parser.add_argument("--config", help="path to a config file")
    parser.add_argument("--seed", type=int, help="seed override (u64)")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--paths", type=int, help="stochastic path count override")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary line")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    fallback_out = args.out or "results"
    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        env_seed = os.environ.get("SCHRO_SEED")
        cfg = parse_config(text)
        if "seed" not in _explicit_keys(text) and env_seed is not None:
            cfg = cfg.replaced("experiment", "seed", int(env_seed))
        if args.seed is not None:
            cfg = cfg.replaced("experiment", "seed", args.seed)
        if args.command:
            cfg = cfg.replaced("experiment", "command", args.command)
        if args.paths is not None:
            if args.paths < 1:
                raise InputError("--paths must be >= 1")
            cfg = cfg.replaced("stochastic", "paths", args.paths)
        out_dir = args.out or cfg.get("experiment", "output_dir")
        return run(cfg, out_dir, quiet=args.quiet)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        _error_report(fallback_out, exc, EXIT_VALIDATION)
        return EXIT_VALIDATION
    except (NumericalError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        _error_report(fallback_out, exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL


def _explicit_keys(text):
    keys = set()
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" in line and section == "experiment":
            keys.add(line.partition("=")[0].strip())
    return keys


if __name__ == "__main__":
    sys.exit(main())
