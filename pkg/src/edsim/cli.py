"""Command-line front end.

Subcommands:

* evolve        - integrate a preset's wave state, writing moments and
                  snapshots
* ensemble      - sample a walker ensemble along the evolved state and
                  compare its histogram against the density at checkpoints
* geometry-check - run the phase-space identity battery
* limits        - vanishing-noise and centre-of-mass limit studies
* entropic-step - one maximum-entropy transition with composition, reverse
                  and maximizer diagnostics
* report        - summarize a finished run directory and verify its hashes

Every run writes config.json, result files, and manifest.json with content
hashes into --out; an INCOMPLETE marker is present until the run finishes.
Repeated runs with identical configuration and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .entropic import (MaxEntProblem, bayes_reverse, chapman_kolmogorov_step,
                       maxent_transition, verify_maximizer)
from .geometry import geometry_battery
from .grids import ConfigGrid, ScalarField, VectorField, single_particle
from .io import RunWriter, load_json, verify_run_dir
from .presets import PRESETS, build_preset
from .quantum import energy, evolve_trajectory, madelung, position_moments
from .stats import compare_density, histogram_on_grid
from .stochastic import (TransitionParams, bohmian_trajectories,
                         center_of_mass_report, draw_initial_positions,
                         max_deviation_from_deterministic, simulate_ensemble,
                         with_eta)


def _scenario_from_args(args) -> tuple:
    overrides = {}
    if args.points is not None:
        overrides["points"] = args.points
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.steps is not None:
        overrides["steps"] = args.steps
    sc = build_preset(args.preset, **overrides)
    config = {
        "preset": args.preset,
        "points": list(sc.grid.points),
        "dt": sc.dt,
        "steps": sc.steps,
    }
    return sc, config


def _checkpoint_indices(n_states: int, checkpoints: int) -> list[int]:
    idx = np.linspace(0, n_states - 1, checkpoints + 1).round().astype(int)
    return sorted(set(int(i) for i in idx[1:]))


def cmd_evolve(args) -> int:
    sc, config = _scenario_from_args(args)
    config.update({"command": "evolve", "snapshots": args.snapshots})
    writer = RunWriter(args.out)
    writer.write_config(config)

    timeline = evolve_trajectory(sc.state, sc.potentials, sc.dt, sc.steps)
    rows = []
    for st in timeline:
        mom = position_moments(st)
        row = [st.time,
               abs(st.meta.get("raw_norm", 1.0) - 1.0),
               energy(st, sc.potentials, st.time),
               st.meta.get("cn_residual", 0.0)]
        for a in range(sc.grid.dim):
            row.extend([mom["mean"][a], mom["width"][a]])
        rows.append(row)
    header = ["time", "norm_gap", "energy", "cn_residual"]
    for a in range(sc.grid.dim):
        header.extend([f"mean_{a}", f"width_{a}"])
    writer.write_csv("moments.csv", header, rows)

    snap_idx = _checkpoint_indices(len(timeline), args.snapshots)
    snaps = {
        "times": np.array([timeline[i].time for i in snap_idx]),
        "psi": np.stack([timeline[i].psi for i in snap_idx]),
        "grid": sc.grid.describe(),
    }
    writer.write_json("snapshots.json", snaps)

    energies = np.array([r[2] for r in rows])
    result = {
        "final_time": timeline[-1].time,
        "max_norm_gap": float(max(r[1] for r in rows)),
        "energy_drift_rel": float(np.max(np.abs(energies - energies[0]))
                                  / max(abs(energies[0]), 1e-300)),
        "steps": sc.steps,
    }
    writer.write_json("result.json", result)
    writer.finish()
    print(f"evolve: {sc.steps} steps of {args.preset}, "
          f"norm gap {result['max_norm_gap']:.2e}, "
          f"energy drift {result['energy_drift_rel']:.2e}")
    return 0


def cmd_ensemble(args) -> int:
    sc, config = _scenario_from_args(args)
    gamma = {"ES": 1.0, "OU": 3.0}.get(args.process, args.gamma)
    if gamma is None:
        print("error: --gamma is required for the fractional process",
              file=sys.stderr)
        return 2
    eta = args.eta if args.eta is not None else sc.system.eta
    system = with_eta(sc.system, eta, gamma_exponent=gamma)
    config.update({
        "command": "ensemble", "process": args.process, "eta": eta,
        "gamma": gamma, "walkers": args.walkers, "seed": args.seed,
        "checkpoints": args.checkpoints,
    })
    writer = RunWriter(args.out)
    writer.write_config(config)

    timeline = evolve_trajectory(sc.state, sc.potentials, sc.dt, sc.steps)
    params = TransitionParams(sc.dt, eta, gamma)
    stride = max(1, sc.steps // args.checkpoints)
    ens = simulate_ensemble(timeline, sc.potentials, system, params,
                            n_walkers=args.walkers, seed=args.seed,
                            record_stride=stride)
    checkpoints = []
    for j, t in enumerate(ens.times):
        if j == 0:
            continue
        k = int(round((t - timeline[0].time) / sc.dt))
        rho = ScalarField(sc.grid, timeline[k].rho)
        rep = compare_density(ens.positions[j], rho,
                              n_calibration=args.calibration,
                              seed=args.seed + j)
        checkpoints.append({
            "time": float(t), "tv": rep["tv"], "tv_band_95": rep["tv_band_95"],
            "passed": rep["passed"], "kl_smoothed": rep["kl_smoothed"],
            "chi2": rep["chi2"], "chi2_dof": rep["chi2_dof"],
        })
    result = {
        "process": params.process_label,
        "walkers": args.walkers,
        "escaped": ens.meta["escaped"],
        "checkpoints": checkpoints,
        "n_passed": sum(c["passed"] for c in checkpoints),
        "final_histogram": histogram_on_grid(sc.grid, ens.positions[-1]),
    }
    writer.write_json("report.json", result)
    writer.finish()
    print(f"ensemble: {params.process_label} x {args.preset}, "
          f"{result['n_passed']}/{len(checkpoints)} checkpoints in band")
    return 0


def cmd_geometry_check(args) -> int:
    config = {
        "command": "geometry-check", "outcomes": args.outcomes,
        "probes": args.probes, "kernels": args.kernels, "seed": args.seed,
    }
    writer = RunWriter(args.out)
    writer.write_config(config)
    report = geometry_battery(args.outcomes, args.probes, args.kernels,
                              seed=args.seed)
    writer.write_json("report.json", report)
    writer.finish()
    print(f"geometry-check: {'pass' if report['all_passed'] else 'FAIL'} "
          f"(J2 {report['j_squared_max_dev']:.1e}, "
          f"killing {report['killing_hermitian_max']:.1e})")
    return 0 if report["all_passed"] else 1


def cmd_limits(args) -> int:
    sc, config = _scenario_from_args(args)
    etas = [1e-2, 1e-3, 1e-4]
    config.update({"command": "limits", "walkers": args.walkers,
                   "seed": args.seed, "etas": etas})
    writer = RunWriter(args.out)
    writer.write_config(config)

    timeline = evolve_trajectory(sc.state, sc.potentials, sc.dt, sc.steps)
    rng = np.random.default_rng(args.seed)
    x0 = draw_initial_positions(timeline[0], args.walkers, rng)
    base = with_eta(sc.system, 0.0)
    reference = bohmian_trajectories(timeline, sc.potentials, base, x0)
    deviations = []
    for eta in etas:
        system = with_eta(sc.system, eta, gamma_exponent=1.0)
        params = TransitionParams(sc.dt, eta, 1.0)
        ens = simulate_ensemble(timeline, sc.potentials, system, params,
                                n_walkers=args.walkers, seed=args.seed,
                                initial_positions=x0)
        deviations.append(max_deviation_from_deterministic(ens, reference))
    cm = [center_of_mass_report([1.0] * n, eta=1e-2, dt=0.05,
                                seed=args.seed + n)
          for n in (1, 2, 4, 8)]
    result = {
        "etas": etas,
        "max_deviations": deviations,
        "monotone": bool(np.all(np.diff(deviations) < 0)),
        "center_of_mass": cm,
    }
    writer.write_json("report.json", result)
    writer.finish()
    print(f"limits: deviations {', '.join('%.3e' % d for d in deviations)} "
          f"({'monotone' if result['monotone'] else 'NOT monotone'})")
    return 0


def cmd_entropic_step(args) -> int:
    config = {
        "command": "entropic-step", "points": args.points, "dt": args.dt,
        "eta": args.eta, "gamma": args.gamma, "mass": args.mass,
        "drift_slope": args.drift_slope, "seed": args.seed,
    }
    writer = RunWriter(args.out)
    writer.write_config(config)

    grid = ConfigGrid((args.points,), (20.0,), (True,), origin=(-10.0,))
    system = single_particle(mass=args.mass, eta=args.eta,
                             gamma_exponent=args.gamma)
    x = grid.axis_coords(0)
    drift = VectorField(grid, np.stack([np.full_like(x, args.drift_slope)]))
    problem = MaxEntProblem(grid, system, args.dt, drift)
    step = maxent_transition(problem)

    rho0 = np.exp(-0.5 * (x / 1.5) ** 2)
    rho0 /= rho0.sum() * grid.cell_volume
    rho0 = ScalarField(grid, rho0)
    rho1, ck = chapman_kolmogorov_step(rho0, step)

    center = int(np.argmax(rho1.values))
    reverse = bayes_reverse(step, rho0, rho1, (center,))
    reverse_mass = float(reverse.values.sum() * grid.cell_volume)
    maximizer = verify_maximizer(step, perturbations=args.perturbations,
                                 seed=args.seed)
    expected_shift = system.hbar * args.dt / args.mass * args.drift_slope
    mean0 = float(np.sum(rho0.values * x) * grid.cell_volume)
    mean1 = float(np.sum(rho1.values * x) * grid.cell_volume)
    result = {
        "mass_drift": ck["mass_drift"],
        "kernel_norm_gap": ck["kernel_norm_gap"],
        "mean_shift_observed": mean1 - mean0,
        "mean_shift_expected": expected_shift,
        "reverse_mass": reverse_mass,
        "maximizer": {
            "min_margin": maximizer["min_margin"],
            "all_nonnegative": maximizer["all_nonnegative"],
            "candidate_entropy": maximizer["candidate_entropy"],
        },
    }
    writer.write_json("report.json", result)
    writer.finish()
    print(f"entropic-step: mass drift {ck['mass_drift']:.2e}, "
          f"maximizer {'ok' if maximizer['all_nonnegative'] else 'FAIL'}")
    return 0


def cmd_report(args) -> int:
    check = verify_run_dir(args.run)
    if not check["complete"]:
        print(f"{args.run}: INCOMPLETE (marker present)")
        return 1
    config = load_json(f"{args.run}/config.json")
    print(f"run {args.run}: command={config.get('command')}")
    for key in sorted(config):
        if key != "command":
            print(f"  {key} = {config[key]}")
    if check["mismatches"]:
        print(f"  HASH MISMATCH in: {', '.join(check['mismatches'])}")
        return 1
    print(f"  {check['checked']} files verified against manifest")
    try:
        report = load_json(f"{args.run}/report.json")
    except FileNotFoundError:
        report = load_json(f"{args.run}/result.json")
    for key in sorted(report):
        val = report[key]
        if isinstance(val, (int, float, bool, str)):
            print(f"  {key}: {val}")
    return 0


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--preset", default="free", choices=sorted(PRESETS))
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edsim",
        description="entropic-dynamics simulator and validation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="integrate a preset wave state")
    _add_scenario_flags(p)
    p.add_argument("--snapshots", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("ensemble", help="walker ensemble density tracking")
    _add_scenario_flags(p)
    p.add_argument("--process", default="OU",
                   choices=["ES", "OU", "fractional"])
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--walkers", type=int, default=20000)
    p.add_argument("--checkpoints", type=int, default=6)
    p.add_argument("--calibration", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("geometry-check", help="phase-space identity battery")
    p.add_argument("--outcomes", type=int, default=32)
    p.add_argument("--probes", type=int, default=100)
    p.add_argument("--kernels", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_geometry_check)

    p = sub.add_parser("limits", help="vanishing-noise and CM studies")
    _add_scenario_flags(p)
    p.add_argument("--walkers", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("entropic-step", help="one maximum-entropy transition")
    p.add_argument("--points", type=int, default=128)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--drift-slope", type=float, default=0.8)
    p.add_argument("--perturbations", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_entropic_step)

    p = sub.add_parser("report", help="summarize a finished run directory")
    p.add_argument("run")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
