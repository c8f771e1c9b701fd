#!/usr/bin/env python3
"""
quadtrack command line.

Usage:
    quadtrack gradients --input harmonics.csv --nd 16 --pad 1.0 --output out/grad
    quadtrack gradients --analytic --alpha 6e-4 --l1 0.9 --l2 0.9 --z2 3.1 --zmax 4 --dz 0.002
    quadtrack build --gauges af,coulomb,hfc --nd 16 --field surrogate
    quadtrack track --methods lie4 --steps 0.08 --pairs 3000
    quadtrack converge --gauge af --methods rk4,gauss4,lie4 --steps 0.04,0.02,0.01,0.005
    quadtrack efficiency --field surrogate --nd 16 --methods rk4,lie4 --steps 0.02,0.04,0.08,0.16
    quadtrack energy --pairs 8000 --step 0.08 --baseline gauss6
    quadtrack maxwell --x0 0 --y0 0.01 --nd-range 2..16
"""

import argparse
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from src.cli.artifacts import ArtifactWriter
from src.cli.config import RunConfig, load_run_config, parse_list, parse_range
from src.common.errors import QuadtrackError
from src.common.logging import setup_logger
from src.dynamics.kinematics import proton_reference
from src.dynamics.state import ParticleState
from src.gauge.maxwell import curl, maxwell_residual_curve, probe_fields
from src.gauge.potential_table import count_coefficients, evaluation_work_ratio, export_potential
from src.harmonics.analytic import analytic_c20
from src.harmonics.gradients import compute_gradients, save_gradients
from src.harmonics.harmonic_set import load_harmonics, zero_pad
from src.integrators.spec import IntegratorSpec
from src.tracker.envelopes import detect_instability, pair_envelope
from src.tracker.fields import (
    SURROGATE_PAD,
    FieldConfiguration,
    analytic_benchmark,
    drift_configuration,
    from_harmonics,
    realistic_surrogate,
)
from src.tracker.lattice import build_fodo, single_element
from src.tracker.studies import convergence_study, efficiency_study, energy_study
from src.tracker.tracking import CheckpointPolicy, track

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_MISSING_FILE = 2

logger = setup_logger("quadtrack")


def _float_list(text: str) -> List[float]:
    return parse_list(text, float)


def _common_parser() -> argparse.ArgumentParser:
    """Flags shared by every command; all default to None so config-file values survive."""
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML run configuration (flags override its values)")
    p.add_argument("--output", help="Output directory")
    p.add_argument("--log-level", help="Logging level (default $QUADTRACK_LOG_LEVEL or INFO)")
    p.add_argument("--jobs", type=int, help="Worker processes (default $QUADTRACK_JOBS or 1)")
    p.add_argument("--seed", type=int, help="Seed for randomized probe points")

    src = p.add_argument_group("field source")
    src.add_argument("--input", help="Harmonic CSV (z,B<m>[,A<m>]...) with .meta.json sidecar")
    src.add_argument("--field", choices=["analytic", "surrogate", "drift"], help="Named field configuration")
    src.add_argument("--radius", type=float, help="Radius of analysis (overrides the sidecar)")
    src.add_argument("--pad", type=float, help="Zero padding added on each side before inversion")
    src.add_argument("--reference-length", type=float, help="Reference length L dividing z and R")
    src.add_argument("--energy-tev", type=float, help="Proton energy for tesla-valued harmonics")
    src.add_argument("--alpha", type=float, help="Analytic profile plateau gradient")
    src.add_argument("--l1", type=float, help="Analytic entrance transition length")
    src.add_argument("--l2", type=float, help="Analytic exit transition length")
    src.add_argument("--z2", type=float, help="Analytic exit transition start")
    src.add_argument("--zmax", type=float, help="Analytic field length")
    src.add_argument("--dz", type=float, help="Analytic sampling step")
    src.add_argument("--nd", type=int, help="Expansion order ND")

    run = p.add_argument_group("integration")
    run.add_argument("--gauge", help="Gauge: af, coulomb or hfc")
    run.add_argument("--gauges", type=parse_list, help="Comma-separated gauges")
    run.add_argument("--methods", type=parse_list, help="Comma-separated methods")
    run.add_argument("--steps", type=_float_list, help="Comma-separated steps")
    run.add_argument("--step", type=float, help="Single step (same as --steps with one value)")
    run.add_argument("--mode", help="Coefficient source: previous, nearest, interval, spline, exact")
    run.add_argument("--fp-tol", type=float, help="Fixed-point tolerance")
    run.add_argument("--fp-max", type=int, help="Fixed-point iteration cap")
    run.add_argument("--pairs", dest="n_pairs", type=int, help="FODO pairs (default: one element)")
    run.add_argument("--checkpoints", help="step, element, exit or decimate:N")
    run.add_argument("--x0", type=float)
    run.add_argument("--y0", type=float)
    run.add_argument("--px0", type=float)
    run.add_argument("--py0", type=float)
    run.add_argument("--delta0", type=float)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="quadtrack", description=__doc__.split("\n")[1])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gradients", parents=[common], help="Invert harmonics into generalized gradients")
    g.add_argument("--analytic", action="store_true", help="Sample the analytic profile instead of --input")

    sub.add_parser("build", parents=[common], help="Build and export potential tables")
    sub.add_parser("track", parents=[common], help="Track one particle through the lattice")

    c = sub.add_parser("converge", parents=[common], help="Exit-error convergence study")
    c.add_argument("--window", type=_float_list, help="Asymptotic step window 'min,max' for slope fits")

    e = sub.add_parser("efficiency", parents=[common], help="Error, wall-clock and work per gauge")
    e.add_argument("--repeats", type=int, help="Timing repeats (minimum is kept)")

    n = sub.add_parser("energy", parents=[common], help="K_X series and deviations from a baseline method")
    n.add_argument("--baseline", help="Baseline method (default gauss6)")

    m = sub.add_parser("maxwell", parents=[common], help="Residual of curl curl A versus ND")
    m.add_argument("--nd-range", type=parse_range, help="'2..16' or '2,4,8'")
    m.add_argument("--n-probes", type=int, help="Random probe points for the curl comparison")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "log_level", "analytic", "step")}
    if args.step is not None and args.steps is None:
        overrides["steps"] = [args.step]
    return load_run_config(args.config, overrides)


def field_configuration(cfg: RunConfig, nd: Optional[int] = None) -> FieldConfiguration:
    nd = cfg.nd if nd is None else nd
    if cfg.input:
        hs = load_harmonics(cfg.input, radius=cfg.radius, reference_length=cfg.reference_length)
        scale = 1.0
        if hs.units == "tesla":
            scale = proton_reference(cfg.energy_tev, cfg.reference_length).field_scale
        return from_harmonics(hs, nd, gauge=cfg.gauge, pad=cfg.pad, scale_factor=scale)
    if cfg.field == "surrogate":
        return realistic_surrogate(cfg.gauge, nd, pad=cfg.pad or SURROGATE_PAD)
    if cfg.field == "drift":
        return drift_configuration(cfg.gauge, nd, span=cfg.zmax)
    return analytic_benchmark(cfg.gauge, nd, cfg.dz, cfg.alpha, cfg.l1, cfg.l2, cfg.z2, cfg.zmax)


def initial_state(cfg: RunConfig) -> ParticleState:
    return ParticleState(cfg.x0, cfg.y0, cfg.px0, cfg.py0, 0.0, cfg.delta0)


def _step_tag(h: float) -> str:
    return f"{h:g}".replace(".", "p")


def cmd_gradients(cfg: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    with ArtifactWriter("gradients", cfg) as out:
        if args.analytic or not cfg.input:
            n_points = int(round(cfg.zmax / cfg.dz)) + 1
            z = cfg.dz * np.arange(n_points)
            _, gt = analytic_c20(cfg.alpha, cfg.l1, cfg.l2, cfg.z2, cfg.zmax, z, cfg.nd)
        else:
            hs = load_harmonics(cfg.input, radius=cfg.radius, reference_length=cfg.reference_length)
            gt = compute_gradients(zero_pad(hs, cfg.pad) if cfg.pad else hs, cfg.nd)
        out.add(save_gradients(gt, out.path("gradients.csv")), with_sidecar=True)
    return {"points": len(gt.z), "nd": gt.nd, "harmonics": gt.present()}


def cmd_build(cfg: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    config = field_configuration(cfg)
    counts = {}
    with ArtifactWriter("build", cfg) as out:
        for gauge in cfg.gauges:
            pt = config.table(gauge)
            out.add(export_potential(pt, out.path(f"potential_{gauge}.csv")), with_sidecar=True)
            counts[gauge] = count_coefficients(pt)._asdict()
        summary: Dict[str, Any] = {"counts": counts, "field": config.describe()}
        if {"af", "hfc"} <= set(cfg.gauges):
            summary["work_ratio"] = {
                path: evaluation_work_ratio(config.table("hfc"), config.table("af"), path) for path in ("rhs", "m2")
            }
        out.write_json("coefficients.json", summary)
    return summary


def cmd_track(cfg: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    config = field_configuration(cfg)
    cfg.check_steps(config.span)
    pt = config.table()
    lat = single_element(pt) if cfg.n_pairs is None else build_fodo(pt, cfg.n_pairs)
    policy = CheckpointPolicy.parse(cfg.checkpoints)
    s0 = initial_state(cfg)
    summaries = []
    with ArtifactWriter("track", cfg) as out:
        for method in cfg.methods:
            for h in cfg.steps:
                spec = IntegratorSpec(method, h, cfg.fp_tol, cfg.fp_max, z_source=cfg.mode)
                record = track(lat, s0, spec, policy)
                out.write_csv(f"track_{method}_{_step_tag(h)}.csv", record.to_frame())
                summary = record.summary()
                envelope = pair_envelope(record.element_max_x)
                if len(envelope) >= 32:
                    summary["instability"] = detect_instability(envelope)._asdict()
                summaries.append(summary)
        out.write_json("summary.json", {"field": config.describe(), "runs": summaries})
    return {"runs": len(summaries), "lost": sum(s["lost"] for s in summaries)}


def cmd_converge(cfg: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    config = field_configuration(cfg)
    cfg.check_steps(config.span)
    result = convergence_study(
        config,
        cfg.methods,
        cfg.steps,
        initial_state(cfg),
        mode=cfg.mode,
        windows=cfg.window,
        n_pairs=cfg.n_pairs,
        fp_tol=cfg.fp_tol,
        workers=cfg.jobs,
    )
    with ArtifactWriter("converge", cfg) as out:
        out.write_csv("errors.csv", result.errors)
        out.write_csv("slopes.csv", result.slopes)
        out.write_json("summary.json", result.summary())
    return result.summary()["slopes"]


def cmd_efficiency(cfg: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    config = field_configuration(cfg)
    cfg.check_steps(config.span)
    result = efficiency_study(
        config,
        cfg.methods,
        cfg.steps,
        initial_state(cfg),
        gauges=cfg.gauges,
        mode=cfg.mode,
        repeats=cfg.repeats,
        n_pairs=cfg.n_pairs,
    )
    with ArtifactWriter("efficiency", cfg) as out:
        out.write_csv("runs.csv", result.runs)
        if not result.ratios.empty:
            out.write_csv("ratios.csv", result.ratios)
        out.write_json("summary.json", result.summary())
    return result.summary()


def cmd_energy(cfg: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    if cfg.n_pairs is None:
        raise QuadtrackError("energy study needs --pairs")
    config = field_configuration(cfg)
    cfg.check_steps(config.span)
    result = energy_study(
        config,
        cfg.methods,
        initial_state(cfg),
        cfg.steps[0],
        cfg.n_pairs,
        baseline=cfg.baseline,
        mode=cfg.mode,
        workers=cfg.jobs,
    )
    with ArtifactWriter("energy", cfg) as out:
        out.write_csv("energy_kx.csv", result.series)
        out.write_csv("energy_deviation.csv", result.deviations)
        out.write_csv("energy_trends.csv", result.trends)
        out.write_json("summary.json", result.summary())
    return {"stable": {r.method: bool(r.stable) for r in result.trends.itertuples() if r.quantity == "KX"}}


def _curl_spread(config: FieldConfiguration, gauges: List[str], points: np.ndarray) -> float:
    """Max over probes of |curl A_g - curl A_first| relative to max |curl A_first|."""
    first = np.array([curl(config.table(gauges[0]), X, Y) for X, Y in points])
    scale = max(float(np.max(np.abs(first))), np.finfo(float).tiny)
    spread = 0.0
    for gauge in gauges[1:]:
        other = np.array([curl(config.table(gauge), X, Y) for X, Y in points])
        spread = max(spread, float(np.max(np.abs(other - first))) / scale)
    return spread


def cmd_maxwell(cfg: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    nd_values = sorted(cfg.nd_range)
    config = field_configuration(cfg, nd=max(nd_values))
    curve = maxwell_residual_curve(
        config.gradients, cfg.x0, cfg.y0, nd_values, cfg.gauges, config.scale_factor
    )

    rng = np.random.default_rng(cfg.seed)
    reach = max(abs(cfg.x0), abs(cfg.y0), 0.01)
    points = rng.uniform(-reach, reach, size=(cfg.n_probes, 2))
    tables = {g: config.table(g) for g in cfg.gauges}
    probes = probe_fields(tables, points, z_index=len(config.gradients.z) // 2)

    with ArtifactWriter("maxwell", cfg) as out:
        out.write_csv("maxwell_residual.csv", curve)
        out.write_csv("curl_probes.csv", probes)
        summary = {
            "nd_values": nd_values,
            "curl_spread_at_max_nd": _curl_spread(config, list(cfg.gauges), points),
            "points": int(cfg.n_probes),
        }
        out.write_json("summary.json", summary)
    return summary


HANDLERS: Dict[str, Callable[[RunConfig, argparse.Namespace], Dict[str, Any]]] = {
    "gradients": cmd_gradients,
    "build": cmd_build,
    "track": cmd_track,
    "converge": cmd_converge,
    "efficiency": cmd_efficiency,
    "energy": cmd_energy,
    "maxwell": cmd_maxwell,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        setup_logger("quadtrack", level=args.log_level)

    try:
        cfg = resolve_config(args)
        result = HANDLERS[args.command](cfg, args)
    except FileNotFoundError as exc:
        logger.error(str(exc))
        return EXIT_MISSING_FILE
    except (QuadtrackError, ValueError) as exc:
        logger.error(f"{args.command} failed: {exc}")
        return EXIT_FAILURE

    logger.info("=" * 60)
    logger.info(f"{args.command.upper()} SUMMARY")
    logger.info("=" * 60)
    for key, value in result.items():
        logger.info(f"{key}: {value}")
    logger.info(f"Output: {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
