"""Convergence, efficiency and energy studies over (method, step) grids."""

from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.common.errors import DataError
from src.common.logging import get_logger
from src.dynamics.state import ParticleState
from src.integrators.spec import NOMINAL_ORDER, IntegratorSpec
from src.tracker.envelopes import EnvelopeTrend, block_envelope, envelope_slope
from src.tracker.fields import FieldConfiguration
from src.tracker.lattice import Lattice, build_fodo, single_element
from src.tracker.tracking import TrackRecord, track

logger = get_logger(__name__)

VARIABLES = ("X", "Y", "Px", "Py")
REFERENCE_METHOD = "gauss6"
REFERENCE_REFINEMENT = 10
REFERENCE_FP_TOL = 1e-14
# errors below this fraction of the reference exit amplitude are round-off
ROUNDOFF_RTOL = 1e-11
ENERGY_WINDOW_PAIRS = 100

Window = Tuple[float, float]


@dataclass(frozen=True)
class TrackJob:
    """One independent tracking run; picklable so it can go to a worker process."""

    config: FieldConfiguration
    gauge: str
    spec: IntegratorSpec
    s0: ParticleState
    n_pairs: Optional[int] = None
    checkpoints: str = "exit"

    def lattice(self) -> Lattice:
        pt = self.config.table(self.gauge)
        return single_element(pt) if self.n_pairs is None else build_fodo(pt, self.n_pairs)

    def run(self) -> TrackRecord:
        return track(self.lattice(), self.s0, self.spec, self.checkpoints)


def _run(job: TrackJob) -> TrackRecord:
    return job.run()


def run_jobs(jobs: Sequence[TrackJob], workers: int = 1) -> List[TrackRecord]:
    """Records in job order; ``workers > 1`` fans out to a process pool."""
    if workers <= 1 or len(jobs) <= 1:
        return [job.run() for job in jobs]
    results: List[Optional[TrackRecord]] = [None] * len(jobs)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        future_to_slot = {ex.submit(_run, job): k for k, job in enumerate(jobs)}
        for fut in as_completed(future_to_slot):
            results[future_to_slot[fut]] = fut.result()
    return [r for r in results if r is not None]


def exit_vector(record: TrackRecord) -> np.ndarray:
    if record.lost or record.exit_state is None:
        return np.full(4, np.nan)
    return record.exit_state.as_array()


def reference_spec(steps: Sequence[float], config: FieldConfiguration, mode: str) -> IntegratorSpec:
    """gauss6 at min(step)/10, exact coefficients when the table has an analytic profile."""
    z_source = "exact" if config.gradients.profile is not None else mode
    return IntegratorSpec(
        REFERENCE_METHOD,
        min(steps) / REFERENCE_REFINEMENT,
        fp_tol=REFERENCE_FP_TOL,
        z_source=z_source,
    )


def _reference(job: TrackJob, steps: Sequence[float]) -> np.ndarray:
    if job.spec.step > min(steps) / REFERENCE_REFINEMENT * (1.0 + 1e-12):
        raise ValueError(
            f"reference step {job.spec.step:g} must not exceed min(step)/{REFERENCE_REFINEMENT} = "
            f"{min(steps) / REFERENCE_REFINEMENT:g}"
        )
    record = job.run()
    if record.lost:
        raise DataError(f"reference run ({job.spec.method}, h={job.spec.step:g}) lost the particle at Z={record.loss_z}")
    logger.info(f"Reference {job.spec.method} h={job.spec.step:g} ({job.spec.z_source}) in {record.wall_clock:.2f}s")
    return exit_vector(record)


def fit_slopes(
    errors: pd.DataFrame,
    windows: Optional[Mapping[str, Window] | Window] = None,
    floor: float = 0.0,
) -> pd.DataFrame:
    """
    Log-log slope of error against step per (method, variable).

    Points outside the method's window or at/below ``floor`` are dropped; fewer
    than two remaining points leave the slope undefined (NaN, flagged).
    """
    rows = []
    columns = [f"err_{v}" for v in VARIABLES] + ["err_max"]
    for method, group in errors.groupby("method", sort=False):
        window = windows.get(method) if isinstance(windows, Mapping) else windows
        g = group
        if window is not None:
            lo, hi = window
            g = g[(g["step"] >= lo * (1 - 1e-12)) & (g["step"] <= hi * (1 + 1e-12))]
        for col in columns:
            use = g[np.isfinite(g[col]) & (g[col] > floor)]
            defined = len(use) >= 2
            slope = float(np.polyfit(np.log(use["step"]), np.log(use[col]), 1)[0]) if defined else float("nan")
            rows.append(
                {
                    "method": method,
                    "variable": col[len("err_") :],
                    "slope": slope,
                    "nominal": NOMINAL_ORDER.get(method),
                    "n_points": len(use),
                    "defined": defined,
                }
            )
    slopes = pd.DataFrame(rows)
    undefined = slopes.loc[(~slopes["defined"]) & (slopes["variable"] == "max"), "method"].tolist()
    if undefined:
        logger.warning(f"Slopes undefined (errors at round-off) for: {', '.join(undefined)}")
    return slopes


@dataclass
class ConvergenceResult:
    errors: pd.DataFrame
    slopes: pd.DataFrame
    reference: Dict[str, Any]

    def slope(self, method: str, variable: str = "max") -> float:
        row = self.slopes[(self.slopes["method"] == method) & (self.slopes["variable"] == variable)]
        return float(row["slope"].iloc[0])

    def summary(self) -> Dict[str, Any]:
        table = self.slopes[self.slopes["variable"] == "max"]
        return {
            "reference": self.reference,
            "slopes": {r.method: (None if not r.defined else r.slope) for r in table.itertuples()},
            "n_runs": len(self.errors),
        }


def _error_row(job: TrackJob, record: TrackRecord, ref: np.ndarray) -> Dict[str, Any]:
    diff = np.abs(exit_vector(record) - ref)
    row: Dict[str, Any] = {"method": job.spec.method, "step": job.spec.step, "gauge": job.gauge, "mode": job.spec.z_source}
    for v, d in zip(VARIABLES, diff):
        row[f"err_{v}"] = float(d)
    row["err_max"] = float(np.max(diff))
    row["lost"] = record.lost
    row["wall_clock"] = record.wall_clock
    for key in ("rhs_evaluations", "map_evaluations", "work_total", "mean_fixed_point_iterations"):
        row[key] = record.counters.get(key)
    return row


def convergence_study(
    config: FieldConfiguration,
    methods: Sequence[str],
    steps: Sequence[float],
    s0: ParticleState,
    gauge: Optional[str] = None,
    mode: str = "spline",
    reference: Optional[IntegratorSpec] = None,
    windows: Optional[Mapping[str, Window] | Window] = None,
    n_pairs: Optional[int] = None,
    fp_tol: float = REFERENCE_FP_TOL,
    workers: int = 1,
) -> ConvergenceResult:
    """
    Max-norm exit errors of every (method, step) against a fine reference, and
    log-log slopes per method over the given windows.

    Raises:
        ValueError: reference step coarser than min(steps)/10
        DataError: the reference run lost the particle
    """
    gauge = gauge or config.gauge
    ref_spec = reference or reference_spec(steps, config, mode)
    ref = _reference(TrackJob(config, gauge, ref_spec, s0, n_pairs), steps)

    jobs = [
        TrackJob(config, gauge, IntegratorSpec(method, h, fp_tol=fp_tol, z_source=mode), s0, n_pairs)
        for method in methods
        for h in steps
    ]
    records = run_jobs(jobs, workers)
    errors = pd.DataFrame([_error_row(job, rec, ref) for job, rec in zip(jobs, records)])
    floor = ROUNDOFF_RTOL * max(float(np.max(np.abs(ref))), np.finfo(float).tiny)
    slopes = fit_slopes(errors, windows, floor)
    logger.info(f"Convergence study: {len(methods)} methods x {len(steps)} steps on {config.name}/{gauge}/{mode}")
    return ConvergenceResult(
        errors=errors,
        slopes=slopes,
        reference={**ref_spec.to_dict(), "exit": ref.tolist()},
    )


@dataclass
class EfficiencyResult:
    runs: pd.DataFrame
    ratios: pd.DataFrame
    averages: Dict[str, float]

    def summary(self) -> Dict[str, Any]:
        return {"average_time_ratio": dict(self.averages), "n_runs": len(self.runs)}


def efficiency_study(
    config: FieldConfiguration,
    methods: Sequence[str],
    steps: Sequence[float],
    s0: ParticleState,
    gauges: Sequence[str] = ("af", "hfc"),
    mode: str = "spline",
    repeats: int = 3,
    n_pairs: Optional[int] = None,
) -> EfficiencyResult:
    """
    (error, wall-clock, evaluation counts) per (gauge, method, step), run
    sequentially; wall-clock is the minimum over ``repeats``. With both "af" and
    "hfc" present, the HFC/AF time and work ratios are tabulated and averaged
    over steps per method.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    ref = _reference(TrackJob(config, gauges[0], reference_spec(steps, config, mode), s0, n_pairs), steps)

    rows = []
    for gauge in gauges:
        config.table(gauge)
        for method in methods:
            for h in steps:
                job = TrackJob(config, gauge, IntegratorSpec(method, h, z_source=mode), s0, n_pairs)
                records = [job.run() for _ in range(repeats)]
                best = min(records, key=lambda r: r.wall_clock)
                row = _error_row(job, best, ref)
                row["wall_clock"] = best.wall_clock
                rows.append(row)
    runs = pd.DataFrame(rows)

    ratios = pd.DataFrame()
    averages: Dict[str, float] = {}
    if {"af", "hfc"} <= set(gauges):
        keyed = runs.set_index(["gauge", "method", "step"])
        ratio_rows = []
        for method in methods:
            for h in steps:
                hfc, af = keyed.loc[("hfc", method, h)], keyed.loc[("af", method, h)]
                ratio_rows.append(
                    {
                        "method": method,
                        "step": h,
                        "time_ratio": hfc["wall_clock"] / af["wall_clock"],
                        "work_ratio": hfc["work_total"] / af["work_total"],
                    }
                )
        ratios = pd.DataFrame(ratio_rows)
        averages = {m: float(g["time_ratio"].mean()) for m, g in ratios.groupby("method", sort=False)}
        logger.info("HFC/AF average time ratios: " + ", ".join(f"{m}={v:.3f}" for m, v in averages.items()))
    return EfficiencyResult(runs=runs, ratios=ratios, averages=averages)


@dataclass
class EnergyResult:
    series: pd.DataFrame
    deviations: pd.DataFrame
    trends: pd.DataFrame
    baseline: str
    records: Dict[str, TrackRecord]

    def deviation_trend(self, a: str, b: str, window: int = ENERGY_WINDOW_PAIRS) -> EnvelopeTrend:
        """Envelope trend of K_X(a) - K_X(b) over the run."""
        diff = self.series[f"KX_{a}"].to_numpy() - self.series[f"KX_{b}"].to_numpy()
        return envelope_slope(block_envelope(diff, 2 * window))

    def summary(self) -> Dict[str, Any]:
        return {
            "baseline": self.baseline,
            "trends": self.trends.to_dict(orient="records"),
            "lost": {m: r.lost for m, r in self.records.items()},
        }


def energy_study(
    config: FieldConfiguration,
    methods: Sequence[str],
    s0: ParticleState,
    step: float,
    n_pairs: int,
    baseline: str = REFERENCE_METHOD,
    gauge: Optional[str] = None,
    mode: str = "spline",
    window: int = ENERGY_WINDOW_PAIRS,
    workers: int = 1,
) -> EnergyResult:
    """
    K_X at every element exit of an n_pairs FODO run for each method, its
    deviation from the baseline method, and the envelope trend of both.
    """
    gauge = gauge or config.gauge
    methods = list(methods)
    if baseline not in methods:
        methods.append(baseline)
    jobs = [
        TrackJob(config, gauge, IntegratorSpec(m, step, z_source=mode), s0, n_pairs, checkpoints="element")
        for m in methods
    ]
    records = dict(zip(methods, run_jobs(jobs, workers)))

    base = records[baseline]
    n = min(len(r) for r in records.values())
    series = pd.DataFrame({"Z": base.Z[:n], "element": base.element[:n]})
    for m, r in records.items():
        series[f"KX_{m}"] = r.KX[:n]
    deviations = pd.DataFrame({"Z": series["Z"]})
    for m in methods:
        if m != baseline:
            deviations[f"dev_{m}"] = series[f"KX_{m}"] - series[f"KX_{baseline}"]

    rows = []
    block = 2 * window
    for m, r in records.items():
        if r.lost:
            logger.warning(f"{m}: particle lost at Z={r.loss_z}; energy series truncated")
        for quantity, values in (("KX", series[f"KX_{m}"]), ("deviation", deviations.get(f"dev_{m}"))):
            if values is None:
                continue
            env = block_envelope(values.to_numpy(), block)
            if len(env) < 3:
                continue
            trend = envelope_slope(env)
            rows.append({"method": m, "quantity": quantity, **trend._asdict()})
    trends = pd.DataFrame(rows)
    logger.info(f"Energy study: {len(methods)} methods, {n_pairs} pairs, h={step:g}, baseline {baseline}")
    return EnergyResult(series=series, deviations=deviations, trends=trends, baseline=baseline, records=records)
