"""Lattices, tracking records, envelopes and the study drivers."""

import numpy as np
import pandas as pd
import pytest

from src.common.errors import StepLengthMismatchError
from src.dynamics.state import ParticleState
from src.gauge.potential_table import evaluation_work_ratio
from src.integrators.spec import METHODS, NOMINAL_ORDER, IntegratorSpec
from src.tracker.envelopes import (
    block_envelope,
    detect_instability,
    envelope_slope,
    pair_envelope,
)
from src.tracker.fields import FieldConfiguration, analytic_benchmark
from src.tracker.lattice import DEFOCUSING, FOCUSING, Element, Lattice, build_fodo, single_element
from src.tracker.studies import (
    TrackJob,
    convergence_study,
    efficiency_study,
    energy_study,
    exit_vector,
    fit_slopes,
    run_jobs,
)
from src.tracker.tracking import CheckpointPolicy, steps_per_element, track


def drift_state() -> ParticleState:
    return ParticleState(0.02, -0.01, 1e-3, 2e-3, delta0=0.01)


class TestLattice:
    def test_fodo_alternates(self, drift):
        lat = build_fodo(drift.table(), 3)
        assert len(lat) == 6
        assert [e.label for e in lat] == ["F", "D", "F", "D", "F", "D"]
        assert lat.n_pairs == 3
        np.testing.assert_allclose(lat.offsets, 4.0 * np.arange(6))
        assert lat.total_span == pytest.approx(24.0)

    def test_defocusing_first(self, drift):
        lat = build_fodo(drift.table(), 1, first=DEFOCUSING)
        assert [e.polarity for e in lat] == [DEFOCUSING, FOCUSING]

    def test_non_alternating_lattice_has_no_pairs(self, drift):
        pt = drift.table()
        assert Lattice([Element(pt), Element(pt)]).n_pairs is None
        assert single_element(pt).n_pairs is None

    def test_invalid_lattices(self, drift):
        pt = drift.table()
        with pytest.raises(ValueError, match="polarity"):
            Element(pt, 0.5)
        with pytest.raises(ValueError, match="n_pairs"):
            build_fodo(pt, 0)
        with pytest.raises(ValueError):
            Lattice([])


class TestCheckpointPolicy:
    @pytest.mark.parametrize(
        "text, kind, every",
        [("step", "step", 1), (" Element ", "element", 1), ("exit", "exit", 1), ("decimate:10", "decimate", 10)],
    )
    def test_parse(self, text, kind, every):
        assert CheckpointPolicy.parse(text) == CheckpointPolicy(kind, every)

    @pytest.mark.parametrize("text", ["decimate", "decimate:0", "exit:3", "turn"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            CheckpointPolicy.parse(text)


class TestTrack:
    def test_element_checkpoints(self, drift):
        record = track(build_fodo(drift.table(), 2), drift_state(), IntegratorSpec("rk4", 0.5))
        np.testing.assert_allclose(record.Z, [0.0, 4.0, 8.0, 12.0, 16.0])
        assert record.element == [0, 0, 1, 2, 3]
        assert record.n_steps == 32
        assert len(record.element_max_x) == 4

    def test_step_checkpoints(self, drift):
        record = track(single_element(drift.table()), drift_state(), IntegratorSpec("rk4", 0.5), "step")
        assert len(record) == 9
        np.testing.assert_allclose(record.Z, 0.5 * np.arange(9))

    def test_exit_checkpoints(self, drift):
        record = track(build_fodo(drift.table(), 2), drift_state(), IntegratorSpec("lie2", 0.5), "exit")
        np.testing.assert_allclose(record.Z, [0.0, 16.0])

    def test_decimated_checkpoints(self, drift):
        record = track(build_fodo(drift.table(), 3), drift_state(), IntegratorSpec("rk4", 0.5), "decimate:2")
        np.testing.assert_allclose(record.Z, [0.0, 8.0, 16.0, 24.0])

    @pytest.mark.parametrize("method", ["gauss4", "rk4", "lie4"])
    def test_drift_exit_state(self, drift, method):
        s0 = drift_state()
        record = track(build_fodo(drift.table(), 2), s0, IntegratorSpec(method, 0.5), "exit")
        exit_state = record.exit_state
        assert not record.lost
        assert exit_state.Z == pytest.approx(16.0)
        assert exit_state.X == pytest.approx(s0.X + 16.0 * s0.Px / 1.01, rel=1e-13)
        assert exit_state.Y == pytest.approx(s0.Y + 16.0 * s0.Py / 1.01, rel=1e-13)
        assert exit_state.Px == s0.Px
        assert record.max_abs_x == pytest.approx(abs(exit_state.X))

    def test_frame_and_summary(self, drift):
        record = track(build_fodo(drift.table(), 1), drift_state(), IntegratorSpec("rk4", 1.0))
        df = record.to_frame(with_element=True)
        assert list(df.columns) == ["Z", "element", "X", "Y", "Px", "Py", "KX", "KY"]
        assert len(df) == 3
        summary = record.summary()
        assert summary["n_checkpoints"] == 3
        assert summary["exit_state"]["Px"] == pytest.approx(1e-3)
        assert summary["counters"]["rhs_evaluations"] == 8 * 4
        assert summary["counters"]["out_of_range"] == 0

    def test_step_must_divide_span(self, drift):
        with pytest.raises(StepLengthMismatchError):
            track(single_element(drift.table()), drift_state(), IntegratorSpec("rk4", 0.3))
        assert steps_per_element(4.0, 0.02) == 200

    def test_particle_loss(self, analytic):
        blowup = FieldConfiguration("blowup", analytic.gradients, nd=2, scale_factor=1e10)
        record = track(build_fodo(blowup.table(), 2), ParticleState(0.02, 0.02, 0.0, 0.0), IntegratorSpec("rk4", 0.1))
        assert record.lost
        assert record.exit_state is None
        assert record.loss_element is not None
        assert 0.0 < record.loss_z <= 16.0
        assert np.all(np.isfinite(record.states))
        assert np.all(np.isnan(exit_vector(record)))

    def test_gauges_agree_on_positions(self, analytic):
        s0 = ParticleState(0.02, -0.04, 0.0, 0.0)
        spec = IntegratorSpec("gauss6", 0.04, z_source="exact")
        exits = {g: track(single_element(analytic.table(g)), s0, spec, "exit").exit_state for g in ("af", "hfc")}
        assert exits["af"].X == pytest.approx(exits["hfc"].X, abs=1e-10)
        assert exits["af"].Y == pytest.approx(exits["hfc"].Y, abs=1e-10)

    @pytest.mark.parametrize("method, path", [("rk4", "rhs"), ("lie4", "m2")])
    def test_counted_work_matches_prediction(self, analytic, method, path):
        spec = IntegratorSpec(method, 0.04)
        s0 = ParticleState(0.02, -0.04, 0.0, 0.0)
        work = {g: track(single_element(analytic.table(g)), s0, spec, "exit").counters["work_total"] for g in ("af", "hfc")}
        predicted = evaluation_work_ratio(analytic.table("hfc"), analytic.table("af"), path)
        assert work["hfc"] / work["af"] == pytest.approx(predicted, rel=1e-12)


class TestEnvelopes:
    def test_block_envelope(self):
        np.testing.assert_array_equal(block_envelope([1.0, -3.0, 2.0, 0.0, 5.0], 2), [3.0, 2.0, 5.0])
        assert len(block_envelope([], 3)) == 0
        with pytest.raises(ValueError):
            block_envelope([1.0], 0)

    def test_pair_envelope(self):
        np.testing.assert_array_equal(pair_envelope([0.1, 0.3, 0.2, 0.05]), [0.3, 0.2])

    def test_growth_is_flagged(self):
        verdict = detect_instability(np.exp(0.05 * np.arange(200)))
        assert verdict.unstable
        assert verdict.monotone_tail
        assert verdict.growth > 2.0

    def test_bounded_oscillation_is_stable(self):
        env = 1.0 + 0.1 * np.sin(0.3 * np.arange(200))
        assert not detect_instability(env).unstable

    def test_non_finite_envelope_is_unstable(self):
        env = np.ones(64)
        env[-1] = np.inf
        assert detect_instability(env).unstable

    def test_short_envelope(self):
        with pytest.raises(ValueError, match="too short"):
            detect_instability(np.ones(10))

    def test_envelope_slope(self):
        x = np.arange(20, dtype=float)
        trend = envelope_slope(2.0 * x + 1.0)
        assert trend.slope == pytest.approx(2.0)
        assert trend.intercept == pytest.approx(1.0)
        assert not trend.stable
        assert envelope_slope(np.full(20, 3.0)).stable
        with pytest.raises(ValueError):
            envelope_slope([1.0, 2.0])


class TestStudies:
    def test_fit_slopes(self):
        steps = np.array([0.1, 0.05, 0.025])
        rows = []
        for h in steps:
            err = 3.0 * h**4
            rows.append({"method": "rk4", "step": h, **{f"err_{v}": err for v in ("X", "Y", "Px", "Py", "max")}})
            rows.append({"method": "lie2", "step": h, **{f"err_{v}": 0.0 for v in ("X", "Y", "Px", "Py", "max")}})
        slopes = fit_slopes(pd.DataFrame(rows))
        rk4 = slopes[(slopes["method"] == "rk4") & (slopes["variable"] == "max")].iloc[0]
        assert rk4["slope"] == pytest.approx(4.0)
        assert rk4["nominal"] == 4
        lie2 = slopes[slopes["method"] == "lie2"]
        assert not lie2["defined"].any()
        assert lie2["slope"].isna().all()

        windowed = fit_slopes(pd.DataFrame(rows), windows={"rk4": (0.05, 0.1)})
        row = windowed[(windowed["method"] == "rk4") & (windowed["variable"] == "X")].iloc[0]
        assert row["n_points"] == 2

    def test_convergence_on_drift_is_round_off(self, drift):
        result = convergence_study(drift, ["rk4", "lie2"], [0.08, 0.04], drift_state())
        assert len(result.errors) == 4
        assert result.errors["err_max"].max() < 1e-13
        assert result.summary()["slopes"] == {"rk4": None, "lie2": None}
        assert result.reference["method"] == "gauss6"
        assert result.reference["step"] == pytest.approx(0.004)

    def test_reference_must_be_finer(self, drift):
        with pytest.raises(ValueError, match="reference step"):
            convergence_study(drift, ["rk4"], [0.08], drift_state(), reference=IntegratorSpec("gauss6", 0.04))

    def test_energy_on_drift(self, drift):
        result = energy_study(drift, ["lie2"], drift_state(), 0.5, n_pairs=3, window=1)
        assert result.baseline == "gauss6"
        assert list(result.series.columns) == ["Z", "element", "KX_lie2", "KX_gauss6"]
        assert len(result.series) == 7
        np.testing.assert_allclose(result.deviations["dev_lie2"], 0.0, atol=1e-18)
        assert len(result.trends) == 3
        assert result.trends["stable"].all()
        assert result.summary()["lost"] == {"lie2": False, "gauss6": False}

    def test_efficiency_needs_repeats(self, drift):
        with pytest.raises(ValueError, match="repeats"):
            efficiency_study(drift, ["rk4"], [0.08], drift_state(), repeats=0)

    def test_efficiency_ratios(self, analytic):
        result = efficiency_study(analytic, ["rk4"], [0.2, 0.1], ParticleState(0.02, -0.04, 0.0, 0.0), repeats=1)
        assert len(result.runs) == 4
        assert set(result.ratios["method"]) == {"rk4"}
        predicted = evaluation_work_ratio(analytic.table("hfc"), analytic.table("af"))
        np.testing.assert_allclose(result.ratios["work_ratio"], predicted, rtol=1e-12)
        assert set(result.averages) == {"rk4"}

    def test_jobs_run_in_order(self, drift):
        jobs = [TrackJob(drift, "af", IntegratorSpec("rk4", h), drift_state()) for h in (0.5, 0.25)]
        records = run_jobs(jobs)
        assert [r.step for r in records] == [0.5, 0.25]


@pytest.fixture(scope="module")
def benchmark():
    """The benchmark quadrupole on its native dz=0.002 grid."""
    return analytic_benchmark(nd=2)


def benchmark_state() -> ParticleState:
    return ParticleState(0.02, -0.04, 0.0, 0.0)


# asymptotic step range per nominal order on the benchmark
ASYMPTOTIC_WINDOWS = {2: (0.0125, 0.1), 4: (0.025, 0.1), 6: (0.1, 0.2)}
ORDER_TOLERANCE = {2: 0.3, 4: 0.3, 6: 0.5}


@pytest.mark.slow
class TestLongRuns:
    def test_convergence_orders(self, benchmark):
        windows = {m: ASYMPTOTIC_WINDOWS[NOMINAL_ORDER[m]] for m in METHODS}
        result = convergence_study(
            benchmark, METHODS, [0.2, 0.1, 0.05, 0.025, 0.0125], benchmark_state(), mode="exact", windows=windows
        )
        assert not result.errors["lost"].any()
        assert result.reference["step"] == pytest.approx(0.00125)
        for method in METHODS:
            nominal = NOMINAL_ORDER[method]
            assert result.slope(method) == pytest.approx(nominal, abs=ORDER_TOLERANCE[nominal]), method

    def test_coefficient_sources_rank_by_accuracy(self, benchmark):
        s0 = benchmark_state()
        lat = single_element(benchmark.table())
        ref = exit_vector(track(lat, s0, IntegratorSpec("gauss6", 0.0008, z_source="exact"), "exit"))
        errors = {
            mode: float(np.max(np.abs(exit_vector(track(lat, s0, IntegratorSpec("gauss6", 0.008, z_source=mode), "exit")) - ref)))
            for mode in ("exact", "spline", "interval", "nearest", "previous")
        }
        roundoff = 64 * np.finfo(float).eps * np.max(np.abs(ref))
        assert errors["spline"] <= 10 * max(errors["exact"], roundoff)
        assert errors["spline"] < min(errors["interval"], errors["nearest"])
        assert max(errors["interval"], errors["nearest"]) < errors["previous"]
        # both second order in dz; their ranking depends on where the stages fall
        assert errors["interval"] < 4 * errors["nearest"]
        assert errors["nearest"] < 4 * errors["interval"]

    def test_hfc_wall_clock_speedup(self, surrogate):
        result = efficiency_study(
            surrogate, ["rk4", "lie4"], [0.02, 0.04, 0.08, 0.16], benchmark_state(), repeats=3
        )
        assert not result.runs["lost"].any()
        assert 0.50 <= result.averages["rk4"] <= 0.75
        # HFC skips the X-block shifts outright, so the Lie map saves call overhead too
        assert 0.25 <= result.averages["lie4"] <= 0.75
        work = result.ratios.groupby("method")["work_ratio"].mean()
        assert work["rk4"] == pytest.approx(627 / 928, abs=5e-4)
        assert work["lie4"] == pytest.approx(1016 / 1856, abs=5e-4)

    @pytest.mark.parametrize("method", METHODS)
    def test_fodo_stays_bounded(self, analytic, method):
        spec = IntegratorSpec(method, 0.08, z_source="spline")
        record = TrackJob(analytic, "af", spec, benchmark_state(), 3000).run()
        assert not record.lost
        assert len(record.element_max_x) == 6000
        assert not detect_instability(pair_envelope(record.element_max_x)).unstable
        assert not detect_instability(pair_envelope(record.element_max_y)).unstable

    def test_kinetic_energy_has_no_trend(self, analytic):
        result = energy_study(analytic, METHODS, benchmark_state(), 0.08, n_pairs=8000, workers=4)
        assert not any(r.lost for r in result.records.values())
        kx = result.trends[result.trends["quantity"] == "KX"].set_index("method")
        assert set(kx.index) == set(METHODS)
        for method in METHODS:
            assert kx.loc[method, "stable"], method

    def test_rk4_deviation_from_lie4_does_not_drift(self, analytic):
        result = energy_study(analytic, ["rk4"], benchmark_state(), 0.08, n_pairs=16000, baseline="lie4", workers=2)
        assert len(result.series) == 2 * 16000 + 1
        trend = result.deviation_trend("rk4", "lie4")
        assert trend.stable
        deviation = result.trends[(result.trends["method"] == "rk4") & (result.trends["quantity"] == "deviation")]
        assert deviation["stable"].all()

    def test_worker_pool_matches_serial(self, drift):
        jobs = [TrackJob(drift, "af", IntegratorSpec(m, 0.5), drift_state(), 2) for m in ("rk4", "gauss4", "lie2")]
        parallel = run_jobs(jobs, workers=2)
        serial = run_jobs(jobs)
        for a, b in zip(parallel, serial):
            assert a.method == b.method
            np.testing.assert_array_equal(exit_vector(a), exit_vector(b))
