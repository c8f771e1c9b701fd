"""Tableaux, composition, one-step maps and their structural properties."""

import numpy as np
import pytest

from src.common.errors import FixedPointError
from src.dynamics.state import ParticleState
from src.integrators.composition import yoshida, yoshida_coefficients
from src.integrators.diagnostics import symplecticity_defect, time_reversal_error
from src.integrators.lie import lie2_step
from src.integrators.runge_kutta import FixedPointParams, rk_step
from src.integrators.spec import METHODS, IntegratorSpec, make_stepper, step_cost
from src.integrators.tableaux import GAUSS4, GAUSS6, MIDPOINT, RK4, TABLEAUX
from src.tracker.fields import FieldConfiguration
from src.tracker.lattice import single_element
from src.tracker.tracking import track

SYMMETRIC = ("midpoint", "gauss4", "gauss6", "lie2", "lie4", "lie6")
SYMPLECTIC = SYMMETRIC
FRINGE_Z = 0.4
Y0 = np.array([0.02, -0.04, 0.0, 0.0])


def stepper(config, method, mode="exact", delta0=0.0):
    spec = IntegratorSpec(method, 0.04, z_source=mode)
    f = config.field(mode=mode, with_aux=spec.needs_aux)
    return make_stepper(spec, f, delta0), f


class TestTableaux:
    @pytest.mark.parametrize("tab", [MIDPOINT, GAUSS4, GAUSS6])
    def test_gauss_family_is_symplectic(self, tab):
        assert tab.symplecticity_residual() < 1e-15
        assert not tab.explicit

    def test_rk4_is_explicit_and_not_symplectic(self):
        assert RK4.explicit
        assert RK4.symplecticity_residual() > 1e-2

    @pytest.mark.parametrize("tab", list(TABLEAUX.values()))
    def test_consistency(self, tab):
        assert tab.b.sum() == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(tab.A.sum(axis=1), tab.c)

    def test_stage_counts(self):
        assert {name: t.stages for name, t in TABLEAUX.items()} == {"midpoint": 1, "gauss4": 2, "gauss6": 3, "rk4": 4}


class TestComposition:
    def test_fourth_order_coefficients(self):
        a0, a1 = yoshida_coefficients(2)
        assert a1 == pytest.approx(1.3512071919596578, rel=1e-15)
        assert 2.0 * a1 + a0 == pytest.approx(1.0, abs=1e-15)
        assert a0 < 0

    def test_sixth_order_coefficients(self):
        a0, a1 = yoshida_coefficients(4)
        root = 2.0 ** (1.0 / 5.0)
        assert a1 == pytest.approx(1.0 / (2.0 - root))
        assert 2.0 * a1 + a0 == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("base_order", [1, 3])
    def test_odd_base_order_rejected(self, base_order):
        with pytest.raises(ValueError):
            yoshida_coefficients(base_order)

    def test_unsupported_target(self):
        with pytest.raises(ValueError, match="unsupported target order"):
            yoshida(lambda y, z, h: y, 8)

    def test_composed_step_lengths_add_up(self):
        calls = []

        def base(y, z, h):
            calls.append((z, h))
            return y

        yoshida(base, 6)(Y0, 1.0, 0.1)
        assert len(calls) == 9
        assert sum(h for _, h in calls) == pytest.approx(0.1, abs=1e-15)
        z_end = calls[-1][0] + calls[-1][1]
        assert z_end == pytest.approx(1.1, abs=1e-14)


class TestSpec:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(method="euler", step=0.1),
            dict(method="rk4", step=0.0),
            dict(method="rk4", step=0.1, z_source="linear"),
            dict(method="gauss4", step=0.1, fp_tol=0.0),
            dict(method="gauss4", step=0.1, fp_max=0),
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            IntegratorSpec(**kwargs)

    def test_cost_model(self):
        assert step_cost(IntegratorSpec("rk4", 0.1)) == (4, 0)
        assert step_cost(IntegratorSpec("gauss4", 0.1), n_fp=5) == (10, 0)
        assert step_cost(IntegratorSpec("gauss6", 0.1), n_fp=4) == (12, 0)
        assert step_cost(IntegratorSpec("lie2", 0.1)) == (0, 1)
        assert step_cost(IntegratorSpec("lie4", 0.1)) == (0, 3)
        assert step_cost(IntegratorSpec("lie6", 0.1)) == (0, 9)

    def test_implicit_cost_needs_iteration_count(self):
        with pytest.raises(ValueError, match="fixed-point"):
            step_cost(IntegratorSpec("midpoint", 0.1))

    def test_orders_and_aux(self):
        assert IntegratorSpec("lie6", 0.1).order == 6
        assert IntegratorSpec("lie2", 0.1).needs_aux
        assert not IntegratorSpec("gauss4", 0.1).needs_aux


class TestOneStepMaps:
    @pytest.mark.parametrize("method", METHODS)
    def test_drift_is_exact(self, drift, method):
        delta0 = 0.01
        step, _ = stepper(drift, method, mode="spline", delta0=delta0)
        y = np.array([0.01, -0.02, 1e-3, -2e-3])
        h = 0.08
        expected = y + h * np.array([y[2], y[3], 0.0, 0.0]) / (1.0 + delta0)
        np.testing.assert_allclose(step(y, 1.0, h), expected, rtol=1e-14, atol=1e-17)

    @pytest.mark.parametrize("method", SYMPLECTIC)
    def test_symplectic_maps(self, stiff, method):
        step, _ = stepper(stiff, method)
        assert symplecticity_defect(step, Y0, FRINGE_Z, 0.08) < 1e-8

    def test_rk4_symplecticity_defect_is_high_order(self, stiff):
        step, _ = stepper(stiff, "rk4")
        steps = np.array([0.16, 0.08, 0.04])
        defects = np.array([symplecticity_defect(step, Y0, FRINGE_Z, h) for h in steps])
        assert np.all(defects > 1e-9)
        slope = np.polyfit(np.log(steps), np.log(defects), 1)[0]
        assert 4.5 <= slope <= 6.5

    @pytest.mark.parametrize("method", SYMMETRIC)
    def test_symmetric_maps_reverse(self, stiff, method):
        step, _ = stepper(stiff, method)
        assert time_reversal_error(step, Y0, FRINGE_Z, 0.08) < 1e-12

    def test_rk4_is_not_reversible(self, stiff):
        step, _ = stepper(stiff, "rk4")
        assert time_reversal_error(step, Y0, FRINGE_Z, 0.08) > 1e-10

    @pytest.mark.parametrize("method", ["midpoint", "gauss4", "gauss6"])
    def test_fixed_point_sweeps_on_surrogate(self, surrogate, method):
        lat = single_element(surrogate.table())
        record = track(lat, ParticleState(*Y0), IntegratorSpec(method, 0.02), "exit")
        counters = record.counters
        assert record.n_steps == 320
        assert counters["fixed_point_solves"] == 320
        assert 2.5 <= counters["mean_fixed_point_iterations"] <= 3.5

    def test_fixed_point_sweeps_grow_with_field_strength(self, surrogate):
        s0 = ParticleState(0.01, -0.01, 0.0, 0.0)
        spec = IntegratorSpec("gauss4", 0.02)
        means = []
        for scale in (1.0, 100.0):
            config = FieldConfiguration("surrogate", surrogate.gradients, nd=surrogate.nd, scale_factor=scale)
            record = track(single_element(config.table()), s0, spec, "exit")
            assert not record.lost
            means.append(record.counters["mean_fixed_point_iterations"])
        assert means[1] > means[0]

    def test_stage_update_below_tolerance_stops_iteration(self, drift):
        # a drift converges once the stage positions stop moving: exactly two sweeps
        spec = IntegratorSpec("gauss6", 0.04, z_source="spline")
        f = drift.field(mode="spline", with_aux=False)
        make_stepper(spec, f)(np.array([0.01, -0.02, 1e-3, -2e-3]), 1.0, 0.04)
        assert f.counter.fixed_point_solves == 1
        assert f.counter.fixed_point_sweeps == 2

    def test_fixed_point_cap(self, stiff):
        spec = IntegratorSpec("gauss6", 0.08, fp_max=1, z_source="exact")
        f = stiff.field(mode="exact", with_aux=False)
        with pytest.raises(FixedPointError) as info:
            make_stepper(spec, f)(Y0, FRINGE_Z, 0.08)
        assert info.value.iterations == 1

    def test_fixed_point_params_validated(self):
        with pytest.raises(ValueError):
            FixedPointParams(tol=-1.0)

    def test_state_wrappers_advance_z(self, strong):
        f = strong.field(mode="exact")
        s = ParticleState(0.02, -0.04, 0.0, 0.0, Z=1.0, delta0=1e-3)
        after_rk = rk_step(GAUSS4, s, 0.05, f)
        after_lie = lie2_step(s, 0.05, f)
        for moved in (after_rk, after_lie):
            assert moved.Z == pytest.approx(1.05)
            assert moved.delta0 == 1e-3
        np.testing.assert_allclose(after_rk.as_array(), after_lie.as_array(), atol=1e-5)

    def test_lie_map_counts_second_order_maps(self, strong):
        step, f = stepper(strong, "lie4")
        step(Y0, 1.0, 0.04)
        assert f.counter.map_evaluations == 3
        assert f.counter.rhs_evaluations == 0
