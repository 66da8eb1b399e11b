import math

import numpy as np
import pytest

from frontlab.errors import ContractError, ParameterError
from frontlab.experiments import (
    Verdict,
    convergence_report,
    exp_convergence_fit,
    fit_shift_and_error,
    hair_trigger_experiment,
    measure_front_speed,
    pressure_bound_check,
    spreading_verdict,
    threshold_experiment,
    total_variation,
)
from frontlab.pde import GridSpec, initial_field, run
from frontlab.reaction import bistable, logistic
from frontlab.suite import barenblatt_run
from frontlab.waveprofile import profile_eval


def test_front_speed_of_travelling_wave(logi_profile):
    g = GridSpec(-20.0, 70.0, 0.1)
    u0 = initial_field(profile_eval(logi_profile, g.x), g)
    _, trace = run(g, u0, logistic(), 2.0, 50.0, snapshot_every=50.0, trace_every=1.0)
    assert measure_front_speed(trace, (5.0, 50.0)) == pytest.approx(1.0, abs=0.02)


def test_front_speed_of_zero_data():
    g = GridSpec(-5.0, 5.0, 0.1)
    _, trace = run(g, "const:0", logistic(), 2.0, 2.0, trace_every=0.5)
    assert measure_front_speed(trace, (0.5, 2.0)) is Verdict.VANISHING
    with pytest.raises(ParameterError):
        measure_front_speed(trace, (2.0, 1.0))
    with pytest.raises(ContractError):
        measure_front_speed(trace, (0.6, 0.9))


def test_shifted_wave_recovered(logi_profile):
    dx = 0.025
    g = GridSpec(-15.0, 25.0, dx)
    u0 = initial_field(profile_eval(logi_profile, g.x - 3.0), g)
    snaps, _ = run(g, u0, logistic(), 2.0, 10.0, snapshot_every=5.0)
    xi, err, shifts = fit_shift_and_error(snaps, logi_profile, 1.0, region="all")
    assert xi == pytest.approx(3.0, abs=dx)
    assert all(e <= 2e-3 for _, e in err)
    assert all(abs(s - 3.0) <= dx for _, s in shifts)


def test_shape_fit_rejects_non_spreading(logi_profile):
    g = GridSpec(-5.0, 5.0, 0.1)
    snaps, _ = run(g, "box:0.2,-1,1", bistable(0.3), 2.0, 1.0)
    with pytest.raises(ContractError):
        fit_shift_and_error(snaps, logi_profile, 1.0)
    with pytest.raises(ParameterError):
        fit_shift_and_error(snaps, logi_profile, 1.0, side="up")


@pytest.fixture(scope="module")
def box40():
    g = GridSpec(-60.0, 60.0, 0.1)
    return run(g, "box:1,-5,5", logistic(), 2.0, 40.0, snapshot_every=2.0, trace_every=1.0)


def test_exponential_convergence_behind_front(box40):
    fit = exp_convergence_fit(box40[0], 0.5)
    assert not fit.degenerate
    assert fit.delta_rate > 0
    assert fit.M > 0


def test_exponential_fit_flat_one():
    g = GridSpec(-5.0, 5.0, 0.1)
    snaps, _ = run(g, "const:1", logistic(), 2.0, 2.0, snapshot_every=0.5, check_edges=False)
    fit = exp_convergence_fit(snaps, 1.0)
    assert fit.degenerate and fit.delta_rate == math.inf


def test_box_report_is_symmetric(box40, logi_profile):
    snaps, trace = box40
    rep = convergence_report(snaps, trace, logi_profile, 1.0)
    assert rep.verdict is Verdict.SPREADING
    assert abs(rep.xi_plus - rep.xi_minus) <= 1e-9
    assert rep.speed_measured == pytest.approx(1.0, abs=0.03)
    assert rep.final_shape_error() <= 0.02
    assert rep.front_error[-1][1] == 0.0


def test_bistable_small_flat_data_vanishes():
    g = GridSpec(-2.0, 2.0, 0.1)
    snaps, _ = run(g, "const:0.25", bistable(0.3), 2.0, 60.0, check_edges=False)
    assert spreading_verdict(snaps[-1]) is Verdict.VANISHING


def test_threshold_experiment_preconditions(bist, bist_speed):
    cs = bist_speed.c_star
    with pytest.raises(ParameterError):
        threshold_experiment(bist, 2.0, 1, 0.9, 20.0, c=cs, c_star=cs)
    with pytest.raises(ParameterError, match="gamma_c"):
        threshold_experiment(bist, 2.0, 1, 0.05, 20.0, c=0.5 * cs, c_star=cs)
    with pytest.raises(ParameterError):
        threshold_experiment(bist, 2.0, 3, 0.9, 1.0, c=0.5 * cs, c_star=cs)


def test_logistic_bump_spreads_in_one_dimension():
    res = hair_trigger_experiment(logistic(), 2.0, 1, 0.5, t_max=40.0)
    assert res.verdict is Verdict.SPREADING
    assert res.u_center >= 0.9
    with pytest.raises(ParameterError):
        hair_trigger_experiment(logistic(), 2.0, 1, 0.0)


def test_pressure_bound_on_porous_medium():
    _, snaps = barenblatt_run(dx=0.05, snapshot_every=0.1)
    rep = pressure_bound_check(snaps, 2.0)
    assert rep.passed
    assert rep.H == 0.0  # the Barenblatt pressure gradient decays like 1/t
    assert rep.fit_t[-1] < rep.check_t[0]


def test_pressure_bound_trivial_and_errors():
    g = GridSpec(-2.0, 2.0, 0.1)
    snaps, _ = run(g, "const:0", logistic(), 2.0, 1.0, snapshot_every=0.5)
    assert pressure_bound_check(snaps, 2.0).passed
    with pytest.raises(ContractError):
        pressure_bound_check(snaps[:2], 2.0)


def test_total_variation():
    assert total_variation([1.0, 3.0, 2.0]) == 3.0
    assert total_variation([5.0]) == 0.0


@pytest.mark.slow
def test_low_step_data_converges(logi_profile):
    g = GridSpec(-20.0, 130.0, 0.05)
    snaps, trace = run(g, "step:0.2,0", logistic(), 2.0, 100.0, snapshot_every=5.0, trace_every=0.5)
    rep = convergence_report(snaps, trace, logi_profile, 1.0, region="all")
    late = [e for t, e in rep.front_error if t >= 200 / 3]
    assert total_variation(late) <= 0.05
    assert rep.final_shape_error() <= 0.02
