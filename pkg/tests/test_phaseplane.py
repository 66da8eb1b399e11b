import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.errors import BracketError, ParameterError, PreconditionError
from frontlab.phaseplane import (
    Outcome,
    critical_speed,
    energy,
    extremal_bounds,
    gamma_c,
    integrate_from,
    launch_eigenvalue,
    shoot_from_one,
    subsolution_leg,
    wave_trajectory,
)
from frontlab.reaction import bistable, combustion, logistic, power


def test_logistic_below_critical_overshoots(logi):
    t = shoot_from_one(logi, 2.0, 0.5)
    assert t.outcome.tag is Outcome.OVERSHOOT
    assert t.outcome.below_critical
    assert t.p[-1] < 0 and t.q[-1] < 1e-8


def test_logistic_exact_speed_follows_closed_form(logi):
    t = shoot_from_one(logi, 2.0, 1.0)
    assert t.outcome.tag is Outcome.CONNECTED
    dev = np.max(np.abs(t.p + t.q * (1 - t.q)))
    assert dev <= 1e-4


def test_spliced_wave_follows_closed_form(logi):
    t = wave_trajectory(logi, 2.0, 1.0)
    assert t.spliced
    assert np.max(np.abs(t.p + t.q * (1 - t.q))) <= 1e-6
    assert np.all(np.diff(t.q) < 0)


def test_bistable_large_speed_does_not_overshoot(bist):
    # an overdamped path is caught on the p = 0 axis or at the plateau
    t = shoot_from_one(bist, 2.0, 10.0)
    assert t.outcome.tag in (Outcome.UNDERSHOOT, Outcome.STALLED)
    assert not t.outcome.below_critical
    assert 0.0 < t.q[-1] < 1.0


def test_launch_eigenvalue_logistic():
    assert launch_eigenvalue(logistic(), 2.0, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_shoot_preconditions():
    with pytest.raises(PreconditionError):
        shoot_from_one(bistable(0.8), 2.0, 1.0)
    with pytest.raises(PreconditionError):
        shoot_from_one(logistic(), 2.0, 0.0)


def test_critical_speed_logistic(logi):
    res = critical_speed(logi, 2.0, tol=1e-4)
    assert res.c_star == pytest.approx(1.0, abs=1e-3)
    assert res.c_star <= 2 * math.sqrt(0.5) + 1e-4
    assert res.bracket[1] - res.bracket[0] < 1e-4
    assert res.sigma_bound == pytest.approx(0.5)


def test_critical_speed_default_tolerance(logi_speed):
    assert abs(logi_speed.c_star - 1.0) <= 1e-5


def test_critical_speed_bistable_self_consistent(bist, bist_speed):
    coarse = critical_speed(bist, 2.0, tol=1e-5)
    assert 0 < bist_speed.c_star <= 2 * math.sqrt(bist_speed.sigma_bound) + 1e-6
    assert abs(coarse.c_star - bist_speed.c_star) <= 1e-5


def test_critical_speed_combustion_positive():
    res = critical_speed(combustion(0.3), 2.0, tol=1e-4)
    assert 0 < res.c_star <= 2 * math.sqrt(res.sigma_bound) + 1e-4


def test_critical_speed_rejects_small_tol(logi):
    with pytest.raises(PreconditionError):
        critical_speed(logi, 2.0, tol=1e-7)
    with pytest.raises(PreconditionError):
        critical_speed(bistable(0.7), 2.0)


def test_refined_integration_moves_speed_less_than_tol(logi, logi_speed):
    fine = critical_speed(logi, 2.0, rk_tol=1e-10 / 16)
    assert abs(fine.c_star - logi_speed.c_star) < 1e-6


def test_critical_speed_bitwise_repeatable(bist):
    a = critical_speed(bist, 2.0, tol=1e-4)
    b = critical_speed(bist, 2.0, tol=1e-4)
    assert a == b


def test_bracket_error_carries_outcomes(monkeypatch, logi):
    import frontlab.phaseplane as pp

    real = pp._shoot

    def never_below(*args, **kw):
        t = real(*args, **kw)
        return pp.Trajectory(t.q, t.p, t.tau, t.xi, t.speed_c, t.launch,
                             pp.ShootOutcome(Outcome.CONNECTED, -1.0), t.spec, t.m)

    monkeypatch.setattr(pp, "_shoot", never_below)
    with pytest.raises(BracketError) as err:
        critical_speed(logi, 2.0, tol=1e-4)
    assert "connected" in str(err.value)
    assert err.value.lo_outcome.tag is Outcome.CONNECTED
    assert err.value.hi_outcome.tag is Outcome.CONNECTED


@pytest.mark.parametrize("spec", [logistic(), power(2)], ids=["logistic", "power2"])
def test_outcome_monotone_in_speed(spec):
    c_star = critical_speed(spec, 2.0, tol=1e-4).c_star
    cs = np.linspace(0.05, 2 * c_star, 20)
    below = [shoot_from_one(spec, 2.0, c).outcome.below_critical for c in cs]
    # once connected, stays connected
    first = below.index(False)
    assert not any(below[first:])
    assert all(below[:first])


def test_energy_decreases_along_wave(logi):
    t = shoot_from_one(logi, 2.0, 0.7)
    E = energy(t)
    # the path runs in the direction of increasing xi
    order = np.argsort(t.xi)
    assert np.all(np.diff(E[order]) <= 1e-10)


def test_energy_conserved_without_speed(logi):
    t = integrate_from(logi, 2.0, 0.0, 0.9, -0.05)
    E = energy(t)
    assert np.max(np.abs(E - E[0])) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 1.5), st.floats(1.3, 3.0))
def test_energy_non_increasing_property(c, m):
    t = shoot_from_one(logistic(), m, c)
    E = energy(t)
    order = np.argsort(t.xi)
    assert np.all(np.diff(E[order]) <= 1e-9 * max(1.0, np.max(np.abs(E))))


def test_extremal_bounds_at_critical_speed(logi_speed, bist, bist_speed):
    for spec, res in ((logistic(), logi_speed), (bist, bist_speed)):
        traj = wave_trajectory(spec, 2.0, res.c_star)
        ok, rho = extremal_bounds(traj)
        assert ok
        assert rho > 0


def test_extremal_rho_logistic_closed_form(logi):
    # -q(1-q) <= -q/2 exactly for q <= 1/2
    _, rho = extremal_bounds(wave_trajectory(logi, 2.0, 1.0))
    assert rho == pytest.approx(0.5, abs=2e-2)


def test_subsolution_leg_logistic(logi):
    traj, nu, b = subsolution_leg(logi, 2.0, 0.5, 0.9, c_star=1.0)
    assert nu > 1e-9
    assert math.isfinite(b) and b > 0
    assert traj.outcome.tag is Outcome.OVERSHOOT
    # the leg stays in 0 < q < eta, p < 0
    assert np.all(traj.q <= 0.9) and np.all(traj.p < 0)


def test_subsolution_leg_parameter_errors(logi, bist, bist_speed):
    with pytest.raises(ParameterError):
        subsolution_leg(logi, 2.0, 1.0, 0.9, c_star=1.0)
    with pytest.raises(ParameterError):
        subsolution_leg(logi, 2.0, 0.5, 1.2, c_star=1.0)
    c = 0.5 * bist_speed.c_star
    g = gamma_c(bist, 2.0, c)
    with pytest.raises(ParameterError, match="gamma_c"):
        subsolution_leg(bist, 2.0, c, 0.5 * g, c_star=bist_speed.c_star)


@pytest.mark.parametrize(
    "c, q_c",
    # oracle: LSODA on dq = -p, dp = cp + f(q) from (1e-7, -c 1e-7) to p = 0
    [(0.2, 0.017358788043), (0.5, 0.115488174725), (0.9, 0.496640200066)],
)
def test_gamma_c_logistic_oracle(logi, c, q_c):
    # the origin path crosses p = 0 downward, so q_c > 0 even for f > 0
    assert gamma_c(logi, 2.0, c) == pytest.approx(q_c, abs=1e-8)


def test_gamma_c_increases_with_speed(logi):
    g = [gamma_c(logi, 2.0, c) for c in np.linspace(0.1, 0.95, 8)]
    assert np.all(np.diff(g) > 0) and g[-1] < 1.0


def test_gamma_c_range_bistable(bist, bist_speed):
    for frac in (0.3, 0.6, 0.95):
        g = gamma_c(bist, 2.0, frac * bist_speed.c_star)
        assert 0.0 <= g < 1.0


def test_gamma_c_at_or_above_critical(logi):
    with pytest.raises(ParameterError):
        gamma_c(logi, 2.0, 1.2)
