import numpy as np
import pytest

from frontlab.csvio import read_csv
from frontlab.errors import ContractError
from frontlab.phaseplane import shoot_from_one, wave_trajectory
from frontlab.waveprofile import (
    front_pressure_slope,
    profile_eval,
    reconstruct_profile,
    write_profile_csv,
)


def test_logistic_profile_closed_form(logi_profile):
    xi = logi_profile.xi
    assert np.max(np.abs(logi_profile.v - (1 - np.exp(xi / 2)))) <= 1e-3
    assert logi_profile.v[0] >= 1 - 2e-4
    assert np.all(np.diff(logi_profile.v) < 0)
    assert np.max(np.diff(xi)) <= 1e-3 * abs(logi_profile.xi_min) + 1e-12


def test_profile_front_values(logi_profile):
    assert profile_eval(logi_profile, 0.0) == 0.0
    assert profile_eval(logi_profile, 5.0) == 0.0
    assert profile_eval(logi_profile, -2.0) == pytest.approx(1 - np.exp(-1), abs=1e-3)


def test_tail_clamp_flag(logi_profile):
    v, flag = profile_eval(logi_profile, logi_profile.xi_min - 3.0, return_flag=True)
    assert flag and v == logi_profile.truncation_level
    v, flag = profile_eval(logi_profile, -1.0, return_flag=True)
    assert not flag


def test_front_pressure_slope(logi_profile):
    assert front_pressure_slope(logi_profile) == pytest.approx(-1.0, rel=1e-2)


def test_profile_needs_connection(logi):
    with pytest.raises(ContractError):
        reconstruct_profile(shoot_from_one(logi, 2.0, 0.5))


def test_interpolant_monotone(logi_profile, bist, bist_speed):
    bp = reconstruct_profile(wave_trajectory(bist, 2.0, bist_speed.c_star))
    for prof in (logi_profile, bp):
        x = np.linspace(prof.xi_min - 1, 1, 10_000)
        v = profile_eval(prof, x)
        assert np.all(np.diff(v) <= 0)
        assert np.all((v >= 0) & (v < 1))


def test_resolution_change_small(logi):
    coarse = reconstruct_profile(wave_trajectory(logi, 2.0, 1.0))
    fine = reconstruct_profile(wave_trajectory(logi, 2.0, 1.0), rk_tol=1e-10 / 16)
    x = np.linspace(max(coarse.xi_min, fine.xi_min), 0, 5000)
    assert np.max(np.abs(profile_eval(coarse, x) - profile_eval(fine, x))) <= 1e-4


def _bump_family(n, lo, hi, seed=7):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        a = rng.uniform(lo, hi - 1.0)
        b = rng.uniform(a + 0.5, min(hi, a + 8.0))
        yield a, b


def test_weak_wave_identity(bist, bist_speed):
    c = bist_speed.c_star
    prof = reconstruct_profile(wave_trajectory(bist, 2.0, c))
    # stay inside the stored range; test functions straddle the front
    x = np.linspace(prof.xi_min + 0.5, 3.0, 200_001)
    dx = x[1] - x[0]
    V = profile_eval(prof, x)
    Vm = np.interp(x, prof.xi, prof.flux, right=0.0)  # (V^m)'
    hV = bist.h(V)
    for a, b in _bump_family(20, float(x[0]), 3.0):
        s = (x - a) / (b - a)
        inside = (s > 0) & (s < 1)
        phi = np.where(inside, np.sin(np.pi * s) ** 4, 0.0)
        dphi = np.where(inside, 4 * np.sin(np.pi * s) ** 3 * np.cos(np.pi * s) * np.pi / (b - a), 0.0)
        val = np.trapezoid(Vm * dphi + c * V * dphi - hV * phi, dx=dx)
        assert abs(val) <= 1e-4 * np.max(np.abs(dphi))


def test_profile_csv(tmp_path, logi_profile):
    path = tmp_path / "p.csv"
    write_profile_csv(logi_profile, path)
    header, rows = read_csv(path)
    assert header == ["xi", "v"]
    assert rows[-1] == [0.0, 0.0]
    xs = [r[0] for r in rows]
    assert xs == sorted(xs)
    assert len(rows) == logi_profile.xi.size
