"""Finite travelling-wave profile V(ξ) with the free boundary at ξ = 0."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .csvio import emit_csv
from .errors import ContractError
from .phaseplane import RK_TOL, Outcome, Trajectory, wave_trajectory

log = logging.getLogger(__name__)

EPS_PROFILE = 1e-4


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """Sampled profile on a uniform grid xi[0] = xi_min < ... < xi[-1] = 0.

    ``flux`` holds (V^m)'(ξ) at the same nodes.
    """

    xi: np.ndarray
    v: np.ndarray
    speed: float
    m: float
    truncation_level: float
    flux: np.ndarray
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_interp", PchipInterpolator(self.xi, self.v, extrapolate=False))

    @property
    def xi_min(self) -> float:
        return float(self.xi[0])

    def pressure(self) -> np.ndarray:
        return self.m / (self.m - 1.0) * self.v ** (self.m - 1.0)


def reconstruct_profile(
    traj: Trajectory, m: float | None = None, eps_profile: float = EPS_PROFILE, rk_tol: float = RK_TOL
) -> WaveProfile:
    """Integrate ξ along a connected trajectory and resample V uniformly."""
    if traj.outcome.tag is not Outcome.CONNECTED:
        raise ContractError(f"profile needs a connected trajectory, got {traj.outcome}")
    if traj.speed_c <= 0.0:
        raise ContractError("profile needs a positive speed")
    if m is None:
        m = traj.m
    elif m != traj.m:
        raise ContractError(f"m={m} does not match the trajectory (m={traj.m})")
    c = traj.speed_c
    if not traj.spliced or rk_tol != RK_TOL:
        # a single shot from the saddle drifts off near q = 0 unless c is exact
        traj = wave_trajectory(traj.spec, m, c, rk_tol=rk_tol)
    q, p, xi = traj.q, traj.p, traj.xi
    q_end = q[-1]
    # sharp-front slope p = -cq on [0, q_end]
    xi_front = xi[-1] + m * q_end ** (m - 1.0) / (c * (m - 1.0))
    xi = xi - xi_front

    top = 1.0 - eps_profile
    if q[0] < top:
        raise ContractError(f"trajectory starts below the truncation level {top}")
    keep = q <= top
    k0 = int(np.argmax(keep))
    # truncation point by Hermite interpolation on the first kept segment
    dq = p / (m * q ** (m - 1.0))
    seg = slice(k0 - 1, k0 + 1)
    inv = CubicHermiteSpline(q[seg][::-1], xi[seg][::-1], 1.0 / dq[seg][::-1])
    xi_min = float(inv(top))
    xn, qn, dn, pn = xi[keep], q[keep], dq[keep], p[keep]
    xn = np.concatenate([[xi_min], xn])
    pt = float(np.interp(top, q[seg][::-1], p[seg][::-1]))
    qn = np.concatenate([[top], qn])
    dn = np.concatenate([[pt / (m * top ** (m - 1.0))], dn])
    pn = np.concatenate([[pt], pn])
    # drop nodes that coincide in ξ (possible right after the launch)
    ok = np.concatenate([[True], np.diff(xn) > 0.0])
    xn, qn, dn, pn = xn[ok], qn[ok], dn[ok], pn[ok]

    n = 2001  # spacing |xi_min|/2000, well inside 1e-3 |xi_min|
    grid = np.linspace(xi_min, 0.0, n)
    h_spl = CubicHermiteSpline(xn, qn, dn)
    p_spl = PchipInterpolator(xn, pn)
    v = np.empty(n)
    flux = np.empty(n)
    inner = grid <= xn[-1]
    v[inner] = h_spl(grid[inner])
    flux[inner] = p_spl(grid[inner])
    outer = ~inner
    s = -grid[outer]
    v[outer] = ((m - 1.0) * c * s / m) ** (1.0 / (m - 1.0))
    flux[outer] = -c * v[outer]
    v[-1] = 0.0
    flux[-1] = 0.0
    v = np.clip(v, 0.0, top)
    v[0] = top
    if np.any(np.diff(v) >= 0.0):
        raise ContractError("reconstructed profile is not strictly decreasing")
    log.debug("profile: xi_min=%.6g, %d trajectory nodes", xi_min, xn.size)
    return WaveProfile(grid, v, c, m, top, flux)


def profile_eval(profile: WaveProfile, xi, return_flag: bool = False):
    """V at ξ: 0 ahead of the front, clamped to the truncation level behind xi_min."""
    x = np.asarray(xi, dtype=float)
    out = np.where(x >= 0.0, 0.0, profile.truncation_level)
    mid = (x < 0.0) & (x >= profile.xi_min)
    if np.any(mid):
        out = np.where(mid, profile._interp(np.where(mid, x, profile.xi_min)), out)
    out = np.clip(out, 0.0, profile.truncation_level)
    flag = x < profile.xi_min
    if out.ndim == 0:
        out, flag = float(out), bool(flag)
    return (out, flag) if return_flag else out


def front_pressure_slope(profile: WaveProfile) -> float:
    """Pressure slope at ξ = 0, linearly extrapolated from the last pre-front differences."""
    P = profile.pressure()
    x = profile.xi
    d1 = (P[-1] - P[-2]) / (x[-1] - x[-2])
    d2 = (P[-2] - P[-3]) / (x[-2] - x[-3])
    # differences sit at the interval midpoints
    m1 = 0.5 * (x[-1] + x[-2])
    m2 = 0.5 * (x[-2] + x[-3])
    return float(d1 + (d1 - d2) * (x[-1] - m1) / (m1 - m2))


def write_profile_csv(profile: WaveProfile, path) -> None:
    emit_csv(path, ["xi", "v"], zip(profile.xi, profile.v))
