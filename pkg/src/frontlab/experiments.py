"""Harnesses for the asymptotic statements: speed, shape, spreading/vanishing."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError, ParameterError
from .pde import (
    U_TOL,
    Field,
    FrontTrace,
    Geometry,
    GridSpec,
    InitialDataSpec,
    ICKind,
    free_boundaries,
    pressure_front,
    pressure_gradient_sup,
    run,
)
from .phaseplane import critical_speed, gamma_c
from .reaction import ReactionSpec
from .waveprofile import WaveProfile, profile_eval

log = logging.getLogger(__name__)

SPREAD_LEVEL = 0.99


class Verdict(str, Enum):
    SPREADING = "spreading"
    VANISHING = "vanishing"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class ConvergenceReport:
    xi_plus: float
    xi_minus: float
    shape_error: tuple  # (t, err) on the right front
    shape_error_minus: tuple
    front_error: tuple  # (t, ζ+(t) - c*t - ξ+) at snapshot times
    speed_measured: float
    verdict: Verdict

    def final_shape_error(self, side="plus") -> float:
        s = self.shape_error if side == "plus" else self.shape_error_minus
        return float(s[-1][1]) if s else math.nan


def measure_front_speed(trace: FrontTrace, window):
    """Least-squares slope of ζ+ over t in [t1, t2]; Verdict.VANISHING if the support empties."""
    t1, t2 = window
    if not t2 > t1 >= 0:
        raise ParameterError(f"bad window {window}")
    t = trace.t
    zp = trace.zeta_plus
    sel = (t >= t1 - 1e-12) & (t <= t2 + 1e-12)
    if np.count_nonzero(sel) < 2:
        raise ContractError(f"trace has fewer than two samples in {window}")
    if np.any(np.isnan(zp[sel])):
        return Verdict.VANISHING
    slope = np.polyfit(t[sel], zp[sel], 1)[0]
    return float(slope)


def spreading_verdict(field: Field, u_tol: float = U_TOL) -> Verdict:
    """Spreading when u >= 0.99 on the inner half of the support; vanishing when sup u <= 1e-4."""
    u = field.u
    if float(np.max(u)) <= 1e-4:
        return Verdict.VANISHING
    zm, zp = free_boundaries(field, u_tol)
    if math.isnan(zp):
        return Verdict.VANISHING
    x = field.grid.x
    mid, half = 0.5 * (zm + zp), 0.25 * (zp - zm)
    ball = np.abs(x - mid) <= half
    if np.any(ball) and float(np.min(u[ball])) >= SPREAD_LEVEL:
        return Verdict.SPREADING
    return Verdict.UNDECIDED


def _fronts(fld, profile, anchor):
    if anchor == "threshold":
        return free_boundaries(fld)
    zm = pressure_front(fld, profile.m, "minus")
    zp = pressure_front(fld, profile.m, "plus")
    return zm, zp


def _shape_series(snapshots, profile, c_star, side, region, anchor):
    out, shifts = [], []
    for fld in snapshots:
        zm, zp = _fronts(fld, profile, anchor)
        if math.isnan(zp):
            raise ContractError(f"empty support at t={fld.t}")
        x = fld.grid.x
        if side == "plus":
            xi = zp - c_star * fld.t
            model = profile_eval(profile, x - zp)
            mask = x >= 0.5 * (zm + zp) if region == "half" else np.ones_like(x, bool)
        else:
            xi = -zm - c_star * fld.t
            model = profile_eval(profile, zm - x)
            mask = x <= 0.5 * (zm + zp) if region == "half" else np.ones_like(x, bool)
        err = float(np.max(np.abs(fld.u[mask] - model[mask])))
        out.append((fld.t, err))
        shifts.append((fld.t, xi))
    return out, shifts


def fit_shift_and_error(
    snapshots, profile: WaveProfile, c_star: float, side: str = "plus", region: str = "half", anchor: str = "pressure"
):
    """Front-anchored shift ξ(t) = ±ζ(t) - c* t and the sup distance to the shifted wave.

    ``region`` is 'half' (the half-line beyond the support midpoint, for
    compact data) or 'all' (whole grid, class-𝒜 data). ``anchor`` picks the
    front estimate: 'pressure' (extrapolated pressure, see
    ``pde.pressure_front``) or 'threshold' (the u_tol crossing). Returns
    (final shift, [(t, shape error)], [(t, shift)]).
    """
    if side not in ("plus", "minus"):
        raise ParameterError("side must be 'plus' or 'minus'")
    if anchor not in ("pressure", "threshold"):
        raise ParameterError("anchor must be 'pressure' or 'threshold'")
    last = snapshots[-1]
    if spreading_verdict(last) is not Verdict.SPREADING and not _is_one_sided_spread(last):
        raise ContractError("shape fit needs a spreading run")
    err, shifts = _shape_series(snapshots, profile, c_star, side, region, anchor)
    return shifts[-1][1], err, shifts


def _is_one_sided_spread(field):
    # class-𝒜 data: u ~ 1 behind a single right front
    zm, zp = free_boundaries(field)
    if math.isnan(zp):
        return False
    x = field.grid.x
    behind = (x >= zm) & (x <= zp - 0.5 * (zp - zm))
    return bool(np.any(behind)) and float(np.min(field.u[behind])) >= SPREAD_LEVEL


def total_variation(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.sum(np.abs(np.diff(v)))) if v.size > 1 else 0.0


def convergence_report(snapshots, trace, profile, c_star, region="half", window=None, anchor="pressure") -> ConvergenceReport:
    """Both fronts: shifts, shape errors, front errors and the late-window speed.

    The front errors use the same front estimate and the same ξ as the shape
    fit, at the snapshot times.
    """
    t_end = trace.t[-1]
    if window is None:
        window = (0.5 * t_end, t_end)
    xi_p, err_p, sh_p = fit_shift_and_error(snapshots, profile, c_star, "plus", region, anchor)
    both = region == "half"
    if both:
        xi_m, err_m, _ = fit_shift_and_error(snapshots, profile, c_star, "minus", region, anchor)
    else:
        xi_m, err_m = math.nan, []
    ferr = [(t, xi - xi_p) for t, xi in sh_p]
    speed = measure_front_speed(trace, window)
    verdict = spreading_verdict(snapshots[-1]) if both else Verdict.SPREADING
    return ConvergenceReport(xi_p, xi_m, tuple(err_p), tuple(err_m), tuple(ferr), speed, verdict)


# -- spreading / vanishing ---------------------------------------------------


@dataclass(frozen=True)
class DichotomyResult:
    verdict: Verdict
    u_center: float
    sup_u: float
    t_final: float
    trace: FrontTrace


def hair_trigger_experiment(
    spec: ReactionSpec,
    m: float,
    N: int,
    delta0: float,
    t_max: float = 400.0,
    x_max: float | None = None,
    dx: float = 0.1,
    snapshot_every: float | None = None,
) -> DichotomyResult:
    """Radial run from bump(delta0); spreading if u(0) >= 0.9, vanishing if sup u <= 1e-4."""
    if not delta0 > 0:
        raise ParameterError("delta0 must be positive")
    if x_max is None:
        x_max = _radial_extent(spec, m, t_max, delta0, N)
    x_max = dx * math.ceil(x_max / dx)
    grid = GridSpec(0.0, x_max, dx, Geometry.RADIAL, N)
    snaps, trace = run(
        grid,
        InitialDataSpec(ICKind.BUMP, (delta0,)),
        spec,
        m,
        t_max,
        snapshot_every=snapshot_every or t_max,
        trace_every=max(t_max / 200.0, 0.0) or None,
    )
    last = snaps[-1]
    u0, sup = float(last.u[0]), float(np.max(last.u))
    if u0 >= 0.9:
        v = Verdict.SPREADING
    elif sup <= 1e-4:
        v = Verdict.VANISHING
    else:
        v = Verdict.UNDECIDED
    return DichotomyResult(v, u0, sup, last.t, trace)


def _radial_extent(spec, m, t_max, delta0, N):
    """Domain radius: porous-medium spread of the bump mass plus a wave-speed allowance."""
    from .reaction import sigma_bound

    # Barenblatt radius for mass ~ delta0 grows like (M t)^(1/(N(m-1)+2)); keep a wide margin
    spread = 4.0 * (max(delta0, 1e-12) * max(t_max, 1.0)) ** (1.0 / (N * (m - 1.0) + 2.0)) + 4.0
    wave = 2.0 * math.sqrt(max(sigma_bound(spec, m), 0.0)) * t_max
    return min(max(spread, 10.0) + wave, 1e5)


@dataclass(frozen=True)
class ThresholdResult:
    verdict: Verdict
    ball_ok: bool
    worst_margin: float  # min over snapshots of min_ball(u) - (eta - 0.02)
    c: float
    gamma: float
    trace: FrontTrace


def threshold_experiment(
    spec: ReactionSpec,
    m: float,
    N: int,
    eta: float,
    rho: float,
    c: float | None = None,
    t_max: float = 60.0,
    dx: float = 0.05,
    x_max: float | None = None,
    snapshot_every: float = 5.0,
    c_star: float | None = None,
) -> ThresholdResult:
    """Plateau(eta, rho) data; checks spreading and u >= eta - 0.02 on the growing ball."""
    if c_star is None:
        c_star = critical_speed(spec, m, N=N).c_star
    if c is None:
        c = _threshold_speed(spec, m, eta, c_star)
    if not 0 < c < c_star:
        raise ParameterError(f"c must lie in (0, c*={c_star:.6g})")
    g = gamma_c(spec, m, c)
    if eta <= g:
        raise ParameterError(f"eta={eta} must exceed gamma_c={g:.6g} at c={c:.6g}")
    if rho <= (N - 1) / c:
        raise ParameterError(f"rho={rho} must exceed (N-1)/c = {(N - 1) / c:.6g}")
    if x_max is None:
        x_max = rho + 2.0 * c_star * t_max + 30.0
    x_max = dx * math.ceil(x_max / dx)
    if N == 1:
        grid = GridSpec(-x_max, x_max, dx)
    else:
        grid = GridSpec(0.0, x_max, dx, Geometry.RADIAL, N)
    ic = InitialDataSpec(ICKind.PLATEAU, (eta, rho, c))
    snaps, trace = run(grid, ic, spec, m, t_max, snapshot_every=snapshot_every)
    speed = c - (N - 1) / rho
    worst = math.inf
    for fld in snaps:
        r = np.abs(fld.grid.x)
        ball = r <= rho + speed * fld.t
        if np.any(ball):
            worst = min(worst, float(np.min(fld.u[ball])) - (eta - 0.02))
    verdict = spreading_verdict(snaps[-1])
    return ThresholdResult(verdict, worst >= 0.0, worst, c, g, trace)


def _threshold_speed(spec, m, eta, c_star):
    """Largest c in {c*/2, c*/4, ...} with gamma_c(c) < eta."""
    c = 0.5 * c_star
    for _ in range(8):
        if gamma_c(spec, m, c) < eta:
            return c
        c *= 0.5
    raise ParameterError(f"no sub-critical speed found with gamma_c < eta={eta}")


# -- rates and bounds --------------------------------------------------------


@dataclass(frozen=True)
class ExpFit:
    M: float
    delta_rate: float
    degenerate: bool


def exp_convergence_fit(snapshots, c_hat: float, center: float = 0.0) -> ExpFit:
    """Fit max_{|x - center| <= c_hat t} |u - 1| ~ M e^{-δ t} on the second half of the run."""
    if not c_hat > 0:
        raise ParameterError("c_hat must be positive")
    if spreading_verdict(snapshots[-1]) is not Verdict.SPREADING:
        raise ContractError("exponential fit needs a spreading run")
    late = [f for f in snapshots if f.t >= 0.5 * snapshots[-1].t and f.t > 0]
    ts, ds = [], []
    for fld in late:
        ball = np.abs(fld.grid.x - center) <= c_hat * fld.t
        if np.any(ball):
            ts.append(fld.t)
            ds.append(float(np.max(np.abs(fld.u[ball] - 1.0))))
    ds = np.array(ds)
    if ds.size < 2 or np.all(ds <= 1e-13):
        return ExpFit(float(np.max(ds)) if ds.size else 0.0, math.inf, True)
    slope, icpt = np.polyfit(np.array(ts), np.log(np.maximum(ds, 1e-300)), 1)
    return ExpFit(float(math.exp(icpt)), float(-slope), False)


@dataclass(frozen=True)
class PressureBoundReport:
    H: float
    p0_sup: float
    fit_t: tuple
    check_t: tuple
    ratios: tuple  # B / bound on the validation snapshots
    passed: bool


def pressure_bound_check(snapshots, m: float, margin: float = 0.05) -> PressureBoundReport:
    """Fit H on the first half so that B(t) <= (2/m)(1/t + H)||p0|| and validate on the rest.

    Passes when every held-out B(t) is within (1 + margin) of the fitted bound.
    """
    p0 = m / (m - 1.0) * float(np.max(snapshots[0].u)) ** (m - 1.0)
    pts = [(f.t, pressure_gradient_sup(f, m) ** 2) for f in snapshots if f.t > 0]
    if len(pts) < 2:
        raise ContractError("need at least two snapshots after t = 0")
    half = len(pts) // 2
    fit, val = pts[:half], pts[half:]
    if p0 == 0.0:
        return PressureBoundReport(0.0, 0.0, tuple(t for t, _ in fit), tuple(t for t, _ in val), (0.0,) * len(val), True)
    H = max(0.0, max(B * m / (2.0 * p0) - 1.0 / t for t, B in fit))
    ratios = tuple(B / ((2.0 / m) * (1.0 / t + H) * p0) for t, B in val)
    # held-out snapshots may exceed the fitted bound by the margin
    passed = all(r <= 1.0 + margin for r in ratios) if ratios else False
    return PressureBoundReport(H, p0, tuple(t for t, _ in fit), tuple(t for t, _ in val), ratios, passed)
