"""Shooting in the desingularised travelling-wave phase plane.

With p = (q^m)' and dξ = m q^(m-1) dτ the wave equation becomes

    q' = p,   p' = -c p - f(q),   f(q) = m q^(m-1) h(q).

Away from the q-axis the flow is integrated with q as the independent
variable (dp/dq = -c - f/p); close to it (|p| small) in τ. The integrator is
classical RK4 with step halving against a step-doubling error estimate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    BracketError,
    NonConvergenceError,
    ParameterError,
    PreconditionError,
)
from .reaction import ReactionSpec, classify, hosono_integral, sign_change_point

log = logging.getLogger(__name__)

Q_STOP = 1e-9
P_SWITCH = 1e-6
LAUNCH_EPS = 1e-6
EPS_P = 1e-8
RK_TOL = 1e-10
SLOPE_MARGIN = 0.5
STALL_PROGRESS = 1e-14
MAX_STEPS = 10**7
H_MAX_Q = 0.02
H_MAX_TAU = 0.2
_ULP64 = 64 * np.finfo(float).eps


class Launch(str, Enum):
    SADDLE = "from-saddle-one"
    ETA = "from-eta"
    ORIGIN = "from-origin"
    POINT = "from-point"


class Outcome(str, Enum):
    OVERSHOOT = "overshoot"
    UNDERSHOOT = "undershoot"
    CONNECTED = "connected"
    STALLED = "stalled"


@dataclass(frozen=True)
class ShootOutcome:
    """Classification of a shot.

    ``value`` is the exit flux ν (overshoot), the turning point q_turn
    (undershoot), the terminal slope p/q (connected) or the plateau height
    (stalled).
    """

    tag: Outcome
    value: float

    @property
    def below_critical(self) -> bool:
        return self.tag is Outcome.OVERSHOOT

    def __str__(self):
        return f"{self.tag.value}({self.value:.6g})"


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float
    tau: float
    xi: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    q: np.ndarray
    p: np.ndarray
    tau: np.ndarray
    xi: np.ndarray
    speed_c: float
    launch: Launch
    outcome: ShootOutcome
    spec: ReactionSpec
    m: float
    spliced: bool = False

    @property
    def points(self) -> list[PhasePoint]:
        return [PhasePoint(*v) for v in zip(self.q, self.p, self.tau, self.xi)]

    def __len__(self):
        return self.q.size


@dataclass(frozen=True)
class SpeedResult:
    c_star: float
    bracket: tuple[float, float]
    iterations: int
    sigma_bound: float


def _force(spec: ReactionSpec, m: float):
    h = spec.scalar_h
    e = m - 1.0

    def f(q):
        if q <= 0.0:
            return 0.0
        return m * q**e * h(q)

    return f


class _Flow:
    """RK4 stepping in the two parameterisations."""

    def __init__(self, spec, m, c, rk_tol):
        self.f = _force(spec, m)
        self.m = m
        self.e = m - 1.0
        self.c = c
        self.tol = rk_tol

    def rhs_q(self, q, p):
        qq = q if q > 0.0 else 0.0
        w = self.m * qq**self.e
        return -self.c - self.f(q) / p, 1.0 / p, w / p

    def rhs_tau(self, q, p):
        qq = q if q > 0.0 else 0.0
        return p, -self.c * p - self.f(q), self.m * qq**self.e

    def rk4_q(self, q, p, t, x, h):
        r = self.rhs_q
        a1, b1, c1 = r(q, p)
        a2, b2, c2 = r(q + 0.5 * h, p + 0.5 * h * a1)
        a3, b3, c3 = r(q + 0.5 * h, p + 0.5 * h * a2)
        a4, b4, c4 = r(q + h, p + h * a3)
        k = h / 6.0
        return (
            q + h,
            p + k * (a1 + 2 * a2 + 2 * a3 + a4),
            t + k * (b1 + 2 * b2 + 2 * b3 + b4),
            x + k * (c1 + 2 * c2 + 2 * c3 + c4),
        )

    def rk4_tau(self, q, p, t, x, h):
        r = self.rhs_tau
        a1, b1, c1 = r(q, p)
        a2, b2, c2 = r(q + 0.5 * h * a1, p + 0.5 * h * b1)
        a3, b3, c3 = r(q + 0.5 * h * a2, p + 0.5 * h * b2)
        a4, b4, c4 = r(q + h * a3, p + h * b3)
        k = h / 6.0
        return (
            q + k * (a1 + 2 * a2 + 2 * a3 + a4),
            p + k * (b1 + 2 * b2 + 2 * b3 + b4),
            t + h,
            x + k * (c1 + 2 * c2 + 2 * c3 + c4),
        )

    def step(self, mode_q, state, h):
        """One accepted step; returns (new_state, h_used, h_next).

        The step-doubling error of each component is held below
        rk_tol * |h| * max(1, |rate|), i.e. absolute per unit step for O(1)
        rates and relative to the increment where a rate is large, with a
        floor of a few ulps of the component itself.
        """
        q, p = state[0], state[1]
        if mode_q:
            rk = self.rk4_q
            r0, r1, r2 = self.rhs_q(q, p)
            scale = (max(1.0, abs(r0)), max(1.0, abs(r2)))
            comp = (1, 3)
        else:
            rk = self.rk4_tau
            r0, r1, r2 = self.rhs_tau(q, p)
            scale = (max(1.0, abs(r0)), max(1.0, abs(r1)), max(1.0, abs(r2)))
            comp = (0, 1, 3)
        floor = 1e-14 * max(abs(q), 1e-300) if mode_q else 1e-14
        while True:
            full = rk(*state, h)
            half = rk(*state, 0.5 * h)
            two = rk(*half, 0.5 * h)
            # per-component ratio to the allowance; 64 ulp floor for round-off
            err = max(
                abs(two[i] - full[i]) / (15.0 * (self.tol * abs(h) * s + _ULP64 * abs(two[i])))
                for i, s in zip(comp, scale)
            )
            if err <= 1.0:
                h_next = 2.0 * h if err < 1.0 / 32.0 else h
                return two, h, h_next
            h *= 0.5
            if abs(h) < floor or math.isnan(err):
                raise NonConvergenceError(
                    f"phase-plane step size underflow at q={q:.6g}, p={p:.6g}"
                )


def _wedge_limit(spec, m, c, z):
    """Largest d with 0 <= f(s) < c²(s - z)/4 on (z, z + d] (sampled).

    On that range the wedge {-c(q - z)/2 < p < 0} is forward invariant and
    every path inside it tends to (z, 0).
    """
    if c <= 0.0 or z >= 1.0:
        return 0.0
    d = np.concatenate([np.logspace(-12, -3, 200), np.linspace(1e-3, 1.0 - z, 2000)])
    d = d[d <= 1.0 - z]
    s = z + d
    f = m * s ** (m - 1.0) * spec.h(s)
    bad = np.nonzero((f < 0.0) | (f >= 0.25 * c * c * d))[0]
    if bad.size == 0:
        return float(d[-1])
    return float(d[bad[0] - 1]) if bad[0] > 0 else 0.0


def _march(
    spec,
    m,
    c,
    q0,
    p0,
    *,
    forward=True,
    q_lo=Q_STOP,
    q_hi=None,
    a=None,
    rk_tol=RK_TOL,
    max_steps=MAX_STEPS,
):
    """Integrate from (q0, p0) and classify the end of the path.

    Forward (increasing τ) runs stop at q = q_lo, at a sign change of p, at a
    stall, or once the path is trapped in an invariant wedge ending at (0, 0)
    (connected) or at (a, 0) (stalled); ``a`` is the sign-change point. Backward runs (used from
    the origin) stop at q = q_hi or where p returns to zero.
    """
    flow = _Flow(spec, m, c, rk_tol)
    sgn = 1.0 if forward else -1.0
    q, p, t, x = float(q0), float(p0), 0.0, 0.0
    Q, P, T, X = [q], [p], [t], [x]
    hq = -sgn * H_MAX_Q * 0.01
    ht = sgn * H_MAX_TAU * 0.1
    mode_q = abs(p) > P_SWITCH and p < 0.0
    wedges = []
    if forward and a is not None:
        for z in sorted({0.0, float(a)}):
            d = _wedge_limit(spec, m, c, z)
            if d > 0.0:
                wedges.append((z, d))
    steps = 0

    def finish(tag, value):
        return (
            np.array(Q),
            np.array(P),
            np.array(T),
            np.array(X),
            ShootOutcome(tag, float(value)),
        )

    while True:
        steps += 1
        if steps > max_steps:
            raise NonConvergenceError(f"phase-plane shot at c={c} exceeded {max_steps} steps")
        state = (q, p, t, x)
        clipped = False
        if mode_q:
            h = max(-H_MAX_Q, min(H_MAX_Q, hq))
            if forward and q + h <= q_lo:
                h, clipped = q_lo - q, True
            if not forward and q_hi is not None and q + h >= q_hi:
                h, clipped = q_hi - q, True
            new, used, h_next = flow.step(True, state, h)
            if used != h:
                clipped = False
            if not clipped:
                hq = h_next
        else:
            h = sgn * min(H_MAX_TAU, abs(ht))
            new, used, ht = flow.step(False, state, h)
        qn, pn, tn, xn = new
        if clipped:
            qn = q_lo if forward else q_hi

        # crossing of the lower stop line
        if forward and qn <= q_lo:
            if q != qn:
                w = (q - q_lo) / (q - qn)
                pn = p + w * (pn - p)
                tn = t + w * (tn - t)
                xn = x + w * (xn - x)
            qn = q_lo
            Q.append(qn), P.append(pn), T.append(tn), X.append(xn)
            slope = pn / qn
            if slope < -c * (1.0 + SLOPE_MARGIN):
                return finish(Outcome.OVERSHOOT, -pn)
            return finish(Outcome.CONNECTED, slope)
        if not forward and q_hi is not None and qn >= q_hi:
            if qn != q:
                w = (q_hi - q) / (qn - q)
                pn = p + w * (pn - p)
                tn = t + w * (tn - t)
                xn = x + w * (xn - x)
            qn = q_hi
            Q.append(qn), P.append(pn), T.append(tn), X.append(xn)
            return finish(Outcome.CONNECTED, pn)
        # p returns to zero
        if pn >= 0.0:
            w = -p / (pn - p) if pn != p else 1.0
            qt = q + w * (qn - q)
            Q.append(qt), P.append(0.0), T.append(t + w * (tn - t)), X.append(x + w * (xn - x))
            if forward:
                if qt > 10.0 * q_lo:
                    return finish(Outcome.UNDERSHOOT, qt)
                return finish(Outcome.CONNECTED, -c)
            return finish(Outcome.UNDERSHOOT, qt)
        Q.append(qn), P.append(pn), T.append(tn), X.append(xn)
        if not mode_q and abs(qn - q) + abs(pn - p) < STALL_PROGRESS and qn > 10.0 * q_lo:
            return finish(Outcome.STALLED, qn)
        for z, d in wedges:
            if z < qn <= z + d and pn > -0.5 * c * (qn - z):
                if z == 0.0:
                    return finish(Outcome.CONNECTED, pn / qn)
                return finish(Outcome.STALLED, z)
        q, p, t, x = qn, pn, tn, xn
        if mode_q and abs(p) < P_SWITCH:
            mode_q = False
            ht = sgn * min(H_MAX_TAU, abs(hq / p))
        elif not mode_q and abs(p) > 2.0 * P_SWITCH:
            mode_q = True
            hq = -sgn * min(H_MAX_Q, abs(ht * p))


def launch_eigenvalue(spec: ReactionSpec, m: float, c: float) -> float:
    """Unstable eigenvalue at the saddle (1, 0): f'(1) = m h'(1)."""
    fp1 = m * float(spec.h_prime(1.0))
    return 0.5 * (-c + math.sqrt(c * c - 4.0 * fp1))


def _shoot(spec, m, c, eps0, rk_tol, a, q_lo=Q_STOP):
    lam = launch_eigenvalue(spec, m, c)
    Q, P, T, X, out = _march(
        spec, m, c, 1.0 - eps0, -lam * eps0, q_lo=q_lo, a=a, rk_tol=rk_tol
    )
    return Trajectory(Q, P, T, X, c, Launch.SADDLE, out, spec, m)


def shoot_from_one(
    spec: ReactionSpec, m: float, c: float, eps0: float = LAUNCH_EPS, rk_tol: float = RK_TOL
) -> Trajectory:
    """Shoot along the unstable manifold of (1, 0) towards q = 0."""
    if c <= 0.0:
        raise PreconditionError(f"wave speed must be positive, got {c}")
    hos = hosono_integral(spec, m)
    if hos <= 0.0:
        raise PreconditionError(
            f"int_0^1 h(u) u^(m-1) du = {hos:.3g} <= 0: no positive-speed finite wave"
        )
    return _shoot(spec, m, c, eps0, rk_tol, sign_change_point(spec))


def integrate_from(
    spec: ReactionSpec, m: float, c: float, q0: float, p0: float, rk_tol: float = RK_TOL
) -> Trajectory:
    """Forward integration from an arbitrary point (c = 0 allowed)."""
    Q, P, T, X, out = _march(spec, m, c, q0, p0, a=sign_change_point(spec), rk_tol=rk_tol)
    return Trajectory(Q, P, T, X, c, Launch.POINT, out, spec, m)


def critical_speed(
    spec: ReactionSpec,
    m: float,
    tol: float = 1e-6,
    N: int = 1,
    eps0: float = LAUNCH_EPS,
    rk_tol: float = RK_TOL,
    check_launch: bool = True,
) -> SpeedResult:
    """Bisect on the overshoot predicate for the critical speed c*."""
    if tol < 1e-6:
        raise PreconditionError(f"speed tolerance must be >= 1e-6, got {tol}")
    cls = classify(spec, m, N)
    if cls.hosono <= 0.0:
        raise PreconditionError(
            f"int_0^1 h(u) u^(m-1) du = {cls.hosono:.3g} <= 0: the critical speed is not positive"
        )
    def below(c, eps=eps0):
        return _shoot(spec, m, c, eps, rk_tol, cls.a).outcome

    lo, hi = tol, 2.0 * math.sqrt(cls.sigma) + tol
    out_lo, out_hi = below(lo), below(hi)
    if not out_lo.below_critical:
        raise BracketError(
            f"no sign change: c={lo:.3g} gives {out_lo}, c={hi:.3g} gives {out_hi}",
            out_lo,
            out_hi,
        )
    widen = 0
    while out_hi.below_critical:
        widen += 1
        if widen > 8:
            raise BracketError(
                f"no sign change: c={lo:.3g} gives {out_lo}, c={hi:.3g} gives {out_hi}",
                out_lo,
                out_hi,
            )
        log.warning("widening speed bracket beyond 2*sqrt(sigma): hi=%g overshoots", hi)
        lo, hi = hi, 2.0 * hi
        out_hi = below(hi)
    it = 0
    while hi - lo >= tol:
        it += 1
        mid = 0.5 * (lo + hi)
        if below(mid).below_critical:
            lo = mid
        else:
            hi = mid
    c_star = 0.5 * (lo + hi)
    if check_launch:
        # launch-offset consistency at eps0/10, within 10 tolerances
        if c_star - 10 * tol > 0 and not below(c_star - 10 * tol, eps0 / 10).below_critical:
            raise NonConvergenceError("launch offset eps0/10 moves c* down by more than 10*tol")
        if below(c_star + 10 * tol, eps0 / 10).below_critical:
            raise NonConvergenceError("launch offset eps0/10 moves c* up by more than 10*tol")
    return SpeedResult(c_star, (lo, hi), it, cls.sigma)


def _origin_leg(spec, m, c, q_hi, rk_tol=RK_TOL):
    """Path entering (0,0) along p = -c q, integrated upward in q."""
    Q, P, T, X, out = _march(
        spec, m, c, Q_STOP, -c * Q_STOP, forward=False, q_hi=q_hi, rk_tol=rk_tol
    )
    return Q, P, T, X, out


def gamma_c(spec: ReactionSpec, m: float, c: float, rk_tol: float = RK_TOL) -> float:
    """Turning point q_c of the extremal trajectory through the origin.

    Raises ParameterError when the extremal path reaches q = 1 with p < 0,
    i.e. when c is not below the critical speed.
    """
    if c <= 0.0:
        raise ParameterError(f"speed must be positive, got {c}")
    Q, P, T, X, out = _origin_leg(spec, m, c, 1.0, rk_tol)
    if out.tag is Outcome.UNDERSHOOT:
        return out.value
    raise ParameterError(f"extremal path at c={c} reaches q=1 with p={out.value:.3g}: c >= c*")


def wave_trajectory(
    spec: ReactionSpec, m: float, c: float, q_match: float | None = None, rk_tol: float = RK_TOL
) -> Trajectory:
    """The 1 -> 0 connection at speed c, spliced from two well-conditioned legs.

    The saddle leg is integrated from (1, 0) down to ``q_match`` and the
    origin leg from (0, 0) along p = -cq up to ``q_match``; each leg is
    integrated in its contracting direction, so the splice is insensitive to
    the residual error in c.
    """
    if q_match is None:
        q_match = 0.5 * (1.0 + sign_change_point(spec))
    lam = launch_eigenvalue(spec, m, c)
    Qs, Ps, Ts, Xs, out_s = _march(
        spec, m, c, 1.0 - LAUNCH_EPS, -lam * LAUNCH_EPS, q_lo=q_match, rk_tol=rk_tol
    )
    if out_s.tag is not Outcome.CONNECTED or Qs[-1] != q_match:
        raise ParameterError(f"saddle leg at c={c} did not reach q={q_match}: {out_s}")
    Qo, Po, To, Xo, out_o = _origin_leg(spec, m, c, q_match, rk_tol)
    if Qo[-1] != q_match:
        raise ParameterError(f"origin leg at c={c} turned at q={out_o.value:.6g} < {q_match}")
    # origin leg runs upward in q; reverse it and make ξ, τ continuous
    Qo, Po, To, Xo = Qo[::-1], Po[::-1], To[::-1], Xo[::-1]
    Xo = Xo - Xo[0] + Xs[-1]
    To = To - To[0] + Ts[-1]
    q = np.concatenate([Qs, Qo[1:]])
    p = np.concatenate([Ps[:-1], [0.5 * (Ps[-1] + Po[0])], Po[1:]])
    mismatch = abs(Ps[-1] - Po[0])
    log.debug("wave splice at q=%g: |dp| = %.3g", q_match, mismatch)
    out = ShootOutcome(Outcome.CONNECTED, -c)
    return Trajectory(
        q,
        p,
        np.concatenate([Ts, To[1:]]),
        np.concatenate([Xs, Xo[1:]]),
        c,
        Launch.SADDLE,
        out,
        spec,
        m,
        spliced=True,
    )


def subsolution_leg(
    spec: ReactionSpec,
    m: float,
    c: float,
    eta: float,
    c_star: float | None = None,
    rk_tol: float = RK_TOL,
):
    """Path from (eta, 0) to the negative p-axis; returns (trajectory, nu, b).

    ``nu`` is the exit flux at q = 0 and ``b`` the leg width in ξ.
    """
    if c_star is None:
        c_star = critical_speed(spec, m).c_star
    if not 0.0 < c < c_star:
        raise ParameterError(f"leg speed must lie in (0, c*={c_star:.6g}), got {c}")
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must lie in (0,1), got {eta}")
    g = gamma_c(spec, m, c, rk_tol)
    if eta <= g:
        raise ParameterError(f"eta={eta} must exceed gamma_c={g:.6g} at c={c}")
    Q, P, T, X, out = _march(spec, m, c, eta, -EPS_P, a=sign_change_point(spec), rk_tol=rk_tol)
    if out.tag is not Outcome.OVERSHOOT:
        raise ParameterError(
            f"path from eta={eta} does not exit through the negative p-axis ({out}); "
            f"gamma_c={g:.6g}"
        )
    nu = out.value
    b = float(X[-1] + Q[-1] ** m / nu)
    traj = Trajectory(Q, P, T, X, c, Launch.ETA, out, spec, m)
    return traj, nu, b


def energy(traj: Trajectory, n_quad: int = 64) -> np.ndarray:
    """E = p²/2 + F(q), F(q) = ∫_0^q f, with Gauss-Legendre quadrature per point."""
    f = np.vectorize(_force(traj.spec, traj.m))
    x, w = np.polynomial.legendre.leggauss(n_quad)
    q = traj.q[:, None]
    s = 0.5 * q * (x[None, :] + 1.0)
    F = 0.5 * traj.q * np.sum(w[None, :] * f(s), axis=1)
    return 0.5 * traj.p**2 + F


def extremal_bounds(traj: Trajectory):
    """Lower barrier p >= min f / c - 2cq and the largest ρ with p <= -cq/2 on (0, ρ].

    Returns (lower_bound_holds, rho_c).
    """
    c = traj.speed_c
    qs = np.linspace(0.0, 1.0, 2001)
    fmin = float(np.min(np.vectorize(_force(traj.spec, traj.m))(qs)))
    ok = bool(np.all(traj.p >= fmin / c - 2.0 * c * traj.q - 1e-12))
    order = np.argsort(traj.q)
    q, p = traj.q[order], traj.p[order]
    inside = p <= -0.5 * c * q
    bad = np.nonzero(~inside)[0]
    rho = float(q[-1] if bad.size == 0 else (q[bad[0] - 1] if bad[0] > 0 else 0.0))
    return ok, rho
