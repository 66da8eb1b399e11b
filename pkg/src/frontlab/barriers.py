"""Explicit sub- and supersolutions.

* w(x,t) = f(t) V(x - g(t)) with f' = φ(f), g' = c* f^(m-1) - k φ(f)/f and
  φ(f) = κ(1 - f); a subsolution for f0 < 1 and a supersolution for f0 > 1
  once k is large enough;
* the slow-wave supersolution of u_t = (u^m)_xx + k u;
* the plateau-plus-leg subsolution travelling at a sub-critical speed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BarrierError, ContractError, ParameterError, PreconditionError
from .reaction import ReactionSpec, linear_growth_bound
from .waveprofile import WaveProfile, profile_eval

log = logging.getLogger(__name__)

K_CAP = 2.0**20
F_SAMPLES = 200
V_SAMPLES = 400
RESIDUAL_TOL = 1e-10


def h_prime_floor(spec: ReactionSpec, delta: float, n: int = 2001) -> float:
    """H = inf |h'| on [1 - δ, 1 + δ] (sampled)."""
    u = np.linspace(1.0 - delta, 1.0 + delta, n)
    return float(np.min(np.abs(spec.h_prime(u))))


def kappa_cap(spec: ReactionSpec, delta: float, m: float) -> float:
    return h_prime_floor(spec, delta) * (1.0 - delta) ** m


@dataclass(frozen=True)
class BarrierConfig:
    f0: float
    g0: float
    k: float
    kappa: float
    delta: float
    c_star: float
    m: float

    def phi(self, f):
        return self.kappa * (1.0 - f)

    @property
    def kind(self) -> str:
        if self.f0 < 1.0:
            return "sub"
        if self.f0 > 1.0:
            return "super"
        return "wave"

    def validate(self, spec: ReactionSpec | None = None):
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must lie in (0,1), got {self.delta}")
        if not 1.0 - self.delta < self.f0 < 1.0 + self.delta:
            raise ParameterError(f"f0={self.f0} outside (1-delta, 1+delta) with delta={self.delta:.4g}")
        if self.kappa <= 0.0 or self.k <= 0.0:
            raise ParameterError("kappa and k must be positive")
        if spec is not None:
            cap = kappa_cap(spec, self.delta, self.m)
            if self.kappa > cap:
                raise ParameterError(f"kappa={self.kappa:.6g} exceeds H(1-delta)^m = {cap:.6g}")
        return self


def auto_config(spec, m, c_star, f0, g0=0.0, delta=None, kappa=None, k=1.0) -> BarrierConfig:
    """Config with δ = half the stability width and κ = half its cap."""
    if delta is None:
        from .reaction import stability_width

        delta = 0.5 * stability_width(spec)
    if kappa is None:
        kappa = 0.5 * kappa_cap(spec, delta, m)
    return BarrierConfig(f0, g0, k, kappa, delta, c_star, m).validate(spec)


@dataclass(frozen=True, eq=False)
class BarrierPath:
    t: np.ndarray
    f: np.ndarray
    g: np.ndarray
    xi_limit: float
    config: BarrierConfig
    k_prime: float = math.nan
    k_prime_ok: bool = True

    @property
    def samples(self):
        return list(zip(self.t, self.f, self.g))

    def g_minus_ct(self):
        return self.g - self.config.c_star * self.t

    def rows(self):
        return list(zip(self.t, self.f, self.g, self.g_minus_ct()))


def _fg_rhs(cfg, f):
    ph = cfg.phi(f)
    return ph, cfg.c_star * f ** (cfg.m - 1.0) - cfg.k * ph / f


def integrate_fg(config: BarrierConfig, t_max: float, h_t: float = 1e-3) -> BarrierPath:
    """Fixed-step RK4 for (f, g); g - c*t is extrapolated to t = ∞ with rate κ."""
    if h_t > 1e-3:
        raise ParameterError("time step for (f, g) must be <= 1e-3")
    n = max(1, int(math.ceil(t_max / h_t)))
    h = t_max / n
    cfg = config
    t = h * np.arange(n + 1)
    f = np.empty(n + 1)
    g = np.empty(n + 1)
    f[0], g[0] = cfg.f0, cfg.g0
    lo, hi = 1.0 - cfg.delta, 1.0 + cfg.delta
    fi, gi = cfg.f0, cfg.g0
    for i in range(n):
        a1, b1 = _fg_rhs(cfg, fi)
        a2, b2 = _fg_rhs(cfg, fi + 0.5 * h * a1)
        a3, b3 = _fg_rhs(cfg, fi + 0.5 * h * a2)
        a4, b4 = _fg_rhs(cfg, fi + h * a3)
        fi += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        gi += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        if not lo <= fi <= hi:
            raise ParameterError(f"f left [1-delta, 1+delta] at t={t[i + 1]:.6g}")
        f[i + 1], g[i + 1] = fi, gi
    # g' - c* decays like e^{-κt}; its tail integral is (g' - c*)/κ
    dg_end = _fg_rhs(cfg, f[-1])[1] - cfg.c_star
    xi_limit = float(g[-1] - cfg.c_star * t[-1] + dg_end / cfg.kappa)
    kp, ok = _k_prime(cfg, t, f)
    return BarrierPath(t, f, g, xi_limit, cfg, kp, ok)


def fg_limit_ratio(cfg: BarrierConfig) -> float:
    """lim (g' - c*)/f' as f -> 1: c*(m-1)/φ'(1) - k."""
    return cfg.c_star * (cfg.m - 1.0) / (-cfg.kappa) - cfg.k


def _k_prime(cfg, t, f):
    """K' with |g' - c*| <= K'|f'| on the path; fitted on the first 10%.

    The fit is the larger of the early maximum and the limiting ratio, then
    validated on the remaining 90%.
    """
    if cfg.f0 == 1.0:
        return 0.0, True
    fp, gp = _fg_rhs(cfg, f)
    keep = np.abs(fp) > 1e-300
    ratio = np.abs(gp[keep] - cfg.c_star) / np.abs(fp[keep])
    n_fit = max(1, ratio.size // 10)
    kp = max(float(np.max(ratio[:n_fit])), abs(fg_limit_ratio(cfg)))
    ok = bool(np.all(ratio[n_fit:] <= kp * (1.0 + 1e-9)))
    return kp, ok


def f_closed_form(cfg: BarrierConfig, t):
    return 1.0 + (cfg.f0 - 1.0) * np.exp(-cfg.kappa * np.asarray(t))


@dataclass(frozen=True)
class ResidualReport:
    kind: str
    k: float
    max_violation: float
    worst_f: float
    worst_v: float
    passed: bool


def _profile_samples(profile: WaveProfile, n=V_SAMPLES):
    """V and V' = (V^m)'/(m V^(m-1)) on n profile nodes with V > 0."""
    idx = np.unique(np.linspace(0, profile.xi.size - 2, n).round().astype(int))
    v = profile.v[idx]
    dv = profile.flux[idx] / (profile.m * v ** (profile.m - 1.0))
    return v, dv


def residual(cfg: BarrierConfig, spec: ReactionSpec, f, v, dv):
    """R(f, V) = φ(f)(V + kV') + f^m h(V) - h(fV)."""
    return cfg.phi(f) * (v + cfg.k * dv) + f**cfg.m * spec.h(v) - spec.h(f * v)


def residual_sign_check(cfg: BarrierConfig, profile: WaveProfile, spec: ReactionSpec, n_f=F_SAMPLES, n_v=V_SAMPLES):
    """Sign of R on an (f, V) grid between f0 and 1 (1 excluded)."""
    if cfg.k <= 0:
        raise PreconditionError("k must be positive")
    if abs(profile.speed - cfg.c_star) > 1e-9 * max(1.0, cfg.c_star):
        raise ContractError("profile speed differs from the barrier's c*")
    v, dv = _profile_samples(profile, n_v)
    if cfg.f0 == 1.0:
        return ResidualReport("wave", cfg.k, 0.0, 1.0, math.nan, True)
    fs = 1.0 + (cfg.f0 - 1.0) * np.linspace(1.0, 0.0, n_f + 1)[:-1]
    F, Vv = np.meshgrid(fs, v, indexing="ij")
    _, DV = np.meshgrid(fs, dv, indexing="ij")
    R = residual(cfg, spec, F, Vv, DV)
    # sub needs R <= 0, super R >= 0
    bad = R if cfg.f0 < 1.0 else -R
    i = np.unravel_index(int(np.argmax(bad)), bad.shape)
    worst = float(bad[i])
    return ResidualReport(cfg.kind, cfg.k, worst, float(F[i]), float(Vv[i]), worst <= RESIDUAL_TOL)


def choose_k(cfg: BarrierConfig, profile: WaveProfile, spec: ReactionSpec) -> float:
    """Smallest k = 2^j (j >= 0) for which the residual sign check passes."""
    cfg.validate(spec)
    k = 1.0
    rep = None
    while k <= K_CAP:
        rep = residual_sign_check(_with_k(cfg, k), profile, spec)
        if rep.passed:
            return k
        k *= 2.0
    raise BarrierError(
        f"no k <= 2^20 makes the {cfg.kind} residual sign-definite; worst violation "
        f"{rep.max_violation:.3g} at f={rep.worst_f:.6g}, V={rep.worst_v:.6g}"
    )


def _with_k(cfg, k):
    return BarrierConfig(cfg.f0, cfg.g0, k, cfg.kappa, cfg.delta, cfg.c_star, cfg.m)


def barrier_field(path: BarrierPath, profile: WaveProfile, x, t):
    """w(x, t) = f(t) V(x - g(t)) with f, g interpolated on the path."""
    f = float(np.interp(t, path.t, path.f))
    g = float(np.interp(t, path.t, path.g))
    return f * profile_eval(profile, np.asarray(x) - g)


# -- slow-wave supersolution --------------------------------------------------


def slow_wave_supersolution(k_lin: float, C1: float, C2: float, m: float, spec=None, delta: float = 0.0):
    """Exact solution v of v_t = (v^m)_xx + k v with a right free boundary ρ(t).

    v = [((m-1)/m) γ C1 (C1 γ^(m-1)/(k(m-1)) - x + C2)_+]^(1/(m-1)), γ = e^{kt}.
    If ``spec`` is given, k_lin is checked against k u >= h(u) on [0, 1 + delta].
    """
    if k_lin <= 0 or C1 <= 0:
        raise ParameterError("k_lin and C1 must be positive")
    if m <= 1:
        raise ParameterError("m must exceed 1")
    if spec is not None:
        need = linear_growth_bound(spec, 1.0 + delta)
        if k_lin < need * (1.0 - 1e-12):
            raise PreconditionError(f"k u >= h(u) fails: k_lin={k_lin} < {need:.6g}")
    km = k_lin * (m - 1.0)

    def rho(t):
        return C2 + C1 * np.exp(km * np.asarray(t, dtype=float)) / km

    def v(x, t):
        gam = np.exp(k_lin * t)
        s = np.clip(rho(t) - np.asarray(x, dtype=float), 0.0, None)
        return ((m - 1.0) / m * gam * C1 * s) ** (1.0 / (m - 1.0))

    return v, rho


def slow_wave_residual(v, k_lin, m, x, t, dt=1e-5):
    """Discrete v_t - (v^m)_xx - k v at interior nodes (central differences)."""
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    vt = (v(x, t + dt) - v(x, t - dt)) / (2 * dt)
    w = v(x, t) ** m
    r = np.zeros_like(x)
    r[1:-1] = vt[1:-1] - (w[2:] - 2 * w[1:-1] + w[:-2]) / dx**2 - k_lin * v(x[1:-1], t)
    return r


# -- plateau subsolution ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PlateauSubsolution:
    eta: float
    rho: float
    c: float
    c1: float
    N: int
    nu: float
    b: float
    m: float
    spec: ReactionSpec
    leg_xi: np.ndarray
    leg_q: np.ndarray
    leg_p: np.ndarray

    def v0(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        s = r - self.rho
        out = np.where(s <= 0.0, self.eta, 0.0)
        on = (s > 0.0) & (s < self.b)
        return np.where(on, np.interp(s, self.leg_xi, self.leg_q), out)

    def W(self, x, t):
        r = np.abs(np.asarray(x, dtype=float))
        return self.v0(np.maximum(r - self.c1 * t, 0.0))

    def residual(self, x, t):
        """𝓛W = W_t - ΔW^m - h(W) in closed form on the three regions.

        Plateau: -h(η). Leg: q'[(c - c1) - (N-1) m q^(m-1)/r] via the
        travelling-wave ODE along the leg. Beyond the leg: 0.
        """
        r = np.abs(np.asarray(x, dtype=float))
        s = r - self.c1 * t - self.rho
        out = np.zeros_like(r)
        out[s <= 0.0] = -float(self.spec.h(self.eta))
        on = (s > 0.0) & (s < self.b)
        if np.any(on):
            q = np.interp(s[on], self.leg_xi, self.leg_q)
            p = np.interp(s[on], self.leg_xi, self.leg_p)
            dq = p / (self.m * np.maximum(q, 1e-300) ** (self.m - 1.0))
            curv = (self.N - 1) * self.m * q ** (self.m - 1.0) / np.maximum(r[on], 1e-300)
            out[on] = dq * ((self.c - self.c1) - curv)
        return out

    def check(self, xs, ts, tol=1e-8):
        """Largest residual per region over the (x, t) samples; passes when all <= tol."""
        worst = {"plateau": -math.inf, "leg": -math.inf, "outside": -math.inf}
        for t in ts:
            r = np.abs(np.asarray(xs, dtype=float))
            s = r - self.c1 * t - self.rho
            res = self.residual(xs, t)
            for name, mask in (("plateau", s <= 0), ("leg", (s > 0) & (s < self.b)), ("outside", s >= self.b)):
                if np.any(mask):
                    worst[name] = max(worst[name], float(np.max(res[mask])))
        return worst, all(v <= tol for v in worst.values())


def plateau_subsolution(eta, rho, leg, c, N=1, c1=None, spec=None, m=None) -> PlateauSubsolution:
    """Plateau η on |x| <= ρ followed by the phase-plane leg, moving out at c1."""
    traj, nu, b = leg
    spec = traj.spec if spec is None else spec
    m = traj.m if m is None else m
    if not 0.0 < c:
        raise ParameterError("c must be positive")
    if rho <= (N - 1) / c:
        raise ParameterError(f"rho={rho} must exceed (N-1)/c = {(N - 1) / c:.6g}")
    if not 0.0 < eta < 1.0:
        raise ParameterError("eta must lie in (0,1)")
    top = c - (N - 1) / rho
    if c1 is None:
        c1 = 0.5 * top
    if not 0.0 < c1 < top:
        raise ParameterError(f"c1={c1} must lie in (0, {top:.6g})")
    xi = np.concatenate([traj.xi, [b]])
    q = np.concatenate([traj.q, [0.0]])
    p = np.concatenate([traj.p, [-nu]])
    q[0] = eta
    return PlateauSubsolution(eta, rho, c, c1, N, nu, b, m, spec, xi, q, p)


def stability_shift_bounds(eps: float, K: float):
    """(K ε + log 1/(1-ε), K ε + log(1+ε))."""
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0,1), got {eps}")
    return K * eps + math.log(1.0 / (1.0 - eps)), K * eps + math.log1p(eps)
