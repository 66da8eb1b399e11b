"""Reaction nonlinearities h(u) for u_t = Δu^m + h(u).

Catalog entries are closed-form; ``table`` reactions are monotone-cubic
interpolants of user data. All specs are frozen after construction.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NumericError, RangeError, ReactionError

SIGN_GRID_POINTS = 1000
A_BISECTION_TOL = 1e-10


class ReactionKind(str, Enum):
    LOGISTIC = "logistic"
    POWER = "power"
    BISTABLE = "bistable"
    COMBUSTION = "combustion"
    FUJITA = "fujita"
    TABLE = "table"
    NONE = "none"


@dataclass(frozen=True)
class ReactionSpec:
    kind: ReactionKind
    params: tuple = ()
    description: str = ""
    table_u: tuple = field(default=(), repr=False)
    table_h: tuple = field(default=(), repr=False)

    def __post_init__(self):
        h, dh = _build(self)
        object.__setattr__(self, "_h", h)
        object.__setattr__(self, "_dh", dh)

    @property
    def param(self) -> dict:
        return dict(self.params)

    @property
    def u_range(self) -> tuple[float, float]:
        if self.kind is ReactionKind.TABLE:
            return self.table_u[0], self.table_u[-1]
        return 0.0, math.inf

    @property
    def exact_a(self) -> float | None:
        """Sign-change point a for catalog entries (None for tables)."""
        if self.kind in (ReactionKind.BISTABLE, ReactionKind.COMBUSTION):
            return self.param["a"]
        if self.kind is ReactionKind.TABLE:
            return None
        return 0.0

    def h(self, u):
        """Vectorised h; no domain checks (solvers pass clipped data)."""
        return self._h(u)

    def h_prime(self, u):
        return self._dh(u)

    @property
    def scalar_h(self) -> Callable[[float], float]:
        return self._h

    def __str__(self):
        return self.description or self.kind.value


def _build(spec: ReactionSpec):
    p = dict(spec.params)
    kind = spec.kind
    if kind is ReactionKind.LOGISTIC:
        return (lambda u: u * (1.0 - u)), (lambda u: 1.0 - 2.0 * u)
    if kind is ReactionKind.NONE:
        return (lambda u: 0.0 * u), (lambda u: 0.0 * u)
    if kind in (ReactionKind.POWER, ReactionKind.FUJITA):
        e = p["p"]
        k = p.get("k", 1.0)

        def h(u):
            return k * u**e * (1.0 - u)

        def dh(u):
            return k * (e * u ** (e - 1.0) - (e + 1.0) * u**e)

        return h, dh
    if kind is ReactionKind.BISTABLE:
        a = p["a"]
        return (lambda u: u * (1.0 - u) * (u - a)), (
            lambda u: -3.0 * u * u + 2.0 * (1.0 + a) * u - a
        )
    if kind is ReactionKind.COMBUSTION:
        a = p["a"]

        # (u-a)^2 (1-u) above ignition keeps h in C^1
        def h(u):
            s = np.maximum(u - a, 0.0) if isinstance(u, np.ndarray) else max(u - a, 0.0)
            return s * s * (1.0 - u)

        def dh(u):
            s = np.maximum(u - a, 0.0) if isinstance(u, np.ndarray) else max(u - a, 0.0)
            return 2.0 * s * (1.0 - u) - s * s

        return h, dh
    if kind is ReactionKind.TABLE:
        uu = np.asarray(spec.table_u, dtype=float)
        hh = np.asarray(spec.table_h, dtype=float)
        interp = PchipInterpolator(uu, hh, extrapolate=False)
        deriv = interp.derivative()
        lo, hi = uu[0], uu[-1]

        def h(u):
            if isinstance(u, np.ndarray):
                return interp(np.clip(u, lo, hi))
            return float(interp(min(max(u, lo), hi)))

        def dh(u):
            if isinstance(u, np.ndarray):
                return deriv(np.clip(u, lo, hi))
            return float(deriv(min(max(u, lo), hi)))

        return h, dh
    raise ReactionError(f"unknown reaction kind {kind!r}")


# -- constructors -----------------------------------------------------------


def no_reaction() -> ReactionSpec:
    """h = 0: pure porous-medium flow, for solver validation only.

    Not a valid reaction for the wave theory; it bypasses the sign checks.
    """
    return ReactionSpec(ReactionKind.NONE, description="none")


def logistic() -> ReactionSpec:
    return _validated(ReactionSpec(ReactionKind.LOGISTIC, (), "logistic"))


def power(p: float) -> ReactionSpec:
    """Monostable h(u) = u^p (1 - u), p >= 1."""
    if p < 1.0:
        raise ReactionError(f"power exponent must be >= 1 (C^1 at 0), got {p}")
    return _validated(ReactionSpec(ReactionKind.POWER, (("p", float(p)),), f"power:{p:g}"))


def bistable(a: float) -> ReactionSpec:
    """h(u) = u (1 - u)(u - a)."""
    if not 0.0 < a < 1.0:
        raise ReactionError(f"bistable threshold must lie in (0,1), got {a}")
    return _validated(ReactionSpec(ReactionKind.BISTABLE, (("a", float(a)),), f"bistable:{a:g}"))


def combustion(a: float) -> ReactionSpec:
    """h(u) = 0 on [0, a], (u - a)^2 (1 - u) above the ignition point."""
    if not 0.0 < a < 1.0:
        raise ReactionError(f"ignition point must lie in (0,1), got {a}")
    return _validated(
        ReactionSpec(ReactionKind.COMBUSTION, (("a", float(a)),), f"combustion:{a:g}")
    )


def fujita(k: float, b: float, m: float, N: int = 1) -> ReactionSpec:
    """Critical-exponent monostable reaction h(u) = k u^(m + 2/N) (1 - u).

    ``b`` only bounds the admissible bump amplitude of hair-trigger runs.
    """
    if k <= 0.0 or not 0.0 < b < 1.0:
        raise ReactionError(f"fujita needs k > 0 and b in (0,1), got k={k}, b={b}")
    e = m + 2.0 / N
    params = (("k", float(k)), ("b", float(b)), ("p", e), ("m", float(m)), ("N", float(N)))
    return _validated(ReactionSpec(ReactionKind.FUJITA, params, f"fujita:{k:g},{b:g}"))


def from_table(u, h, description: str = "table") -> ReactionSpec:
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    if u.ndim != 1 or u.shape != h.shape or u.size < 4:
        raise ReactionError("table needs two equal-length columns with at least 4 rows")
    if np.any(np.diff(u) <= 0):
        raise ReactionError("table abscissae must be strictly increasing")
    if u[0] != 0.0 or u[-1] <= 1.0:
        raise ReactionError("table must start at u=0 and extend beyond u=1")
    spec = ReactionSpec(
        ReactionKind.TABLE, (), description, tuple(u.tolist()), tuple(h.tolist())
    )
    return _validated(spec)


def read_table(path) -> ReactionSpec:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["u", "h"]:
        raise ReactionError(f"{path}: expected header 'u,h'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:] if a.strip()])
    return from_table(data[:, 0], data[:, 1], description=f"table:{path}")


def parse_reaction(text: str, m: float | None = None, N: int = 1) -> ReactionSpec:
    """Parse the CLI grammar: logistic, power:<p>, bistable:<a>,
    combustion:<a>, fujita:<k>,<b>, table:<path.csv>; 'none' switches the
    reaction off (solver validation only)."""
    name, _, arg = text.strip().partition(":")
    try:
        if name == "logistic" and not arg:
            return logistic()
        if name == "none" and not arg:
            return no_reaction()
        if name == "power":
            return power(float(arg))
        if name == "bistable":
            return bistable(float(arg))
        if name == "combustion":
            return combustion(float(arg))
        if name == "fujita":
            k, b = (float(s) for s in arg.split(","))
            if m is None:
                raise ReactionError("fujita reaction needs m to fix its exponent")
            return fujita(k, b, m, N)
        if name == "table":
            return read_table(arg)
    except ValueError as exc:
        if isinstance(exc, ReactionError):
            raise
        raise ReactionError(f"malformed reaction spec {text!r}: {exc}") from exc
    raise ReactionError(f"unknown reaction spec {text!r}")


# -- validation -------------------------------------------------------------


def _locate_a(spec: ReactionSpec) -> float:
    lo, hi = spec.u_range
    u = np.linspace(lo, min(hi, 1.0), 4 * SIGN_GRID_POINTS + 1)[:-1]
    hv = spec.h(u)
    nonpos = np.nonzero(hv <= 0.0)[0]
    i = nonpos[-1]
    if i == 0:
        return 0.0
    if i == u.size - 1:
        raise ReactionError("h is not positive anywhere on (0,1)")
    a, b = u[i], u[i + 1]
    while b - a > A_BISECTION_TOL:
        mid = 0.5 * (a + b)
        if spec.scalar_h(mid) > 0.0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def sign_change_point(spec: ReactionSpec) -> float:
    a = spec.exact_a
    return _locate_a(spec) if a is None else a


def _validated(spec: ReactionSpec) -> ReactionSpec:
    check_sign_pattern(spec)
    return spec


def check_sign_pattern(spec: ReactionSpec) -> None:
    """Sampled check of h(0)=0, h<=0 on [0,a], h>0 on (a,1), h<0 on (1,2], h'(1)<0."""
    lo, hi = spec.u_range
    if spec.exact_a is not None and (spec.scalar_h(0.0) != 0.0 or spec.scalar_h(1.0) != 0.0):
        raise ReactionError(f"{spec}: h(0) and h(1) must vanish exactly")
    scale = max(1.0, float(np.max(np.abs(spec.h(np.linspace(0.0, 1.0, 101))))))
    if spec.scalar_h(0.0) != 0.0 or abs(spec.scalar_h(1.0)) > 1e-6 * scale:
        raise ReactionError(f"{spec}: h(0) and h(1) must vanish")
    dh1 = float(spec.h_prime(1.0))
    if not dh1 < 0.0:
        raise ReactionError(f"{spec}: h'(1) = {dh1} must be negative")
    a = sign_change_point(spec)
    u = np.linspace(0.0, min(2.0, hi), SIGN_GRID_POINTS)
    hv = spec.h(u)
    below = u <= a
    mid = (u > a + 1e-12) & (u < 1.0)
    above = u > 1.0
    if np.any(hv[below] > 1e-14) or np.any(hv[mid] <= 0.0) or np.any(hv[above] >= 0.0):
        raise ReactionError(f"{spec}: sign pattern h<=0 on [0,a], h>0 on (a,1), h<0 above 1 fails")


def eval_h(spec: ReactionSpec, u: float) -> float:
    if u < 0.0:
        raise DomainError(f"density must be nonnegative, got {u}")
    lo, hi = spec.u_range
    if u > hi:
        raise RangeError(f"u={u} outside table range [{lo}, {hi}]")
    return float(spec.scalar_h(float(u)))


def eval_h_prime(spec: ReactionSpec, u: float) -> float:
    if u < 0.0:
        raise DomainError(f"density must be nonnegative, got {u}")
    lo, hi = spec.u_range
    if u > hi:
        raise RangeError(f"u={u} outside table range [{lo}, {hi}]")
    return float(spec.h_prime(float(u)))


def phase_force(spec: ReactionSpec, m: float, q: float) -> float:
    """f(q) = m q^(m-1) h(q), the forcing of the desingularised wave system."""
    if q < 0.0:
        raise DomainError(f"phase variable q must be nonnegative, got {q}")
    if m <= 1.0:
        raise DomainError(f"m must exceed 1, got {m}")
    return m * q ** (m - 1.0) * eval_h(spec, q)


# -- classification ---------------------------------------------------------


@dataclass(frozen=True)
class ReactionClassification:
    a: float
    hosono: float
    sigma: float
    fujita_exponent: float
    hair_trigger: bool
    delta_stable: float
    h_prime_at_1: float
    heuristic: bool = False


def hosono_integral(spec: ReactionSpec, m: float) -> float:
    """∫_0^1 h(u) u^(m-1) du; its sign is the sign of the critical speed."""
    pts = []
    if spec.kind is ReactionKind.COMBUSTION:
        pts = [spec.param["a"]]
    elif spec.kind is ReactionKind.TABLE:
        pts = [x for x in spec.table_u if 0.0 < x < 1.0][:100]
    h = spec.scalar_h
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                lambda u: h(u) * u ** (m - 1.0),
                0.0,
                1.0,
                epsabs=1e-13,
                epsrel=1e-8,
                limit=400,
                points=pts or None,
            )
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"hosono quadrature did not converge for {spec}: {exc}") from exc
    if err > max(1e-7 * abs(val), 1e-11):
        raise NumericError(f"hosono quadrature error {err:.3g} too large (value {val:.3g})")
    return val


def sigma_bound(spec: ReactionSpec, m: float) -> float:
    """sup over (0,1] of f(q)/q = m q^(m-2) h(q), by grid search + refinement."""
    hi = min(1.0, spec.u_range[1])
    q = np.linspace(0.0, hi, 1001)[1:]
    g = m * q ** (m - 2.0) * spec.h(q)
    i = int(np.argmax(g))
    lo_q = q[max(i - 1, 0)] if i > 0 else 1e-12
    hi_q = q[min(i + 1, q.size - 1)]
    if hi_q <= lo_q:
        return float(g[i])
    res = optimize.minimize_scalar(
        lambda s: -m * s ** (m - 2.0) * spec.scalar_h(s),
        bounds=(lo_q, hi_q),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(max(g[i], -res.fun))


def stability_width(spec: ReactionSpec, cap: float = 0.5) -> float:
    """Largest δ <= cap with h' < 0 on (1-δ, 1+δ)."""
    n = 20000
    d = np.linspace(0.0, cap, n + 1)[1:]
    lo, hi = spec.u_range
    left = spec.h_prime(1.0 - d)
    right_u = np.minimum(1.0 + d, hi)
    right = spec.h_prime(right_u)
    bad = np.nonzero((left >= 0.0) | (right >= 0.0))[0]
    if bad.size == 0:
        return cap
    j = bad[0]
    if j == 0:
        raise ReactionError(f"{spec}: h' is not negative near u=1")
    a, b = d[j - 1], d[j]

    def ok(s):
        return spec.h_prime(1.0 - s) < 0.0 and spec.h_prime(min(1.0 + s, hi)) < 0.0

    for _ in range(60):
        mid = 0.5 * (a + b)
        if ok(mid):
            a = mid
        else:
            b = mid
    return float(b)


def _hair_trigger(spec: ReactionSpec, a: float, p_f: float) -> tuple[bool, bool]:
    kind = spec.kind
    if a > 0.0:
        return False, kind is ReactionKind.TABLE
    if kind is ReactionKind.LOGISTIC:
        return True, False
    if kind in (ReactionKind.POWER, ReactionKind.FUJITA):
        return spec.param["p"] <= p_f + 1e-12, False
    # table: local power-law exponent from the three smallest positive abscissae
    u = np.array([x for x in spec.table_u if x > 0.0][:3])
    hv = np.array([spec.scalar_h(float(x)) for x in u])
    if np.any(hv <= 0.0):
        return False, True
    slope = np.polyfit(np.log(u), np.log(hv), 1)[0]
    return bool(slope <= p_f + 1e-9), True


def classify(spec: ReactionSpec, m: float, N: int = 1) -> ReactionClassification:
    if m <= 1.0:
        raise DomainError(f"m must exceed 1, got {m}")
    if N < 1:
        raise DomainError(f"dimension N must be >= 1, got {N}")
    if spec.kind is ReactionKind.NONE:
        raise ReactionError("reaction is switched off; nothing to classify")
    a = sign_change_point(spec)
    p_f = m + 2.0 / N
    hair, heuristic = _hair_trigger(spec, a, p_f)
    return ReactionClassification(
        a=float(a),
        hosono=hosono_integral(spec, m),
        sigma=sigma_bound(spec, m),
        fujita_exponent=p_f,
        hair_trigger=hair,
        delta_stable=stability_width(spec),
        h_prime_at_1=float(spec.h_prime(1.0)),
        heuristic=heuristic,
    )


def max_abs_h_prime(spec: ReactionSpec, umax: float, n: int = 257) -> float:
    """max |h'| sampled on [0, umax]."""
    if umax <= 0.0:
        return abs(float(spec.h_prime(0.0)))
    u = np.linspace(0.0, umax, n)
    return float(np.max(np.abs(spec.h_prime(u))))


def linear_growth_bound(spec: ReactionSpec, umax: float, n: int = 2001) -> float:
    """Smallest k (sampled) with k u >= h(u) on (0, umax]."""
    u = np.linspace(0.0, umax, n)[1:]
    return float(max(np.max(spec.h(u) / u), abs(float(spec.h_prime(0.0)))))
