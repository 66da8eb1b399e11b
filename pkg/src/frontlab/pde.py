"""Explicit finite differences for u_t = Δu^m + h(u), Cartesian 1D or radial.

The scheme evolves u in the conservative form of Δu^m. Under the step bound
in ``cfl_dt`` the update is monotone in every cell value, so the discrete
comparison principle, positivity and the flat-supersolution bound hold.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field as dc_field
from enum import Enum

import numpy as np

from .errors import (
    BoundaryCollisionError,
    DomainError,
    NumericError,
    ParameterError,
    StabilityError,
    UsageError,
)
from .reaction import ReactionKind, ReactionSpec, max_abs_h_prime, sigma_bound

log = logging.getLogger(__name__)

U_TOL = 1e-8
# clipping scale: cells below this are set to 0. Twelve decades under U_TOL;
# such a cell feeds its neighbour at most dt/dx^2 * FLUSH^m, so the front
# dynamics do not see it, and the support ends where the solution is zero.
FLUSH = 1e-20
EDGE_CELLS = 5


class Geometry(str, Enum):
    CARTESIAN = "cartesian-1d"
    RADIAL = "radial"


class BC(str, Enum):
    NEUMANN = "neumann-zero"
    DIRICHLET = "dirichlet-zero"


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    dx: float
    geometry: Geometry = Geometry.CARTESIAN
    N: int = 1
    bc_left: BC = BC.NEUMANN
    bc_right: BC = BC.NEUMANN

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        object.__setattr__(self, "bc_left", BC(self.bc_left))
        object.__setattr__(self, "bc_right", BC(self.bc_right))
        if not self.dx > 0:
            raise ParameterError(f"dx must be positive, got {self.dx}")
        cells = (self.x_max - self.x_min) / self.dx
        if abs(cells - round(cells)) > 1e-9 * max(1.0, cells) or round(cells) < 16:
            raise ParameterError(
                f"(x_max - x_min)/dx = {cells:.12g} must be an integer >= 16"
            )
        if self.geometry is Geometry.RADIAL:
            if self.x_min != 0.0:
                raise ParameterError("radial grids start at r = 0")
            if self.N < 1:
                raise ParameterError(f"radial dimension must be >= 1, got {self.N}")
        elif self.N != 1:
            raise ParameterError("Cartesian grids are one-dimensional (N = 1)")

    @property
    def cells(self) -> int:
        return int(round((self.x_max - self.x_min) / self.dx))

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.cells + 1)

    @property
    def G(self) -> int:
        return self.N if self.geometry is Geometry.RADIAL else 1


@dataclass(frozen=True, eq=False)
class Field:
    grid: GridSpec
    t: float
    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.shape != (self.grid.cells + 1,):
            raise ParameterError(f"field has {u.size} values, grid has {self.grid.cells + 1} nodes")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def x(self):
        return self.grid.x

    def mass(self) -> float:
        return _mass(self.grid, self.u)


@dataclass(frozen=True)
class TraceSample:
    t: float
    zeta_minus: float
    zeta_plus: float
    sup_u: float
    mass: float


@dataclass(frozen=True, eq=False)
class FrontTrace:
    samples: tuple = ()

    def column(self, name) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    @property
    def t(self):
        return self.column("t")

    @property
    def zeta_plus(self):
        return self.column("zeta_plus")

    @property
    def zeta_minus(self):
        return self.column("zeta_minus")

    @property
    def sup_u(self):
        return self.column("sup_u")

    def rows(self):
        return [(s.t, s.zeta_minus, s.zeta_plus, s.sup_u, s.mass) for s in self.samples]


class ICKind(str, Enum):
    CONST = "const"
    BOX = "box"
    BUMP = "bump"
    PLATEAU = "plateau"
    STEP = "step"
    FILE = "file"


_IC_ARITY = {
    ICKind.CONST: (1, 1),
    ICKind.BOX: (3, 3),
    ICKind.BUMP: (1, 2),
    ICKind.PLATEAU: (2, 3),
    ICKind.STEP: (2, 2),
}


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial data.

    const(v); box(height, x0, x1); bump(delta[, center]) = δ(1 - r²)³₊;
    plateau(eta, rho[, c]) = η on |x| <= ρ followed by a sub-critical
    phase-plane leg; step(height, x0) = height for x <= x0; file(path).
    """

    kind: ICKind
    params: tuple = ()
    path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ICKind(self.kind))
        if self.kind is ICKind.FILE:
            if not self.path:
                raise UsageError("file initial data needs a path")
            return
        lo, hi = _IC_ARITY[self.kind]
        if not lo <= len(self.params) <= hi:
            raise UsageError(f"{self.kind.value} takes {lo}..{hi} parameters, got {len(self.params)}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def __str__(self):
        if self.kind is ICKind.FILE:
            return f"file:{self.path}"
        return f"{self.kind.value}:" + ",".join(format(p, "g") for p in self.params)


def parse_ic(text: str) -> InitialDataSpec:
    """Parse 'box:1,-5,5', 'bump:1e-2', 'file:data.csv', ..."""
    name, _, rest = text.strip().partition(":")
    try:
        kind = ICKind(name.strip().lower())
    except ValueError:
        raise UsageError(f"unknown initial data kind {name!r}") from None
    if kind is ICKind.FILE:
        return InitialDataSpec(kind, path=rest.strip())
    try:
        params = tuple(float(s) for s in rest.split(",")) if rest.strip() else ()
    except ValueError:
        raise UsageError(f"bad initial-data parameters in {text!r}") from None
    return InitialDataSpec(kind, params)


def _read_ic_file(path, x):
    from .csvio import read_csv

    header, rows = read_csv(path)
    if [h.strip() for h in header[:2]] != ["x", "u"]:
        raise UsageError(f"{path}: expected header 'x,u'")
    a = np.array(rows, dtype=float)
    xs, us = a[:, 0], a[:, 1]
    if np.any(np.diff(xs) <= 0):
        raise UsageError(f"{path}: x column must be strictly increasing")
    if np.any(us < 0):
        raise DomainError(f"{path}: negative initial density")
    return np.interp(x, xs, us, left=0.0, right=0.0)


def plateau_profile(spec, m, eta, rho, c=None, N=1, c_star=None):
    """Radial profile v0(r) = η on [0, ρ], the phase-plane leg on [ρ, ρ + b], 0 beyond.

    Returns (v0 callable, c, leg trajectory, ν, b).
    """
    from .phaseplane import critical_speed, subsolution_leg

    if c_star is None:
        c_star = critical_speed(spec, m, N=N).c_star
    if c is None:
        c = 0.5 * c_star
    if rho <= (N - 1) / c:
        raise ParameterError(f"rho={rho} must exceed (N-1)/c = {(N - 1) / c:.6g}")
    leg, nu, b = subsolution_leg(spec, m, c, eta, c_star=c_star)
    xi, q = leg.xi, leg.q
    # the leg starts at (eta, -eps_p); q is decreasing along it
    xi = np.concatenate([xi, [b]])
    q = np.concatenate([q, [0.0]])
    q[0] = eta

    def v0(r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.where(r <= rho, eta, 0.0)
        on_leg = (r > rho) & (r < rho + b)
        return np.where(on_leg, np.interp(r - rho, xi, q), out)

    return v0, c, leg, nu, b


def initial_field(ic, grid: GridSpec, spec: ReactionSpec | None = None, m: float | None = None) -> Field:
    """Build the t = 0 field from an InitialDataSpec, an array, or a callable of x."""
    x = grid.x
    if isinstance(ic, Field):
        return Field(grid, 0.0, ic.u)
    if callable(ic) and not isinstance(ic, InitialDataSpec):
        u = np.asarray(ic(x), dtype=float)
    elif isinstance(ic, (np.ndarray, list, tuple)):
        u = np.asarray(ic, dtype=float)
    else:
        if isinstance(ic, str):
            ic = parse_ic(ic)
        k, P = ic.kind, ic.params
        if k is ICKind.CONST:
            u = np.full(x.shape, P[0])
        elif k is ICKind.BOX:
            height, x0, x1 = P
            u = np.where((x >= x0 - 1e-12) & (x <= x1 + 1e-12), height, 0.0)
        elif k is ICKind.BUMP:
            delta = P[0]
            center = P[1] if len(P) > 1 else 0.0
            r = np.abs(x - center)
            u = delta * np.clip(1.0 - r * r, 0.0, None) ** 3
            if spec is not None and spec.kind is ReactionKind.FUJITA:
                kk, b = spec.param("k"), spec.param("b")
                lim = min(b, (3 * grid.N / kk) ** (grid.N / 2))
                if not 0 < delta < lim:
                    warnings.warn(f"bump height {delta} outside (0, {lim:.4g}) for this reaction")
        elif k is ICKind.PLATEAU:
            if spec is None or m is None:
                raise UsageError("plateau data needs the reaction and m")
            v0 = plateau_profile(spec, m, P[0], P[1], P[2] if len(P) > 2 else None, grid.N)[0]
            u = v0(x)
        elif k is ICKind.STEP:
            height, x0 = P
            u = np.where(x <= x0 + 1e-12, height, 0.0)
        else:
            u = _read_ic_file(ic.path, x)
    if u.shape != x.shape:
        raise ParameterError(f"initial data has shape {u.shape}, grid needs {x.shape}")
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise DomainError("initial data must be finite and non-negative")
    return Field(grid, 0.0, u)


def cfl_dt(field: Field, spec: ReactionSpec, m: float, safety: float = 0.5, umax=None) -> float:
    """dt = safety*min(dx²/(2 G m umax^(m-1)), 1/(1 + max|h'| on [0, umax]))."""
    g = field.grid
    umax = float(np.max(field.u)) if umax is None else float(umax)
    if umax > 0:
        diff = g.dx**2 / (2.0 * g.G * m * umax ** (m - 1.0))
    else:
        diff = math.inf
    react = 1.0 / (1.0 + max_abs_h_prime(spec, max(umax, 1e-12)))
    return safety * min(diff, react)


class _Kernel:
    """One explicit step on an index window, in place."""

    def __init__(self, grid: GridSpec, spec: ReactionSpec, m: float, dt: float):
        self.n = grid.cells + 1
        self.m = m
        self.h = spec.h
        self.dt = dt
        lam = dt / grid.dx**2
        self.radial = grid.geometry is Geometry.RADIAL
        self.dir_l = grid.bc_left is BC.DIRICHLET and not self.radial
        self.dir_r = grid.bc_right is BC.DIRICHLET
        if self.radial:
            i = np.arange(self.n, dtype=float)
            i[0] = 1.0
            bend = (grid.N - 1) / (2.0 * i)
            self.up = lam * (1.0 + bend)
            self.dn = lam * (1.0 - bend)
            self.up[0] = 2.0 * grid.N * lam
            self.dn[0] = 0.0
            self.mid = 2.0 * lam
            self.mid0 = 2.0 * grid.N * lam
        else:
            self.lam = lam

    def __call__(self, u, a, b):
        """Advance u[a:b+1]; returns negative mass clipped (in u·cell units)."""
        n = self.n
        lo, hi = max(a - 1, 0), min(b + 1, n - 1)
        w = u[lo : hi + 1] ** self.m
        # ghost values for the neighbours of the window ends
        wl = np.empty(b - a + 1)
        wr = np.empty(b - a + 1)
        off = a - lo
        k = b - a + 1
        if a == 0:
            wl[0] = w[1] if n > 1 else w[0]  # mirror (Neumann or r = 0 symmetry)
            wl[1:] = w[0 : k - 1]
        else:
            wl[:] = w[off - 1 : off - 1 + k]
        if b == n - 1:
            wr[-1] = w[b - 1 - lo]
            wr[:-1] = w[off + 1 : off + k]
        else:
            wr[:] = w[off + 1 : off + 1 + k]
        wc = w[off : off + k]
        uc = u[a : b + 1]
        if self.radial:
            up = self.up[a : b + 1]
            dn = self.dn[a : b + 1]
            lap = up * wr + dn * wl - self.mid * wc
            if a == 0:
                lap[0] = self.up[0] * (wr[0] - wc[0])
        else:
            lap = self.lam * (wr - 2.0 * wc + wl)
        new = uc + lap + self.dt * self.h(uc)
        if a == 0 and self.dir_l:
            new[0] = 0.0
        if b == n - 1 and self.dir_r:
            new[-1] = 0.0
        neg = new < 0.0
        clipped = 0.0
        if np.any(neg):
            clipped = -float(np.sum(new[neg]))
            new[neg] = 0.0
        new[new < FLUSH] = 0.0
        if not np.all(np.isfinite(new)):
            bad = a + int(np.nonzero(~np.isfinite(new))[0][0])
            raise NumericError(f"non-finite value at cell {bad}")
        u[a : b + 1] = new
        return clipped


def step(field: Field, spec: ReactionSpec, m: float, dt: float) -> Field:
    """One explicit step on the whole grid."""
    limit = cfl_dt(field, spec, m, safety=1.0)
    if dt > limit * (1.0 + 1e-12):
        raise StabilityError(f"dt={dt:.6g} exceeds the stability bound {limit:.6g}")
    if dt <= 0:
        raise ParameterError("dt must be positive")
    u = np.array(field.u)
    clipped = _Kernel(field.grid, spec, m, dt)(u, 0, u.size - 1)
    if clipped > 0:
        log.debug("clipped %.3g of negative mass", clipped * field.grid.dx)
    return Field(field.grid, field.t + dt, u)


def free_boundaries(field: Field, u_tol: float = U_TOL):
    """(zeta_minus, zeta_plus): outermost nodes with u >= u_tol, refined linearly.

    Returns (nan, nan) when max u < u_tol.
    """
    u = field.u
    x = field.grid.x
    idx = np.nonzero(u >= u_tol)[0]
    if idx.size == 0:
        return math.nan, math.nan
    dx = field.grid.dx
    i, j = int(idx[0]), int(idx[-1])
    if j + 1 < u.size:
        zp = x[j] + dx * (u[j] - u_tol) / (u[j] - u[j + 1])
    else:
        zp = x[j]
    if i > 0:
        zm = x[i] - dx * (u[i] - u_tol) / (u[i] - u[i - 1])
    else:
        zm = x[i]
    return float(zm), float(zp)


def pressure_front(field: Field, m: float, side: str = "plus", band=(0.02, 0.4), u_tol: float = U_TOL) -> float:
    """Free boundary from the pressure: quadratic fit of p = m/(m-1) u^(m-1) on the
    nodes behind the front with p in band*max p, extrapolated to p = 0.

    The threshold location from ``free_boundaries`` sits in the scheme's
    doubly-exponential foot, a couple of cells ahead of the free boundary;
    the pressure is smooth up to the boundary, so its extrapolation is not
    biased at O(dx). Falls back to the threshold location if the band has
    fewer than three nodes.
    """
    zm, zp = free_boundaries(field, u_tol)
    if math.isnan(zp):
        return math.nan
    u = field.u
    x = field.grid.x
    p = m / (m - 1.0) * u ** (m - 1.0)
    lo, hi = band[0] * float(np.max(p)), band[1] * float(np.max(p))
    idx = np.nonzero(u >= u_tol)[0]
    start, step_ = (int(idx[-1]), -1) if side == "plus" else (int(idx[0]), 1)
    sel = []
    i = start
    while 0 <= i < u.size:
        if p[i] > hi:
            break
        if p[i] >= lo:
            sel.append(i)
        i += step_
    fallback = zp if side == "plus" else zm
    if len(sel) < 3:
        return fallback
    xs, ps = x[sel], p[sel]
    edge = xs[0]  # node nearest the front
    coef = np.polyfit(xs - edge, ps, 2 if len(sel) >= 4 else 1)
    roots = np.roots(coef)
    roots = roots[np.abs(roots.imag) < 1e-12].real
    ahead = roots[(roots * step_ <= 0) & (np.abs(roots) <= 10 * field.grid.dx + abs(fallback - edge))]
    if ahead.size == 0:
        return fallback
    return float(edge + ahead[np.argmin(np.abs(ahead))])


def support_empty(bounds) -> bool:
    return math.isnan(bounds[0])


def _mass(grid, u):
    """∫u dx (Cartesian) or ∫u dV over the ball (radial), trapezoidal."""
    if grid.geometry is Geometry.RADIAL:
        area = 2.0 * math.pi ** (grid.N / 2) / math.gamma(grid.N / 2)
        return float(area * _trapz(u * grid.x ** (grid.N - 1), grid.dx))
    return float(_trapz(u, grid.dx))


def _trapz(u, dx):
    return dx * (np.sum(u) - 0.5 * (u[0] + u[-1]))


def _sample(field, u_tol):
    zm, zp = free_boundaries(field, u_tol)
    return TraceSample(field.t, zm, zp, float(np.max(field.u)), field.mass())


def _euler_sup(spec, z0, dt, nsteps):
    """max of the flat discrete solution z <- z + dt*h(z) over nsteps steps.

    By monotonicity of the scheme this bounds sup u over the same steps.
    """
    h = spec.scalar_h
    z = zmax = float(z0)
    for _ in range(nsteps):
        zn = z + dt * h(z)
        if zn <= z:  # non-increasing from here on (monotone map)
            break
        z = zmax = zn
    return zmax


def _interval_dt(spec, m, f0, umax, span, safety):
    """Uniform dt for one output interval and the sup-u bound it relies on."""
    bound = max(umax, 1e-300)
    for _ in range(20):
        dt0 = cfl_dt(f0, spec, m, safety, umax=bound)
        nsteps = max(1, int(math.ceil(span / dt0)))
        dt = span / nsteps
        z = _euler_sup(spec, umax, dt, nsteps)
        if z <= bound:
            return dt, nsteps, bound
        bound = z * (1.0 + 1e-9)
    raise StabilityError("could not settle a step size for the output interval")


def run(
    grid: GridSpec,
    ic,
    spec: ReactionSpec,
    m: float,
    t_max: float,
    snapshot_every: float | None = None,
    trace_every: float | None = None,
    u_tol: float = U_TOL,
    safety: float = 0.5,
    check_edges: bool = True,
):
    """Evolve to t_max; returns (snapshots, trace).

    Snapshots are taken every ``snapshot_every`` and the trace every
    ``trace_every`` (default: at snapshots); both grids end at t_max. dt is
    fixed within each trace interval and chosen from the flat-supersolution
    bound over that interval, so the safety factor holds at every step.
    """
    if m <= 1:
        raise ParameterError(f"m must exceed 1, got {m}")
    f0 = ic if isinstance(ic, Field) else initial_field(ic, grid, spec, m)
    if t_max < 0:
        raise ParameterError("t_max must be non-negative")
    if t_max == 0:
        return [f0], FrontTrace((_sample(f0, u_tol),))
    if snapshot_every is None or snapshot_every <= 0:
        snapshot_every = t_max
    if trace_every is None or trace_every <= 0:
        trace_every = snapshot_every
    ratio = max(1, int(round(snapshot_every / trace_every)))
    n_ev = int(math.ceil(t_max / trace_every - 1e-9))
    times = [min(t_max, k * trace_every) for k in range(1, n_ev + 1)]
    times[-1] = t_max

    u = np.array(f0.u)
    n = u.size
    nz = np.nonzero(u > 0)[0]
    lo, hi = (int(nz[0]), int(nz[-1])) if nz.size else (n, -1)
    # edges already occupied at t=0 are not treated as collisions
    watch_l = check_edges and grid.geometry is Geometry.CARTESIAN and not np.any(u[: EDGE_CELLS + 1] >= u_tol)
    watch_r = check_edges and not np.any(u[n - 1 - EDGE_CELLS :] >= u_tol)
    _check_domain(grid, f0, spec, m, t_max)

    snaps = [f0]
    samples = [_sample(f0, u_tol)]
    t = 0.0
    clipped_total = 0.0
    for k, t_next in enumerate(times, start=1):
        span = t_next - t
        dt, nsteps, bound = _interval_dt(spec, m, f0, float(np.max(u)), span, safety)
        kern = _Kernel(grid, spec, m, dt)
        for _ in range(nsteps):
            if hi < lo:
                break  # identically zero stays zero
            a, b = max(lo - 1, 0), min(hi + 1, n - 1)
            clipped_total += kern(u, a, b)
            if a < lo and u[a] > 0:
                lo = a
            if b > hi and u[b] > 0:
                hi = b
            if (watch_l and u[EDGE_CELLS] >= u_tol) or (watch_r and u[n - 1 - EDGE_CELLS] >= u_tol):
                fld = Field(grid, t, u)
                samples.append(_sample(fld, u_tol))
                raise BoundaryCollisionError(
                    f"free boundary reached {EDGE_CELLS} cells from the domain edge near t={t:.6g}",
                    snapshots=snaps,
                    trace=FrontTrace(tuple(samples)),
                )
            t += dt
        t = t_next
        if float(np.max(u)) > bound * (1.0 + 1e-12):
            raise StabilityError(f"sup u exceeded the flat-supersolution bound at t={t:.6g}")
        fld = Field(grid, t, u)
        samples.append(_sample(fld, u_tol))
        if k % ratio == 0 or k == len(times):
            snaps.append(fld)
    if clipped_total > 0:
        log.debug("total clipped negative mass %.3g", clipped_total * grid.dx)
    return snaps, FrontTrace(tuple(samples))


def _check_domain(grid, f0, spec, m, t_max):
    """Warn when the front could reach the boundary by t_max (speed bound 2*sqrt(sigma))."""
    zm, zp = free_boundaries(f0)
    if math.isnan(zp) or spec.kind is ReactionKind.NONE:
        return
    reach = 2.0 * math.sqrt(sigma_bound(spec, m)) * t_max + 10.0
    if zp < grid.x_max - EDGE_CELLS * grid.dx and zp + reach > grid.x_max:
        log.warning("domain may be too small on the right: front could reach x_max by t_max")
    if grid.geometry is Geometry.CARTESIAN and zm > grid.x_min + EDGE_CELLS * grid.dx and zm - reach < grid.x_min:
        log.warning("domain may be too small on the left: front could reach x_min by t_max")


def pressure_gradient_sup(field: Field, m: float) -> float:
    """sup |p_x| for p = m/(m-1) u^(m-1), central differences inside the support."""
    if field.grid.geometry is not Geometry.CARTESIAN:
        raise ParameterError("pressure gradient is defined here for Cartesian fields")
    u = field.u
    p = m / (m - 1.0) * u ** (m - 1.0)
    inner = (u[:-2] > 0) & (u[1:-1] > 0) & (u[2:] > 0)
    if not np.any(inner):
        return 0.0
    px = (p[2:] - p[:-2]) / (2.0 * field.grid.dx)
    return float(np.max(np.abs(px[inner])))
