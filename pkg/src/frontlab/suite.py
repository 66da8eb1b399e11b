"""Desk-scale acceptance suite.

Each job returns one or more ``Check`` records. Jobs are independent and
can run in separate processes; the box-data run is shared by the speed,
compact-support and pressure-bound checks so it lives in one job.
"""

from __future__ import annotations

import contextlib
import filecmp
import io
import json
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .barriers import (
    auto_config,
    barrier_field,
    choose_k,
    integrate_fg,
    residual_sign_check,
    slow_wave_residual,
    slow_wave_supersolution,
)
from .experiments import (
    Verdict,
    convergence_report,
    hair_trigger_experiment,
    measure_front_speed,
    pressure_bound_check,
    total_variation,
)
from .pde import GridSpec, free_boundaries, pressure_front, run
from .phaseplane import critical_speed, wave_trajectory
from .reaction import (
    bistable,
    classify,
    combustion,
    fujita,
    logistic,
    no_reaction,
    power,
)
from .waveprofile import front_pressure_slope, profile_eval, reconstruct_profile

DX = 0.05
T_BOX = 100.0


@dataclass(frozen=True)
class Check:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.2f} s)"


def _timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


def _wave(c):
    return reconstruct_profile(wave_trajectory(logistic(), 2.0, c))


# -- phase plane -------------------------------------------------------------


def job_speed(workdir=None):
    from .cli import main

    buf = io.StringIO()
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(buf):
        code = main(["speed", "--reaction", "logistic", "--m", "2", "--tol", "1e-4", "--json", "-o", workdir or tmp])
    el = time.perf_counter() - t0
    rec = json.loads(buf.getvalue().strip().splitlines()[-1])
    c = rec["c_star"]
    # closed-form connection p = -q(1 - q) at c = 1: p dp/dq = -c p - 2 q^2 (1 - q)
    q = np.linspace(0.0, 1.0, 1001)
    p, dp = -q * (1 - q), -(1 - 2 * q)
    sub = float(np.max(np.abs(p * dp - (-1.0 * p - 2 * q**2 * (1 - q)))))
    ok = code == 0 and abs(c - 1.0) <= 1e-3 and el < 1.0 and sub < 1e-14
    return [Check(1, "critical speed oracle", ok, f"c*={c:.7f} (|c*-1|={abs(c - 1):.2e}), oracle residual {sub:.1e}", el)]


def job_profile(workdir=None):
    t0 = time.perf_counter()
    c = critical_speed(logistic(), 2.0, tol=1e-4).c_star
    prof = _wave(c)
    el = time.perf_counter() - t0
    xi = np.linspace(-15.0, 0.0, 3001)
    err = float(np.max(np.abs(profile_eval(prof, xi) - (1.0 - np.exp(xi / 2.0)))))
    slope = front_pressure_slope(prof)
    ok = err <= 1e-3 and abs(slope + 1.0) <= 0.01 and el < 1.0
    return [Check(2, "profile oracle", ok, f"sup|V - (1 - e^(xi/2))| = {err:.2e}, front pressure slope {slope:.5f}", el)]


def _catalog():
    return [
        logistic(),
        power(2.0),
        power(4.0),
        power(6.0),
        bistable(0.3),
        combustion(0.3),
        fujita(1.0, 0.5, 2.0, 1),
    ]


def job_catalog(workdir=None):
    t0 = time.perf_counter()
    bad, lines = [], []
    tol = 1e-6
    for spec in _catalog():
        cls = classify(spec, 2.0)
        if cls.hosono <= 0:
            continue
        c = critical_speed(spec, 2.0, tol=tol).c_star
        bound = 2.0 * math.sqrt(cls.sigma) + tol
        lines.append(f"{spec.description} {c:.5f}")
        if not 0.0 < c <= bound:
            bad.append(spec.description)
    hb = classify(bistable(0.3), 2.0).hosono
    el = time.perf_counter() - t0
    ok = not bad and abs(hb - 0.025) <= 1e-8 and el < 10.0
    detail = "c* in (0, 2 sqrt(sigma)]: " + ", ".join(lines) + f"; bistable hosono {hb:.6f}"
    if bad:
        detail += f"; out of range: {bad}"
    return [Check(3, "speed bounds across the catalog", ok, detail, el)]


# -- solver ------------------------------------------------------------------


def barenblatt(x, t, C=1.0):
    """m = 2 self-similar solution t^(-1/3) (C - x^2/(12 t^(2/3)))_+."""
    return t ** (-1.0 / 3.0) * np.maximum(C - x**2 / (12.0 * t ** (2.0 / 3.0)), 0.0)


def barenblatt_run(dx=0.02, snapshot_every=0.1):
    g = GridSpec(-10.0, 10.0, dx)
    snaps, _ = run(g, barenblatt(g.x, 1.0), no_reaction(), 2.0, 1.0, snapshot_every=snapshot_every)
    return g, snaps


def job_solver(workdir=None):
    t0 = time.perf_counter()
    g, snaps = barenblatt_run()
    err_b = float(np.max(np.abs(snaps[-1].u - barenblatt(g.x, 2.0))))
    flat = GridSpec(-1.0, 1.0, 0.05)
    errs = {}
    cases = [(logistic(), 0.5), (bistable(0.3), 0.25), (combustion(0.3), 0.6), (logistic(), 0.1)]
    for spec, v0 in cases:
        snaps_f, _ = run(flat, f"const:{v0}", spec, 2.0, 5.0, snapshot_every=1.0)
        ode = solve_ivp(lambda t, z: spec.h(z), (0.0, 5.0), [v0], t_eval=[f.t for f in snaps_f], rtol=1e-12, atol=1e-14)
        errs[f"{spec.description}@{v0:g}"] = max(float(np.max(np.abs(f.u - z))) for f, z in zip(snaps_f, ode.y[0]))
    gated = list(errs.values())[:3]  # logistic 0.1 is first-order Euler error at its steepest; reported only
    el = time.perf_counter() - t0
    ok = err_b <= 5e-3 and max(gated) <= 1e-4 and el < 30.0
    flat_s = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    return [Check(4, "solver oracles", ok, f"Barenblatt sup error {err_b:.2e}; flat vs ODE: {flat_s} (last not gated)", el)]


# -- box run: speed, compact support, pressure bound --------------------------


def box_run(dx=DX, t_max=T_BOX, snapshot_every=5.0, trace_every=0.5):
    g = GridSpec(-150.0, 150.0, dx)
    snaps, trace = run(g, "box:1,-5,5", logistic(), 2.0, t_max, snapshot_every=snapshot_every, trace_every=trace_every)
    return g, snaps, trace


def job_box(workdir=None):
    (g, snaps, trace), el = _timed(box_run)
    out = []
    t0 = time.perf_counter()
    speed = measure_front_speed(trace, (0.5 * T_BOX, T_BOX))
    ahead, cells = 0.0, 0
    for f in snaps:
        _, zp = free_boundaries(f)
        beyond = f.u[g.x > zp + g.dx]
        ahead = max(ahead, float(np.max(beyond)) if beyond.size else 0.0)
        cells = max(cells, int(np.count_nonzero(beyond)))
    ok5 = not isinstance(speed, Verdict) and abs(speed - 1.0) <= 0.02 and ahead == 0.0
    out.append(
        Check(5, "speed dichotomy", ok5, f"late speed {speed:.5f}; max u beyond zeta+ + dx = {ahead:.1e} ({cells} cells)", el + time.perf_counter() - t0)
    )

    t0 = time.perf_counter()
    rep = convergence_report(snaps, trace, _wave(1.0), 1.0, region="half", window=(0.5 * T_BOX, T_BOX))
    e_p, e_m = rep.final_shape_error("plus"), rep.final_shape_error("minus")
    gap = abs(rep.xi_plus - rep.xi_minus)
    ok7 = gap <= 2 * g.dx and e_p <= 0.02 and e_m <= 0.02
    out.append(
        Check(
            7,
            "compact-support convergence",
            ok7,
            f"xi+={rep.xi_plus:.4f}, xi-={rep.xi_minus:.4f} (gap {gap:.1e}); shape errors {e_p:.2e} / {e_m:.2e}",
            time.perf_counter() - t0,
        )
    )

    t0 = time.perf_counter()
    pb_box = pressure_bound_check(snaps, 2.0)
    _, bb = barenblatt_run()
    pb_bb = pressure_bound_check(bb, 2.0)
    ok11 = pb_box.passed and pb_bb.passed
    out.append(
        Check(
            11,
            "pressure-gradient bound",
            ok11,
            f"box H={pb_box.H:.4f} max ratio {max(pb_box.ratios):.4f}; Barenblatt H={pb_bb.H:.4f} max ratio {max(pb_bb.ratios):.4f}",
            time.perf_counter() - t0,
        )
    )
    return out


# -- class A data -------------------------------------------------------------


def job_class_a(workdir=None):
    t0 = time.perf_counter()
    g = GridSpec(-20.0, 130.0, DX)
    snaps, trace = run(g, "step:1,0", logistic(), 2.0, T_BOX, snapshot_every=5.0, trace_every=0.5)
    rep = convergence_report(snaps, trace, _wave(1.0), 1.0, region="all", window=(0.5 * T_BOX, T_BOX))
    late = trace.t >= 2.0 * T_BOX / 3.0
    tv = total_variation(trace.zeta_plus[late] - trace.t[late])
    fe = np.array([e for t, e in rep.front_error if t >= 2.0 * T_BOX / 3.0])
    tv_anchor = total_variation(fe)
    err = rep.final_shape_error()
    el = time.perf_counter() - t0
    ok = tv <= 0.05 and tv_anchor <= 0.05 and err <= 0.02
    return [
        Check(
            6,
            "class-A convergence",
            ok,
            f"TV(zeta - c*t) last third {tv:.2e} (anchored {tv_anchor:.2e}); xi0={rep.xi_plus:.4f}, shape error {err:.2e}",
            el,
        )
    ]


# -- hair trigger -------------------------------------------------------------

HAIR_T = 400.0
VANISH_T = 6.0e4


def job_dichotomy(workdir=None):
    t0 = time.perf_counter()
    spread = hair_trigger_experiment(power(4.0), 2.0, 1, 1e-2, t_max=HAIR_T)
    vanish = hair_trigger_experiment(power(6.0), 2.0, 1, 1e-3, t_max=VANISH_T)
    el = time.perf_counter() - t0
    ok = spread.verdict is Verdict.SPREADING and vanish.verdict is Verdict.VANISHING
    return [
        Check(
            8,
            "hair-trigger / Fujita dichotomy",
            ok,
            f"power 4, bump 1e-2, t={HAIR_T:g}: {spread.verdict.value} (u(0)={spread.u_center:.2e}); "
            f"power 6, bump 1e-3, t={VANISH_T:g}: {vanish.verdict.value} (sup u={vanish.sup_u:.2e})",
            el,
        )
    ]


# -- barriers -----------------------------------------------------------------

BARRIER_T = 30.0


def job_barrier(workdir=None):
    t0 = time.perf_counter()
    spec, c = logistic(), 1.0
    prof = _wave(c)
    g = GridSpec(-40.0, 60.0, DX)
    snaps, _ = run(g, profile_eval(prof, g.x), spec, 2.0, BARRIER_T, snapshot_every=1.0, trace_every=0.5)
    parts, ok = [], True
    for f0 in (0.95, 1.05):
        cfg = auto_config(spec, 2.0, c, f0)
        k = choose_k(cfg, prof, spec)
        cfg = auto_config(spec, 2.0, c, f0, k=k)
        res = residual_sign_check(cfg, prof, spec)
        path = integrate_fg(cfg, BARRIER_T)
        worst = -math.inf
        for fld in snaps:
            w = barrier_field(path, prof, g.x, fld.t)
            d = w - fld.u if f0 < 1.0 else fld.u - w
            worst = max(worst, float(np.max(d)))
        ok &= res.passed and worst <= 1e-6 and path.k_prime_ok
        parts.append(f"{cfg.kind} k={k:g} residual {res.max_violation:.1e} order {worst:.1e} K'={path.k_prime:.3f}")
    el = time.perf_counter() - t0
    ok &= el < 30.0
    return [Check(9, "barrier validity", ok, "; ".join(parts), el)]


def job_slow_wave(workdir=None):
    t0 = time.perf_counter()
    spec, k_lin, C1, C2 = logistic(), 1.0, 1.0, 6.0
    v, rho = slow_wave_supersolution(k_lin, C1, C2, 2.0, spec=spec)
    # residual at interior support nodes, on two grids: O(dx^2)
    res = []
    for dx in (DX, DX / 2):
        xs = np.arange(-10.0, 5.0 + 1e-12, dx)
        res.append(float(np.max(np.abs(slow_wave_residual(v, k_lin, 2.0, xs, 1.0)))))
    ts = np.linspace(0.0, 3.0, 31)
    rho_err = float(np.max(np.abs(rho(ts) - (C2 + C1 * np.exp(k_lin * ts) / k_lin))))
    g = GridSpec(-20.0, 60.0, DX)
    snaps, _ = run(g, "box:1,-5,5", spec, 2.0, 3.0, snapshot_every=0.25)
    below = max(float(np.max(f.u - v(g.x, f.t))) for f in snaps)
    el = time.perf_counter() - t0
    ok = res[0] <= 10 * DX**2 and rho_err == 0.0 and below <= 0.0 and el < 30.0
    return [
        Check(
            10,
            "explicit slow-wave supersolution",
            ok,
            f"residual {res[0]:.1e} / {res[1]:.1e} (dx, dx/2); rho closed-form error {rho_err:.1e}; max(u - v) = {below:.1e}",
            el,
        )
    ]


# -- determinism and refinement ------------------------------------------------


def job_refine(workdir=None):
    from .cli import main

    t0 = time.perf_counter()
    base = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="frontlab-"))
    argv = ["simulate", "--reaction", "logistic", "--m", "2", "--ic", "box:1,-5,5", "--xmax", "40", "--dx", "0.1", "--tmax", "10", "--snap", "5"]
    same = True
    for name in ("a", "b"):
        with contextlib.redirect_stdout(io.StringIO()):
            main(argv + ["-o", str(base / name)])
            main(["profile", "--reaction", "logistic", "--m", "2", "-o", str(base / name / "prof" / "profile.csv")])
    match, same = [], True
    for sub in ("", "prof"):
        files = sorted(p.name for p in (base / "a" / sub).iterdir() if p.is_file())
        ok_, mismatch, errs = filecmp.cmpfiles(base / "a" / sub, base / "b" / sub, files, shallow=False)
        match += ok_
        same &= not mismatch and not errs

    _, coarse, tr_c = box_run(DX, snapshot_every=T_BOX)
    _, fine, tr_f = box_run(DX / 2, snapshot_every=T_BOX)
    dz = abs(tr_c.zeta_plus[-1] - tr_f.zeta_plus[-1])
    dzp = abs(pressure_front(coarse[-1], 2.0) - pressure_front(fine[-1], 2.0))
    tol = 1e-6
    c1 = critical_speed(logistic(), 2.0, tol=tol)
    c2 = critical_speed(logistic(), 2.0, tol=tol)
    c3 = critical_speed(logistic(), 2.0, tol=tol, rk_tol=1e-10 / 16)
    dc = abs(c1.c_star - c3.c_star)
    el = time.perf_counter() - t0
    ok = same and dz <= 2 * DX and c1.c_star == c2.c_star and dc <= tol
    return [
        Check(
            12,
            "determinism and refinement",
            ok,
            f"{len(match)} files bitwise identical: {same}; dx {DX:g} -> {DX / 2:g}: zeta+ moves {dz:.3f} "
            f"(pressure front {dzp:.3f}); c* repeat identical: {c1.c_star == c2.c_star}, rk_tol/16 moves it {dc:.1e}",
            el,
        )
    ]


JOBS = {
    "speed": job_speed,
    "profile": job_profile,
    "catalog": job_catalog,
    "solver": job_solver,
    "box": job_box,
    "class-a": job_class_a,
    "dichotomy": job_dichotomy,
    "barrier": job_barrier,
    "slow-wave": job_slow_wave,
    "refine": job_refine,
}


def run_job(name, workdir=None):
    return JOBS[name](workdir)


# jobs with a hard runtime limit run alone in the parent process
TIMED = ("speed", "profile", "catalog", "solver", "barrier", "slow-wave")


def run_suite(workers: int = 1, out_dir=None):
    """Run every job; returns the checks sorted by number.

    Timed jobs always run sequentially so their runtimes are not inflated
    by the pool; the rest go to ``workers`` processes.
    """
    names = list(JOBS)
    dirs = {}
    if out_dir is not None:
        for n in names:
            d = Path(out_dir) / n
            d.mkdir(parents=True, exist_ok=True)
            dirs[n] = str(d)
    results = [run_job(n, dirs.get(n)) for n in TIMED]
    rest = [n for n in names if n not in TIMED]
    if workers <= 1:
        results += [run_job(n, dirs.get(n)) for n in rest]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(run_job, n, dirs.get(n)) for n in rest]
            results += [f.result() for f in futs]
    checks = [c for r in results for c in r]
    return sorted(checks, key=lambda c: c.number)
