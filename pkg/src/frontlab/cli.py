"""Command-line front end.

    frontlab classify --reaction bistable:0.3 --m 2
    frontlab speed --reaction logistic --m 2 --tol 1e-4 --json
    frontlab profile --reaction logistic --m 2 -o profile.csv
    frontlab simulate --reaction logistic --m 2 --ic box:1,-5,5 --xmax 60 --dx 0.05 --tmax 40 --snap 10 -o run/
    frontlab barrier --type sub --reaction logistic --m 2 --f0 0.95 -o barrier/
    frontlab converge --reaction logistic --m 2 --ic box:1,-5,5 --xmax 150 --tmax 100 -o conv/
    frontlab hair-trigger --reaction power:6 --m 2 --delta0 1e-3 --tmax 6e4 --expect vanishing
    frontlab threshold --reaction bistable:0.3 --m 2 --eta 0.9 --rho 20
    frontlab all --suite desk --workers 4 -o suite/

Any option may also come from a flat ``key = value`` file given with
``--config``; flags on the command line win. Exit codes: 0 ok, 2 usage,
3 numeric failure, 4 failed acceptance check.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .csvio import emit_csv, fmt
from .errors import FrontlabError, UsageError

log = logging.getLogger("frontlab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4

COMMANDS = ("classify", "speed", "profile", "simulate", "barrier", "converge", "hair-trigger", "threshold", "all")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed number {text!r}") from None
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _real(text):
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed number {text!r}") from None


def _m_value(text):
    v = _real(text)
    if not v > 1.0:
        raise argparse.ArgumentTypeError(f"m must exceed 1, got {text!r}")
    return v


def _auto_or_positive(text):
    return "auto" if text == "auto" else _positive(text)


def _count(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed integer {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text!r}")
    return v


def _add_model(p, reaction=True):
    if reaction:
        p.add_argument("--reaction", required=True, help="logistic, power:<p>, bistable:<a>, combustion:<a>, fujita:<k>,<b>, table:<csv>")
        p.add_argument("--m", type=_m_value, required=True)
    p.add_argument("--N", type=_count, default=1, help="space dimension for radial geometry and the Fujita exponent")


def _add_grid(p, xmax=None, dx=0.05, tmax=None):
    p.add_argument("--xmin", type=_real, default=None, help="default -xmax (cartesian) or 0 (radial)")
    p.add_argument("--xmax", type=_positive, default=xmax, required=xmax is None)
    p.add_argument("--dx", type=_positive, default=dx)
    p.add_argument("--tmax", type=_positive, default=tmax, required=tmax is None)
    p.add_argument("--snap", type=_positive, default=None, help="snapshot interval (default tmax/10)")
    p.add_argument("--trace-every", type=_positive, default=None, help="trace interval (default snap/10)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="frontlab", description="Travelling fronts of u_t = Δu^m + h(u).")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="flat key = value file")
        p.add_argument("-o", "--out", default=None)
        return p

    p = cmd("classify", "reaction constants and hair-trigger flag")
    _add_model(p)

    p = cmd("speed", "critical wave speed by shooting")
    _add_model(p)
    p.add_argument("--tol", type=_positive, default=1e-6)
    p.add_argument("--json", action="store_true")

    p = cmd("profile", "finite travelling-wave profile (xi,v)")
    _add_model(p)
    p.add_argument("--tol", type=_positive, default=1e-6)
    p.add_argument("--eps-profile", type=_positive, default=1e-4)

    p = cmd("simulate", "evolve the PDE and track the free boundaries")
    _add_model(p)
    p.add_argument("--geometry", default="cartesian", help="cartesian or radial:<N>")
    p.add_argument("--ic", required=True, help="const:v, box:h,x0,x1, bump:delta[,c], plateau:eta,rho[,c], step:h,x0, file:path")
    _add_grid(p)

    p = cmd("barrier", "(f, g) sub/supersolution path and residual check")
    _add_model(p)
    p.add_argument("--type", choices=("sub", "super"), required=True)
    p.add_argument("--f0", type=_positive, default=None, help="default 0.95 (sub) or 1.05 (super)")
    p.add_argument("--g0", type=_real, default=0.0)
    p.add_argument("--kappa", type=_auto_or_positive, default="auto")
    p.add_argument("--k", type=_auto_or_positive, default="auto")
    p.add_argument("--tmax", type=_positive, default=50.0)

    p = cmd("converge", "speed, shifts and shape error against the wave")
    _add_model(p)
    p.add_argument("--ic", default="box:1,-5,5")
    _add_grid(p, xmax=150.0, tmax=100.0)
    p.add_argument("--speed-tol", type=_positive, default=0.02, help="relative")
    p.add_argument("--shape-tol", type=_positive, default=0.02)
    p.add_argument("--anchor", choices=("pressure", "threshold"), default="pressure")

    p = cmd("hair-trigger", "radial spreading/vanishing from a small bump")
    _add_model(p)
    p.add_argument("--delta0", type=_positive, required=True)
    p.add_argument("--tmax", type=_positive, default=400.0)
    p.add_argument("--dx", type=_positive, default=0.1)
    p.add_argument("--xmax", type=_positive, default=None)
    p.add_argument("--expect", choices=("spreading", "vanishing"), default=None)

    p = cmd("threshold", "plateau initial data above the threshold spreads")
    _add_model(p)
    p.add_argument("--eta", type=_positive, required=True)
    p.add_argument("--rho", type=_positive, required=True)
    p.add_argument("--c", type=_positive, default=None, help="sub-critical speed (default: largest c*/2^j with gamma_c < eta)")
    p.add_argument("--tmax", type=_positive, default=60.0)
    p.add_argument("--dx", type=_positive, default=0.05)
    p.add_argument("--xmax", type=_positive, default=None)
    p.add_argument("--snap", type=_positive, default=5.0)

    p = cmd("all", "acceptance suite")
    p.add_argument("--suite", choices=("desk",), default="desk")
    p.add_argument("--workers", type=_count, default=1)
    return ap


# -- configuration -----------------------------------------------------------


@dataclass
class RunConfig:
    command: str
    reaction: str | None
    m: float | None
    geometry: str
    options: dict = field(default_factory=dict)
    out: str | None = None
    deterministic: bool = True

    def resolved(self) -> list[tuple[str, str]]:
        # the output location is not part of the computation
        items = {"command": self.command, "reaction": self.reaction, "m": self.m, "geometry": self.geometry}
        items.update(self.options)
        return [(k, _show(v)) for k, v in sorted(items.items()) if v is not None]


def _show(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_config_file(path) -> list[tuple[str, str]]:
    """``key = value`` lines; '#' starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    pairs = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq or not key.strip():
            raise UsageError(f"{path}:{n}: expected 'key = value', got {raw.strip()!r}")
        pairs.append((key.strip(), value.strip()))
    return pairs


def _file_tokens(sub: argparse.ArgumentParser, pairs, path):
    """Turn config pairs into argv tokens, rejecting keys the command lacks."""
    opts = {}
    for a in sub._actions:
        for s in a.option_strings:
            if s.startswith("--"):
                opts[s[2:]] = a
                opts[s[2:].replace("-", "_")] = a
    toks = []
    for key, value in pairs:
        a = opts.get(key)
        if a is None or key in ("config", "help"):
            raise UsageError(f"{path}: unknown key {key!r} for '{sub.prog}'")
        flag = a.option_strings[-1]
        if a.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                toks.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"{path}: {key} expects true/false, got {value!r}")
        else:
            toks += [flag, value]
    return toks


def _config_path(argv):
    for i, a in enumerate(argv):
        if a == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def _subparser(ap, name):
    for a in ap._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[name]
    raise KeyError(name)


def parse_config(argv) -> tuple[RunConfig, argparse.Namespace]:
    """Parse argv (and an optional --config file) into a RunConfig.

    File values are applied first, so flags override them.
    """
    argv = list(argv)
    ap = build_parser()
    cmd_at = next((i for i, a in enumerate(argv) if a in COMMANDS), None)
    conf = _config_path(argv)
    if conf is not None and cmd_at is not None:
        sub = _subparser(ap, argv[cmd_at])
        toks = _file_tokens(sub, read_config_file(conf), conf)
        argv = argv[: cmd_at + 1] + toks + argv[cmd_at + 1 :]
    ns = ap.parse_args(argv)
    opts = {k: v for k, v in vars(ns).items() if k not in ("command", "reaction", "m", "geometry", "out", "config", "verbose")}
    geometry = getattr(ns, "geometry", "cartesian")
    if ns.command == "simulate":
        geometry = _check_geometry(geometry)
    if getattr(ns, "reaction", None) is not None:
        _check_reaction(ns.reaction, ns.m, getattr(ns, "N", 1))
    cfg = RunConfig(ns.command, getattr(ns, "reaction", None), getattr(ns, "m", None), geometry, opts, ns.out)
    return cfg, ns


def _check_geometry(text):
    if text == "cartesian":
        return text
    name, _, n = text.partition(":")
    if name == "radial":
        try:
            if int(n or "1") >= 1:
                return f"radial:{int(n or '1')}"
        except ValueError:
            pass
    raise UsageError(f"bad geometry {text!r}: expected cartesian or radial:<N>")


def _check_reaction(text, m, N):
    from .reaction import parse_reaction

    try:
        parse_reaction(text, m, N)
    except FrontlabError as exc:
        raise UsageError(f"--reaction {text!r}: {exc}") from exc


def write_resolved(cfg: RunConfig, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / "resolved_config.txt"
    with open(path, "w") as fh:
        for k, v in cfg.resolved():
            fh.write(f"{k} = {v}\n")
    return path


# -- commands ----------------------------------------------------------------


def _spec(cfg):
    from .reaction import parse_reaction

    return parse_reaction(cfg.reaction, cfg.m, cfg.options.get("N", 1))


def _outdir(cfg, default="."):
    d = Path(cfg.out or default)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_classify(cfg):
    from .reaction import classify

    write_resolved(cfg, _outdir(cfg))
    c = classify(_spec(cfg), cfg.m, cfg.options["N"])
    print(f"reaction {cfg.reaction}, m={fmt(cfg.m)}, N={cfg.options['N']}")
    for name in ("a", "hosono", "sigma", "fujita_exponent", "hair_trigger", "delta_stable", "h_prime_at_1", "heuristic"):
        print(f"  {name}: {_show(getattr(c, name))}")
    return EXIT_OK


def cmd_speed(cfg):
    from .phaseplane import critical_speed

    write_resolved(cfg, _outdir(cfg))
    r = critical_speed(_spec(cfg), cfg.m, tol=cfg.options["tol"], N=cfg.options["N"])
    if cfg.options["json"]:
        rec = {"c_star": r.c_star, "bracket": list(r.bracket), "sigma_bound": r.sigma_bound, "iterations": r.iterations}
        print(json.dumps(rec))
    else:
        print(f"c_star {fmt(r.c_star)}")
        print(f"bracket {fmt(r.bracket[0])} {fmt(r.bracket[1])}")
        print(f"sigma_bound {fmt(r.sigma_bound)}")
        print(f"iterations {r.iterations}")
    return EXIT_OK


def cmd_profile(cfg):
    from .phaseplane import critical_speed, wave_trajectory
    from .waveprofile import front_pressure_slope, reconstruct_profile, write_profile_csv

    path = Path(cfg.out or "profile.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_resolved(cfg, path.parent)
    spec = _spec(cfg)
    c = critical_speed(spec, cfg.m, tol=cfg.options["tol"], N=cfg.options["N"]).c_star
    prof = reconstruct_profile(wave_trajectory(spec, cfg.m, c), eps_profile=cfg.options["eps_profile"])
    write_profile_csv(prof, path)
    print(f"c_star {fmt(c)}; xi_min {fmt(prof.xi_min)}; front pressure slope {fmt(front_pressure_slope(prof))}")
    print(f"wrote {path}")
    return EXIT_OK


def _grid(cfg, geometry="cartesian"):
    from .pde import Geometry, GridSpec

    o = cfg.options
    dx, xmax = o["dx"], o["xmax"]
    if geometry.startswith("radial"):
        if o.get("xmin") not in (None, 0.0):
            raise UsageError("radial grids start at r = 0")
        return GridSpec(0.0, xmax, dx, Geometry.RADIAL, int(geometry.partition(":")[2] or 1))
    xmin = -xmax if o.get("xmin") is None else o["xmin"]
    return GridSpec(xmin, xmax, dx)


def _intervals(cfg):
    o = cfg.options
    snap = o.get("snap") or o["tmax"] / 10.0
    trace = o.get("trace_every") or snap / 10.0
    return snap, trace


def write_trace(trace, path):
    emit_csv(path, ["t", "zeta_minus", "zeta_plus", "sup_u", "mass"], trace.rows())


def write_snapshot(field_, path):
    emit_csv(path, ["x", "u"], zip(field_.grid.x, field_.u), comment=f"t={fmt(field_.t)}")


def cmd_simulate(cfg):
    from .pde import parse_ic, run

    out = _outdir(cfg, "run")
    write_resolved(cfg, out)
    spec = _spec(cfg)
    grid = _grid(cfg, cfg.geometry)
    snap, every = _intervals(cfg)
    snaps, trace = run(grid, parse_ic(cfg.options["ic"]), spec, cfg.m, cfg.options["tmax"], snapshot_every=snap, trace_every=every)
    write_trace(trace, out / "trace.csv")
    for k, f in enumerate(snaps):
        write_snapshot(f, out / f"snap_{k:04d}.csv")
    last = trace.samples[-1]
    print(f"t={fmt(last.t)} zeta=({fmt(last.zeta_minus)}, {fmt(last.zeta_plus)}) sup_u={fmt(last.sup_u)} mass={fmt(last.mass)}")
    print(f"wrote {len(snaps)} snapshots and trace.csv to {out}")
    return EXIT_OK


def cmd_barrier(cfg):
    from .barriers import auto_config, choose_k, integrate_fg, residual_sign_check
    from .phaseplane import critical_speed, wave_trajectory
    from .waveprofile import reconstruct_profile

    o = cfg.options
    out = _outdir(cfg, "barrier")
    write_resolved(cfg, out)
    spec = _spec(cfg)
    f0 = o["f0"] if o["f0"] is not None else (0.95 if o["type"] == "sub" else 1.05)
    if (o["type"] == "sub") != (f0 < 1.0):
        raise UsageError(f"--type {o['type']} needs f0 {'< 1' if o['type'] == 'sub' else '> 1'}, got {f0}")
    c = critical_speed(spec, cfg.m, N=o["N"]).c_star
    prof = reconstruct_profile(wave_trajectory(spec, cfg.m, c))
    kappa = None if o["kappa"] == "auto" else o["kappa"]
    cfg_b = auto_config(spec, cfg.m, c, f0, g0=o["g0"], kappa=kappa)
    k = choose_k(cfg_b, prof, spec) if o["k"] == "auto" else o["k"]
    cfg_b = auto_config(spec, cfg.m, c, f0, g0=o["g0"], kappa=cfg_b.kappa, k=k)
    rep = residual_sign_check(cfg_b, prof, spec)
    path = integrate_fg(cfg_b, o["tmax"])
    emit_csv(out / "barrier.csv", ["t", "f", "g", "g_minus_ct"], path.rows()[:: max(1, len(path.t) // 2000)])
    lines = [
        ("kind", rep.kind),
        ("c_star", c),
        ("k", k),
        ("kappa", cfg_b.kappa),
        ("delta", cfg_b.delta),
        ("residual_max_violation", rep.max_violation),
        ("residual_worst_f", rep.worst_f),
        ("residual_worst_v", rep.worst_v),
        ("residual_passed", rep.passed),
        ("xi_limit", path.xi_limit),
        ("k_prime", path.k_prime),
        ("k_prime_ok", path.k_prime_ok),
    ]
    emit_csv(out / "residual.csv", ["metric", "value"], lines)
    for name, v in lines:
        print(f"{name}: {_show(v)}")
    return EXIT_OK if rep.passed and path.k_prime_ok else EXIT_CHECK


def _report(out, rows, checks):
    emit_csv(out / "report.csv", ["metric", "t", "value"], rows + [(f"check:{n}", math.nan, int(ok)) for n, ok, _ in checks])
    for n, ok, msg in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {n}: {msg}")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_CHECK


def cmd_converge(cfg):
    from .experiments import Verdict, convergence_report
    from .pde import ICKind, parse_ic, run
    from .phaseplane import critical_speed, wave_trajectory
    from .waveprofile import reconstruct_profile

    o = cfg.options
    out = _outdir(cfg, "converge")
    write_resolved(cfg, out)
    spec = _spec(cfg)
    ic = parse_ic(o["ic"])
    c = critical_speed(spec, cfg.m, N=o["N"]).c_star
    prof = reconstruct_profile(wave_trajectory(spec, cfg.m, c))
    grid = _grid(cfg)
    snap, every = _intervals(cfg)
    snaps, trace = run(grid, ic, spec, cfg.m, o["tmax"], snapshot_every=snap, trace_every=every)
    one_sided = ic.kind is ICKind.STEP
    rep = convergence_report(snaps, trace, prof, c, region="all" if one_sided else "half", anchor=o["anchor"])
    t_end = o["tmax"]
    rows = [("c_star", math.nan, c), ("xi_plus", t_end, rep.xi_plus), ("xi_minus", t_end, rep.xi_minus)]
    rows += [("shape_error_plus", t, e) for t, e in rep.shape_error]
    rows += [("shape_error_minus", t, e) for t, e in rep.shape_error_minus]
    rows += [("front_error", t, e) for t, e in rep.front_error]
    speed = rep.speed_measured
    speed_ok = not isinstance(speed, Verdict) and abs(speed - c) <= o["speed_tol"] * c
    rows.append(("speed_measured", t_end, math.nan if isinstance(speed, Verdict) else speed))
    checks = [
        ("speed", speed_ok, f"late-window speed {_show(speed)} vs c*={c:.6g}"),
        ("shape_plus", rep.final_shape_error("plus") <= o["shape_tol"], f"final shape error {rep.final_shape_error('plus'):.3g}"),
    ]
    if not one_sided:
        checks.append(("shape_minus", rep.final_shape_error("minus") <= o["shape_tol"], f"final shape error {rep.final_shape_error('minus'):.3g}"))
        if ic.kind.value == "box" and abs(ic.params[1] + ic.params[2]) < 1e-12:
            gap = abs(rep.xi_plus - rep.xi_minus)
            checks.append(("symmetry", gap <= 2 * grid.dx, f"|xi+ - xi-| = {gap:.3g}"))
    return _report(out, rows, checks)


def cmd_hair_trigger(cfg):
    from .experiments import hair_trigger_experiment

    o = cfg.options
    out = _outdir(cfg, "hair-trigger")
    write_resolved(cfg, out)
    r = hair_trigger_experiment(_spec(cfg), cfg.m, o["N"], o["delta0"], t_max=o["tmax"], x_max=o["xmax"], dx=o["dx"])
    rows = [("sup_u", s.t, s.sup_u) for s in r.trace.samples]
    rows += [("u_center", r.t_final, r.u_center), (f"verdict:{r.verdict.value}", r.t_final, 1)]
    ok = r.verdict.value != "undecided" if o["expect"] is None else r.verdict.value == o["expect"]
    want = o["expect"] or "a decided verdict"
    checks = [("verdict", ok, f"{r.verdict.value} at t={fmt(r.t_final)} (u(0)={r.u_center:.3g}, sup u={r.sup_u:.3g}); expected {want}")]
    return _report(out, rows, checks)


def cmd_threshold(cfg):
    from .experiments import Verdict, threshold_experiment

    o = cfg.options
    out = _outdir(cfg, "threshold")
    write_resolved(cfg, out)
    r = threshold_experiment(
        _spec(cfg), cfg.m, o["N"], o["eta"], o["rho"], c=o["c"], t_max=o["tmax"], dx=o["dx"], x_max=o["xmax"], snapshot_every=o["snap"]
    )
    rows = [("zeta_plus", s.t, s.zeta_plus) for s in r.trace.samples]
    rows += [("c", math.nan, r.c), ("gamma_c", math.nan, r.gamma), ("worst_margin", math.nan, r.worst_margin)]
    checks = [
        ("spreading", r.verdict is Verdict.SPREADING, f"verdict {r.verdict.value}"),
        ("growing_ball", r.ball_ok, f"min over ball of u - (eta - 0.02) = {r.worst_margin:.3g} (c={r.c:.4g}, gamma_c={r.gamma:.4g})"),
    ]
    return _report(out, rows, checks)


def cmd_all(cfg):
    from .suite import run_suite

    out = _outdir(cfg, "suite")
    write_resolved(cfg, out)
    checks = run_suite(workers=cfg.options["workers"], out_dir=out)
    emit_csv(out / "suite.csv", ["number", "title", "passed", "seconds", "detail"], [(c.number, c.title, c.passed, c.seconds, c.detail) for c in checks])
    for c in checks:
        print(c.line())
    n_ok = sum(c.passed for c in checks)
    print(f"{n_ok}/{len(checks)} checks passed")
    return EXIT_OK if n_ok == len(checks) else EXIT_CHECK


HANDLERS = {
    "classify": cmd_classify,
    "speed": cmd_speed,
    "profile": cmd_profile,
    "simulate": cmd_simulate,
    "barrier": cmd_barrier,
    "converge": cmd_converge,
    "hair-trigger": cmd_hair_trigger,
    "threshold": cmd_threshold,
    "all": cmd_all,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, ns = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FrontlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry():
    sys.exit(main())
