"""Command-line front end: plot-ready datasets as CSV plus a run manifest.

Every command writes its main CSV to ``--out``, companion CSVs next to it
(``<stem>.<tag>.csv``) and ``<stem>.manifest.json``.  Exit status is 0 on
success, 2 for invalid parameters and 3 when a numerical subtask fails to
converge; the manifest names the failing subtask.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .action import critical_merge_level, find_wrinkles, trace_action_contour, unwrapped_phase, level_to_phase
from .coords import PhysicalParams, ProlatePoint, rho_z_from_xi_eta
from .errors import ConvergenceError, DomainError, SingularityError
from .io import companion_path, file_digest, write_csv, write_manifest
from .kinematics import (
    LOCUS_CONTROLS,
    default_family,
    direction_flips,
    locus_from_trajectories,
    refine_cuts,
    tertiary_foci,
    trace_family,
    trajectory_times,
)
from .trajectory import MotionConstant, TraceControls, destructive_etas, trace_trajectory
from .wavefield import erasure_fields, psi_point_source

__all__ = ["RunConfig", "build_parser", "parse_args", "run", "main"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3

COMMANDS = ("contours", "trajectory", "trajectories", "loci", "erasure-check", "params")

CONTOUR_COLUMNS = ("level_value", "level_unit", "branch_id", "vertex_index", "xi", "eta", "rho", "z", "residual")
WRINKLE_COLUMNS = ("level_value", "level_unit", "k", "a", "n", "eta_wrinkle", "predicted_eta")
TRACE_COLUMNS = ("source", "eta_a", "zero_sign", "sample_index", "xi", "eta", "sigma", "rho", "z", "arclength",
                 "residual", "t", "t_xi", "direction")
TURNING_COLUMNS = ("source", "eta_a", "zero_sign", "kind", "xi", "eta", "sigma", "sample_index")
LOCUS_COLUMNS = ("t_target", "source", "eta_a", "xi", "eta", "rho", "z")
CUT_COLUMNS = ("t_target", "eta_gap_lo", "eta_gap_hi")
ERASURE_COLUMNS = ("xi", "eta", "region", "abs_error", "rel_error")


@dataclass
class RunConfig:
    """Validated settings of one run."""

    command: str
    params: PhysicalParams
    out: Optional[str]
    tol: Optional[float] = None
    max_iter: Optional[int] = None
    workers: int = 1
    options: Dict[str, object] = field(default_factory=dict)

    def echo(self) -> dict:
        # the worker count is left out: it must not change any output byte
        return {
            "command": self.command,
            "params": {"mass": self.params.m, "hbar": self.params.hbar, "a": self.params.a, "k": self.params.k,
                       "E": self.params.E, "ka": self.params.ka},
            "out": self.out,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "options": dict(self.options),
        }


# ---------------------------------------------------------------- parsing


def _positive(name):
    def conv(s):
        v = float(s)
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{name} must be positive and finite, got {s!r}")
        return v

    return conv


def _pos_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("physical parameters")
    g.add_argument("--k", type=_positive("k"), default=15.2, help="wave number (default 15.2)")
    g.add_argument("--a", type=_positive("a"), default=1.0, help="source separation (default 1)")
    g.add_argument("--mass", type=_positive("mass"), default=1.0, help="particle mass (default 1)")
    g.add_argument("--hbar", type=_positive("hbar"), default=1.0, help="reduced Planck constant (default 1)")
    r = common.add_argument_group("run")
    r.add_argument("--out", help="main CSV path; companions and the manifest go next to it")
    r.add_argument("--tol", type=_positive("tol"), default=None, help="solver tolerance override")
    r.add_argument("--max-iter", type=_pos_int, default=None, help="solver iteration cap override")
    r.add_argument("--workers", type=_pos_int, default=1, help="worker processes for independent subtasks")
    r.add_argument("--config", help="JSON file with the same keys as the flags; flags win")

    p = argparse.ArgumentParser(prog="dispherical", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("contours", parents=[common], help="reduced-action contours and wrinkles")
    lv = c.add_mutually_exclusive_group()
    lv.add_argument("--levels-h", help="levels in units of h: start:step:stop or a comma list")
    lv.add_argument("--levels-hbar", help="levels in units of hbar: start:step:stop or a comma list")
    c.add_argument("--window", default="1:6,0:1", help="xi0:xi1,eta0:eta1 (default 1:6,0:1)")
    c.add_argument("--step", type=_positive("step"), default=0.01, help="marching step (default 0.01)")
    c.add_argument("--merge", action="store_true", help="also locate the level at which the contours merge")

    t = sub.add_parser("trajectory", parents=[common], help="one trajectory with turning points and times")
    t.add_argument("--source", default="upper", choices=("upper", "lower"))
    t.add_argument("--eta-a", required=False, help="constant of the motion; +0 and -0 select the limits")
    t.add_argument("--xi-max", type=_positive("xi-max"), default=50.0, help="outer tracing radius (default 50)")
    t.add_argument("--step", type=_positive("step"), default=1e-3, help="nominal arclength step (default 1e-3)")

    ts = sub.add_parser("trajectories", parents=[common], help="a set of trajectories")
    ts.add_argument("--source", default="upper", choices=("upper", "lower", "both"))
    ts.add_argument("--eta-a", help="comma list of constants (+0 and -0 allowed)")
    ts.add_argument("--family", type=_pos_int, help="instead, N constants uniform in arcsin(eta_a)")
    ts.add_argument("--xi-max", type=_positive("xi-max"), default=50.0)
    ts.add_argument("--step", type=_positive("step"), default=1e-3)
    ts.add_argument("--coarse", action="store_true", help="use the coarse family settings")

    lo = sub.add_parser("loci", parents=[common], help="loci of equal transit time")
    lo.add_argument("--times", default="0,0.002,0.02,0.04,0.06", help="comma list of times")
    lo.add_argument("--family", type=_pos_int, default=721, help="family size per source (default 721)")
    lo.add_argument("--source", default="both", choices=("upper", "lower", "both"))
    lo.add_argument("--no-refine", action="store_true", help="report raw spacing gaps as cuts")

    e = sub.add_parser("erasure-check", parents=[common], help="check the erasure recombination on a grid")
    e.add_argument("--grid", type=_pos_int, default=100, help="points per axis (default 100)")
    e.add_argument("--window", default="1.01:3,-0.99:0.99", help="xi0:xi1,eta0:eta1")

    sub.add_parser("params", parents=[common], help="derived constants of a setup")
    p._subs = {"contours": c, "trajectory": t, "trajectories": ts, "loci": lo, "erasure-check": e}
    p._subs["params"] = sub.choices["params"]
    return p


def _config_defaults(parser, command, path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DomainError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(data, dict):
        raise DomainError("config must be a JSON object")
    sp = parser._subs[command]
    dests = {a.dest for a in sp._actions}
    out = {}
    for key, val in data.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest == "command":
            continue
        if dest not in dests or dest in ("help", "config"):
            raise DomainError(f"unknown config key {key!r} for {command}")
        out[dest] = val
    return out


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = parser._subs[args.command]
        sp.set_defaults(**_config_defaults(parser, args.command, args.config))
        args = parser.parse_args(argv)
        # string defaults from the file go through the flag converters; others are checked here
        for act in sp._actions:
            v = getattr(args, act.dest, None)
            if act.type is not None and v is not None and not isinstance(v, str):
                try:
                    setattr(args, act.dest, act.type(str(v)))
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise DomainError(f"--{act.dest.replace('_', '-')}: {exc}") from None
    return args


def parse_levels(text: str) -> List[float]:
    """``"0.5:0.5:5"`` (inclusive) or ``"1,2,3"``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError(f"levels must be start:step:stop, got {text!r}")
        a, s, b = (float(x) for x in parts)
        if not s > 0 or b < a:
            raise DomainError(f"bad level range {text!r}")
        n = int(math.floor((b - a) / s + 1e-9)) + 1
        return [round(a + i * s, 12) for i in range(n)]
    vals = [float(x) for x in text.split(",") if x.strip()]
    if not vals:
        raise DomainError("no levels given")
    return vals


def parse_window(text: str):
    """``"xi0:xi1,eta0:eta1"`` to ``((xi0, xi1), (eta0, eta1))``."""
    try:
        xs, es = text.split(",")
        x0, x1 = (float(v) for v in xs.split(":"))
        e0, e1 = (float(v) for v in es.split(":"))
    except ValueError:
        raise DomainError(f"window must be xi0:xi1,eta0:eta1, got {text!r}") from None
    if not (1.0 <= x0 < x1 and -1.0 <= e0 < e1 <= 1.0):
        raise DomainError(f"invalid window {text!r}")
    return (x0, x1), (e0, e1)


def parse_constants(text: str) -> List[MotionConstant]:
    return [MotionConstant.parse(tok.strip()) for tok in text.split(",") if tok.strip()]


def parse_times(text: str) -> List[float]:
    vals = sorted({float(x) for x in text.split(",") if x.strip()})
    if not vals:
        raise DomainError("no times given")
    if vals[0] < 0 or not all(math.isfinite(v) for v in vals):
        raise DomainError("times must be finite and >= 0")
    return vals


def config_from_args(args: argparse.Namespace) -> RunConfig:
    params = PhysicalParams(m=args.mass, hbar=args.hbar, a=args.a, k=args.k)
    skip = {"command", "k", "a", "mass", "hbar", "out", "tol", "max_iter", "workers", "config"}
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg = RunConfig(args.command, params, args.out, args.tol, args.max_iter, args.workers, opts)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Check every override before any work starts; raises DomainError."""
    o = cfg.options
    if cfg.command != "params" and not cfg.out:
        raise DomainError(f"{cfg.command} needs --out")
    if cfg.command == "contours":
        if not (o.get("levels_h") or o.get("levels_hbar")):
            o["levels_h"] = "0.5:0.5:5.0"
        parse_levels(o.get("levels_h") or o.get("levels_hbar"))
        parse_window(o["window"])
    elif cfg.command == "trajectory":
        if o.get("eta_a") is None:
            raise DomainError("trajectory needs --eta-a")
        MotionConstant.parse(str(o["eta_a"]))
    elif cfg.command == "trajectories":
        if (o.get("eta_a") is None) == (o.get("family") is None):
            raise DomainError("trajectories needs exactly one of --eta-a and --family")
        if o.get("eta_a") is not None:
            parse_constants(str(o["eta_a"]))
        elif o["family"] < 2:
            raise DomainError("a family needs at least two members")
    elif cfg.command == "loci":
        parse_times(str(o["times"]))
        if o["family"] < 2:
            raise DomainError("a family needs at least two members")
    elif cfg.command == "erasure-check":
        parse_window(o["window"])
        if o["grid"] < 2:
            raise DomainError("the grid needs at least two points per axis")


# ---------------------------------------------------------------- subtasks


def _pool_map(fn: Callable, jobs: Sequence, workers: int, initializer=None, initargs=()):
    """Ordered map; identical results whatever the worker count."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs)), initializer=initializer,
                                 initargs=initargs) as ex:
            return list(ex.map(fn, jobs))
    if initializer is not None:
        initializer(*initargs)
    return [fn(j) for j in jobs]


def _guard(fn, job, label):
    try:
        return {"ok": True, "value": fn(job)}
    except ConvergenceError as exc:
        return {"ok": False, "task": label, "error": str(exc)}


def _contour_job(job):
    level, unit, window, step, params = job

    def work(_):
        c = trace_action_contour(level, window, step, params, unit=unit)
        wr = find_wrinkles(c, params) if not c.empty else []
        return c, wr

    return _guard(work, None, f"contour {unit} level {level!r}")


def _trace_controls(cfg: RunConfig, coarse=False) -> TraceControls:
    o = cfg.options
    kw = dict(LOCUS_CONTROLS.__dict__) if coarse else {"step": o["step"], "xi_max": o["xi_max"]}
    if cfg.tol is not None:
        kw["rtol"] = cfg.tol
    if cfg.max_iter is not None:
        kw["max_iter"] = cfg.max_iter
    return TraceControls(**kw)


def _trajectory_job(job):
    src, tok, params, ctl = job
    return _guard(lambda _: trace_trajectory(src, MotionConstant.parse(tok), params, ctl), None,
                  f"trajectory {src} eta_a={tok}")


_FAMILY = None


def _set_family(trs):
    global _FAMILY
    _FAMILY = trs


def _locus_job(job):
    t, params, sources, refine, ctl = job

    def work(_):
        loc = locus_from_trajectories(_FAMILY, t, params)
        if refine:
            loc = refine_cuts(loc, params, sources, ctl)
        return loc

    return _guard(work, None, f"locus t={t!r}")


# ---------------------------------------------------------------- commands


def _header(cfg: RunConfig, what: str) -> dict:
    p = cfg.params
    return {"tool": f"dispherical {__version__}", "dataset": what, "command": cfg.command,
            "mass": p.m, "hbar": p.hbar, "a": p.a, "k": p.k}


def _trace_rows(tr, params):
    t, t_xi = trajectory_times(tr, params)
    res = tr.residuals()
    xi, eta, sg = tr.xi, tr.eta, tr.sigma
    dt = np.diff(t)
    fwd = np.append(dt, dt[-1] if len(dt) else 0.0) >= 0.0
    mc = tr.constant
    ea = -0.0 if mc.zero_sign == "-" else mc.eta_a
    for i in range(len(tr)):
        yield (tr.source, ea, mc.zero_sign or "", i, xi[i], eta[i], sg[i], abs(tr.x[i]), tr.z[i], tr.s[i],
               res[i], t[i], "" if t_xi is None else t_xi[i], "forward" if fwd[i] else "retrograde")


def _turning_rows(tr):
    mc = tr.constant
    ea = -0.0 if mc.zero_sign == "-" else mc.eta_a
    for tp in tr.turning_points:
        yield (tr.source, ea, mc.zero_sign or "", tp.kind, tp.xi, tp.eta, tp.sigma, tp.index)


def _trace_diag(tr, params):
    t, t_xi = trajectory_times(tr, params)
    d = {"source": tr.source, "eta_a": tr.constant.token, "classification": tr.classification, "end": tr.end,
         "samples": len(tr), "junctions": len(tr.junctions), "turning_points": len(tr.turning_points),
         "max_relative_residual": float(np.max(tr.residuals())), "direction_flips": len(direction_flips(tr, params))}
    if t_xi is not None:
        diff = np.abs(np.asarray(t) - np.asarray(t_xi))
        # the two projected times are exported side by side; record where they part
        d["t_vs_t_xi_max_abs_diff"] = float(np.max(diff))
        d["t_vs_t_xi_samples_over_1e-6"] = int(np.sum(diff > 1e-6))
    return d


def cmd_contours(cfg: RunConfig, manifest: dict) -> int:
    o = cfg.options
    unit = "h" if o.get("levels_h") else "hbar"
    levels = parse_levels(o.get("levels_h") or o.get("levels_hbar"))
    window = parse_window(o["window"])
    p = cfg.params
    jobs = [(lv, unit, window, o["step"], p) for lv in levels]
    manifest["effective"] = {"levels": levels, "unit": unit, "window": [list(window[0]), list(window[1])],
                             "vertex_tol_phase": 1e-10, "wrinkle_merge_tol": 2e-3,
                             "merge_tol": cfg.tol if cfg.tol is not None else 1e-6}
    results = _pool_map(_contour_job, jobs, cfg.workers)
    rows, wrows, diags, failed = [], [], [], []
    stars = destructive_etas(p)
    for lv, r in zip(levels, results):
        if not r["ok"]:
            failed.append(r)
            continue
        c, wr = r["value"]
        target = level_to_phase(lv, unit, p)
        worst = 0.0
        for b, br in enumerate(c.branches):
            for j, (xi, eta) in enumerate(br):
                rho, z = rho_z_from_xi_eta(xi, eta, p.a)
                res = float(unwrapped_phase(xi, eta, p.ka) - target)
                worst = max(worst, abs(res))
                rows.append((lv, unit, b, j, xi, eta, abs(rho), z, res))
        for w in wr:
            n = int(round((abs(w) * p.ka / math.pi + 1.0) / 2.0))
            wrows.append((lv, unit, p.k, p.a, n, w, math.copysign((2 * n - 1) * math.pi / p.ka, w)))
        diags.append({"task": f"level {lv!r}", "branches": len(c.branches), "topology": c.topology,
                      "vertices": int(sum(len(b) for b in c.branches)), "max_abs_residual": worst,
                      "wrinkles": list(wr)})
    hdr = _header(cfg, "reduced-action contours")
    hdr["window"] = o["window"]
    write_csv(cfg.out, CONTOUR_COLUMNS, rows, hdr)
    wpath = companion_path(cfg.out, "wrinkles")
    write_csv(wpath, WRINKLE_COLUMNS, wrows, {**_header(cfg, "wrinkle report"),
                                              "destructive_etas": " ".join(repr(s) for s in stars)})
    manifest["outputs"] = [str(cfg.out), str(wpath)]
    manifest["diagnostics"] = diags
    if o.get("merge") and not failed:
        try:
            tol = cfg.tol if cfg.tol is not None else 1e-6
            mv = critical_merge_level(window, p, tol=tol)
            manifest["merge_level"] = {"hbar": mv.unwrapped / p.hbar,
                                       "h": mv.unwrapped_h, "expected_ka_over_2_minus_2pi": p.ka / 2 - 2 * math.pi}
        except ConvergenceError as exc:
            failed.append({"ok": False, "task": "merge level", "error": str(exc)})
    if failed:
        manifest["failed"] = failed
        return EXIT_NONCONVERGED
    return EXIT_OK


def _write_traces(cfg, manifest, trs, failed, what):
    p = cfg.params
    rows, trows = [], []
    for tr in trs:
        rows.extend(_trace_rows(tr, p))
        trows.extend(_turning_rows(tr))
    write_csv(cfg.out, TRACE_COLUMNS, rows, _header(cfg, what))
    tpath = companion_path(cfg.out, "turning")
    write_csv(tpath, TURNING_COLUMNS, trows, _header(cfg, "turning points"))
    manifest["outputs"] = [str(cfg.out), str(tpath)]
    manifest["diagnostics"] = [_trace_diag(tr, p) for tr in trs]
    if failed:
        manifest["failed"] = failed
        return EXIT_NONCONVERGED
    return EXIT_OK


def _sort_traces(trs):
    return sorted(trs, key=lambda t: (t.source, t.constant.eta_a, t.constant.zero_sign or ""))


def cmd_trajectory(cfg: RunConfig, manifest: dict) -> int:
    o = cfg.options
    mc = MotionConstant.parse(str(o["eta_a"]))
    ctl = _trace_controls(cfg)
    manifest["effective"] = {"trace_controls": dict(ctl.__dict__)}
    r = _trajectory_job((o["source"], mc.token, cfg.params, ctl))
    trs, failed = ([r["value"]], []) if r["ok"] else ([], [r])
    return _write_traces(cfg, manifest, trs, failed, "trajectory")


def cmd_trajectories(cfg: RunConfig, manifest: dict) -> int:
    o = cfg.options
    fam = parse_constants(str(o["eta_a"])) if o.get("eta_a") is not None else default_family(o["family"])
    srcs = ("upper", "lower") if o["source"] == "both" else (o["source"],)
    ctl = _trace_controls(cfg, coarse=o.get("coarse", False))
    manifest["effective"] = {"trace_controls": dict(ctl.__dict__), "constants": [m.token for m in fam]}
    jobs = [(s, m.token, cfg.params, ctl) for s in srcs for m in fam]
    results = _pool_map(_trajectory_job, jobs, cfg.workers)
    trs = _sort_traces([r["value"] for r in results if r["ok"]])
    failed = [r for r in results if not r["ok"]]
    return _write_traces(cfg, manifest, trs, failed, "trajectories")


def cmd_loci(cfg: RunConfig, manifest: dict) -> int:
    o = cfg.options
    p = cfg.params
    times = parse_times(str(o["times"]))
    ctl = _trace_controls(cfg, coarse=True)
    fam = default_family(o["family"])
    manifest["effective"] = {"trace_controls": dict(ctl.__dict__), "cut_factor": 3.0, "cut_window": 10,
                             "times": times}
    try:
        trs = trace_family(fam, p, o["source"], ctl, workers=cfg.workers)
    except ConvergenceError as exc:
        manifest["failed"] = [{"ok": False, "task": "family", "error": str(exc)}]
        return EXIT_NONCONVERGED
    jobs = [(t, p, o["source"], not o.get("no_refine", False), ctl) for t in times]
    results = _pool_map(_locus_job, jobs, cfg.workers, initializer=_set_family, initargs=(trs,))
    rows, crows, diags, failed = [], [], [], []
    for t, r in zip(times, results):
        if not r["ok"]:
            failed.append(r)
            continue
        loc = r["value"]
        for q in loc.points:
            rho, z = rho_z_from_xi_eta(q.point.xi, q.point.eta, p.a)
            mc = MotionConstant.parse(q.eta_a)
            ea = -0.0 if mc.zero_sign == "-" else mc.eta_a
            rows.append((t, q.source, ea, q.point.xi, q.point.eta, abs(rho), z))
        crows.extend((t, lo, hi) for lo, hi in loc.cuts)
        diags.append({"task": f"t={t!r}", "points": len(loc.points), "cuts": len(loc.cuts),
                      "max_time_error": loc.max_time_error, "failed_crossings": loc.failures})
    hdr = _header(cfg, "transit-time loci")
    hdr["family"] = o["family"]
    write_csv(cfg.out, LOCUS_COLUMNS, rows, hdr)
    cpath = companion_path(cfg.out, "cuts")
    write_csv(cpath, CUT_COLUMNS, crows, _header(cfg, "locus cuts"))
    manifest["outputs"] = [str(cfg.out), str(cpath)]
    manifest["diagnostics"] = diags
    manifest["family_members"] = len(trs)
    manifest["family_truncated"] = sum(1 for t in trs if t.end == "truncated")
    if failed:
        manifest["failed"] = failed
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_erasure(cfg: RunConfig, manifest: dict) -> int:
    o = cfg.options
    p = cfg.params
    (x0, x1), (e0, e1) = parse_window(o["window"])
    n = o["grid"]
    rows = []
    worst = 0.0
    for xi in np.linspace(x0, x1, n):
        for eta in np.linspace(e0, e1, n):
            q = ProlatePoint(float(xi), float(eta))
            try:
                f = erasure_fields(q, p)
            except SingularityError:
                continue
            if f.hemisphere == "lower":
                want = math.sqrt(2.0) * psi_point_source(q, 1, p).value
            else:
                want = -math.sqrt(2.0) * psi_point_source(q, 2, p).value
            err = abs(f.combined.value - want)
            rows.append((float(xi), float(eta), f.hemisphere, err, err / abs(want)))
            worst = max(worst, err / abs(want))
    write_csv(cfg.out, ERASURE_COLUMNS, rows, _header(cfg, "erasure identity check"))
    tol = cfg.tol if cfg.tol is not None else 1e-12
    manifest["effective"] = {"grid": n, "window": [[x0, x1], [e0, e1]], "tol": tol}
    manifest["outputs"] = [str(cfg.out)]
    manifest["diagnostics"] = [{"task": "erasure grid", "points": len(rows), "max_rel_error": worst, "tol": tol,
                                "passed": worst <= tol}]
    if worst > tol:
        manifest["failed"] = [{"ok": False, "task": "erasure grid", "error": f"max relative error {worst!r}"}]
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_params(cfg: RunConfig, manifest: dict) -> int:
    p = cfg.params
    rows = [("mass", p.m), ("hbar", p.hbar), ("a", p.a), ("k", p.k), ("E", p.E), ("ka", p.ka),
            ("h", p.h), ("merge_level_hbar", p.ka / 2 - 2 * math.pi)]
    rows += [("destructive_eta", e) for e in destructive_etas(p)]
    rows += [("tertiary_focus_eta", q.eta) for q in tertiary_foci(p)]
    if cfg.out:
        write_csv(cfg.out, ("name", "value"), rows, _header(cfg, "derived constants"))
        manifest["outputs"] = [str(cfg.out)]
    else:
        for k, v in rows:
            print(f"{k},{v!r}")
    return EXIT_OK


HANDLERS = {"contours": cmd_contours, "trajectory": cmd_trajectory, "trajectories": cmd_trajectories,
            "loci": cmd_loci, "erasure-check": cmd_erasure, "params": cmd_params}


def run(cfg: RunConfig) -> int:
    """Execute a validated run and write its manifest; returns the exit status."""
    manifest = {"tool": "dispherical", "version": __version__, "config": cfg.echo()}
    try:
        status = HANDLERS[cfg.command](cfg, manifest)
    except ConvergenceError as exc:
        manifest["failed"] = [{"ok": False, "task": cfg.command, "error": str(exc)}]
        status = EXIT_NONCONVERGED
    except DomainError as exc:
        manifest["failed"] = [{"ok": False, "task": cfg.command, "error": str(exc)}]
        status = EXIT_INVALID
    manifest["exit_status"] = status
    if cfg.out:
        outs = manifest.get("outputs", [])
        manifest["digests"] = {Path(f).name: file_digest(f) for f in outs if Path(f).exists()}
        manifest["outputs"] = [Path(f).name for f in outs]
        write_manifest(cfg.out, manifest)
    for f in manifest.get("failed", []):
        print(f"dispherical: {f['task']}: {f['error']}", file=sys.stderr)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        cfg = config_from_args(args)
    except DomainError as exc:
        print(f"dispherical: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
