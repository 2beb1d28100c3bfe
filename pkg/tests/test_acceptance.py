"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from dispherical import (
    MotionConstant,
    PhysicalParams,
    critical_merge_level,
    default_family,
    find_wrinkles,
    tertiary_foci,
    trace_action_contour,
    trace_family,
    trace_time_locus,
    trace_trajectory,
    trajectory_times,
)
from dispherical import cli

HERE = Path(__file__).resolve().parent
P = PhysicalParams()
CONFINED = -math.sin(math.pi / 18)
FREE = math.sin(math.pi / 32)


@pytest.fixture
def report(capsys):
    def emit(n, checks):
        failed = [name for name, ok in checks if not ok]
        line = f"{'PASS' if not failed else 'FAIL'} criterion {n}"
        if failed:
            line += ": " + "; ".join(failed)
        with capsys.disabled():
            print("\n" + line)
        assert not failed, line

    return emit


def _near_all(got, want, tol):
    return len(got) == len(want) and all(abs(g - w) <= tol for g, w in zip(sorted(got), sorted(want)))


def test_criterion_1_wrinkle_positions(report):
    out = []
    for k, want in ((15.2, [0.207, 0.620]), (24.3, [0.129, 0.388, 0.646, 0.905])):
        p = PhysicalParams(k=k)
        got = sorted({round(e, 6) for lv in np.arange(0.5, 5.01, 0.5)
                      for e in find_wrinkles(trace_action_contour(lv, ((1.0, 6.0), (0.0, 1.0)), 0.01, p), p)})
        # several levels may show the same wrinkle; merge those within the tolerance
        merged = []
        for e in got:
            if not merged or e - merged[-1][-1] > 0.02:
                merged.append([e])
            else:
                merged[-1].append(e)
        centres = [float(np.mean(g)) for g in merged]
        out.append((f"k={k}: wrinkles {np.round(centres, 4).tolist()} vs {want}", _near_all(centres, want, 0.02)))
    report(1, out)


def test_criterion_2_merge_level(report):
    mv = critical_merge_level(((1.0, 6.0), (0.0, 1.0)), P)
    v = mv.unwrapped / P.hbar
    report(2, [(f"merge level {v:.7f} hbar vs 1.316815", abs(v - 1.316815) <= 1e-4),
               (f"merge level {v:.7f} vs ka/2 - 2 pi", abs(v - (P.ka / 2 - 2 * math.pi)) <= 1e-4)])


def test_criterion_3_confined_turning_points(report):
    tr = trace_trajectory("upper", MotionConstant(CONFINED), P)
    by = {}
    for q in tr.turning_points:
        by.setdefault(q.kind, []).append(q)
    foci = by.get("reinforcement-focus", [])
    dest = by.get("regular-destructive", [])
    irr = by.get("irregular", [])
    checks = [
        (f"reinforcement foci eta {sorted(round(q.eta, 4) for q in foci)}",
         _near_all([q.eta for q in foci], [-0.827, -0.413, 0.413, 0.827], 0.005)
         and all(abs(q.xi - 1) <= 0.005 for q in foci)),
        (f"destructive maxima eta {sorted(round(q.eta, 4) for q in dest)}",
         _near_all([q.eta for q in dest], [-0.620, -0.207, 0.207, 0.620], 0.02)),
        (f"irregular folds {sorted((round(q.xi, 4), round(q.eta, 4)) for q in irr)} vs (1.0065, +-0.954)",
         len(irr) == 2 and all(abs(q.xi - 1.0065) <= 0.01 and abs(abs(q.eta) - 0.954) <= 0.01 for q in irr)),
    ]
    report(3, checks)


def test_criterion_4_free_trajectory(report):
    tr = trace_trajectory("upper", MotionConstant(FREE), P)
    folds = [q for q in tr.turning_points if q.kind == "fold" and q.xi > 2.0]
    fold_ok = len(folds) == 1 and abs(folds[0].xi - 3.409) <= 0.02 and abs(folds[0].eta - 0.128) <= 0.02
    end = abs(tr.eta[-1] - FREE)
    report(4, [(f"fold {[(round(q.xi, 4), round(q.eta, 4)) for q in folds]} vs (3.409, 0.128)", fold_ok),
               (f"|eta - eta_a| = {end:.2e} at xi = {tr.xi[-1]:.2f}", end < 0.01 and tr.xi[-1] >= 50.0)])


def test_criterion_5_nil_transit(report):
    tr = trace_trajectory("upper", MotionConstant(CONFINED), P)
    t, _ = trajectory_times(tr, P)
    checks = []
    for f in tertiary_foci(P):
        near = (np.abs(tr.eta - f.eta) < 0.01) & (tr.xi < 1.01)
        m = float(np.min(np.abs(t[near]))) if near.any() else math.inf
        checks.append((f"|t| = {m:.1e} at (1, {f.eta:.3f})", m <= 1e-6))
    checks.append(("same-hemisphere samples t >= 0", bool(np.all(t[tr.eta > 0] >= -1e-12))))
    checks.append(("opposite-hemisphere samples t <= 0", bool(np.all(t[tr.eta < 0] <= 1e-12))))
    report(5, checks)


def test_criterion_6_locus_cuts(report):
    # positive eta at positive t is reached only from the upper source
    trs = trace_family(default_family(181), P, "upper")
    cuts = {t: trace_time_locus(t, sources="upper", params=P, trajectories=trs).cuts
            for t in (0.002, 0.02, 0.04, 0.136, 0.176)}

    def covering(t, e):
        return [(round(a, 3), round(b, 3)) for a, b in cuts[t] if a < e < b]

    def inside(t, lo, hi):
        return [(round(a, 3), round(b, 3)) for a, b in cuts[t] if a >= lo - 0.02 and b <= hi + 1e-9]

    checks = [
        (f"t=0.002 cut in (0.827, 1): {inside(0.002, 0.827, 1.0)}", bool(inside(0.002, 0.827, 1.0))),
        (f"t=0.02 cut in (0.827, 1): {inside(0.02, 0.827, 1.0)}", not inside(0.02, 0.827, 1.0)),
        (f"t=0.04 cut over 0.620: {covering(0.04, 0.620)}", not covering(0.04, 0.620)),
        (f"t=0.136 cut over 0.207: {covering(0.136, 0.207)}", bool(covering(0.136, 0.207))),
        (f"t=0.176 cut over 0.207: {covering(0.176, 0.207)}", not covering(0.176, 0.207)),
    ]
    report(6, checks)


def test_criterion_7_property_suites(report):
    r = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                        str(HERE / "test_properties.py")], capture_output=True, text=True)
    tail = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr[-200:]
    worst = 0.0
    for ea in (CONFINED, FREE):
        worst = max(worst, float(np.max(trace_trajectory("upper", MotionConstant(ea), P).residuals())))
    report(7, [(f"property suite: {tail}", r.returncode == 0),
               (f"on-trace scaled residual {worst:.1e}", worst <= 1e-8)])


DATASET_RUNS = [
    ["contours", "--k", "15.2", "--levels-h", "0.5:0.5:5.0", "--window", "1:6,0:1", "--out", "out/contours.csv"],
    ["trajectory", "--source", "upper", "--eta-a", "-0.173648", "--out", "out/confined.csv"],
    ["trajectory", "--source", "upper", "--eta-a", "0.0980171", "--out", "out/free.csv"],
    # a reduced locus run keeps this item inside its time budget
    ["loci", "--times", "0,0.02", "--family", "41", "--out", "out/loci.csv"],
]


def _snapshot(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_criterion_8_determinism(report, tmp_path, monkeypatch):
    checks = []
    for argv in DATASET_RUNS:
        snaps = []
        runs = (("a", []), ("b", []), ("c", ["--workers", "2"]))
        if argv[0] == "loci":
            runs = runs[::2]
        for sub, extra in runs:
            d = tmp_path / sub
            d.mkdir(exist_ok=True)
            monkeypatch.chdir(d)
            code = cli.main(argv + extra)
            snaps.append({k: v for k, v in _snapshot(d).items() if k.startswith(argv[-1].rsplit(".", 1)[0])})
        same = code == 0 and snaps[0] and all(s == snaps[0] for s in snaps)
        checks.append((f"{argv[0]} {argv[-1]} byte-identical", bool(same)))
    report(8, checks)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
