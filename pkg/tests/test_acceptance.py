"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

Each test records its sub-checks, prints one ``criterion k: PASS|FAIL`` line
and then asserts.  The lines are repeated in the pytest terminal summary.
Run directly with ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import mpmath
import numpy as np
import pytest

from pelastica.curves import PinnedBoundary, evaluate, loop, reflect_planar
from pelastica.energy import bending_energy
from pelastica.figures import canonical_specs
from pelastica.flatcore import (
    FlatCoreSpec,
    align_first_sigma,
    build,
    classify_arrangement,
    embed_spec,
    model_boundary,
    model_distance,
    model_length,
    ratio_from_budget,
    required_segment_budget,
    stability_verdict,
)
from pelastica.optimize import PROBE_LABEL, Polyline, calibrate_floor, criticality_residual, discretize, stability_probe
from pelastica.perturbations import (
    angle_perturbation,
    apex_height,
    check_condition_C,
    cyclic_shift,
    detect_joints,
    insert_segments_at_joints,
    junction_jumps,
    locate_perturbed_joints,
    rotation_delta,
    rotation_perturbation,
)
from pelastica.special import PContext, amplitude, derivative_identities, p_elliptic_F, sech_p, tanh_p

E2, NE2 = [0.0, 1.0], [0.0, -1.0]
LINES: list[str] = []


class Checks:
    def __init__(self, number, title, budget_s):
        self.number, self.title, self.budget = number, title, budget_s
        self.items = []
        self.t0 = time.perf_counter()

    def add(self, name, ok, detail=""):
        self.items.append((name, bool(ok), detail))

    def finish(self):
        elapsed = time.perf_counter() - self.t0
        self.add("runtime", elapsed < self.budget, f"{elapsed:.1f}s < {self.budget}s")
        failed = [f"{n} ({d})" if d else n for n, ok, d in self.items if not ok]
        status = "FAIL" if failed else "PASS"
        line = f"criterion {self.number} ({self.title}): {status}"
        if failed:
            line += "; failed: " + "; ".join(failed)
        LINES.append(line)
        print(line)
        assert not failed, line


# --------------------------------------------------------------------------

def test_criterion_1_special_functions():
    ck = Checks(1, "special functions", 10)
    for p in (2.5, 3.0, 4.0, 10.0):
        ctx = PContext(p)
        K = ctx.K
        x = np.linspace(-0.9 * K, 0.9 * K, 201)
        err = float(np.max(np.abs(p_elliptic_F(ctx, amplitude(ctx, x)) - x)))
        ck.add(f"p={p} F(am(x)) = x", err < 1e-10, f"{err:.1e}")
        with mpmath.workdps(30):
            closed = float(mpmath.beta(0.5, 0.5 - 1 / mpmath.mpf(p)) / 2)
        ck.add(f"p={p} K closed form", abs(K - closed) < 1e-10, f"{abs(K - closed):.1e}")
        target = K * (p - 2) / (2 * (p - 1))
        ck.add(f"p={p} tanh_p(K)", abs(tanh_p(ctx, K) - target) < 1e-8, f"{abs(tanh_p(ctx, K) - target):.1e}")
        grid = np.linspace(-K, K, 102)[1:-1]
        h = 1e-3
        d = derivative_identities(ctx, grid)
        f = lambda t: sech_p(ctx, t) ** (p - 1)
        fd = (f(grid + h) - 2 * f(grid) + f(grid - h)) / h**2
        e1 = float(np.max(np.abs(fd - d.d2_sech_pow)))
        ck.add(f"p={p} d2 sech^(p-1)", e1 < 1e-5, f"{e1:.1e}")
        g = lambda t: tanh_p(ctx, t)
        fd = (g(grid + h) - 2 * g(grid) + g(grid - h)) / h**2
        e2 = float(np.max(np.abs(fd - d.d2_tanh)))
        ck.add(f"p={p} d2 tanh", e2 < 1e-5, f"{e2:.1e}")
    ck.finish()


def test_criterion_2_loop_geometry():
    ck = Checks(2, "loop geometry", 5)
    for p in (2.5, 3.0, 4.0, 10.0):
        ctx = PContext(p)
        K = ctx.K
        for sig, d in ((E2, 2), ([0.0, 0.6, 0.8], 3)):
            c = loop(ctx, sig, d)
            e1 = np.eye(d)[0]
            _, t, k, _ = evaluate(c, K)
            ck.add(f"p={p} d={d} vertex tangent", np.max(np.abs(t - e1)) < 1e-7)
            ck.add(f"p={p} d={d} vertex curvature", np.max(np.abs(k + 2 * np.asarray(sig))) < 1e-7)
            for s in (0.0, c.length):
                _, t, k, _ = evaluate(c, s)
                ck.add(f"p={p} d={d} end tangent", np.max(np.abs(t + e1)) < 1e-7)
                ck.add(f"p={p} d={d} end curvature", np.max(np.abs(k)) < 1e-7)
            ext = c.end - c.start
            ck.add(f"p={p} d={d} extent", np.max(np.abs(ext + 2 / (p - 1) * K * e1)) < 1e-8)
    ck.finish()


def _observed_orders(p):
    ctx = PContext(p)
    exact = 2**p * ctx.K * (p - 2) / (p - 1)
    errs = [abs(bending_energy(loop(ctx, E2, 2, n_half=n), p) / exact - 1) for n in (2, 4, 8, 16, 32, 64)]
    # only grids whose error is above round-off carry order information
    return [math.log2(a / b) for a, b in zip(errs[:-1], errs[1:]) if a > 1e-12 and b > 1e-12]


def test_criterion_3_loop_energy():
    ck = Checks(3, "closed-form loop energy", 10)
    for p in (2.5, 3.0, 4.0, 10.0):
        ctx = PContext(p)
        exact = 2**p * ctx.K * (p - 2) / (p - 1)
        rel = abs(bending_energy(loop(ctx, E2, 2), p) / exact - 1)
        ck.add(f"p={p} default grid", rel < 1e-5, f"{rel:.1e}")
        orders = _observed_orders(p)
        ok = bool(orders) and min(orders) >= 1.8
        ck.add(f"p={p} order", ok, ", ".join(f"{o:.2f}" for o in orders))
    ck.finish()


def test_criterion_4_bookkeeping():
    ck = Checks(4, "flat-core bookkeeping", 30)
    rng = np.random.default_rng(2024)
    worst_len = worst_dist = worst_budget = 0.0
    for _ in range(200):
        p = float(rng.uniform(2.2, 8.0))
        d = int(rng.integers(2, 4))
        N = int(rng.integers(1, 5))
        sig = rng.normal(size=(N, d - 1))
        sig /= np.linalg.norm(sig, axis=1, keepdims=True)
        sigmas = np.hstack((np.zeros((N, 1)), sig))
        segs = np.where(rng.random(N + 1) < 0.3, 0.0, rng.uniform(0.05, 3.0, N + 1))
        spec = FlatCoreSpec(p, d, sigmas, segs)
        K = spec.context().K
        c = build(spec)
        L = model_length(spec, K)
        worst_len = max(worst_len, abs(c.length - L) / L)
        worst_dist = max(worst_dist, abs(np.linalg.norm(c.end - c.start) - model_distance(spec, K)) / L)
        budget = float(segs.sum())
        r = ratio_from_budget(p, N, budget, K)
        worst_budget = max(worst_budget, abs(required_segment_budget(p, N, r, K) - budget) / max(1.0, budget))
    ck.add("length", worst_len < 1e-7, f"{worst_len:.1e}")
    ck.add("displacement", worst_dist < 1e-7, f"{worst_dist:.1e}")
    ck.add("budget round trip", worst_budget < 1e-10, f"{worst_budget:.1e}")
    ck.finish()


def _joint_displacement(c, js, amp, seed=0):
    found = locate_perturbed_joints(angle_perturbation(c, amp, seed), js)
    return max(abs(a - b) for a, b in zip(found.s, js.s))


def test_criterion_5_insertion():
    ck = Checks(5, "insertion surgery", 30)
    spec = FlatCoreSpec(3, 2, [E2, E2, E2], [1, 0, 0, 1])
    c = reflect_planar(build(spec))
    js = detect_joints(c, spec)
    ck.add("two joints", js.M == 2, f"M={js.M}")
    g = insert_segments_at_joints(c, js)
    alt = FlatCoreSpec(3, 2, [E2, E2, E2], [1, 1, 1, 1])
    ck.add("alternating result", classify_arrangement(alt).kind == "alternating")
    ck.add("matches alternating build", np.max(np.abs(g.pos - reflect_planar(build(alt)).pos)) < 1e-9)
    ck.add("length L+2", abs(g.length - c.length - 2) < 1e-9)
    ck.add("endpoint shift 2 e1", np.max(np.abs(g.end - c.end - [2.0, 0.0])) < 1e-9)
    de = abs(bending_energy(g, 3) / bending_energy(c, 3) - 1)
    ck.add("energy change", de <= 1e-9, f"{de:.1e}")
    jump = junction_jumps(g)[0]
    ck.add("tangent jump", jump <= 1e-7, f"{jump:.1e}")
    # O(amplitude) recovery: halving the amplitude should roughly halve the displacement
    for amp in (1e-2, 1e-3):
        d1 = _joint_displacement(c, js, amp)
        d2 = _joint_displacement(c, js, amp / 2)
        ratio = d2 / d1
        ck.add(f"amp={amp:g} halving ratio in [0.3, 0.7]", 0.3 <= ratio <= 0.7, f"ratio {ratio:.3f}, displacement {d1:.3g}")
    ck.finish()


def _delta_oracle(ell, h, phi):
    with mpmath.workdps(50):
        ell, h, phi = mpmath.mpf(ell), mpmath.mpf(h), mpmath.mpf(phi)
        return float(ell - mpmath.sqrt(ell**2 - 2 * h**2 * (1 - mpmath.cos(phi))))


def test_criterion_6_rotation():
    ck = Checks(6, "rotation family", 60)
    spec = align_first_sigma(FlatCoreSpec(3, 3, [[0, 1, 0], [0, 0, 1]], [1, 0.5, 1]))
    c = build(spec)
    E0, L = bending_energy(c, 3), c.length
    ell = float(np.linalg.norm(c.end - c.start))
    h = apex_height(3)
    reps = []
    for n in (8, 16, 32, 64):
        _, rep = rotation_perturbation(c, spec, n)
        reps.append(rep)
        ck.add(f"n={n} energy", abs(rep.bending / E0 - 1) <= 1e-9, f"{abs(rep.bending / E0 - 1):.1e}")
        ck.add(f"n={n} endpoint gap", rep.endpoint_gap <= 1e-9, f"{rep.endpoint_gap:.1e}")
        ck.add(f"n={n} length", abs(rep.length - L) <= 1e-9)
        delta = rep.extra["delta"]
        exact = _delta_oracle(ell, h, 1.0 / n)
        ck.add(f"n={n} delta", abs(delta - exact) <= 1e-14 * exact, f"{abs(delta / exact - 1):.1e}")
    phi = 1e-6
    law = h**2 * phi**2 / (2 * ell)
    rel = abs(rotation_delta(ell, h, phi) / law - 1)
    ck.add("small-angle law at n=1e6", rel < 1e-3, f"{rel:.1e}")
    for a, b in zip(reps[:-1], reps[1:]):
        ck.add(f"dist decrease {a.n}->{b.n}", b.w2p_dist <= 0.75 * a.w2p_dist, f"ratio {b.w2p_dist / a.w2p_dist:.3f}")
        ra, rb = a.max_normal_jump * a.n, b.max_normal_jump * b.n
        ck.add(f"normal jump/phi stable {a.n}->{b.n}", abs(rb / ra - 1) <= 0.1, f"{ra:.3f} -> {rb:.3f}")
    v = check_condition_C(c, reps)
    ck.add("condition (C)", v.passed, f"convergence {v.convergence}, energy {v.energy}, defect {v.defect}")
    ck.finish()


def test_criterion_7_cyclic_shift():
    ck = Checks(7, "cyclic-shift family", 30)
    spec = FlatCoreSpec(3, 2, [E2, NE2], [0, 1, 1])
    ctx = spec.context()
    c = build(spec)
    E0 = bending_energy(c, 3)
    reps = []
    for n in (8, 16, 32):
        _, rep = cyclic_shift(c, 1.0 / n)
        reps.append(rep)
        ck.add(f"n={n} energy", abs(rep.bending / E0 - 1) <= 1e-9)
        target = 2 * sech_p(ctx, -ctx.K + 1.0 / n)
        ck.add(f"n={n} endpoint curvature", abs(rep.endpoint_curvatures[0] - target) <= 1e-6, f"{abs(rep.endpoint_curvatures[0] - target):.1e}")
    ck.add("condition (C_p)", check_condition_C(c, reps, variant="Cp").passed)
    ck.finish()


def test_criterion_8_criticality():
    ck = Checks(8, "criticality", 60)
    spec = FlatCoreSpec(3, 2, [E2, E2], [1, 0, 1])
    b = model_boundary(spec)
    pl = discretize(build(spec), 512, loops=2, K=spec.context().K)
    floor = calibrate_floor(3, pl.edge_len)
    res = criticality_residual(pl, b)
    ck.add("flat-core <= 10 floor", res <= 10 * floor, f"{res / floor:.2f} x floor")
    rng = np.random.default_rng(8)
    M = 512
    ang = np.cumsum(rng.normal(0, 0.3, M))
    X = np.vstack(([0.0, 0.0], np.cumsum(np.column_stack((np.cos(ang), np.sin(ang))), axis=0))) * pl.edge_len
    rb = PinnedBoundary(X[0], X[-1], M * pl.edge_len, 2)
    rres = criticality_residual(Polyline(X, pl.edge_len, 3), rb)
    ck.add("random > 100 floor", rres > 100 * floor, f"{rres / floor:.1e} x floor")
    ck.finish()


def test_criterion_9_stability_probe():
    ck = Checks(9, "stability probe", 300)
    spec = FlatCoreSpec(3, 2, [E2, E2], [1, 0, 1])
    s2 = stability_probe(spec, model_boundary(spec), trials=32, amplitude=1e-2, seed=0)
    ck.add("d=2 descent fraction 0", s2.descent_fraction == 0.0, f"{s2.descent_fraction}")
    spec3 = embed_spec(spec, 3)
    s3 = stability_probe(spec3, model_boundary(spec3), trials=32, amplitude=1e-2, seed=0, rotation_seed=16)
    ck.add("d=3 descent fraction > 0", s3.descent_fraction > 0.0, f"{s3.descent_fraction}")
    best = min(t["final_energy"] for t in s3.trials)
    ck.add("d=3 min below base - 10 floor", best < s3.base_energy - 10 * s3.floor, f"{best:.6f} vs {s3.base_energy:.6f}, floor {s3.floor:.1e}")
    ck.add("labelled as evidence", s2.label == s3.label == PROBE_LABEL)
    ck.finish()


def test_criterion_10_verdict_table():
    ck = Checks(10, "verdict table", 5)
    specs = [s for _, s in canonical_specs()]
    v2 = [stability_verdict(s, 2) for s in specs]
    v3 = [stability_verdict(embed_spec(s, 3), 3) for s in specs]
    ck.add("d=2", v2 == ["unstable", "unstable", "stable", "stable"], str(v2))
    ck.add("d=3", v3 == ["unstable"] * 4, str(v3))
    ck.finish()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
