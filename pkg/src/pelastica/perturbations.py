"""Cut-and-paste surgeries on flat-cores and the diagnostics they are judged by.

Three families are provided:

* segment insertion at the joints of adjacent same-direction loops (planar),
* partial rotation of the curve at the vertex of the first loop (``d >= 3``),
* cyclic shift ``P0 ⊕ c|[t, L] ⊕ c|[0, t]``.

Planar joints are located on the model curve obtained by rotating the built
flat-core by pi, so that the tangent at every joint is ``+e_1``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .curves import (
    SampledCurve,
    concat_all,
    evaluate,
    prepend_point,
    restrict,
    rotate_tail_about_axis,
    segment,
    transform,
)
from .energy import bending_energy, sobolev_distance
from .errors import GluingError, IndexTooSmallError, InputError, LocationError, UnsupportedError
from .flatcore import FlatCoreSpec, classify_arrangement
from .special import PContext

JOINT_TANGENT_TOL = 1e-8
JOINT_CURVATURE_TOL = 1e-7
GLUE_TOL = 1e-6
LOCATE_TOL = 1e-6
JUMP_FLOOR = 1e-4
CURVATURE_FLOOR = 1e-4
DIST_RTOL = 0.1
ENERGY_RTOL = 1e-9

EVIDENCE_LABEL = "instability evidence (numerical, not a proof)"
REPORT_COLUMNS = ("n", "bending", "length", "endpoint_gap", "w2p_dist", "max_tangent_jump", "max_normal_jump", "k_start", "k_end")


@dataclass(frozen=True)
class JointSet:
    s: tuple[float, ...]
    K: float
    j: tuple[int, ...] = ()

    @property
    def M(self) -> int:
        return len(self.s)


@dataclass
class PerturbationReport:
    n: int
    bending: float
    length: float
    endpoint_gap: float
    w2p_dist: float
    max_tangent_jump: float
    max_normal_jump: float
    endpoint_curvatures: tuple[float, float]
    max_curvature_jump: float = 0.0
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "n": self.n,
            "bending": self.bending,
            "length": self.length,
            "endpoint_gap": self.endpoint_gap,
            "w2p_dist": self.w2p_dist,
            "max_tangent_jump": self.max_tangent_jump,
            "max_normal_jump": self.max_normal_jump,
            "k_start": self.endpoint_curvatures[0],
            "k_end": self.endpoint_curvatures[1],
        }

    @classmethod
    def from_row(cls, row: dict) -> "PerturbationReport":
        try:
            return cls(
                int(float(row["n"])),
                float(row["bending"]),
                float(row["length"]),
                float(row["endpoint_gap"]),
                float(row["w2p_dist"]),
                float(row["max_tangent_jump"]),
                float(row["max_normal_jump"]),
                (float(row["k_start"]), float(row["k_end"])),
            )
        except (KeyError, ValueError) as exc:
            raise InputError(f"malformed report row: {exc}") from exc


@dataclass(frozen=True)
class ConditionVerdict:
    passed: bool
    variant: str
    convergence: bool
    energy: bool
    defect: bool
    n_values: tuple[int, ...]
    details: dict
    label: str = EVIDENCE_LABEL

    def as_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# junction diagnostics
# --------------------------------------------------------------------------

def junction_jumps(c: SampledCurve) -> tuple[float, float, float]:
    """``(max tangent jump, max normal jump, max raw curvature jump)`` over junctions.

    The normal jump compares the curvature vector on both sides of every
    inserted straight piece (bridging it) and is the raw jump elsewhere.
    Inserted pieces touching an end of the curve are ignored.
    """
    if c.junctions.size == 0:
        return 0.0, 0.0, 0.0
    pieces = c.pieces()
    tan_jump = max(float(np.linalg.norm(c.tan[i + 1] - c.tan[i])) for i in c.junctions)
    raw = max(float(np.linalg.norm(c.curv[i + 1] - c.curv[i])) for i in c.junctions)

    def inserted(piece):
        a, b = piece
        return c.tags is not None and c.tags[a] == "inserted" and c.tags[b] == "inserted"

    kept = [pc for pc in pieces if not inserted(pc)]
    normal = 0.0
    for left, right in zip(kept[:-1], kept[1:]):
        normal = max(normal, float(np.linalg.norm(c.curv[right[0]] - c.curv[left[1]])))
    return tan_jump, normal, raw


def make_report(n: int, curve: SampledCurve, base: SampledCurve, p: float, **extra) -> PerturbationReport:
    ell = float(np.linalg.norm(base.end - base.start))
    gap = abs(float(np.linalg.norm(curve.end - curve.start)) - ell)
    tj, nj, cj = junction_jumps(curve)
    k0 = float(np.linalg.norm(curve.curv[0]))
    k1 = float(np.linalg.norm(curve.curv[-1]))
    return PerturbationReport(
        n,
        bending_energy(curve, p),
        curve.length,
        gap,
        sobolev_distance(curve, base, p),
        tj,
        nj,
        (k0, k1),
        cj,
        dict(extra),
    )


def base_report(base: SampledCurve, p: float) -> PerturbationReport:
    """Report row of the unperturbed curve itself (``n = 0``)."""
    return make_report(0, base, base, p)


# --------------------------------------------------------------------------
# joints and segment insertion
# --------------------------------------------------------------------------

def joint_indices(spec: FlatCoreSpec) -> tuple[int, ...]:
    """1-based ``j`` with ``L_j = 0`` and ``sigma_j = sigma_{j-1}``."""
    out = []
    for j in range(2, spec.N + 1):
        if spec.segs[j - 1] == 0 and np.max(np.abs(spec.sigmas[j - 1] - spec.sigmas[j - 2])) <= 1e-12:
            out.append(j)
    return tuple(out)


def detect_joints(c: SampledCurve, spec: FlatCoreSpec, ctx: PContext | None = None) -> JointSet:
    """Joints of a quasi-alternating planar flat-core, checked on the model curve ``c``.

    ``c`` is expected to be the built curve rotated by pi (tangent ``+e_1`` at
    every joint).  Non quasi-alternating specs give an empty set.
    """
    if spec.d != 2 or c.d != 2:
        raise UnsupportedError("joint detection is planar")
    ctx = ctx if ctx is not None else spec.context()
    if not classify_arrangement(spec).quasi_alternating:
        return JointSet((), ctx.K)
    js = joint_indices(spec)
    cums = np.cumsum(spec.segs)
    svals = tuple(float(2.0 * (j - 1) * ctx.K + cums[j - 1]) for j in js)
    e1 = np.array([1.0, 0.0])
    for s in svals:
        for side in ("left", "right"):
            _, tan, curv, _ = evaluate(c, s, side)
            if np.linalg.norm(tan - e1) > JOINT_TANGENT_TOL or np.linalg.norm(curv) > JOINT_CURVATURE_TOL:
                raise InputError(f"curve does not match the FlatCoreSpec at joint s={s:.6g} (is it the rotated model curve?)")
    return JointSet(svals, ctx.K, js)


def insert_segments_at_joints(c: SampledCurve, joints: JointSet, seg_len: float = 1.0, tol: float = GLUE_TOL) -> SampledCurve:
    """Glue a straight piece ``s -> s e_1`` of length ``seg_len`` into every joint."""
    if joints.M == 0:
        return c
    if not seg_len > 0:
        raise InputError("inserted length must be positive")
    e1 = np.zeros(c.d)
    e1[0] = 1.0
    cuts = sorted(joints.s)
    parts = []
    prev = 0.0
    for s in cuts:
        for side in ("left", "right"):
            _, tan, _, _ = evaluate(c, s, side)
            if np.linalg.norm(tan - e1) > tol:
                raise GluingError(f"tangent at s={s:.6g} is {tan}, not e_1 (C^1 gluing impossible)")
        parts.append(restrict(c, prev, s))
        parts.append(segment(seg_len, c.d, direction=e1, tag="inserted"))
        prev = s
    parts.append(restrict(c, prev, c.length))
    return prepend_point(c.start, concat_all(parts)).with_p(c.p)


def locate_perturbed_joints(c: SampledCurve, reference: JointSet, tol: float = LOCATE_TOL) -> JointSet:
    """Points near each reference joint where the tangent equals ``e_1``.

    The search runs over ``|s - s_i| < K/2``; the root of the transverse
    tangent component nearest to ``s_i`` is refined on the interpolated curve.
    """
    if c.d != 2:
        raise UnsupportedError("joint location is planar")
    found = []
    for si in reference.s:
        lo = max(0.0, si - 0.5 * reference.K)
        hi = min(c.length, si + 0.5 * reference.K)
        idx = np.flatnonzero((c.s > lo) & (c.s < hi))
        if idx.size < 2:
            raise LocationError(f"no samples near joint s={si:.6g}")
        ty = c.tan[idx, 1]
        tx = c.tan[idx, 0]
        cands = []
        for k in range(idx.size):
            if ty[k] == 0.0 and tx[k] > 0:
                cands.append((abs(c.s[idx[k]] - si), float(c.s[idx[k]]), None))
        for k in range(idx.size - 1):
            if ty[k] * ty[k + 1] < 0 and tx[k] > 0 and tx[k + 1] > 0:
                a, b = float(c.s[idx[k]]), float(c.s[idx[k + 1]])
                cands.append((min(abs(a - si), abs(b - si)), a, b))
        if not cands:
            raise LocationError(f"tangent never equals e_1 within the window around s={si:.6g}")
        _, a, b = min(cands, key=lambda t: t[0])
        if b is None or a == b:
            root = a
        else:
            root = brentq(lambda s: evaluate(c, s)[1][1], a, b, xtol=1e-14, rtol=1e-14)
        tan = evaluate(c, root)[1]
        if tan[0] < 1.0 - tol:
            raise LocationError(f"tangent at located joint is {tan}, not e_1 within {tol}")
        found.append(float(root))
    return JointSet(tuple(found), reference.K, reference.j)


def angle_perturbation(c: SampledCurve, amplitude: float, seed: int | np.random.Generator | None = 0, modes: int = 4) -> SampledCurve:
    """Planar curve whose tangent angle is ``theta + amplitude * g(s)``.

    ``g`` is a random sine series in ``s/L`` normalised to ``max |g| = 1``;
    positions are re-integrated from the new tangents, so the result stays
    arclength-parametrised and ``C^1``-close to ``c``.
    """
    if c.d != 2:
        raise UnsupportedError("angle perturbation is planar")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    coef = rng.standard_normal(modes)
    L = c.length
    fine = np.linspace(0.0, L, 4097)
    k = np.arange(1, modes + 1)
    g_fine = np.sin(np.pi * np.outer(fine, k) / L) @ coef
    norm = float(np.max(np.abs(g_fine)))
    coef = coef / norm
    arg = np.pi * np.outer(c.s, k) / L
    g = np.sin(arg) @ coef
    dg = (np.cos(arg) * (np.pi * k / L)) @ coef
    theta = np.arctan2(c.tan[:, 1], c.tan[:, 0])
    kappa = c.tan[:, 0] * c.curv[:, 1] - c.tan[:, 1] * c.curv[:, 0]
    th = theta + amplitude * g
    tan = np.column_stack((np.cos(th), np.sin(th)))
    nrm = np.column_stack((-tan[:, 1], tan[:, 0]))
    curv = (kappa + amplitude * dg)[:, None] * nrm
    steps = 0.5 * (tan[1:] + tan[:-1]) * np.diff(c.s)[:, None]
    pos = c.pos[0] + np.vstack((np.zeros((1, 2)), np.cumsum(steps, axis=0)))
    return SampledCurve(c.s, pos, tan, curv, c.tags, c.p)


# --------------------------------------------------------------------------
# partial rotation at the first vertex
# --------------------------------------------------------------------------

def apex_height(p: float) -> float:
    return p / (p - 1.0)


def rotation_delta(ell: float, h: float, phi: float) -> float:
    """``ell - sqrt(ell^2 - 2 h^2 (1 - cos phi))`` in cancellation-free form."""
    x = 4.0 * h * h * math.sin(0.5 * phi) ** 2
    if x > ell * ell:
        raise InputError("rotation angle too large for the end-point distance")
    return x / (ell + math.sqrt(ell * ell - x))


def rotation_min_index(spec: FlatCoreSpec, ctx: PContext | None = None) -> int:
    """Smallest ``n`` with ``delta_n < L_1``."""
    ctx = ctx if ctx is not None else spec.context()
    L1 = float(spec.segs[0])
    if L1 <= 0:
        raise InputError("the rotation family needs L_1 > 0")
    ell = 2.0 * spec.N * ctx.K / (spec.p - 1.0) + float(spec.segs.sum())
    h = apex_height(spec.p)
    n = 1
    while True:
        try:
            if rotation_delta(ell, h, 1.0 / n) < L1:
                return n
        except InputError:
            pass
        n += 1


def _rotation_to(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotation in span{u, v} taking the direction of ``u`` to that of ``v``."""
    d = u.size
    a = u / np.linalg.norm(u)
    b = v / np.linalg.norm(v)
    cth = float(np.clip(np.dot(a, b), -1.0, 1.0))
    w = b - cth * a
    sth = float(np.linalg.norm(w))
    if sth < 1e-300:
        return np.eye(d)
    w = w / sth
    return np.eye(d) + sth * (np.outer(w, a) - np.outer(a, w)) + (cth - 1.0) * (np.outer(a, a) + np.outer(w, w))


def rotation_stages(c: SampledCurve, spec: FlatCoreSpec, n: int, ctx: PContext | None = None) -> dict:
    """Intermediate curves of the rotation construction.

    Keys: ``base``, ``rotated`` (tail turned by ``1/n``), ``cut`` (first
    ``delta`` removed), ``inserted`` (two straight pieces of length
    ``delta/2`` added) and ``final`` (rigidly turned about the start so that
    the end point is restored).  Also ``delta``, ``phi``, ``s0`` and ``h``.
    """
    if c.d < 3 or spec.d < 3:
        raise UnsupportedError("the rotation family needs d >= 3")
    if c.d != spec.d:
        raise InputError("curve and spec dimensions differ")
    if int(n) != n or n < 1:
        raise InputError("n must be a positive integer")
    ctx = ctx if ctx is not None else spec.context()
    L1 = float(spec.segs[0])
    if L1 <= 0:
        raise InputError("the rotation family needs L_1 > 0")
    e2 = np.zeros(c.d)
    e2[1] = 1.0
    if np.max(np.abs(spec.sigmas[0] - e2)) > 1e-12:
        raise InputError("first loop direction must be e_2; call align_first_sigma first")
    P0, P1 = c.start, c.end
    ell = float(np.linalg.norm(P1 - P0))
    h = apex_height(spec.p)
    phi = 1.0 / n
    s0 = L1 + ctx.K
    delta = rotation_delta(ell, h, phi)
    if delta >= L1:
        raise IndexTooSmallError(f"delta_n = {delta:.6g} >= L_1 = {L1:.6g}; use n >= {rotation_min_index(spec, ctx)}")
    e1 = np.zeros(c.d)
    e1[0] = 1.0
    rotated = rotate_tail_about_axis(c, s0, phi)
    cut = restrict(rotated, delta, c.length)
    head = restrict(rotated, delta, s0)
    tail = restrict(rotated, s0, c.length)
    inserted = concat_all(
        [
            segment(0.5 * delta, c.d, direction=-e1, tag="inserted"),
            head,
            segment(0.5 * delta, c.d, direction=e1, tag="inserted"),
            tail,
        ]
    )
    inserted = prepend_point(P0, inserted).with_p(c.p)
    R = _rotation_to(inserted.end - P0, P1 - P0)
    final = transform(inserted, R, origin=P0)
    return {
        "base": c,
        "rotated": rotated,
        "cut": prepend_point(P0, cut),
        "inserted": inserted,
        "final": final,
        "delta": delta,
        "phi": phi,
        "s0": s0,
        "h": h,
    }


def rotation_perturbation(c: SampledCurve, spec: FlatCoreSpec, n: int, ctx: PContext | None = None):
    """Partial rotation competitor ``gamma_n`` with the same boundary and energy."""
    st = rotation_stages(c, spec, n, ctx)
    rep = make_report(n, st["final"], c, spec.p, delta=st["delta"], phi=st["phi"])
    return st["final"], rep


# --------------------------------------------------------------------------
# cyclic shift
# --------------------------------------------------------------------------

def cyclic_shift(c: SampledCurve, t: float, p: float | None = None, n: int | None = None):
    """``P0 ⊕ c|[t, L] ⊕ c|[0, t]`` and its report (``n`` defaults to ``round(1/t)``)."""
    L = c.length
    if not (0.0 < t < L):
        raise InputError(f"shift must satisfy 0 < t < L = {L}")
    p = p if p is not None else c.p
    if p is None:
        raise InputError("exponent p is required for the report")
    shifted = prepend_point(c.start, concat_all([restrict(c, t, L), restrict(c, 0.0, t)])).with_p(p)
    idx = int(round(1.0 / t)) if n is None else n
    return shifted, make_report(idx, shifted, c, p, t=t)


# --------------------------------------------------------------------------
# conditions (C) and (C_p)
# --------------------------------------------------------------------------

def check_condition_C(
    base,
    seq,
    variant: str = "C",
    jump_floor: float = JUMP_FLOOR,
    curvature_floor: float = CURVATURE_FLOOR,
    dist_rtol: float = DIST_RTOL,
    energy_rtol: float = ENERGY_RTOL,
    p: float | None = None,
) -> ConditionVerdict:
    """Check a perturbation sequence against conditions (C) or (C_p).

    ``base`` is the base curve or directly its bending energy (then ``p`` is
    required).  Reports are sorted by ``n``; rows with ``n = 0`` are ignored.
    Convergence asks for strictly decreasing distances with the last one
    below ``dist_rtol`` times the curvature norm ``B_p^(1/p)`` of the base.
    """
    if variant not in ("C", "Cp"):
        raise InputError("variant must be 'C' or 'Cp'")
    if isinstance(base, SampledCurve):
        p = base.p if p is None else p
        if p is None:
            raise InputError("base curve carries no exponent")
        base_energy = bending_energy(base, p)
    else:
        if p is None:
            raise InputError("p is required when only the base energy is given")
        base_energy = float(base)
    dist_threshold = dist_rtol * base_energy ** (1.0 / p)
    reps = sorted((r for r in seq if r.n > 0), key=lambda r: r.n)
    if not reps:
        raise InputError("no perturbation reports given")
    dists = [r.w2p_dist for r in reps]
    decreasing = all(b < a for a, b in zip(dists[:-1], dists[1:]))
    conv = bool(decreasing and dists[-1] < dist_threshold)
    energy_ok = all(r.bending <= base_energy * (1.0 + energy_rtol) for r in reps)
    if variant == "C":
        defect = all(r.max_normal_jump >= jump_floor for r in reps)
        defect_values = [r.max_normal_jump for r in reps]
    else:
        defect = all(max(r.endpoint_curvatures) >= curvature_floor for r in reps)
        defect_values = [max(r.endpoint_curvatures) for r in reps]
    details = {
        "base_bending": base_energy,
        "w2p_dist": dists,
        "dist_threshold": dist_threshold,
        "bending": [r.bending for r in reps],
        "defect": defect_values,
        "defect_floor": jump_floor if variant == "C" else curvature_floor,
    }
    return ConditionVerdict(
        bool(conv and energy_ok and defect),
        variant,
        conv,
        bool(energy_ok),
        bool(defect),
        tuple(r.n for r in reps),
        details,
    )
