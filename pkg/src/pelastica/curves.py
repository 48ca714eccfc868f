"""Arclength-sampled curves in R^d, the closed-form pieces and the gluing operators.

A :class:`SampledCurve` stores position, unit tangent and curvature vector on
an arclength grid.  Grids are increasing except at junctions, where the node is
duplicated: the first copy holds the left limits and the second the right
limits.  Maximal runs of nodes between junctions are called *pieces*; inside a
piece the samples come from one smooth map and are interpolated with Hermite
polynomials built from the stored derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InputError, UnsupportedError
from .special import PContext, _cos_sin_from_pair, _tanh_from_pair, amplitude_pair

DEFAULT_LOOP_HALF_NODES = 512
DEFAULT_SEGMENT_STEP = 0.01
UNIT_TOL = 1e-12
SNAP_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SampledCurve:
    s: np.ndarray
    pos: np.ndarray
    tan: np.ndarray
    curv: np.ndarray
    tags: np.ndarray | None = None
    p: float | None = None
    _breaks: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        pos = np.array(self.pos, dtype=float)
        tan = np.array(self.tan, dtype=float)
        curv = np.array(self.curv, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise InputError("arclength grid must be a non-empty 1-d array")
        n = s.size
        if pos.ndim != 2 or pos.shape[0] != n or pos.shape[1] < 2:
            raise InputError("positions must have shape (n, d) with d >= 2")
        if tan.shape != pos.shape or curv.shape != pos.shape:
            raise InputError("tangent and curvature samples must match the positions")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(pos)) and np.all(np.isfinite(tan)) and np.all(np.isfinite(curv))):
            raise InputError("curve samples must be finite")
        ds = np.diff(s)
        if np.any(ds < 0):
            raise InputError("arclength grid must be non-decreasing")
        dup = ds == 0
        if np.any(dup[1:] & dup[:-1]):
            raise InputError("a junction node may appear at most twice")
        tags = None
        if self.tags is not None:
            tags = np.array(self.tags, dtype=object)
            if tags.shape != (n,):
                raise InputError("one tag per sample is required")
        for name, arr in (("s", s), ("pos", pos), ("tan", tan), ("curv", curv)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "tags", tags)
        object.__setattr__(self, "_breaks", np.flatnonzero(dup))

    @property
    def d(self) -> int:
        return self.pos.shape[1]

    @property
    def n(self) -> int:
        return self.s.size

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    @property
    def start(self) -> np.ndarray:
        return self.pos[0].copy()

    @property
    def end(self) -> np.ndarray:
        return self.pos[-1].copy()

    @property
    def junctions(self) -> np.ndarray:
        """Index ``i`` of every duplicated node pair ``(i, i + 1)``."""
        return self._breaks.copy()

    def pieces(self) -> list[tuple[int, int]]:
        """Inclusive index ranges of the smooth pieces."""
        starts = np.concatenate(([0], self._breaks + 1))
        ends = np.concatenate((self._breaks, [self.n - 1]))
        return list(zip(starts.tolist(), ends.tolist()))

    def with_p(self, p: float | None) -> "SampledCurve":
        return SampledCurve(self.s, self.pos, self.tan, self.curv, self.tags, p)


@dataclass(frozen=True)
class PinnedBoundary:
    P0: np.ndarray
    P1: np.ndarray
    L: float
    d: int

    def __post_init__(self):
        P0 = np.array(self.P0, dtype=float).reshape(-1)
        P1 = np.array(self.P1, dtype=float).reshape(-1)
        if P0.shape != (self.d,) or P1.shape != (self.d,):
            raise InputError("boundary points must have d components")
        if not (np.all(np.isfinite(P0)) and np.all(np.isfinite(P1)) and math.isfinite(self.L)):
            raise InputError("boundary data must be finite")
        if self.L <= 0:
            raise InputError("total length must be positive")
        if np.linalg.norm(P1 - P0) >= self.L:
            raise DomainError("admissible boundaries need |P0 - P1| < L")
        object.__setattr__(self, "P0", P0)
        object.__setattr__(self, "P1", P1)
        object.__setattr__(self, "L", float(self.L))

    @property
    def ell(self) -> float:
        return float(np.linalg.norm(self.P1 - self.P0))

    @property
    def ratio(self) -> float:
        return self.ell / self.L


def _axis(k: int, d: int) -> np.ndarray:
    e = np.zeros(d)
    e[k] = 1.0
    return e


# --------------------------------------------------------------------------
# closed-form pieces
# --------------------------------------------------------------------------

def segment(length: float, d: int, step: float | None = None, direction=None, tag: str = "segment") -> SampledCurve:
    """Straight piece ``s -> s * direction`` (default direction ``-e_1``).

    Spacing is ``step`` (default 0.01) with at least 16 intervals.  A zero length gives the
    single-sample degenerate curve.
    """
    if not math.isfinite(length) or length < 0:
        raise InputError(f"segment length must be finite and >= 0, got {length!r}")
    if d < 2:
        raise InputError("dimension must be at least 2")
    u = -_axis(0, d) if direction is None else np.asarray(direction, dtype=float)
    if u.shape != (d,) or abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise InputError("segment direction must be a unit vector in R^d")
    if length == 0:
        n = 0
    else:
        h = DEFAULT_SEGMENT_STEP if step is None else step
        if not h > 0:
            raise InputError("grid step must be positive")
        n = max(16, int(math.ceil(length / h - 1e-9)))
    s = np.linspace(0.0, length, n + 1)
    if n > 1 and np.any(np.diff(s) <= 0):
        # lengths near the underflow limit cannot carry a grid
        n = 1
        s = np.array([0.0, length])
    pos = s[:, None] * u[None, :]
    tan = np.tile(u, (n + 1, 1))
    return SampledCurve(s, pos, tan, np.zeros_like(pos), np.full(n + 1, tag, dtype=object))


def check_sigma(sigma, d: int) -> np.ndarray:
    sig = np.asarray(sigma, dtype=float).reshape(-1)
    if sig.shape != (d,):
        raise InputError(f"loop direction must have {d} components")
    if not np.all(np.isfinite(sig)):
        raise InputError("loop direction must be finite")
    if abs(sig[0]) > UNIT_TOL:
        raise InputError("loop direction must be orthogonal to e_1")
    if abs(np.linalg.norm(sig) - 1.0) > UNIT_TOL:
        raise InputError("loop direction must be a unit vector")
    sig = sig.copy()
    sig[0] = 0.0
    return sig / np.linalg.norm(sig)


def loop_frame(ctx: PContext, x: np.ndarray):
    """Loop-local closed forms at parameters ``|x| <= K``.

    Returns ``(e1_pos, sigma_pos, cos2, sin2, sech)`` where the position is
    ``e1_pos * e_1 + sigma_pos * sigma``, the tangent ``cos2 e_1 - sin2 sigma``
    and the curvature ``-2 sech (sin2 e_1 + cos2 sigma)``.
    """
    x = np.asarray(x, dtype=float)
    phi, comp = amplitude_pair(ctx, x)
    cos_am, sin_am = _cos_sin_from_pair(phi, comp)
    cos_am = np.maximum(cos_am, 0.0)
    near_end = comp < 0.25 * math.pi
    cos2 = np.where(near_end, -np.cos(2.0 * comp), np.cos(2.0 * np.abs(phi)))
    sin2 = np.where(near_end, np.sin(2.0 * comp), np.sin(2.0 * np.abs(phi)))
    sin2 = np.copysign(sin2, x)
    tanh = np.copysign(_tanh_from_pair(ctx, phi, comp).reshape(x.shape), x)
    e1_pos = 2.0 * tanh - x
    sigma_pos = ctx.p / (ctx.p - 1.0) * cos_am ** (2.0 - ctx.a)
    sech = cos_am ** ctx.a
    return e1_pos, sigma_pos, cos2, sin2, sech


def loop(ctx: PContext, sigma, d: int, n_half: int | None = None, step: float | None = None) -> SampledCurve:
    """Borderline loop in direction ``sigma``, arclength re-based to ``[0, 2K]``.

    Uses ``2 * n_half`` equal intervals (default ``n_half = 512``); ``step``
    overrides ``n_half`` with ``ceil(K / step)``.
    """
    sig = check_sigma(sigma, d)
    if step is not None:
        if not step > 0:
            raise InputError("grid step must be positive")
        n_half = int(math.ceil(ctx.K / step))
    n_half = DEFAULT_LOOP_HALF_NODES if n_half is None else int(n_half)
    if n_half < 2:
        raise InputError("loop needs at least 2 intervals per half")
    k = np.arange(-n_half, n_half + 1)
    x = ctx.K * k / n_half
    e1_pos, sigma_pos, cos2, sin2, sech = loop_frame(ctx, x)
    e1 = _axis(0, d)
    pos = e1_pos[:, None] * e1 + sigma_pos[:, None] * sig
    tan = cos2[:, None] * e1 - sin2[:, None] * sig
    curv = -2.0 * sech[:, None] * (sin2[:, None] * e1 + cos2[:, None] * sig)
    pos = pos - pos[0]
    s = x + ctx.K
    s[0] = 0.0
    s[-1] = 2.0 * ctx.K
    return SampledCurve(s, pos, tan, curv, np.full(s.size, "loop", dtype=object), ctx.p)


# --------------------------------------------------------------------------
# composition
# --------------------------------------------------------------------------

def _cat_tags(a: SampledCurve, b: SampledCurve):
    if a.tags is None and b.tags is None:
        return None
    ta = a.tags if a.tags is not None else np.full(a.n, "", dtype=object)
    tb = b.tags if b.tags is not None else np.full(b.n, "", dtype=object)
    return np.concatenate((ta, tb))


def concat(a: SampledCurve, b: SampledCurve) -> SampledCurve:
    """``a ⊕ b``: ``b`` translated to start at the end of ``a``.

    The junction node is kept twice so that jumps of tangent or curvature stay
    visible.  Zero-length operands are absorbed.
    """
    if a.d != b.d:
        raise InputError(f"dimension mismatch: {a.d} vs {b.d}")
    p = a.p if a.p is not None else b.p
    # zero-length operands, or ones too short to register on a's arclength scale
    if b.length == 0 or a.s[-1] + b.length == a.s[-1]:
        return a.with_p(p)
    if a.length == 0:
        return prepend_point(a.start, b).with_p(p)
    s = np.concatenate((a.s, b.s - b.s[0] + a.s[-1]))
    pos = np.concatenate((a.pos, b.pos - b.pos[0] + a.pos[-1]))
    return SampledCurve(
        s,
        pos,
        np.concatenate((a.tan, b.tan)),
        np.concatenate((a.curv, b.curv)),
        _cat_tags(a, b),
        p,
    )


def concat_all(parts: Sequence[SampledCurve]) -> SampledCurve:
    if not parts:
        raise InputError("nothing to concatenate")
    out = parts[0]
    for part in parts[1:]:
        out = concat(out, part)
    return out


def prepend_point(P, c: SampledCurve) -> SampledCurve:
    """``P ⊕ c``: rigid translation moving the start of ``c`` to ``P``."""
    P = np.asarray(P, dtype=float).reshape(-1)
    if P.shape != (c.d,):
        raise InputError(f"point has {P.size} components, curve lives in R^{c.d}")
    return SampledCurve(c.s, c.pos - c.pos[0] + P, c.tan, c.curv, c.tags, c.p)


def transform(c: SampledCurve, R: np.ndarray, origin=None) -> SampledCurve:
    """Apply ``x -> origin + R (x - origin)`` with an orthogonal ``R`` (default origin: start)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (c.d, c.d):
        raise InputError("transform matrix must be d x d")
    o = c.pos[0] if origin is None else np.asarray(origin, dtype=float)
    return SampledCurve(c.s, o + (c.pos - o) @ R.T, c.tan @ R.T, c.curv @ R.T, c.tags, c.p)


def scale(c: SampledCurve, factor: float) -> SampledCurve:
    """Similarity about the start point; curvature scales by ``1/factor``."""
    if not (math.isfinite(factor) and factor > 0):
        raise InputError("scale factor must be positive")
    return SampledCurve(c.s * factor, c.pos[0] + (c.pos - c.pos[0]) * factor, c.tan, c.curv / factor, c.tags, c.p)


def plane_rotation(d: int, phi: float, i: int = 1, j: int = 2) -> np.ndarray:
    """Rotation by ``phi`` in the ``(e_{i+1}, e_{j+1})`` plane fixing the other axes."""
    A = np.eye(d)
    cph, sph = math.cos(phi), math.sin(phi)
    A[i, i] = cph
    A[i, j] = -sph
    A[j, i] = sph
    A[j, j] = cph
    return A


def rotate_tail_about_axis(c: SampledCurve, s0: float, phi: float) -> SampledCurve:
    """Rotate the part beyond ``s0`` about the line ``c(s0) + R e_1``.

    The curve is split at ``s0`` (a duplicated node is created there) and the
    tail is rotated by ``phi`` in the ``(e_2, e_3)`` plane.
    """
    if c.d < 3:
        raise UnsupportedError("axis rotation needs d >= 3")
    if not (0.0 < s0 < c.length):
        raise InputError("rotation point must lie strictly inside the curve")
    if phi == 0:
        return c
    head = restrict(c, 0.0, s0)
    tail = restrict(c, s0, c.length)
    tail = transform(tail, plane_rotation(c.d, phi), origin=tail.pos[0])
    return _join_raw(head, tail)


def _join_raw(a: SampledCurve, b: SampledCurve) -> SampledCurve:
    # positions are not translated; b is expected to start where a ends
    return SampledCurve(
        np.concatenate((a.s, b.s - b.s[0] + a.s[-1])),
        np.concatenate((a.pos, b.pos)),
        np.concatenate((a.tan, b.tan)),
        np.concatenate((a.curv, b.curv)),
        _cat_tags(a, b),
        a.p if a.p is not None else b.p,
    )


def reflect_planar(c: SampledCurve) -> SampledCurve:
    """Planar rotation by pi about the start point."""
    if c.d != 2:
        raise UnsupportedError("planar reflection needs d == 2")
    return SampledCurve(c.s, 2.0 * c.pos[0] - c.pos, -c.tan, -c.curv, c.tags, c.p)


def embed(c: SampledCurve, d: int) -> SampledCurve:
    """Pad coordinates with zeros to live in R^d."""
    if d < c.d:
        raise InputError("cannot embed into a lower dimension")
    pad = ((0, 0), (0, d - c.d))
    return SampledCurve(c.s, np.pad(c.pos, pad), np.pad(c.tan, pad), np.pad(c.curv, pad), c.tags, c.p)


# --------------------------------------------------------------------------
# evaluation and restriction
# --------------------------------------------------------------------------

def _lagrange(xs: np.ndarray, ys: np.ndarray, x: float) -> np.ndarray:
    out = np.zeros(ys.shape[1])
    for i in range(xs.size):
        w = 1.0
        for j in range(xs.size):
            if j != i:
                w *= (x - xs[j]) / (xs[i] - xs[j])
        out += w * ys[i]
    return out


def _hermite5(t: float, h: float, y0, d0, c0, y1, d1, c1) -> np.ndarray:
    t2, t3 = t * t, t * t * t
    t4, t5 = t3 * t, t3 * t2
    return (
        (1 - 10 * t3 + 15 * t4 - 6 * t5) * y0
        + (t - 6 * t3 + 8 * t4 - 3 * t5) * h * d0
        + 0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * h * h * c0
        + (10 * t3 - 15 * t4 + 6 * t5) * y1
        + (-4 * t3 + 7 * t4 - 3 * t5) * h * d1
        + 0.5 * (t3 - 2 * t4 + t5) * h * h * c1
    )


def _hermite3(t: float, h: float, y0, d0, y1, d1) -> np.ndarray:
    t2, t3 = t * t, t * t * t
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (3 * t2 - 2 * t3) * y1 + (t3 - t2) * h * d1


def snap(c: SampledCurve, s: float) -> float:
    """Clamp ``s`` to the grid range and move it onto a node closer than round-off."""
    s = float(s)
    lo, hi = float(c.s[0]), float(c.s[-1])
    tol = SNAP_RTOL * max(1.0, hi)
    if not (lo - tol <= s <= hi + tol):
        raise InputError(f"arclength {s} outside [{lo}, {hi}]")
    s = min(max(s, lo), hi)
    j = int(np.searchsorted(c.s, s))
    for k in (j - 1, j):
        if 0 <= k < c.n and abs(c.s[k] - s) <= tol:
            return float(c.s[k])
    return s


def evaluate(c: SampledCurve, s: float, side: str = "right"):
    """Interpolated ``(pos, tan, curv, tag)`` at arclength ``s``.

    ``side`` picks the one-sided limit at a junction.  Inside a piece the
    position is quintic Hermite (values, tangents, curvatures), the tangent
    cubic Hermite and the curvature cubic Lagrange on the nearest nodes.  The
    tangent is renormalised and the curvature made orthogonal to it.
    """
    if side not in ("left", "right"):
        raise InputError("side must be 'left' or 'right'")
    s = snap(c, s)
    pieces = c.pieces()
    ends = np.array([c.s[b] for _, b in pieces])
    if side == "right":
        k = int(np.searchsorted(ends, s, side="right"))
    else:
        k = int(np.searchsorted(ends, s, side="left"))
    k = min(k, len(pieces) - 1)
    a, b = pieces[k]
    if b == a:
        return c.pos[a].copy(), c.tan[a].copy(), c.curv[a].copy(), None if c.tags is None else c.tags[a]
    grid = c.s[a : b + 1]
    j = int(np.searchsorted(grid, s))
    hit = j < grid.size and grid[j] == s
    if hit:
        i = a + j
        return c.pos[i].copy(), c.tan[i].copy(), c.curv[i].copy(), None if c.tags is None else c.tags[i]
    k0 = a + j - 1
    h = c.s[k0 + 1] - c.s[k0]
    u = (s - c.s[k0]) / h
    pos = _hermite5(u, h, c.pos[k0], c.tan[k0], c.curv[k0], c.pos[k0 + 1], c.tan[k0 + 1], c.curv[k0 + 1])
    tan = _hermite3(u, h, c.tan[k0], c.curv[k0], c.tan[k0 + 1], c.curv[k0 + 1])
    i0 = max(0, min(j - 2, grid.size - 4))
    i1 = min(grid.size, i0 + 4)
    curv = _lagrange(grid[i0:i1], c.curv[a + i0 : a + i1], s)
    tan = tan / np.linalg.norm(tan)
    curv = curv - np.dot(curv, tan) * tan
    tag = None if c.tags is None else c.tags[k0]
    return pos, tan, curv, tag


def restrict(c: SampledCurve, a: float, b: float) -> SampledCurve:
    """Sub-curve on ``[a, b]`` with arclength re-based to start at 0.

    Positions are not translated.  End samples are interpolated with the
    one-sided limits pointing into the interval.
    """
    a = snap(c, a)
    b = snap(c, b)
    if not a <= b:
        raise InputError(f"invalid restriction interval [{a}, {b}]")
    pa, ta, ka, ga = evaluate(c, a, "right")
    if a == b:
        return SampledCurve([0.0], pa[None], ta[None], ka[None], None if c.tags is None else [ga], c.p)
    pb, tb, kb, gb = evaluate(c, b, "left")
    rel = c.s - a
    idx = np.flatnonzero((c.s > a) & (c.s < b) & (rel > 0) & (rel < b - a))
    s = np.concatenate(([0.0], rel[idx], [b - a]))
    pos = np.concatenate((pa[None], c.pos[idx], pb[None]))
    tan = np.concatenate((ta[None], c.tan[idx], tb[None]))
    curv = np.concatenate((ka[None], c.curv[idx], kb[None]))
    tags = None
    if c.tags is not None:
        tags = np.concatenate(([ga], c.tags[idx], [gb]))
    return SampledCurve(s, pos, tan, curv, tags, c.p)
