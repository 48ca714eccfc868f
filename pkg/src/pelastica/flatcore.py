"""Flat-core configurations: construction, boundary bookkeeping and classification.

A flat-core with ``N`` loops is the chain

    segment(L_1) ⊕ loop(sigma_1) ⊕ segment(L_2) ⊕ ... ⊕ loop(sigma_N) ⊕ segment(L_{N+1})

built at unit scale (loop apex height ``p/(p-1)``).  It has length
``2 N K + sum L_j`` and moves its end point by ``-(2 N K/(p-1) + sum L_j) e_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import PinnedBoundary, SampledCurve, check_sigma, concat_all, loop, segment
from .errors import DomainError, InputError
from .special import PContext

SIGMA_EQ_TOL = 1e-12
VALIDATION_RTOL = 1e-8

ALTERNATING = "alternating"
QUASI_ALTERNATING = "quasi_alternating"
NOT_QUASI_ALTERNATING = "not_quasi_alternating"

STABLE = "stable"
UNSTABLE = "unstable"
CRITICAL = "critical (out of scope)"


@dataclass(frozen=True, eq=False)
class FlatCoreSpec:
    """Symbolic flat-core: exponent, dimension, loop directions and segment lengths.

    ``sigmas`` may be given with ``d`` components (first one zero) or with
    ``d - 1`` components, in which case they are read as coordinates in
    ``span{e_2, ..., e_d}``.
    """

    p: float
    d: int
    sigmas: np.ndarray
    segs: np.ndarray

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p <= 2:
            raise DomainError(f"flat-cores need p > 2, got {self.p!r}")
        d = self.d
        if isinstance(d, bool) or int(d) != d or d < 2:
            raise InputError(f"dimension must be an integer >= 2, got {d!r}")
        d = int(d)
        raw = np.array(self.sigmas, dtype=float)
        if raw.ndim != 2 or raw.shape[0] < 1:
            raise InputError("sigmas must be a non-empty list of vectors")
        if raw.shape[1] == d - 1:
            raw = np.hstack((np.zeros((raw.shape[0], 1)), raw))
        if raw.shape[1] != d:
            raise InputError(f"each sigma needs {d} (or {d - 1}) components")
        sig = np.array([check_sigma(v, d) for v in raw])
        segs = np.array(self.segs, dtype=float).reshape(-1)
        if segs.size != sig.shape[0] + 1:
            raise InputError(f"{sig.shape[0]} loops need {sig.shape[0] + 1} segment lengths, got {segs.size}")
        if not np.all(np.isfinite(segs)) or np.any(segs < 0):
            raise InputError("segment lengths must be finite and >= 0")
        sig.setflags(write=False)
        segs.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "sigmas", sig)
        object.__setattr__(self, "segs", segs)

    @property
    def N(self) -> int:
        return self.sigmas.shape[0]

    def context(self, **kwargs) -> PContext:
        return PContext(self.p, **kwargs)

    def reversed(self) -> "FlatCoreSpec":
        return FlatCoreSpec(self.p, self.d, self.sigmas[::-1], self.segs[::-1])

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "N": self.N,
            "sigmas": self.sigmas.tolist(),
            "segs": self.segs.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FlatCoreSpec":
        if not isinstance(data, dict):
            raise InputError("spec must be a JSON object")
        for key in ("p", "d", "sigmas", "segs"):
            if key not in data:
                raise InputError(f"spec field '{key}' is missing")
        try:
            spec = cls(data["p"], data["d"], data["sigmas"], data["segs"])
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed spec: {exc}") from exc
        if "N" in data and data["N"] != spec.N:
            raise InputError(f"spec field 'N' is {data['N']} but {spec.N} sigmas were given")
        return spec


@dataclass(frozen=True)
class ArrangementClass:
    kind: str
    violating_indices: tuple[int, ...] = field(default_factory=tuple)

    @property
    def quasi_alternating(self) -> bool:
        return self.kind in (ALTERNATING, QUASI_ALTERNATING)


@dataclass(frozen=True)
class BoundaryDiagnostics:
    passed: bool
    r_spec: float
    r_boundary: float
    scale: float
    length_residual: float
    distance_residual: float
    budget_residual: float
    messages: tuple[str, ...] = ()


def model_length(spec: FlatCoreSpec, K: float) -> float:
    return 2.0 * spec.N * K + float(spec.segs.sum())


def model_distance(spec: FlatCoreSpec, K: float) -> float:
    return 2.0 * spec.N * K / (spec.p - 1.0) + float(spec.segs.sum())


def build(spec: FlatCoreSpec, ctx: PContext | None = None, grid_step: float | None = None, n_half: int | None = None) -> SampledCurve:
    """Sample the flat-core described by ``spec`` starting at the origin."""
    ctx = ctx if ctx is not None else spec.context()
    if abs(ctx.p - spec.p) > 0:
        raise InputError("context exponent differs from spec.p")
    parts = []
    for j in range(spec.N):
        parts.append(segment(spec.segs[j], spec.d, step=grid_step))
        parts.append(loop(ctx, spec.sigmas[j], spec.d, n_half=n_half, step=grid_step))
    parts.append(segment(spec.segs[-1], spec.d, step=grid_step))
    return concat_all(parts).with_p(spec.p)


def required_segment_budget(p: float, N: int, r: float, K: float | None = None) -> float:
    """Total straight length ``sum L_j`` forced by the distance ratio ``r``."""
    if not (math.isfinite(p) and p > 2):
        raise DomainError("p must be > 2")
    if int(N) != N or N < 1:
        raise InputError("N must be a positive integer")
    lo = 1.0 / (p - 1.0)
    if lo - 8 * np.spacing(lo) <= r < lo:
        # rounding below the critical ratio
        r = lo
    if not (lo <= r < 1.0):
        raise DomainError(f"no flat-core exists for r = {r}; need {lo} <= r < 1")
    K = PContext(p).K if K is None else K
    return 2.0 * N * (r - lo) / (1.0 - r) * K


def ratio_from_budget(p: float, N: int, budget: float, K: float | None = None) -> float:
    """Distance ratio of a flat-core with ``N`` loops and ``sum L_j = budget``."""
    if budget < 0:
        raise DomainError("segment budget must be >= 0")
    K = PContext(p).K if K is None else K
    loops = 2.0 * N * K
    return (loops / (p - 1.0) + budget) / (loops + budget)


def model_boundary(spec: FlatCoreSpec, ctx: PContext | None = None, P0=None) -> PinnedBoundary:
    """Boundary realised by :func:`build` (end point along ``-e_1``)."""
    ctx = ctx if ctx is not None else spec.context()
    P0 = np.zeros(spec.d) if P0 is None else np.asarray(P0, dtype=float)
    e1 = np.zeros(spec.d)
    e1[0] = 1.0
    return PinnedBoundary(P0, P0 - model_distance(spec, ctx.K) * e1, model_length(spec, ctx.K), spec.d)


def validate_against_boundary(spec: FlatCoreSpec, b: PinnedBoundary, ctx: PContext | None = None, curve: SampledCurve | None = None) -> BoundaryDiagnostics:
    """Compare a flat-core spec with a boundary after rescaling it to length ``b.L``."""
    ctx = ctx if ctx is not None else spec.context()
    messages = []
    c = curve if curve is not None else build(spec, ctx)
    built_len = c.length
    built_dist = float(np.linalg.norm(c.end - c.start))
    lam = b.L / built_len
    length_res = lam * built_len - b.L
    dist_res = lam * built_dist - b.ell
    r_spec = built_dist / built_len
    r_b = b.ratio
    try:
        budget_res = float(spec.segs.sum()) - required_segment_budget(spec.p, spec.N, r_b, ctx.K)
    except DomainError as exc:
        budget_res = math.nan
        messages.append(str(exc))
    tol = VALIDATION_RTOL * b.L
    ok = True
    if spec.d != b.d:
        ok = False
        messages.append(f"dimension mismatch: spec d={spec.d}, boundary d={b.d}")
    if abs(length_res) > tol:
        ok = False
        messages.append(f"length residual {length_res:.3e}")
    if abs(dist_res) > tol:
        ok = False
        messages.append(f"distance residual {dist_res:.3e}")
    if not (abs(budget_res) * lam <= tol):
        ok = False
        messages.append(f"segment budget residual {budget_res:.3e}")
    return BoundaryDiagnostics(ok, r_spec, r_b, lam, length_res, dist_res, budget_res, tuple(messages))


def classify_arrangement(spec: FlatCoreSpec) -> ArrangementClass:
    """Alternating / quasi-alternating / neither, with 1-based offending segment indices."""
    segs = spec.segs
    N = spec.N
    if np.all(segs > 0):
        return ArrangementClass(ALTERNATING)
    bad = []
    if segs[0] <= 0:
        bad.append(1)
    for j in range(2, N + 1):
        if segs[j - 1] == 0:
            diff = np.max(np.abs(spec.sigmas[j - 1] - spec.sigmas[j - 2]))
            if diff > SIGMA_EQ_TOL:
                bad.append(j)
    if segs[N] <= 0:
        bad.append(N + 1)
    if bad:
        return ArrangementClass(NOT_QUASI_ALTERNATING, tuple(bad))
    return ArrangementClass(QUASI_ALTERNATING)


def is_critical(spec: FlatCoreSpec) -> bool:
    """True when the distance ratio equals ``1/(p-1)``, i.e. no straight parts."""
    return bool(np.all(spec.segs == 0))


def stability_verdict(spec: FlatCoreSpec, d: int | None = None) -> str:
    """Stability of the flat-core inside the class of flat-cores.

    In the plane, quasi-alternating arrangements are stable and all others
    unstable; the critical ratio gets its own marker.  In three or more
    dimensions every flat-core is unstable.
    """
    d = spec.d if d is None else int(d)
    if d < spec.d:
        raise InputError(f"spec lives in R^{spec.d}; cannot judge it in R^{d}")
    if d >= 3:
        return UNSTABLE
    if is_critical(spec):
        return CRITICAL
    return STABLE if classify_arrangement(spec).quasi_alternating else UNSTABLE


def embed_spec(spec: FlatCoreSpec, d: int) -> FlatCoreSpec:
    if d < spec.d:
        raise InputError("cannot embed into a lower dimension")
    sig = np.pad(spec.sigmas, ((0, 0), (0, d - spec.d)))
    return FlatCoreSpec(spec.p, d, sig, spec.segs)


def rotate_spec(spec: FlatCoreSpec, R: np.ndarray) -> FlatCoreSpec:
    """Apply an orthogonal map fixing ``e_1`` to every loop direction."""
    R = np.asarray(R, dtype=float)
    if R.shape != (spec.d, spec.d):
        raise InputError("rotation must be d x d")
    return FlatCoreSpec(spec.p, spec.d, spec.sigmas @ R.T, spec.segs)


def first_sigma_alignment(spec: FlatCoreSpec) -> np.ndarray:
    """Rotation fixing ``e_1`` that maps ``sigma_1`` to ``e_2`` (``d >= 3``)."""
    d = spec.d
    if d < 3:
        raise InputError("alignment by rotation needs d >= 3")
    e2 = np.zeros(d)
    e2[1] = 1.0
    v = spec.sigmas[0] - e2
    if np.linalg.norm(v) < 1e-15:
        return np.eye(d)
    H = np.eye(d) - 2.0 * np.outer(v, v) / np.dot(v, v)
    flip = np.eye(d)
    flip[2, 2] = -1.0
    return flip @ H


def align_first_sigma(spec: FlatCoreSpec) -> FlatCoreSpec:
    return rotate_spec(spec, first_sigma_alignment(spec))
