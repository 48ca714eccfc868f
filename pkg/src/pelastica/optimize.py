"""Equilateral polylines with pinned ends: discrete energy, criticality and relaxation.

The discrete energy of a polyline with edge length ``e`` is
``sum_i (2 tan(theta_i / 2) / e)^p e`` over interior vertices.  Admissible
polylines keep both end points and every edge length fixed, so the total
length is fixed as well.  Relaxation is projected gradient descent with
Armijo backtracking; each trial point is pulled back onto the constraint set
by Gauss-Newton sweeps.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels as kern
from .curves import PinnedBoundary, SampledCurve, evaluate
from .errors import GeometryError, InputError, ResolutionError
from .flatcore import FlatCoreSpec, align_first_sigma, build
from .special import PContext

EDGE_RTOL = 1e-9
ENDPOINT_TOL = 1e-9
MAX_SWEEPS = 50
MIN_STEP = 1e-14
REG_REL = 1e-12
RETRACT_RTOL = 1e-11
MIN_VERTICES_PER_LOOP = 16
PROBE_LABEL = "numerical evidence, not a proof"


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray
    edge_len: float
    p: float

    def __post_init__(self):
        X = np.array(self.vertices, dtype=float)
        if X.ndim != 2 or X.shape[0] < 3 or X.shape[1] < 2:
            raise InputError("a polyline needs at least 3 vertices in R^d, d >= 2")
        if not np.all(np.isfinite(X)):
            raise InputError("vertices must be finite")
        if not (self.edge_len > 0 and self.p > 1):
            raise InputError("edge length must be positive and p > 1")
        lens = np.linalg.norm(np.diff(X, axis=0), axis=1)
        if np.max(np.abs(lens - self.edge_len)) > EDGE_RTOL * self.edge_len:
            raise InputError("edges are not equal to the common edge length")
        X.setflags(write=False)
        object.__setattr__(self, "vertices", X)
        object.__setattr__(self, "edge_len", float(self.edge_len))
        object.__setattr__(self, "p", float(self.p))

    @property
    def M(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def d(self) -> int:
        return self.vertices.shape[1]

    @property
    def length(self) -> float:
        return self.M * self.edge_len


@dataclass
class RelaxResult:
    final_energy: float
    initial_energy: float
    iterations: int
    constraint_residual: float
    grad_norm: float
    stalled: bool = False
    trajectory_sample: list | None = None
    polyline: Polyline | None = field(default=None, repr=False)


@dataclass
class ProbeSummary:
    base_energy: float
    floor: float
    trials: list
    descent_fraction: float
    min_relative: float
    median_relative: float
    d: int
    amplitude: float
    label: str = PROBE_LABEL

    def as_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# discretisation and energy
# --------------------------------------------------------------------------

def discretize(c: SampledCurve, M: int, loops: int | None = None, K: float | None = None) -> Polyline:
    """Equilateral ``M``-edge polyline through equal-arclength stations of ``c``.

    The stations are pulled onto exactly equal edges ``L/M`` by one
    constraint projection.  ``loops``/``K`` enable the resolution check of
    at least 16 vertices per loop.
    """
    if int(M) != M or M < 8:
        raise ResolutionError("need M >= 8 edges")
    if c.p is None:
        raise InputError("curve carries no exponent")
    L = c.length
    e = L / M
    if loops and K is not None and 2.0 * K / e < MIN_VERTICES_PER_LOOP:
        raise ResolutionError(f"M = {M} gives fewer than {MIN_VERTICES_PER_LOOP} vertices per loop")
    X = np.array([evaluate(c, k * e)[0] for k in range(M + 1)])
    X[0] = c.start
    X[-1] = c.end
    Y, sweeps, worst = kern.retract(X, e, RETRACT_RTOL, MAX_SWEEPS, _reg(e))
    if sweeps < 0:
        raise GeometryError(f"edge equalisation failed (violation {worst:.3e})")
    return Polyline(Y, e, c.p)


def _reg(e: float) -> float:
    # Tikhonov shift for the rank-deficient fully stretched configuration,
    # relative to the Gram-matrix scale 4 e^2
    return REG_REL * 4.0 * e * e


def discrete_energy(pl: Polyline) -> float:
    """Turning-angle p-energy; ``inf`` for a folded vertex."""
    return kern.polyline_energy_grad(pl.vertices, pl.edge_len, pl.p, want_grad=False)[0]


def discrete_energy_grad(pl: Polyline):
    return kern.polyline_energy_grad(pl.vertices, pl.edge_len, pl.p)


def _constraint_violation(X: np.ndarray, e: float, b: PinnedBoundary | None) -> float:
    lens = np.linalg.norm(np.diff(X, axis=0), axis=1)
    worst = float(np.max(np.abs(lens - e)))
    if b is not None:
        worst = max(worst, float(np.max(np.abs(X[0] - b.P0))), float(np.max(np.abs(X[-1] - b.P1))))
    return worst


def criticality_residual(pl: Polyline, b: PinnedBoundary) -> float:
    """``|P grad E| / sqrt(e)``: projected gradient as a discrete L^2 norm."""
    if pl.d != b.d:
        raise InputError("boundary and polyline dimensions differ")
    if abs(pl.length - b.L) > 1e-8 * b.L:
        raise InputError(f"polyline length {pl.length} differs from boundary length {b.L}")
    if _constraint_violation(pl.vertices, pl.edge_len, b) > 1e-8 * b.L:
        raise InputError("polyline violates the boundary constraints")
    E, G = discrete_energy_grad(pl)
    if not math.isfinite(E):
        return math.inf
    PG = kern.project_tangent(pl.vertices, G, _reg(pl.edge_len))
    return float(np.linalg.norm(PG) / math.sqrt(pl.edge_len))


def calibrate_floor(p: float, edge_len: float, d: int = 2, ctx: PContext | None = None) -> float:
    """Criticality residual of a single discretised loop at the given edge length.

    A lone loop is an exactly critical configuration, so its residual is pure
    discretisation error.
    """
    ctx = ctx if ctx is not None else PContext(p)
    sig = np.zeros(d)
    sig[1] = 1.0
    spec = FlatCoreSpec(p, d, [sig], [0.0, 0.0])
    c = build(spec, ctx)
    M = max(8, int(round(c.length / edge_len)))
    pl = discretize(c, M)
    b = PinnedBoundary(pl.vertices[0], pl.vertices[-1], pl.length, d)
    return criticality_residual(pl, b)


# --------------------------------------------------------------------------
# relaxation
# --------------------------------------------------------------------------

def relax(
    pl: Polyline,
    b: PinnedBoundary,
    step: float = 1.0,
    max_iter: int = 2000,
    tol: float = 1e-8,
    record_every: int = 0,
) -> RelaxResult:
    """Projected gradient descent with Armijo backtracking.

    Raises :class:`GeometryError` when the start cannot be projected onto the
    constraints within 50 sweeps.  A step collapsing below ``1e-14`` ends
    the run with ``stalled = True``.
    """
    if pl.d != b.d:
        raise InputError("boundary and polyline dimensions differ")
    e = pl.edge_len
    X = np.array(pl.vertices, dtype=float)
    X[0] = b.P0
    X[-1] = b.P1
    reg = _reg(e)
    X, sweeps, worst = kern.retract(X, e, RETRACT_RTOL, MAX_SWEEPS, reg)
    if sweeps < 0:
        raise GeometryError(f"initial projection failed (violation {worst:.3e})")
    E, G = kern.polyline_energy_grad(X, e, pl.p)
    if not math.isfinite(E):
        raise GeometryError("start configuration has a folded vertex")
    E0 = E
    traj = [E] if record_every else None
    t = step
    stalled = False
    gnorm = math.inf
    it = 0
    for it in range(max_iter):
        D = -kern.project_tangent(X, G, reg)
        dd = float(np.sum(D * D))
        gnorm = math.sqrt(dd / e)
        if gnorm < tol:
            break
        accepted = False
        while t >= MIN_STEP:
            Y, sweeps, _ = kern.retract(X + t * D, e, RETRACT_RTOL, MAX_SWEEPS, reg)
            if sweeps >= 0:
                Ey, Gy = kern.polyline_energy_grad(Y, e, pl.p)
                if Ey <= E - 1e-4 * t * dd:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            stalled = True
            break
        X, E, G = Y, Ey, Gy
        t = min(2.0 * t, step)
        if record_every and (it + 1) % record_every == 0:
            traj.append(E)
    else:
        it = max_iter
        D = -kern.project_tangent(X, G, reg)
        gnorm = math.sqrt(float(np.sum(D * D)) / e)
    return RelaxResult(
        final_energy=float(E),
        initial_energy=float(E0),
        iterations=int(it),
        constraint_residual=_constraint_violation(X, e, b),
        grad_norm=gnorm,
        stalled=stalled,
        trajectory_sample=traj,
        polyline=Polyline(X, e, pl.p),
    )


# --------------------------------------------------------------------------
# stability probe
# --------------------------------------------------------------------------

def normal_field(pl: Polyline, amplitude: float, rng: np.random.Generator, modes: int = 4) -> np.ndarray:
    """Random low-frequency sine field in the normal bundle, ``max |V| = amplitude``.

    The sine basis vanishes at both ends, so pinned end points stay put.
    """
    X = pl.vertices
    n = X.shape[0]
    s = np.arange(n) / (n - 1)
    coef = rng.standard_normal((modes, pl.d))
    V = np.sin(np.pi * np.outer(s, np.arange(1, modes + 1))) @ coef
    D = np.diff(X, axis=0)
    T = np.zeros_like(X)
    T[1:] += D
    T[:-1] += D
    T /= np.linalg.norm(T, axis=1, keepdims=True)
    V -= np.sum(V * T, axis=1, keepdims=True) * T
    peak = float(np.max(np.linalg.norm(V, axis=1)))
    if peak == 0.0 or amplitude == 0.0:
        return np.zeros_like(X)
    return V * (amplitude / peak)


def _threads() -> int:
    raw = os.environ.get("PELASTICA_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def stability_probe(
    spec: FlatCoreSpec,
    b: PinnedBoundary,
    trials: int,
    amplitude: float,
    seed: int = 0,
    M: int = 256,
    rotation_seed: int | None = None,
    relax_params: dict | None = None,
    modes: int = 4,
    grid_step: float | None = None,
    quad_tol: float | None = None,
) -> ProbeSummary:
    """Relax random admissible perturbations of the discretised flat-core.

    The base is the relaxed discretisation of ``build(spec)``; the floor is
    the energy it loses in that relaxation (plus ``1e-12`` of the energy).
    A trial descends when it ends below ``base - 10 floor``.  In ``d >= 3``
    the first trial can start from the rotation competitor with index
    ``rotation_seed`` instead of a random field.
    """
    from .perturbations import rotation_perturbation

    params = {"step": 1.0, "max_iter": 2000, "tol": 1e-8}
    params.update(relax_params or {})
    ctx = spec.context() if quad_tol is None else spec.context(quad_tol=quad_tol)
    work = align_first_sigma(spec) if spec.d >= 3 else spec
    c = build(work, ctx, grid_step=grid_step)
    # the boundary of the built curve is moved onto b by a rigid motion
    Q = _frame_to(c, b)
    pl0 = discretize(c, M, loops=spec.N, K=ctx.K)
    X0 = b.P0 + (pl0.vertices - pl0.vertices[0]) @ Q.T
    base_pl = Polyline(X0, pl0.edge_len, spec.p)
    base_run = relax(base_pl, b, **params)
    base_energy = base_run.final_energy
    floor = (discrete_energy(base_pl) - base_energy) + 1e-12 * abs(base_energy)
    relaxed = base_run.polyline

    seq = np.random.SeedSequence(seed)
    children = seq.spawn(trials)
    starts = []
    for k in range(trials):
        if k == 0 and rotation_seed and spec.d >= 3 and work.segs[0] > 0:
            g, _ = rotation_perturbation(c, work, rotation_seed, ctx)
            pr = discretize(g, M)
            Xr = b.P0 + (pr.vertices - pr.vertices[0]) @ Q.T
            starts.append(Xr)
        else:
            rng = np.random.default_rng(children[k])
            starts.append(relaxed.vertices + normal_field(relaxed, amplitude, rng, modes))

    def run(Xs):
        return relax(Polyline(_equalise(Xs, relaxed.edge_len), relaxed.edge_len, spec.p), b, **params)

    with ThreadPoolExecutor(max_workers=min(_threads(), max(1, trials))) as pool:
        results = list(pool.map(run, starts))
    finals = np.array([r.final_energy for r in results])
    descent = float(np.mean(finals < base_energy - 10.0 * floor)) if trials else 0.0
    rel = finals / base_energy - 1.0 if base_energy else finals
    return ProbeSummary(
        base_energy=float(base_energy),
        floor=float(floor),
        trials=[{"final_energy": float(r.final_energy), "initial_energy": float(r.initial_energy), "iterations": r.iterations} for r in results],
        descent_fraction=descent,
        min_relative=float(np.min(rel)) if trials else math.nan,
        median_relative=float(np.median(rel)) if trials else math.nan,
        d=spec.d,
        amplitude=float(amplitude),
    )


def _equalise(X: np.ndarray, e: float) -> np.ndarray:
    Y, sweeps, worst = kern.retract(X, e, RETRACT_RTOL, MAX_SWEEPS, _reg(e))
    if sweeps < 0:
        raise GeometryError(f"perturbed start could not be projected (violation {worst:.3e})")
    return Y


def _frame_to(c: SampledCurve, b: PinnedBoundary) -> np.ndarray:
    """Rotation taking the chord of ``c`` onto the chord of ``b``."""
    from .perturbations import _rotation_to

    u = c.end - c.start
    v = b.P1 - b.P0
    if abs(np.linalg.norm(u) - np.linalg.norm(v)) > 1e-8 * b.L or abs(c.length - b.L) > 1e-8 * b.L:
        raise InputError("spec does not realise the boundary; validate it first")
    return _rotation_to(u, v)
