"""p-elliptic integral at modulus one and the p-hyperbolic functions.

Everything here is built on

    F(x) = int_0^x (cos t)^(-2/p) dt,        |x| <= pi/2,

its complete value ``K = F(pi/2)``, the amplitude ``am = F^-1`` on ``[-K, K]``
and

    sech_p(x) = cos(am x)^(2/p)   (0 outside (-K, K)),
    tanh_p(x) = int_0^x sech_p(t)^p dt = int_0^(am x) cos(t)^(2 - 2/p) dt.

The endpoint singularity of ``(cos t)^(-2/p)`` is removed analytically: near
``pi/2`` the integral is rewritten as ``K - G(pi/2 - x)`` with
``G(c) = c^(1-a)/(1-a) + int_0^c (sin^-a u - u^-a) du``, ``a = 2/p``, and the
bounded remainder is integrated with a tanh-sinh rule.  Amplitudes are carried
together with their complement ``pi/2 - am`` so that quantities evaluated next
to ``|x| = K`` keep full relative precision.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as kern
from .errors import DomainError, InputError

HALF_PI = 0.5 * math.pi
QUARTER_PI = 0.25 * math.pi

_MAX_LEVEL = 8
_MAXITER = 200


@functools.lru_cache(maxsize=None)
def _nodes(level: int):
    xi, w = kern.de_nodes(level)
    xi.setflags(write=False)
    w.setflags(write=False)
    return xi, w


def _g_full(c: np.ndarray, a: float, xi, w) -> np.ndarray:
    """``int_0^c (sin u)^-a du`` for ``0 <= c <= pi/2``."""
    c = np.asarray(c, dtype=float)
    return c ** (1.0 - a) / (1.0 - a) + kern.de_sum(c, a, kern.KIND_SING, xi, w)


@dataclass(frozen=True)
class PContext:
    """Exponent ``p > 2`` together with cached complete integrals.

    Parameters
    ----------
    p : float
        Bending exponent; flat-core curves exist only for ``p > 2``.
    quad_tol : float
        Absolute tolerance used to pick the quadrature level.
    inv_tol : float
        Absolute tolerance on ``F(am(x)) - x``.
    """

    p: float
    quad_tol: float = 1e-12
    inv_tol: float = 1e-10
    K: float = field(init=False, repr=False)
    tanh_K: float = field(init=False, repr=False)
    level: int = field(init=False, repr=False)
    _f_mid: float = field(init=False, repr=False)
    _g_mid: float = field(init=False, repr=False)

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p <= 2.0:
            raise DomainError(f"p must be a finite number > 2, got {self.p!r}")
        if not (self.quad_tol > 0 and self.inv_tol > 0):
            raise InputError("tolerances must be positive")
        object.__setattr__(self, "p", p)
        a = 2.0 / p
        half = np.array([HALF_PI])
        prev = None
        for level in range(3, _MAX_LEVEL + 1):
            xi, w = _nodes(level)
            k_val = float(_g_full(half, a, xi, w)[0])
            t_val = float(kern.de_sum(half, 2.0 - a, kern.KIND_SIN, xi, w)[0])
            if prev is not None and abs(k_val - prev[0]) <= self.quad_tol and abs(t_val - prev[1]) <= self.quad_tol:
                break
            prev = (k_val, t_val)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "K", k_val)
        object.__setattr__(self, "tanh_K", t_val)
        quarter = np.array([QUARTER_PI])
        object.__setattr__(self, "_f_mid", float(kern.de_sum(quarter, -a, kern.KIND_COS, xi, w)[0]))
        object.__setattr__(self, "_g_mid", float(_g_full(quarter, a, xi, w)[0]))

    @property
    def a(self) -> float:
        return 2.0 / self.p

    @property
    def nodes(self):
        return _nodes(self.level)


class DerivativeIdentities(NamedTuple):
    d2_sech_pow: np.ndarray | float  # d^2/dx^2 sech_p^(p-1)
    d2_tanh: np.ndarray | float  # d^2/dx^2 tanh_p
    d_am: np.ndarray | float  # d/dx am


def _as_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def complete_K(p: float) -> float:
    """Complete p-elliptic integral ``int_0^(pi/2) (cos t)^(-2/p) dt``."""
    return _context(float(p)).K


@functools.lru_cache(maxsize=64)
def _context(p: float) -> PContext:
    return PContext(p)


def p_elliptic_F(ctx: PContext, x):
    """Incomplete integral ``F(x) = int_0^x (cos t)^(-2/p) dt`` for ``|x| <= pi/2``."""
    arr, scalar = _as_array(x)
    ax = np.abs(arr).ravel()
    if np.any(ax > HALF_PI):
        raise DomainError("p_elliptic_F requires |x| <= pi/2")
    xi, w = ctx.nodes
    out = np.empty_like(ax)
    near = ax <= QUARTER_PI
    if near.any():
        out[near] = kern.de_sum(ax[near], -ctx.a, kern.KIND_COS, xi, w)
    if (~near).any():
        out[~near] = ctx.K - _g_full(HALF_PI - ax[~near], ctx.a, xi, w)
    out = np.copysign(out, arr.ravel()).reshape(arr.shape)
    return _ret(out, scalar)


def amplitude_pair(ctx: PContext, x):
    """Return ``(am(x), pi/2 - |am(x)|)`` with the clamping rules of :func:`amplitude`."""
    arr, _ = _as_array(x)
    ax = np.abs(arr).ravel()
    if np.any(ax > ctx.K + ctx.inv_tol):
        raise DomainError("amplitude requires |x| <= K_p(1)")
    xi, w = ctx.nodes
    tol = min(1e-3 * ctx.inv_tol, 1e-13)
    phi, comp = kern.amplitude_pair(np.minimum(ax, ctx.K), ctx.a, ctx.K, ctx._f_mid, ctx._g_mid, tol, _MAXITER, xi, w)
    phi = np.copysign(phi, arr.ravel()).reshape(arr.shape)
    return phi, comp.reshape(arr.shape)


def amplitude(ctx: PContext, x):
    """Amplitude ``am_{1,p}(x, 1)``, the inverse of :func:`p_elliptic_F`.

    Arguments exceeding ``K`` by at most ``inv_tol`` are clamped to ``+-pi/2``;
    anything beyond raises :class:`DomainError`.
    """
    arr, scalar = _as_array(x)
    phi, _ = amplitude_pair(ctx, arr)
    return _ret(phi, scalar)


def _cos_sin_from_pair(phi, comp):
    # cos/sin of |am| using whichever representation is precise
    aphi = np.abs(phi)
    use_comp = comp < QUARTER_PI
    cos_am = np.where(use_comp, np.sin(comp), np.cos(aphi))
    sin_am = np.where(use_comp, np.cos(comp), np.sin(aphi))
    return cos_am, sin_am


def _tanh_from_pair(ctx: PContext, phi, comp):
    """``int_0^|am| cos^(2-a)`` from an amplitude pair (unsigned)."""
    phi = np.abs(np.asarray(phi, dtype=float)).ravel()
    comp = np.asarray(comp, dtype=float).ravel()
    xi, w = ctx.nodes
    e = 2.0 - ctx.a
    out = np.empty_like(phi)
    direct = comp >= QUARTER_PI
    if direct.any():
        out[direct] = kern.de_sum(phi[direct], e, kern.KIND_COS, xi, w)
    if (~direct).any():
        out[~direct] = ctx.tanh_K - kern.de_sum(comp[~direct], e, kern.KIND_SIN, xi, w)
    return out


def sech_p(ctx: PContext, x):
    """p-hyperbolic secant: ``cos(am x)^(2/p)`` on ``(-K, K)``, zero elsewhere."""
    arr, scalar = _as_array(x)
    inside = np.abs(arr) < ctx.K
    out = np.zeros(arr.shape)
    if inside.any():
        phi, comp = amplitude_pair(ctx, arr[inside])
        cos_am, _ = _cos_sin_from_pair(phi, comp)
        out[inside] = np.maximum(cos_am, 0.0) ** ctx.a
    return _ret(out, scalar)


def tanh_p(ctx: PContext, x):
    """p-hyperbolic tangent ``int_0^x sech_p(t)^p dt``; constant for ``|x| >= K``."""
    arr, scalar = _as_array(x)
    flat = arr.ravel()
    out = np.full(flat.shape, ctx.tanh_K)
    inside = np.abs(flat) < ctx.K
    if inside.any():
        phi, comp = amplitude_pair(ctx, flat[inside])
        out[inside] = _tanh_from_pair(ctx, phi, comp)
    out = np.copysign(out, flat).reshape(arr.shape)
    return _ret(out, scalar)


def derivative_identities(ctx: PContext, x) -> DerivativeIdentities:
    """Closed-form right-hand sides of the derivative identities on ``(-K, K)``.

    Returns ``d2_sech_pow = -2 (p-1)/p sech (2 sech^p - 1)``,
    ``d2_tanh = -2 sin(am) cos(am)^(1+2/p)`` and ``d_am = cos(am)^(2/p)``.
    """
    arr, scalar = _as_array(x)
    if np.any(np.abs(arr) >= ctx.K):
        raise DomainError("derivative identities hold on the open interval |x| < K")
    p = ctx.p
    phi, comp = amplitude_pair(ctx, arr)
    cos_am, sin_am = _cos_sin_from_pair(phi, comp)
    sin_am = np.copysign(sin_am, phi)
    sech = cos_am ** ctx.a
    d2_sech_pow = -2.0 * (p - 1.0) / p * sech * (2.0 * sech ** p - 1.0)
    d2_tanh = -2.0 * sin_am * cos_am ** (1.0 + ctx.a)
    d_am = sech
    return DerivativeIdentities(_ret(d2_sech_pow, scalar), _ret(d2_tanh, scalar), _ret(d_am, scalar))
