"""Hot numerical kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import from the ``PELASTICA_NUMBA`` environment
variable (``0``/``false``/``off`` selects numpy) and can be switched at runtime
with :func:`set_backend` or the :func:`use_backend` context manager.  Both
paths compute the same quantities; the numba kernels are plain loops, the
numpy kernels are vectorised.
"""

from __future__ import annotations

import contextlib
import math
import os

import numpy as np
from scipy.linalg import solve_banded

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None

KIND_SING = 0  # sin(u)^-e - u^-e
KIND_COS = 1  # cos(u)^e
KIND_SIN = 2  # sin(u)^e

HALF_PI = 0.5 * math.pi
QUARTER_PI = 0.25 * math.pi
_EPS = np.finfo(float).eps


def _requested_backend() -> str:
    flag = os.environ.get("PELASTICA_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off") or not HAVE_NUMBA:
        return "numpy"
    return "numba"


_backend = _requested_backend()


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def _njit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


# --------------------------------------------------------------------------
# double-exponential quadrature nodes
# --------------------------------------------------------------------------

def de_nodes(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Tanh-sinh nodes on [0, 1] with step ``2**-level`` and |t| <= 3.5.

    Returns ``(xi, w)`` with ``sum(w * f(c * xi)) * c ~ int_0^c f``.  The
    abscissae are formed as ``1 / (1 + exp(-2q))`` so points next to the left
    endpoint keep full relative precision.
    """
    h = 2.0 ** -level
    n = int(round(3.5 / h))
    t = np.arange(-n, n + 1) * h
    q = HALF_PI * np.sinh(t)
    xi = 1.0 / (1.0 + np.exp(-2.0 * q))
    w = h * HALF_PI * np.cosh(t) / (2.0 * np.cosh(q) ** 2)
    return xi, w


# --------------------------------------------------------------------------
# integrands and weighted sums
# --------------------------------------------------------------------------

def _integrand(u, e, kind):
    if kind == 0:
        if u <= 0.0:
            return 0.0
        if u < 1e-3:
            u2 = u * u
            lr = u2 * (1.0 / 6.0 + u2 * (1.0 / 180.0 + u2 / 2835.0))
        else:
            lr = math.log(u / math.sin(u))
        return u ** (-e) * math.expm1(e * lr)
    if kind == 1:
        return math.cos(u) ** e
    sn = math.sin(u)
    if sn <= 0.0:
        return 0.0
    return sn ** e


_integrand_nb = _njit(_integrand)


def _de_sum_loop(c, e, kind, xi, w):
    out = np.empty(c.shape[0])
    for i in range(c.shape[0]):
        ci = c[i]
        acc = 0.0
        if ci > 0.0:
            for j in range(xi.shape[0]):
                acc += w[j] * _integrand_nb(ci * xi[j], e, kind)
        out[i] = ci * acc
    return out


_de_sum_nb = _njit(_de_sum_loop)


def _integrand_np(u, e, kind):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if kind == KIND_SING:
            u2 = u * u
            series = u2 * (1.0 / 6.0 + u2 * (1.0 / 180.0 + u2 / 2835.0))
            lr = np.where(u < 1e-3, series, np.log(u / np.sin(u)))
            val = u ** (-e) * np.expm1(e * lr)
            return np.where(u > 0.0, val, 0.0)
        if kind == KIND_COS:
            return np.cos(u) ** e
        sn = np.sin(u)
        return np.where(sn > 0.0, np.abs(sn) ** e, 0.0)


def _de_sum_np(c, e, kind, xi, w):
    u = c[:, None] * xi[None, :]
    return c * (_integrand_np(u, e, kind) @ w)


def de_sum(c: np.ndarray, e: float, kind: int, xi: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``int_0^c f(u) du`` for each entry of ``c`` with the integrand ``kind``."""
    c = np.ascontiguousarray(c, dtype=float)
    if _backend == "numba":
        return _de_sum_nb(c, float(e), int(kind), xi, w)
    return _de_sum_np(c, float(e), int(kind), xi, w)


# --------------------------------------------------------------------------
# inversion of the incomplete integral
# --------------------------------------------------------------------------

def _f_direct(phi, a, xi, w):
    acc = 0.0
    for j in range(xi.shape[0]):
        acc += w[j] * math.cos(phi * xi[j]) ** (-a)
    return phi * acc


def _g_of_v(v, a, xi, w):
    # G(c) with c = v**(1/(1-a)); the singular part c**(1-a)/(1-a) is exact
    c = v ** (1.0 / (1.0 - a))
    acc = 0.0
    if c > 0.0:
        for j in range(xi.shape[0]):
            acc += w[j] * _integrand_nb(c * xi[j], a, 0)
    return v / (1.0 - a) + c * acc


_f_direct_nb = _njit(_f_direct)
_g_of_v_nb = _njit(_g_of_v)


def _illinois_scalar(branch, target, lo, hi, a, tol, maxiter, xi, w):
    if branch == 0:
        flo = _f_direct_nb(lo, a, xi, w) - target
        fhi = _f_direct_nb(hi, a, xi, w) - target
    else:
        flo = _g_of_v_nb(lo, a, xi, w) - target
        fhi = _g_of_v_nb(hi, a, xi, w) - target
    if flo >= 0.0:
        return lo
    if fhi <= 0.0:
        return hi
    side = 0
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        x = hi - fhi * (hi - lo) / (fhi - flo)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        if branch == 0:
            fx = _f_direct_nb(x, a, xi, w) - target
        else:
            fx = _g_of_v_nb(x, a, xi, w) - target
        if abs(fx) <= tol:
            break
        if fx < 0.0:
            lo, flo = x, fx
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = x, fx
            if side == 1:
                flo *= 0.5
            side = 1
        if hi - lo <= 4.0 * 2.220446049250313e-16 * hi:
            break
    return x


_illinois_scalar_nb = _njit(_illinois_scalar)


def _amp_loop(y, a, K, fmid, gmid, tol, maxiter, xi, w):
    n = y.shape[0]
    phi = np.empty(n)
    comp = np.empty(n)
    vmax = (0.25 * math.pi) ** (1.0 - a)
    for i in range(n):
        yi = y[i]
        if yi <= 0.0:
            phi[i] = 0.0
            comp[i] = 0.5 * math.pi
        elif yi >= K:
            phi[i] = 0.5 * math.pi
            comp[i] = 0.0
        elif yi <= fmid:
            ph = _illinois_scalar_nb(0, yi, 0.0, 0.25 * math.pi, a, tol, maxiter, xi, w)
            phi[i] = ph
            comp[i] = 0.5 * math.pi - ph
        else:
            z = K - yi
            if z >= gmid:
                c = 0.25 * math.pi
            else:
                v = _illinois_scalar_nb(1, z, 0.0, vmax, a, tol, maxiter, xi, w)
                c = v ** (1.0 / (1.0 - a))
            comp[i] = c
            phi[i] = 0.5 * math.pi - c
    return phi, comp


_amp_nb = _njit(_amp_loop)


def _illinois_vec(f, target, lo, hi, tol, maxiter):
    lo = lo.copy()
    hi = hi.copy()
    flo = f(lo) - target
    fhi = f(hi) - target
    x = 0.5 * (lo + hi)
    done = (flo >= 0.0) | (fhi <= 0.0)
    x = np.where(flo >= 0.0, lo, np.where(fhi <= 0.0, hi, x))
    side = np.zeros(lo.shape, dtype=int)
    for _ in range(maxiter):
        act = ~done
        if not act.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = hi[act] - fhi[act] * (hi[act] - lo[act]) / (fhi[act] - flo[act])
        bad = ~((lo[act] < xs) & (xs < hi[act]))
        xs[bad] = 0.5 * (lo[act] + hi[act])[bad]
        fx = f(xs) - target[act]
        x[act] = xs
        idx = np.flatnonzero(act)
        conv = np.abs(fx) <= tol
        neg = (fx < 0.0) & ~conv
        pos = (fx >= 0.0) & ~conv
        i_neg = idx[neg]
        i_pos = idx[pos]
        lo[i_neg] = xs[neg]
        flo[i_neg] = fx[neg]
        fhi[i_neg[side[i_neg] == -1]] *= 0.5
        side[i_neg] = -1
        hi[i_pos] = xs[pos]
        fhi[i_pos] = fx[pos]
        flo[i_pos[side[i_pos] == 1]] *= 0.5
        side[i_pos] = 1
        done[idx[conv]] = True
        done |= hi - lo <= 4.0 * _EPS * hi
    return x


def _amp_np(y, a, K, fmid, gmid, tol, maxiter, xi, w):
    phi = np.where(y >= K, HALF_PI, 0.0)
    comp = np.where(y >= K, 0.0, HALF_PI)
    inner = (y > 0.0) & (y < K)
    near = inner & (y <= fmid)
    far = inner & (y > fmid)
    if near.any():
        f = lambda t: _de_sum_np(t, -a, KIND_COS, xi, w)
        target = y[near]
        ph = _illinois_vec(f, target, np.zeros_like(target), np.full_like(target, QUARTER_PI), tol, maxiter)
        phi[near] = ph
        comp[near] = HALF_PI - ph
    if far.any():
        z = K - y[far]
        c = np.full_like(z, QUARTER_PI)
        solve = z < gmid
        if solve.any():
            def g(v):
                cc = v ** (1.0 / (1.0 - a))
                return v / (1.0 - a) + _de_sum_np(cc, a, KIND_SING, xi, w)

            vmax = QUARTER_PI ** (1.0 - a)
            zt = z[solve]
            v = _illinois_vec(g, zt, np.zeros_like(zt), np.full_like(zt, vmax), tol, maxiter)
            c[solve] = v ** (1.0 / (1.0 - a))
        comp[far] = c
        phi[far] = HALF_PI - c
    return phi, comp


def amplitude_pair(y, a, K, fmid, gmid, tol, maxiter, xi, w):
    """Solve ``F(phi) = y`` for ``0 <= y <= K``; returns ``(phi, pi/2 - phi)``.

    Both members are returned because the complement carries the precision
    that the amplitude loses next to ``pi/2``.
    """
    y = np.ascontiguousarray(y, dtype=float)
    if _backend == "numba":
        return _amp_nb(y, float(a), float(K), float(fmid), float(gmid), float(tol), int(maxiter), xi, w)
    return _amp_np(y, float(a), float(K), float(fmid), float(gmid), float(tol), int(maxiter), xi, w)


# --------------------------------------------------------------------------
# discrete p-bending energy of an equilateral polyline
# --------------------------------------------------------------------------

def _energy_grad_loop(X, e, p, want_grad):
    m = X.shape[0] - 1
    d = X.shape[1]
    G = np.zeros_like(X)
    gD = np.zeros((m, d))
    U = np.empty((m, d))
    lens = np.empty(m)
    for i in range(m):
        s2 = 0.0
        for k in range(d):
            U[i, k] = X[i + 1, k] - X[i, k]
            s2 += U[i, k] * U[i, k]
        ln = math.sqrt(s2)
        lens[i] = ln
        for k in range(d):
            U[i, k] /= ln
    total = 0.0
    wv = np.empty(d)
    zv = np.empty(d)
    gu = np.empty(d)
    gv = np.empty(d)
    for i in range(1, m):
        nw = 0.0
        nz = 0.0
        for k in range(d):
            wv[k] = U[i - 1, k] - U[i, k]
            zv[k] = U[i - 1, k] + U[i, k]
            nw += wv[k] * wv[k]
            nz += zv[k] * zv[k]
        if nz == 0.0:
            return math.inf, G
        t = math.sqrt(nw / nz)
        tp = t ** p
        total += tp
        if want_grad:
            tpm2 = t ** (p - 2.0)
            gu_dot = 0.0
            gv_dot = 0.0
            for k in range(d):
                gu[k] = p * (tpm2 * wv[k] - tp * zv[k]) / nz
                gv[k] = p * (-tpm2 * wv[k] - tp * zv[k]) / nz
                gu_dot += gu[k] * U[i - 1, k]
                gv_dot += gv[k] * U[i, k]
            for k in range(d):
                gD[i - 1, k] += (gu[k] - gu_dot * U[i - 1, k]) / lens[i - 1]
                gD[i, k] += (gv[k] - gv_dot * U[i, k]) / lens[i]
    scale = 2.0 ** p * e ** (1.0 - p)
    if want_grad:
        for i in range(m):
            for k in range(d):
                G[i, k] -= scale * gD[i, k]
                G[i + 1, k] += scale * gD[i, k]
    return scale * total, G


_energy_grad_nb = _njit(_energy_grad_loop)


def _energy_grad_np(X, e, p, want_grad):
    D = np.diff(X, axis=0)
    lens = np.linalg.norm(D, axis=1)
    U = D / lens[:, None]
    u = U[:-1]
    v = U[1:]
    wv = u - v
    zv = u + v
    nw = np.einsum("ij,ij->i", wv, wv)
    nz = np.einsum("ij,ij->i", zv, zv)
    G = np.zeros_like(X)
    if np.any(nz == 0.0):
        return math.inf, G
    t = np.sqrt(nw / nz)
    tp = t ** p
    scale = 2.0 ** p * e ** (1.0 - p)
    energy = scale * float(tp.sum())
    if not want_grad:
        return energy, G
    tpm2 = t ** (p - 2.0)
    gu = p * (tpm2[:, None] * wv - tp[:, None] * zv) / nz[:, None]
    gv = p * (-tpm2[:, None] * wv - tp[:, None] * zv) / nz[:, None]
    gu -= np.einsum("ij,ij->i", gu, u)[:, None] * u
    gv -= np.einsum("ij,ij->i", gv, v)[:, None] * v
    gD = np.zeros_like(D)
    gD[:-1] += gu / lens[:-1, None]
    gD[1:] += gv / lens[1:, None]
    G[:-1] -= scale * gD
    G[1:] += scale * gD
    return energy, G


def polyline_energy_grad(X: np.ndarray, edge_len: float, p: float, want_grad: bool = True):
    """Turning-angle p-energy ``sum (2 tan(theta_i/2)/h)^p h`` and its gradient.

    Returns ``(energy, gradient)``; the energy is ``inf`` when some vertex
    folds back on itself (turning angle pi).
    """
    X = np.ascontiguousarray(X, dtype=float)
    if _backend == "numba":
        return _energy_grad_nb(X, float(edge_len), float(p), bool(want_grad))
    return _energy_grad_np(X, float(edge_len), float(p), bool(want_grad))


# --------------------------------------------------------------------------
# equal-edge constraint machinery (endpoints fixed, interior vertices free)
# --------------------------------------------------------------------------
# constraints c_i = |X_{i+1} - X_i|^2 - h^2 for i = 0..m-1

def _gram_loop(D, reg):
    m = D.shape[0]
    diag = np.empty(m)
    off = np.zeros(m)  # off[i] couples constraint i and i+1
    for i in range(m):
        s = 0.0
        for k in range(D.shape[1]):
            s += D[i, k] * D[i, k]
        mult = 0.0
        if i >= 1:
            mult += 1.0
        if i + 1 <= m - 1:
            mult += 1.0
        diag[i] = 4.0 * s * mult + reg
        if i + 1 < m:
            dot = 0.0
            for k in range(D.shape[1]):
                dot += D[i, k] * D[i + 1, k]
            off[i] = -4.0 * dot
    return diag, off


def _thomas(diag, off, rhs):
    # symmetric tridiagonal solve, off[i] couples rows i and i+1
    m = diag.shape[0]
    cp = np.empty(m)
    dp = np.empty(m)
    cp[0] = off[0] / diag[0] if m > 1 else 0.0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, m):
        den = diag[i] - off[i - 1] * cp[i - 1]
        cp[i] = off[i] / den if i < m - 1 else 0.0
        dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / den
    x = np.empty(m)
    x[m - 1] = dp[m - 1]
    for i in range(m - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def _apply_j(D, V):
    # (J V)_i = 2 D_i . (V_{i+1} - V_i) with V_0 = V_m = 0 (V has m+1 rows)
    m = D.shape[0]
    out = np.empty(m)
    for i in range(m):
        acc = 0.0
        for k in range(D.shape[1]):
            acc += D[i, k] * (V[i + 1, k] - V[i, k])
        out[i] = 2.0 * acc
    return out


def _apply_jt(D, lam):
    m = D.shape[0]
    out = np.zeros((m + 1, D.shape[1]))
    for i in range(m):
        for k in range(D.shape[1]):
            out[i, k] -= 2.0 * lam[i] * D[i, k]
            out[i + 1, k] += 2.0 * lam[i] * D[i, k]
    for k in range(D.shape[1]):
        out[0, k] = 0.0
        out[m, k] = 0.0
    return out


_gram_nb = _njit(_gram_loop)
_thomas_nb = _njit(_thomas)
_apply_j_nb = _njit(_apply_j)
_apply_jt_nb = _njit(_apply_jt)


def _project_loop(X, V, reg):
    D = np.empty((X.shape[0] - 1, X.shape[1]))
    for i in range(D.shape[0]):
        for k in range(X.shape[1]):
            D[i, k] = X[i + 1, k] - X[i, k]
    V0 = V.copy()
    for k in range(V.shape[1]):
        V0[0, k] = 0.0
        V0[-1, k] = 0.0
    diag, off = _gram_nb(D, reg)
    lam = _thomas_nb(diag, off, _apply_j_nb(D, V0))
    return V0 - _apply_jt_nb(D, lam)


def _retract_loop(X, h, tol, max_sweeps, reg, polish):
    Y = X.copy()
    m = Y.shape[0] - 1
    D = np.empty((m, Y.shape[1]))
    r = np.empty(m)
    extra = 0
    for sweep in range(max_sweeps + polish + 1):
        worst = 0.0
        for i in range(m):
            s = 0.0
            for k in range(Y.shape[1]):
                D[i, k] = Y[i + 1, k] - Y[i, k]
                s += D[i, k] * D[i, k]
            r[i] = s - h * h
            rel = abs(math.sqrt(s) - h) / h
            if rel > worst:
                worst = rel
        if worst <= tol:
            if extra >= polish or worst == 0.0:
                return Y, sweep, worst
            extra += 1
        elif sweep >= max_sweeps or not math.isfinite(worst):
            break
        diag, off = _gram_nb(D, reg)
        lam = _thomas_nb(diag, off, r)
        Y -= _apply_jt_nb(D, lam)
    return Y, -1, worst


_project_nb = _njit(_project_loop)
_retract_nb = _njit(_retract_loop)


def _gram_np(D, reg):
    m = D.shape[0]
    sq = np.einsum("ij,ij->i", D, D)
    mult = np.full(m, 2.0)
    mult[0] -= 1.0
    mult[-1] -= 1.0
    diag = 4.0 * sq * mult + reg
    off = np.zeros(m)
    off[:-1] = -4.0 * np.einsum("ij,ij->i", D[:-1], D[1:])
    return diag, off


def _solve_np(diag, off, rhs):
    m = diag.shape[0]
    if m == 1:
        return rhs / diag
    ab = np.zeros((3, m))
    ab[0, 1:] = off[:-1]
    ab[1] = diag
    ab[2, :-1] = off[:-1]
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _jt_np(D, lam):
    out = np.zeros((D.shape[0] + 1, D.shape[1]))
    f = 2.0 * lam[:, None] * D
    out[:-1] -= f
    out[1:] += f
    out[0] = 0.0
    out[-1] = 0.0
    return out


def _project_np(X, V, reg):
    D = np.diff(X, axis=0)
    V0 = V.copy()
    V0[0] = 0.0
    V0[-1] = 0.0
    jv = 2.0 * np.einsum("ij,ij->i", D, np.diff(V0, axis=0))
    diag, off = _gram_np(D, reg)
    return V0 - _jt_np(D, _solve_np(diag, off, jv))


def _retract_np(X, h, tol, max_sweeps, reg, polish):
    Y = X.copy()
    worst = math.inf
    extra = 0
    for sweep in range(max_sweeps + polish + 1):
        D = np.diff(Y, axis=0)
        sq = np.einsum("ij,ij->i", D, D)
        worst = float(np.max(np.abs(np.sqrt(sq) - h)) / h)
        if worst <= tol:
            if extra >= polish or worst == 0.0:
                return Y, sweep, worst
            extra += 1
        elif sweep >= max_sweeps or not math.isfinite(worst):
            break
        diag, off = _gram_np(D, reg)
        Y = Y - _jt_np(D, _solve_np(diag, off, sq - h * h))
    return Y, -1, worst


def project_tangent(X: np.ndarray, V: np.ndarray, reg: float = 0.0) -> np.ndarray:
    """Project a vertex field onto the tangent space of the edge constraints.

    Endpoint rows of the result are zero.  ``reg`` is a small Tikhonov shift
    for the (singular) fully stretched configuration.
    """
    X = np.ascontiguousarray(X, dtype=float)
    V = np.ascontiguousarray(V, dtype=float)
    proj = _project_nb if _backend == "numba" else _project_np
    # a second pass removes the normal residue left by the ill-conditioned
    # Gram solve when V is dominated by its normal component
    return proj(X, proj(X, V, float(reg)), float(reg))


def retract(X: np.ndarray, edge_len: float, tol: float, max_sweeps: int, reg: float = 0.0, polish: int = 1):
    """Gauss-Newton projection onto ``{|X_{i+1}-X_i| = edge_len}`` with fixed ends.

    Once the relative violation is below ``tol``, ``polish`` further sweeps
    push it down to round-off.  Returns ``(Y, sweeps, worst_relative_violation)``;
    ``sweeps == -1`` flags failure to converge within ``max_sweeps``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    if _backend == "numba":
        Y, sweeps, worst = _retract_nb(X, float(edge_len), float(tol), int(max_sweeps), float(reg), int(polish))
    else:
        Y, sweeps, worst = _retract_np(X, float(edge_len), float(tol), int(max_sweeps), float(reg), int(polish))
    return Y, int(sweeps), float(worst)
