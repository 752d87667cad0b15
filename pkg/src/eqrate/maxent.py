"""Maximum (weighted) entropy over a polytope inside the probability simplex.

Solves::

    maximize    -sum_a sigma_a ln(sigma_a) / w_a
    subject to  C sigma <= d,  E sigma = e,  sigma in simplex

through its Gibbs dual. Stationarity gives
``sigma_a = exp(-1 - w_a (C^T lam + E^T nu + mu)_a)`` with ``mu`` fixed by
normalization, so only one multiplier per constraint is optimized. The
bound ``lam >= 0`` is handled with a log barrier whose weight is driven to
zero; every barrier minimizer is strictly primal feasible.

When the feasible set has no strictly feasible full-support point (a face of
the simplex or implicit equalities, e.g. epsilon exactly at its minimum, the
welfare-optimal face, or optimal-strategy polytopes) the problem is first
reduced to the smallest face containing it, found by linear programming.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import nnls
from scipy.special import logsumexp

from .errors import SolverError
from .lp import solve_lp

# Coordinates and row slacks (relative to the row's largest coefficient) that
# cannot exceed this anywhere on the feasible set are treated as zero / tight.
FACE_THRESHOLD = 1e-7
# widening used when a face cannot be identified reliably, and the residual a
# face solution may leave before that fallback kicks in
RELAX_TOL = 1e-9
CLEAN_TOL = 1e-9
# (widening, pin the face through the interior point) pairs tried in order
FACE_ATTEMPTS = ((0.0, False), (0.0, True), (1e-10, False), (RELAX_TOL, False),
                 (RELAX_TOL, True))
# Newton steps allowed per barrier stage before the solve is declared stuck
MAX_STAGE_ITERATIONS = 500
# starting barrier weights, tried in turn
BARRIER_STARTS = (1.0, 1e-3, 1e-6)
UNCONSTRAINED_TOL = 1e-12


@dataclass
class MaxEntResult:
    x: np.ndarray
    multipliers: np.ndarray     # one per inequality row, >= 0
    iterations: int
    converged: bool
    reduced: bool = False
    info: dict = field(default_factory=dict)
    # log of x computed in log space, so coordinates too small for a float
    # stay finite; None when only x itself is available
    log_x: Optional[np.ndarray] = None


def unconstrained_optimum(weights: np.ndarray) -> np.ndarray:
    """Maximizer of the weighted entropy over the whole simplex."""
    if np.all(weights == weights[0]):
        return np.full(weights.size, 1.0 / weights.size)
    u = np.zeros(weights.size)
    return _gibbs(u, weights)[0]


def _gibbs(u, w, mu0=None):
    """Normalized ``exp(-1 - w (u + mu))``; returns ``(sigma, mu)``."""
    if np.all(w == 1.0):
        z = -u
        lse = logsumexp(z)
        return np.exp(z - lse), lse - 1.0
    # solve h(mu) = logsumexp(-1 - w u - w mu) = 0; h is convex and decreasing
    base = -1.0 - w * u
    mu = float(np.max(base / w)) if mu0 is None else float(mu0)
    for _ in range(200):
        z = base - w * mu
        h = logsumexp(z)
        p = np.exp(z - h)
        slope = -float(p @ w)
        step = h / slope
        mu -= step
        if abs(step) <= 1e-15 * max(1.0, abs(mu)):
            break
    z = base - w * mu
    sigma = np.exp(z)
    return sigma / sigma.sum(), mu


def _log_gibbs(u, w, mu):
    """Logarithm of the normalized Gibbs point for the normalizer ``mu``."""
    z = -1.0 - w * (u + mu)
    return z - logsumexp(z)


def _dual_value(theta, K, b, w, mu0=None):
    u = K.T @ theta
    sigma, mu = _gibbs(u, w, mu0)
    value = float(np.sum(sigma / w) + theta @ b + mu)
    return value, sigma, mu


def find_face(C, d, E=None, e=None, threshold=FACE_THRESHOLD):
    """Smallest face of ``{x in simplex : C x <= d, E x = e}``.

    Returns ``(support, tight_rows, x0)``: boolean mask of coordinates that can
    be positive, boolean mask of inequality rows that hold with equality on the
    whole set, and a point in the relative interior.
    """
    n = C.shape[1] if C is not None else E.shape[1]
    m = 0 if C is None else C.shape[0]
    E = np.zeros((0, n)) if E is None else E
    e = np.zeros(0) if e is None else np.asarray(e, float)
    C = np.zeros((0, n)) if C is None else C
    d = np.zeros(0) if d is None else np.asarray(d, float)
    kappa = 1.0 / (n + m)
    row_scale = np.maximum(np.abs(C).max(axis=1), 1e-300) if m else np.zeros(0)
    positive = np.zeros(n + m, dtype=bool)
    undecided = np.ones(n + m, dtype=bool)
    points = []
    a_eq = np.vstack([np.ones((1, n)), E])
    b_eq = np.concatenate([[1.0], e])
    while undecided.any():
        idx = np.flatnonzero(undecided)
        k = idx.size
        # variables: x (n), z (k) ; maximize sum z
        c = np.concatenate([np.zeros(n), -np.ones(k)])
        rows, rhs = [], []
        if m:
            rows.append(np.hstack([C, np.zeros((m, k))]))
            rhs.append(d)
        link = np.zeros((k, n + k))
        link_rhs = np.zeros(k)
        for j, coord in enumerate(idx):
            link[j, n + j] = 1.0
            if coord < n:
                link[j, coord] = -1.0          # z <= x_coord
            else:
                r = coord - n
                link[j, n + j] = row_scale[r]  # z * |C_r| + C_r x <= d_r
                link[j, :n] = C[r]
                link_rhs[j] = d[r]
        rows.append(link)
        rhs.append(link_rhs)
        A_ub = np.vstack(rows)
        b_ub = np.concatenate(rhs)
        A_eq = np.hstack([a_eq, np.zeros((a_eq.shape[0], k))])
        bounds = [(0, None)] * n + [(0, kappa)] * k
        sol, _ = solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds)
        z = sol[n:]
        hit = z > threshold
        points.append(sol[:n])
        if not hit.any():
            break
        positive[idx[hit]] = True
        undecided[idx[hit]] = False
        if not hit.all() and len(points) > n + m:
            break
    x0 = np.mean(points, axis=0)
    x0 = np.maximum(x0, 0.0)
    x0 /= x0.sum()
    support = positive[:n]
    tight = ~positive[n:]
    return support, tight, x0


def _orthonormal_rows(B, rel_tol=1e-10):
    if B.shape[0] == 0:
        return B
    _, s, vt = np.linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        return np.zeros((0, B.shape[1]))
    keep = s > rel_tol * max(s[0], 1e-300)
    return vt[keep]


def max_entropy(C, d, E=None, e=None, weights=None, *, gap_tol=1e-8,
                max_iterations=100_000, strictly_feasible=None) -> MaxEntResult:
    """Weighted maximum entropy point of ``{x in simplex : C x <= d, E x = e}``.

    Args:
      C, d: inequality rows and right-hand sides.
      E, e: optional equality rows.
      weights: positive per-coordinate weights ``w``; objective is
        ``-sum x ln x / w``. Defaults to ones.
      gap_tol: target for every complementary-slackness product.
      max_iterations: cap on Newton steps across all barrier stages.
      strictly_feasible: pass True when a strictly feasible full-support point
        is known to exist (skips face detection), False to force it.

    Returns:
      MaxEntResult with the optimum and nonnegative inequality multipliers.
    """
    C = np.atleast_2d(np.asarray(C, float))
    d = np.asarray(d, float).reshape(-1)
    n = C.shape[1]
    m = C.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    has_eq = E is not None and np.asarray(E).size > 0
    if has_eq:
        E = np.atleast_2d(np.asarray(E, float))
        e = np.asarray(e, float).reshape(-1)

    free = unconstrained_optimum(w)
    ok = np.all(C @ free <= d + UNCONSTRAINED_TOL * (1.0 + np.abs(d)))
    if has_eq:
        ok = ok and np.all(np.abs(E @ free - e) <= UNCONSTRAINED_TOL * (1.0 + np.abs(e)))
    if ok:
        return MaxEntResult(free, np.zeros(m), 0, True, info={"unconstrained": True},
                            log_x=np.log(free))

    if strictly_feasible is None:
        strictly_feasible = (not has_eq) and _strict_margin(C, d) > FACE_THRESHOLD
    if strictly_feasible:
        return _solve_on_face(C, d, None, None, w, np.ones(n, dtype=bool), np.zeros(m, dtype=bool),
                              None, gap_tol, max_iterations)

    Ex = E if has_eq else None
    ex = e if has_eq else None
    best = None
    for relax, pin in FACE_ATTEMPTS:
        # A set this thin can look infeasible to the LP solver in floating
        # point, and dropping coordinates that are tiny but nonzero can leave
        # the face equalities inconsistent; retry with a hair of widening or
        # with the equalities taken through the interior point instead.
        dr = d + relax * (1.0 + np.abs(d))
        er = ex
        try:
            support, tight, x0 = find_face(C, dr, Ex, er)
            res = _solve_on_face(C, dr, Ex, er, w, support, tight, x0, gap_tol, max_iterations,
                                 pin=pin)
        except (SolverError, ValueError, FloatingPointError, np.linalg.LinAlgError):
            continue
        if relax:
            res.info["relaxed"] = relax
        if _is_clean(res, C, dr, Ex, er):
            return res
        if _usable(res):
            res.info["violation"] = _violation(res.x, C, d, Ex, ex)
            if best is None or res.info["violation"] < best.info["violation"]:
                best = res
    # The face could not be pinned down reliably in floating point. Widen every
    # constraint by a hair and solve the full-support problem instead; the
    # result violates the original constraints by at most RELAX_TOL.
    Cr, dr = C, d + RELAX_TOL * (1.0 + np.abs(d))
    if has_eq:
        Cr = np.vstack([C, E, -E])
        dr = np.concatenate([dr, e + RELAX_TOL * (1.0 + np.abs(e)),
                             -e + RELAX_TOL * (1.0 + np.abs(e))])
    res = _solve_on_face(Cr, dr, None, None, w, np.ones(n, dtype=bool),
                         np.zeros(Cr.shape[0], dtype=bool), None, gap_tol, max_iterations)
    res.multipliers = res.multipliers[:m]
    res.reduced = True
    res.info["relaxed"] = True
    if not _usable(res) and best is not None:
        # nothing met the internal tolerance; hand back the least violating
        # converged candidate and let the caller judge it against its own
        return best
    return res


def _usable(res):
    return bool(res.converged and np.all(np.isfinite(res.x)) and np.all(res.x >= 0)
                and np.all(np.isfinite(res.multipliers)))


def _is_clean(res, C, d, E, e):
    x = res.x
    if not (res.converged and np.all(np.isfinite(x)) and np.all(x >= 0)):
        return False
    if np.any(C @ x - d > CLEAN_TOL * (1.0 + np.abs(d).max(initial=0.0))):
        return False
    if E is not None and np.any(np.abs(E @ x - e) > CLEAN_TOL * (1.0 + np.abs(e).max(initial=0.0))):
        return False
    return bool(np.all(np.isfinite(res.multipliers)))


def _solve_on_face(C, d, E, e, w, support, tight, x0, gap_tol, max_iterations, pin=False):
    n = C.shape[1]
    m = C.shape[0]
    has_eq = E is not None
    S = np.flatnonzero(support)
    x_full = np.zeros(n)
    if S.size == 1:
        x_full[S[0]] = 1.0
        lam = _recover_multipliers(C, d, x_full, None, S, w)
        return MaxEntResult(x_full, lam, 0, True, reduced=True)

    ws = w[S]
    Cs = C[:, S]
    # equality system on the face, made consistent through the interior point
    eq_rows, eq_rhs = [], []
    if tight.any():
        eq_rows.append(Cs[tight])
        eq_rhs.append(d[tight])
    if has_eq:
        eq_rows.append(E[:, S])
        eq_rhs.append(e)
    if eq_rows and pin:
        xs0 = x0[S] / x0[S].sum()
        eq_rhs = [np.vstack(eq_rows) @ xs0]
    if eq_rows:
        # put the interior point exactly on the equalities before using it
        xs0 = _polish(x0[S], np.vstack(eq_rows), np.concatenate(eq_rhs))
        x0 = x0.copy()
        x0[S] = xs0
        B = np.vstack(eq_rows)
        B = B - B.mean(axis=1, keepdims=True)
        Eo = _orthonormal_rows(B)
        eo = Eo @ x0[S]
    else:
        Eo = np.zeros((0, S.size))
        eo = np.zeros(0)

    # inequality rows: remove the ones direction and the equality span
    keep_rows = np.flatnonzero(~tight)
    Ck = Cs[keep_rows]
    dk = d[keep_rows] - Ck.mean(axis=1) if keep_rows.size else np.zeros(0)
    Ck = Ck - Ck.mean(axis=1, keepdims=True) if keep_rows.size else Ck
    if Eo.shape[0] and keep_rows.size:
        par = Ck @ Eo.T
        Ck = Ck - par @ Eo
        dk = dk - par @ eo
    scale = np.abs(Ck).max(axis=1) if keep_rows.size else np.zeros(0)
    live = scale > 1e-12 * max(1.0, np.abs(C).max())
    keep_rows = keep_rows[live]
    Ck = Ck[live]
    dk = dk[live]

    theta, iters, converged = _barrier_newton(Ck, dk, Eo, eo, ws, gap_tol, max_iterations)
    K = np.vstack([Ck, Eo])
    u = K.T @ theta
    sigma, mu = _gibbs(u, ws)
    x_full[S] = sigma
    log_x = np.full(n, -np.inf)
    log_x[S] = _log_gibbs(u, ws, mu)
    if eq_rows:
        # polishing an ill-conditioned equality system can push other rows
        # out; keep whichever point violates the constraints less
        polished = x_full.copy()
        polished[S] = _polish(sigma, np.vstack(eq_rows), np.concatenate(eq_rhs))
        if _violation(polished, C, d, E, e) <= _violation(x_full, C, d, E, e):
            x_full = polished
            with np.errstate(divide="ignore"):
                log_x = np.log(x_full)
    if Eo.shape[0] == 0 and support.all():
        lam = np.zeros(m)
        lam[keep_rows] = theta[:keep_rows.size]
    else:
        lam = _recover_multipliers(C, d, x_full, None, S, w)
    return MaxEntResult(x_full, lam, iters, converged, reduced=not support.all() or bool(Eo.shape[0]),
                        info={"support": int(S.size), "equalities": int(Eo.shape[0])},
                        log_x=log_x)


def _polish(x, B, rhs):
    """Minimum-norm correction putting ``x`` exactly on ``B x = rhs, sum x = 1``."""
    M = np.vstack([B, np.ones((1, x.size))])
    r = np.concatenate([rhs, [1.0]]) - M @ x
    dx = np.linalg.lstsq(M, r, rcond=None)[0]
    y = x + dx
    return y if np.all(y > 0) else x


def _violation(x, C, d, E=None, e=None):
    v = float(np.max(C @ x - d, initial=0.0))
    if E is not None:
        v = max(v, float(np.max(np.abs(E @ x - e), initial=0.0)))
    return v


def _strict_margin(C, d):
    """Largest ``s`` with ``C_r x + s |C_r| <= d_r`` for some x in the simplex."""
    m, n = C.shape
    if m == 0:
        return np.inf
    c = np.zeros(n + 1)
    c[-1] = -1.0
    scale = np.maximum(np.abs(C).max(axis=1), 1e-300)
    A_ub = np.hstack([C, scale[:, None]])
    A_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    bounds = [(0, None)] * n + [(None, 1.0)]
    try:
        _, val = solve_lp(c, A_ub, d, A_eq, [1.0], bounds)
    except SolverError:
        return -np.inf
    return -val


def _recover_multipliers(C, d, x, _unused, S, w):
    """Nonnegative multipliers consistent with stationarity on the support."""
    m = C.shape[0]
    if m == 0:
        return np.zeros(0)
    xs = np.maximum(x[S], np.finfo(float).tiny)
    grad = -(np.log(xs) + 1.0) / w[S]
    A = np.hstack([C[:, S].T, np.ones((S.size, 1)), -np.ones((S.size, 1))])
    # only rows that are active can carry weight
    slack = d - C @ x
    active = slack <= 1e-7 * (1.0 + np.abs(d))
    cols = np.concatenate([np.flatnonzero(active), [m, m + 1]])
    sol, _ = nnls(A[:, cols], grad, maxiter=50 * A.shape[1])
    lam = np.zeros(m)
    lam[cols[:-2]] = sol[:-2]
    return lam


def _barrier_newton(Cin, din, Eq, eq, w, gap_tol, max_iterations):
    """Minimize the reduced dual with a log barrier on the inequality multipliers.

    A large starting barrier weight on a very thin polytope forces enormous
    multipliers in the first stage, so a failed run restarts with smaller ones.
    """
    total = 0
    for tau0 in BARRIER_STARTS:
        theta, iters, converged = _barrier_run(Cin, din, Eq, eq, w, gap_tol,
                                               max_iterations - total, tau0)
        total += iters
        if converged or Cin.shape[0] == 0 or total >= max_iterations:
            break
    return theta, total, converged


def _barrier_run(Cin, din, Eq, eq, w, gap_tol, max_iterations, tau0):
    mi = Cin.shape[0]
    me = Eq.shape[0]
    K = np.vstack([Cin, Eq])
    b = np.concatenate([din, eq])
    if K.shape[0] == 0:
        return np.zeros(0), 0, True
    lam0 = 1.0 / np.maximum(np.abs(Cin).max(axis=1), 1e-300) if mi else np.zeros(0)
    theta = np.concatenate([lam0, np.zeros(me)])
    tau = tau0
    tau_final = gap_tol * 1e-2
    iters = 0
    mu = None
    converged = False

    def barrier(th, mu_guess):
        val, sig, mu_ = _dual_value(th, K, b, w, mu_guess)
        lam = th[:mi]
        if np.any(lam <= 0):
            return np.inf, sig, mu_
        return val - tau * np.sum(np.log(lam)), sig, mu_

    value, sigma, mu = barrier(theta, mu)
    while True:
        stage_done = False
        stage_iters = 0
        while iters < max_iterations and stage_iters < MAX_STAGE_ITERATIONS:
            iters += 1
            stage_iters += 1
            lam = theta[:mi]
            grad = b - K @ sigma
            grad[:mi] -= tau / lam
            dvec = w * sigma
            Kd = K @ dvec
            H = (K * dvec) @ K.T - np.outer(Kd, Kd) / dvec.sum()
            H[np.arange(mi), np.arange(mi)] += tau / lam ** 2
            # Jacobi scaling: barrier terms of nearly inactive rows can dwarf
            # the curvature of the rows that matter, so the ridge is applied
            # relative to each diagonal entry
            sc = 1.0 / np.sqrt(np.maximum(np.diag(H), 1e-300))
            Hs = H * sc[:, None] * sc[None, :]
            Hs[np.diag_indices_from(Hs)] += 1e-14
            try:
                step = -sc * np.linalg.solve(Hs, sc * grad)
            except np.linalg.LinAlgError:
                step = -sc * np.linalg.lstsq(Hs, sc * grad, rcond=None)[0]
            decrement = -float(grad @ step)
            if not np.isfinite(decrement):
                break
            if decrement < 0:
                step = -grad
                decrement = float(grad @ grad)
            if decrement <= 1e-13 * max(1.0, abs(value)):
                stage_done = True
                break
            t = 1.0
            neg = step[:mi] < 0
            if np.any(neg):
                t = min(1.0, 0.99 * float(np.min(-lam[neg] / step[:mi][neg])))
            accepted = False
            for _ in range(60):
                cand = theta + t * step
                cval, csig, cmu = barrier(cand, mu)
                if cval <= value - 1e-4 * t * decrement and cval < value:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                # no further progress possible in floating point
                stage_done = decrement <= 1e-9 * max(1.0, abs(value))
                break
            theta, value, sigma, mu = cand, cval, csig, cmu
        if not stage_done or iters >= max_iterations:
            break
        if tau <= tau_final:
            converged = True
            break
        tau = max(tau * 0.1, tau_final)
        value, sigma, mu = barrier(theta, mu)
    return theta, iters, converged
