"""Dense primal-dual interior point method for diagonal QPs on the simplex.

Minimizes ``0.5 * sum_a q_a x_a**2`` subject to ``A x <= b`` and
``x in simplex`` using Mehrotra's predictor-corrector. Problem sizes here are
small enough that the reduced Newton system is factorized densely.

When the feasible set has no interior (for example epsilon exactly at its
minimum) the problem is moved onto its smallest face, where implicit
equalities are explicit and the remaining inequalities have slack.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .errors import SolverError
from .maxent import find_face

STALL_ITERATIONS = 30
ROUNDOFF_FACTOR = 100.0
INFEASIBLE_FACTOR = 1e3
MIN_CENTERING = 0.3


@dataclass
class QPResult:
    x: np.ndarray
    multipliers: np.ndarray
    iterations: int
    converged: bool


def simplex_diag_qp(q, A, b, *, tol=1e-10, max_iterations=200) -> QPResult:
    """Solve the QP, retrying harder variants if a run stalls.

    Plain Mehrotra steps suit degenerate sets, the centred variant suits thin
    but full-dimensional ones, and the face reduction handles the rest.
    """
    q = np.asarray(q, float)
    A = np.atleast_2d(np.asarray(A, float))
    b = np.asarray(b, float).reshape(-1)
    n = q.size
    ones = np.ones((1, n))
    total = 0
    res = None
    for centre in (False, True):
        res = _mehrotra(q, A, b, ones, np.ones(1), tol, max_iterations, centre)
        total += res.iterations
        if res.converged:
            res.iterations = total
            return res
    try:
        face = _solve_on_face(q, A, b, tol, max_iterations)
    except (SolverError, ValueError, np.linalg.LinAlgError):
        face = None
    if face is not None:
        total += face.iterations
        if face.converged:
            face.iterations = total
            return face
    res.iterations = total
    return res


def _solve_on_face(q, A, b, tol, max_iterations):
    support, tight, x0 = find_face(A, b)
    S = np.flatnonzero(support)
    n, m = q.size, A.shape[0]
    x = np.zeros(n)
    if S.size == 1:
        x[S[0]] = 1.0
        return QPResult(x, _active_multipliers(q, A, b, x), 0, True)
    # equalities: the simplex sum and the rows tight on the whole set, reduced
    # to an orthonormal consistent system through the interior point x0
    B = np.vstack([np.ones((1, S.size)), A[tight][:, S]])
    _, sv, vt = np.linalg.svd(B, full_matrices=False)
    keep = sv > 1e-10 * sv[0]
    Eo = vt[keep]
    xs0 = x0[S] / x0[S].sum()
    eo = Eo @ xs0
    loose = np.flatnonzero(~tight)
    res = None
    for centre in (False, True):
        res = _mehrotra(q[S], A[loose][:, S], b[loose], Eo, eo, tol, max_iterations, centre)
        if res.converged:
            break
    x[S] = res.x
    return QPResult(x, _active_multipliers(q, A, b, x), res.iterations, res.converged)


def _active_multipliers(q, A, b, x):
    """Nonnegative multipliers for stationarity on the support (least squares)."""
    m = A.shape[0]
    S = np.flatnonzero(x > 0)
    active = np.flatnonzero(b - A @ x <= 1e-7 * (1.0 + np.abs(b)))
    if active.size == 0:
        return np.zeros(m)
    # q x + A^T y + eta = 0 on the support, y >= 0, eta free
    M = np.hstack([A[active][:, S].T, np.ones((S.size, 1)), -np.ones((S.size, 1))])
    sol, _ = nnls(M, -q[S] * x[S], maxiter=50 * M.shape[1])
    y = np.zeros(m)
    y[active] = sol[:active.size]
    return y


def _mehrotra(q, A, b, Eq, eq, tol, max_iterations, centre_until_feasible) -> QPResult:
    """Predictor-corrector on ``Eq x = eq``, ``A x <= b``, ``x >= 0``."""
    n = q.size
    m = A.shape[0]
    k = Eq.shape[0]
    x = np.full(n, 1.0 / n)
    s = np.maximum(b - A @ x, 1.0)
    y = np.ones(m)
    z = np.ones(n)
    eta = np.zeros(k)
    scale_b = 1.0 + np.abs(b).max(initial=0.0)
    scale_e = 1.0 + np.abs(eq).max(initial=0.0)

    def residuals(x, s, y, z, eta):
        r_d = q * x + A.T @ y + Eq.T @ eta - z
        r_p = A @ x + s - b
        r_e = Eq @ x - eq
        return r_d, r_p, r_e

    def merit(x, s, y, z, eta):
        r_d, r_p, r_e = residuals(x, s, y, z, eta)
        # dual residuals are judged against the size of the terms they sum
        scale_d = 1.0 + max(np.abs(q * x).max(), np.abs(A.T @ y).max(initial=0.0),
                            np.abs(z).max(), np.abs(Eq.T @ eta).max())
        mu = (s @ y + x @ z) / (m + n)
        return max(np.abs(r_p).max(initial=0.0) / scale_b, np.abs(r_e).max() / scale_e,
                   np.abs(r_d).max() / scale_d, mu / (1.0 + 0.5 * float(q @ (x * x))))

    best = (np.inf, x, y)
    stalled = 0
    it = 0
    for it in range(1, max_iterations + 1):
        r_d, r_p, r_e = residuals(x, s, y, z, eta)
        mu = (s @ y + x @ z) / (m + n)
        score = merit(x, s, y, z, eta)
        if score < best[0]:
            best = (score, x, y)
            stalled = 0
        else:
            stalled += 1
        if score <= tol or stalled >= STALL_ITERATIONS or not np.isfinite(score):
            break
        dmat = y / s
        M = np.diag(q + z / x) + (A.T * dmat) @ A
        K = np.zeros((n + k, n + k))
        K[:n, :n] = M
        K[:n, n:] = Eq.T
        K[n:, :n] = Eq
        # symmetric Jacobi scaling keeps the solve accurate once some
        # coordinates are pinned near zero and z / x becomes enormous
        sc = np.ones(n + k)
        sc[:n] = 1.0 / np.sqrt(np.diag(M))
        sc[n:] = 1.0 / np.sqrt(np.maximum((Eq * Eq) @ (sc[:n] ** 2), 1e-300))
        Ks = K * sc[:, None] * sc[None, :]

        def direction(r_sy, r_xz):
            rhs = np.empty(n + k)
            rhs[:n] = -r_d - A.T @ (dmat * r_p + r_sy / s) + r_xz / x
            rhs[n:] = -r_e
            try:
                sol = sc * np.linalg.solve(Ks, sc * rhs)
            except np.linalg.LinAlgError:
                sol = sc * np.linalg.lstsq(Ks, sc * rhs, rcond=None)[0]
            dx, deta = sol[:n], sol[n:]
            dy = dmat * (A @ dx + r_p) + r_sy / s
            ds = (r_sy - s * dy) / y
            dz = (r_xz - z * dx) / x
            return dx, ds, dy, dz, deta

        def max_step(v, dv):
            neg = dv < 0
            if not np.any(neg):
                return 1.0
            return min(1.0, float(np.min(-v[neg] / dv[neg])))

        # predictor
        dx, ds, dy, dz, deta = direction(-s * y, -x * z)
        ap = min(max_step(x, dx), max_step(s, ds))
        ad = min(max_step(y, dy), max_step(z, dz))
        mu_aff = ((s + ap * ds) @ (y + ad * dy) + (x + ap * dx) @ (z + ad * dz)) / (m + n)
        sigma = (mu_aff / mu) ** 3
        if centre_until_feasible and np.abs(r_p).max(initial=0.0) > INFEASIBLE_FACTOR * tol * scale_b:
            # while still primal infeasible, stay well centred: on thin
            # feasible sets an aggressive step collapses coordinates to zero
            # before the slacks are feasible and the iteration stalls
            sigma = max(sigma, MIN_CENTERING)
        # corrector
        r_sy = sigma * mu - s * y - ds * dy
        r_xz = sigma * mu - x * z - dx * dz
        dx, ds, dy, dz, deta = direction(r_sy, r_xz)
        # the dual residual contains q * x, so primal and dual must share
        # one step length for the residuals to shrink together
        a = 0.99 * min(max_step(x, dx), max_step(s, ds), max_step(y, dy), max_step(z, dz))
        x = x + a * dx
        s = s + a * ds
        y = y + a * dy
        z = z + a * dz
        eta = eta + a * deta
        x = np.maximum(x, 1e-300)
        s = np.maximum(s, 1e-300)
    score, x, y = best
    # roundoff can keep the residuals a little above tol on degenerate faces
    return QPResult(x, y, it, bool(score <= ROUNDOFF_FACTOR * tol))
