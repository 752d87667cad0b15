"""Equilibrium selection over the epsilon-(C)CE polytope.

Three selection criteria are offered: maximum entropy (the default, which
always yields full support above the minimum epsilon), maximum Gini and
maximum welfare with an entropy tie-break. Two-player constant-sum games
additionally get the maximum entropy Nash equilibrium (MENE).

Example:
    >>> from eqrate.standard_games import biased_rps
    >>> game = biased_rps()
    >>> eps = resolve_epsilon(game, "cce", EpsilonMode.eps_min_plus())
    >>> sol = solve_max_entropy(game, "cce", eps)
    >>> [round(m, 3) for m in sol.dist.marginal(0)]
    [0.2, 0.5, 0.3]
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constraints import (Concept, DeviationConstraints, build_constraints, epsilon_min,
                          epsilon_uniform, feasibility_margin)
from .errors import ConvergenceError, InfeasibleEpsilonError, SolverError
from .game import JointDistribution, NormalFormGame, outer_product
from .lp import solve_lp
from .maxent import FACE_THRESHOLD, max_entropy
from .qp import simplex_diag_qp

log = logging.getLogger(__name__)

MENE = "mene-2p0s"
CONSTANT_SUM_TOL = 1e-9
# Slack added to right-hand sides that are tight by construction (an LP
# optimum), well below the face-detection threshold so they stay equalities.
_TIGHT_SLACK = 1e-11
_WELFARE_SLACK = 5e-10


class Selection(str, enum.Enum):
    MAX_ENTROPY = "max-entropy"
    MAX_GINI = "max-gini"
    MAX_WELFARE = "max-welfare"


@dataclass(frozen=True)
class EpsilonMode:
    """How the approximation parameter is chosen.

    ``kind`` is ``"absolute"`` (``values`` per player, or a single shared
    value), ``"normalized"`` (``rho`` times the uniform epsilon) or
    ``"eps-min-plus"`` (minimum epsilon plus ``max(delta_abs, delta_rel * |eps_min|)``).
    """

    kind: str = "eps-min-plus"
    values: Optional[tuple] = None
    rho: Optional[float] = None
    delta_abs: float = 1e-6
    delta_rel: float = 1e-4

    def __post_init__(self):
        if self.kind not in ("absolute", "normalized", "eps-min-plus"):
            raise ValueError(f"unknown epsilon mode {self.kind!r}")
        if self.kind == "absolute" and not self.values:
            raise ValueError("absolute epsilon mode needs values")
        if self.kind == "normalized" and (self.rho is None or self.rho < 0):
            raise ValueError("normalized epsilon mode needs rho >= 0")
        if self.kind == "eps-min-plus" and (self.delta_abs < 0 or self.delta_rel < 0
                                            or self.delta_abs + self.delta_rel <= 0):
            raise ValueError("eps-min-plus needs a positive offset")

    @classmethod
    def absolute(cls, values):
        return cls("absolute", values=tuple(np.atleast_1d(np.asarray(values, float)).tolist()))

    @classmethod
    def normalized(cls, rho: float):
        return cls("normalized", rho=float(rho))

    @classmethod
    def eps_min_plus(cls, delta_abs: float = 1e-6, delta_rel: float = 1e-4):
        return cls("eps-min-plus", delta_abs=float(delta_abs), delta_rel=float(delta_rel))


@dataclass
class SolveConfig:
    concept: str = "cce"
    selection: Selection = Selection.MAX_ENTROPY
    epsilon_mode: EpsilonMode = field(default_factory=EpsilonMode)
    weights: Optional[np.ndarray] = None
    constraint_tol: float = 1e-8
    duality_gap_tol: float = 1e-8
    max_iterations: int = 100_000

    def __post_init__(self):
        self.concept = self.concept.value if isinstance(self.concept, Concept) else str(self.concept)
        if self.concept not in ("ce", "cce", MENE):
            raise ValueError(f"unknown concept {self.concept!r}")
        self.selection = Selection(self.selection)
        if self.constraint_tol <= 0:
            raise ValueError("constraint_tol must be positive")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, float)
            if np.any(~(self.weights > 0)):
                raise ValueError("weights must be positive")


@dataclass
class EquilibriumSolution:
    dist: JointDistribution
    achieved_violation: np.ndarray
    objective_value: float
    dual_variables: np.ndarray
    iterations: int
    converged: bool
    epsilon: Optional[np.ndarray] = None
    concept: str = "cce"
    selection: str = Selection.MAX_ENTROPY.value
    # max-entropy only: log-probabilities from the Gibbs form, finite on the
    # whole support even where ``dist`` underflows to zero
    log_probs: Optional[np.ndarray] = None


def resolve_epsilon(game: NormalFormGame, concept, epsilon_mode: EpsilonMode,
                    constraints: Optional[DeviationConstraints] = None) -> np.ndarray:
    """Per-player epsilon for the given mode."""
    n = game.num_players
    if epsilon_mode.kind == "absolute":
        vals = np.asarray(epsilon_mode.values, float)
        if vals.size == 1:
            return np.full(n, vals[0])
        if vals.size != n:
            raise ValueError(f"expected {n} epsilon values, got {vals.size}")
        return vals.copy()
    if epsilon_mode.kind == "normalized":
        return epsilon_mode.rho * epsilon_uniform(game, concept)
    em, _ = epsilon_min(game, concept, constraints=constraints)
    delta = np.maximum(epsilon_mode.delta_abs, epsilon_mode.delta_rel * np.abs(em))
    return em + delta


def _setup(game, concept, epsilon, config):
    config = config or SolveConfig(concept=concept)
    cons = build_constraints(game, concept)
    eps = np.broadcast_to(np.asarray(epsilon, float), (game.num_players,)).copy()
    t, _ = feasibility_margin(cons, eps)
    if t > config.constraint_tol:
        em, _ = epsilon_min(game, concept, constraints=cons)
        raise InfeasibleEpsilonError(
            f"epsilon {eps.tolist()} is below the minimum {em.tolist()}", eps, em)
    rows = np.flatnonzero(cons.active)
    weights = None if config.weights is None else np.broadcast_to(
        config.weights, game.shape).reshape(-1)
    b = cons.epsilon_per_row(eps)[rows]
    if t > -FACE_THRESHOLD:
        # on (or within tolerance of) the minimum: widen by the LP's own margin
        # so the face problems downstream stay feasible
        b = b + max(t, 0.0) + _TIGHT_SLACK * (1.0 + np.abs(b))
    return config, cons, eps, rows, b, weights


def _finish(game, cons, eps, x, duals, objective, iters, converged, config, selection):
    dist = JointDistribution.from_flat(x, game.shape)
    viol = cons.violation(dist.flat)
    if converged and np.any(viol > eps + config.constraint_tol):
        log.warning("solution violates epsilon by %.3g", float(np.max(viol - eps)))
        converged = False
    if not converged:
        raise ConvergenceError(
            f"{selection} solve did not converge within {config.max_iterations} iterations")
    full = np.zeros(cons.matrix.shape[0])
    full[np.flatnonzero(cons.active)] = np.maximum(duals, 0.0)
    return EquilibriumSolution(dist, viol, float(objective), full, int(iters), True,
                               eps, cons.concept.value, selection)


def _weighted_entropy(x, w):
    pos = x > 0
    wt = 1.0 if w is None else w[pos]
    return float(-np.sum(x[pos] * np.log(x[pos]) / wt))


def solve_max_entropy(game: NormalFormGame, concept, epsilon,
                      config: Optional[SolveConfig] = None) -> EquilibriumSolution:
    """Maximum (weighted) entropy epsilon-(C)CE.

    Raises:
      InfeasibleEpsilonError: if no joint distribution satisfies ``epsilon``.
      ConvergenceError: if the dual solve does not reach the requested precision.
    """
    config, cons, eps, rows, b, w = _setup(game, concept, epsilon, config)
    if game.num_joints == 1 or rows.size == 0:
        x = np.ones(1) if game.num_joints == 1 else np.full(game.num_joints, 1.0 / game.num_joints)
        return _finish(game, cons, eps, x, np.zeros(rows.size), 0.0, 0, True, config,
                       Selection.MAX_ENTROPY.value)
    res = max_entropy(cons.matrix[rows], b, weights=w,
                      gap_tol=config.duality_gap_tol, max_iterations=config.max_iterations)
    sol = _finish(game, cons, eps, res.x, res.multipliers, _weighted_entropy(res.x, w),
                  res.iterations, res.converged, config, Selection.MAX_ENTROPY.value)
    if res.log_x is not None:
        sol.log_probs = res.log_x.reshape(game.shape)
    return sol


def solve_max_gini(game: NormalFormGame, concept, epsilon,
                   config: Optional[SolveConfig] = None) -> EquilibriumSolution:
    """Maximum Gini impurity epsilon-(C)CE, i.e. minimum ``sum sigma**2 / w``."""
    config, cons, eps, rows, b, w = _setup(game, concept, epsilon, config)
    n = game.num_joints
    w = np.ones(n) if w is None else w
    free = w / w.sum()
    A = cons.matrix[rows]
    if n == 1 or np.all(A @ free <= b + 1e-12 * (1 + np.abs(b))):
        x = np.ones(1) if n == 1 else free
        return _finish(game, cons, eps, x, np.zeros(rows.size), 1.0 - float(np.sum(x * x)),
                       0, True, config, Selection.MAX_GINI.value)
    res = simplex_diag_qp(2.0 / w, A, b, tol=min(config.duality_gap_tol, 1e-10),
                          max_iterations=min(config.max_iterations, 500))
    x = np.maximum(res.x, 0.0)
    x /= x.sum()
    return _finish(game, cons, eps, x, res.multipliers, 1.0 - float(np.sum(x * x)),
                   res.iterations, res.converged, config, Selection.MAX_GINI.value)


def solve_max_welfare(game: NormalFormGame, concept, epsilon,
                      config: Optional[SolveConfig] = None) -> EquilibriumSolution:
    """Maximum total welfare, ties broken by maximum entropy over the optimal face."""
    config, cons, eps, rows, b, w = _setup(game, concept, epsilon, config)
    n = game.num_joints
    welfare = game.payoffs.sum(axis=0).reshape(-1)
    A = cons.matrix[rows]
    if n == 1:
        return _finish(game, cons, eps, np.ones(1), np.zeros(rows.size), welfare[0], 0, True,
                       config, Selection.MAX_WELFARE.value)
    # a slightly relaxed copy keeps the LP feasible when epsilon sits on its minimum
    b_lp = b + _TIGHT_SLACK * (1.0 + np.abs(b))
    x_lp, neg = solve_lp(-welfare, A if rows.size else None, b_lp if rows.size else None,
                         np.ones((1, n)), [1.0], [(0, None)] * n)
    best = -neg
    row = -welfare[None, :]
    # the LP solution may overshoot by its feasibility tolerance, so the welfare
    # floor gets a larger allowance that still stays below the face threshold
    rhs = np.array([-best + _WELFARE_SLACK * max(1.0, abs(best))])
    C = np.vstack([A, row]) if rows.size else row
    d = np.concatenate([b_lp, rhs]) if rows.size else rhs
    res = max_entropy(C, d, weights=w, gap_tol=config.duality_gap_tol,
                      max_iterations=config.max_iterations, strictly_feasible=False)
    x = res.x
    value = float(welfare @ x)
    return _finish(game, cons, eps, x, res.multipliers[:rows.size], value, res.iterations,
                   res.converged, config, Selection.MAX_WELFARE.value)


def is_constant_sum(game: NormalFormGame, tol: float = CONSTANT_SUM_TOL) -> bool:
    total = game.payoffs.sum(axis=0)
    return bool(np.ptp(total) <= tol)


def game_value(payoff: np.ndarray):
    """Value and an optimal mixed strategy of the row player of a matrix game."""
    m, k = payoff.shape
    # variables (x, v): maximize v s.t. payoff^T x >= v
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-payoff.T, np.ones((k, 1))])
    A_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
    bounds = [(0, None)] * m + [(None, None)]
    x, neg = solve_lp(c, A_ub, np.zeros(k), A_eq, [1.0], bounds)
    return -neg, x[:-1]


def _max_entropy_security(payoff, value, config):
    """Max-entropy point of the row player's optimal strategy set."""
    scale = max(1.0, float(np.abs(payoff).max()))
    C = -payoff.T
    d = np.full(payoff.shape[1], -value + _TIGHT_SLACK * scale)
    return max_entropy(C, d, gap_tol=config.duality_gap_tol,
                       max_iterations=config.max_iterations, strictly_feasible=False)


def solve_mene_2p0s(game: NormalFormGame,
                    config: Optional[SolveConfig] = None) -> EquilibriumSolution:
    """Maximum entropy Nash equilibrium of a two-player constant-sum game.

    The objective value reported is the row player's game value and the dual
    variables are the multipliers of both players' security constraints.

    Raises:
      SolverError: if the game is not two-player constant-sum.
    """
    config = config or SolveConfig(concept=MENE)
    if game.num_players != 2:
        raise SolverError("MENE requires a two-player game")
    if not is_constant_sum(game):
        raise SolverError("MENE requires a constant-sum game")
    g1, g2 = game.payoffs
    v1, _ = game_value(g1)
    v2, _ = game_value(g2.T)
    r1 = _max_entropy_security(g1, v1, config)
    r2 = _max_entropy_security(g2.T, v2, config)
    dist = outer_product([r1.x, r2.x])
    cons = build_constraints(game, Concept.CE)
    viol = cons.violation(dist.flat)
    converged = r1.converged and r2.converged
    if not converged:
        raise ConvergenceError("MENE marginal solve did not converge")
    duals = np.concatenate([r1.multipliers, r2.multipliers])
    return EquilibriumSolution(dist, viol, float(v1), np.maximum(duals, 0.0),
                               r1.iterations + r2.iterations, True, np.zeros(2), MENE,
                               Selection.MAX_ENTROPY.value)


_SELECTORS = {
    Selection.MAX_ENTROPY: solve_max_entropy,
    Selection.MAX_GINI: solve_max_gini,
    Selection.MAX_WELFARE: solve_max_welfare,
}


def solve(game: NormalFormGame, config: Optional[SolveConfig] = None,
          epsilon=None) -> EquilibriumSolution:
    """Resolve epsilon from the config (unless given) and run its selection."""
    config = config or SolveConfig()
    if config.concept == MENE:
        return solve_mene_2p0s(game, config)
    if epsilon is None:
        epsilon = resolve_epsilon(game, config.concept, config.epsilon_mode)
    return _SELECTORS[config.selection](game, config.concept, epsilon, config)
