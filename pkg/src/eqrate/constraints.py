"""Deviation-gain constraint matrices for (coarse) correlated equilibria.

For a flattened joint distribution ``sigma`` the rows of ``A`` hold the
expected gain of one unilateral deviation, so ``A @ sigma <= eps`` (row-wise
against the epsilon of the row's player) is the equilibrium condition.

Row order is a pure function of the deviation: players in order, then for CE
``dev_to * k + dev_from`` and for CCE ``dev_to``. CE rows with
``dev_to == dev_from`` are kept as explicit zero rows but flagged inactive;
they never take part in violations or feasibility.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .game import JointDistribution, NormalFormGame, _check_shapes
from .lp import solve_lp


class Concept(str, enum.Enum):
    CE = "ce"
    CCE = "cce"


@dataclass(frozen=True)
class DeviationConstraints:
    concept: Concept
    matrix: np.ndarray          # [rows, |A|]
    player: np.ndarray          # owning player of each row
    dev_to: np.ndarray
    dev_from: np.ndarray        # -1 for CCE rows
    active: np.ndarray          # False for CE self-deviation rows
    shape: tuple

    @property
    def num_players(self) -> int:
        return len(self.shape)

    @property
    def row_meta(self):
        """Per-row ``(player, deviate_to, deviate_from_or_None)`` tuples."""
        return [(int(p), int(t), None if f < 0 else int(f))
                for p, t, f in zip(self.player, self.dev_to, self.dev_from)]

    def gains(self, flat_dist) -> np.ndarray:
        return self.matrix @ np.asarray(flat_dist, float)

    def rows_for(self, player: int) -> np.ndarray:
        return np.flatnonzero((self.player == player) & self.active)

    def epsilon_per_row(self, epsilon) -> np.ndarray:
        return np.asarray(epsilon, float)[self.player]

    def violation(self, flat_dist) -> np.ndarray:
        """Per-player maximum deviation gain (0 for players that cannot deviate)."""
        return self.violation_batch(np.asarray(flat_dist, float)[:, None])[:, 0]

    def violation_batch(self, flat_dists) -> np.ndarray:
        """Per-player maximum gain for each column of ``flat_dists``."""
        g = self.matrix @ np.asarray(flat_dists, float)
        out = np.zeros((self.num_players, g.shape[1]))
        for p in range(self.num_players):
            rows = self.rows_for(p)
            if rows.size:
                out[p] = g[rows].max(axis=0)
        return out


def build_constraints(game: NormalFormGame, concept) -> DeviationConstraints:
    """Stacked deviation-gain matrix of the game for CE or CCE."""
    concept = Concept(concept)
    shape = game.shape
    blocks, players, to, frm = [], [], [], []
    for p in range(game.num_players):
        g = game.payoffs[p]
        k = shape[p]
        # cce[t] = G_p(t, a_{-p}) - G_p(a) over every joint a
        cce = np.stack([np.broadcast_to(np.take(g, [t], axis=p), shape) - g
                        for t in range(k)])
        if concept is Concept.CCE:
            blocks.append(cce.reshape(k, -1))
            players += [p] * k
            to += list(range(k))
            frm += [-1] * k
        else:
            idx = np.arange(k).reshape([k if q == p else 1 for q in range(len(shape))])
            onehot = np.stack([np.broadcast_to(idx == r, shape) for r in range(k)])
            ce = cce[:, None] * onehot[None, :]
            blocks.append(ce.reshape(k * k, -1))
            players += [p] * (k * k)
            to += [t for t in range(k) for _ in range(k)]
            frm += [r for _ in range(k) for r in range(k)]
    to = np.array(to)
    frm = np.array(frm)
    active = (frm < 0) | (to != frm)
    matrix = np.vstack(blocks)
    matrix.setflags(write=False)
    return DeviationConstraints(concept, matrix, np.array(players), to, frm, active, shape)


def max_violation(game: NormalFormGame, dist: JointDistribution, concept,
                  constraints: Optional[DeviationConstraints] = None) -> np.ndarray:
    """Per-player largest expected deviation gain under ``dist``.

    ``dist`` is an epsilon-equilibrium iff the result is ``<= epsilon`` componentwise.
    """
    _check_shapes(game, dist)
    cons = constraints if constraints is not None else build_constraints(game, concept)
    return cons.violation(dist.flat)


def epsilon_uniform(game: NormalFormGame, concept) -> np.ndarray:
    """Smallest per-player epsilon that admits the uniform joint distribution."""
    concept = Concept(concept)
    total = game.num_joints
    out = np.zeros(game.num_players)
    for p in range(game.num_players):
        g = game.payoffs[p]
        other = tuple(q for q in range(game.num_players) if q != p)
        row_sums = g.sum(axis=other) if other else g.copy()
        if concept is Concept.CE:
            out[p] = (row_sums.max() - row_sums.min()) / total
        else:
            out[p] = (game.shape[p] * row_sums.max() - g.sum()) / total
    return np.maximum(out, 0.0)


def feasibility_margin(constraints: DeviationConstraints, epsilon, rows=None):
    """Solve ``min t`` s.t. ``A_c sigma - eps_c <= t`` over active rows and the simplex.

    Returns ``(t, sigma)``; ``t <= 0`` means ``epsilon`` is feasible and
    ``t < 0`` that it is strictly feasible. With no active rows ``t`` is
    ``-inf`` and sigma uniform.
    """
    if rows is None:
        rows = np.flatnonzero(constraints.active)
    n_joints = constraints.matrix.shape[1]
    if rows.size == 0:
        return -np.inf, np.full(n_joints, 1.0 / n_joints)
    A = constraints.matrix[rows]
    eps = constraints.epsilon_per_row(epsilon)[rows]
    A_ub = np.hstack([A, -np.ones((rows.size, 1))])
    A_eq = np.hstack([np.ones((1, n_joints)), np.zeros((1, 1))])
    c = np.zeros(n_joints + 1)
    c[-1] = 1.0
    bounds = [(0, None)] * n_joints + [(None, None)]
    x, t = solve_lp(c, A_ub, eps, A_eq, [1.0], bounds)
    return t, x[:-1]


def epsilon_min(game: NormalFormGame, concept, per_player: bool = False,
                constraints: Optional[DeviationConstraints] = None):
    """Minimum approximation parameter admitting a feasible joint distribution.

    By default a single scalar shared by all players is minimized and returned
    for every player. With ``per_player=True`` the shared value is then
    lowered player by player (in index order) while holding the others fixed,
    giving a Pareto-minimal vector.

    Returns ``(epsilon_vector, witness_distribution)``.
    """
    cons = constraints if constraints is not None else build_constraints(game, concept)
    n = game.num_players
    t, sigma = feasibility_margin(cons, np.zeros(n))
    if not np.isfinite(t):
        return np.zeros(n), JointDistribution.uniform(game.shape)
    eps = np.full(n, t)
    if per_player:
        rows = np.flatnonzero(cons.active)
        for p in range(n):
            eps[p], sigma = _lower_one_player(cons, rows, eps, p)
    return eps, JointDistribution.from_flat(sigma, game.shape)


def _lower_one_player(cons, rows, eps, player):
    n_joints = cons.matrix.shape[1]
    mine = rows[cons.player[rows] == player]
    other = rows[cons.player[rows] != player]
    if mine.size == 0:
        return 0.0, np.full(n_joints, 1.0 / n_joints)
    A_ub = np.vstack([
        np.hstack([cons.matrix[mine], -np.ones((mine.size, 1))]),
        np.hstack([cons.matrix[other], np.zeros((other.size, 1))]),
    ])
    b_ub = np.concatenate([np.zeros(mine.size), eps[cons.player[other]]])
    A_eq = np.hstack([np.ones((1, n_joints)), np.zeros((1, 1))])
    c = np.zeros(n_joints + 1)
    c[-1] = 1.0
    bounds = [(0, None)] * n_joints + [(None, None)]
    x, t = solve_lp(c, A_ub, b_ub, A_eq, [1.0], bounds)
    return t, x[:-1]
