"""Payoff ratings, uniform and mass ratings, rankings and epsilon sweeps.

The payoff rating of a strategy is its expected payoff when the joint
distribution is conditioned on the strategy being played::

    r_p(a_p) = sum_{a_-p} G_p(a_p, a_-p) * sigma(a_-p | a_p)

Strategies with (near) zero marginal mass have no conditional and therefore
no rating; :class:`UndefinedPolicy` selects what to do about them.
"""

from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .constraints import epsilon_min, epsilon_uniform
from .errors import EqRateError
from .game import DEFAULT_ZERO_THRESHOLD, JointDistribution, NormalFormGame, _check_shapes
from .solvers import EpsilonMode, EquilibriumSolution, MENE, Selection, SolveConfig, solve

log = logging.getLogger(__name__)

DEFAULT_GROUP_TOL_REL = 1e-4


class UndefinedPolicy(str, enum.Enum):
    MARK = "mark"
    MIN_PAYOFF = "min-payoff"
    PRUNE = "prune"


@dataclass
class RatingReport:
    """Per-player ratings plus the distribution and settings that produced them.

    Attributes:
      labels: strategy labels per player.
      ratings: rating per strategy in payoff units (NaN when undefined and marked).
      defined: whether the rating came from a well-defined conditional.
      tiers: 0 for ratings under the main distribution; pruned sub-game ratings
        carry the depth of the sub-game and rank below every lower tier.
      dist: joint distribution the ratings were computed under.
      expected_payoffs: each player's expected payoff under ``dist``.
      payoff_ranges: ``(min, max)`` of each player's payoffs.
      meta: concept, selection and epsilon, when known.
    """

    labels: List[List[str]]
    ratings: List[np.ndarray]
    defined: List[np.ndarray]
    tiers: List[np.ndarray]
    dist: JointDistribution
    expected_payoffs: np.ndarray
    payoff_ranges: List[tuple]
    meta: dict = field(default_factory=dict)

    @property
    def num_players(self) -> int:
        return len(self.ratings)

    def masses(self) -> List[np.ndarray]:
        return mass_rating(self.dist)

    def rows(self):
        """Flat ``(player, strategy, rating, defined, mass)`` records."""
        masses = self.masses()
        for p in range(self.num_players):
            for i, label in enumerate(self.labels[p]):
                yield p, label, float(self.ratings[p][i]), bool(self.defined[p][i]), float(masses[p][i])

    def to_dict(self) -> dict:
        masses = self.masses()
        return {
            "meta": _jsonable(self.meta),
            "players": [
                {
                    "player": p,
                    "expected_payoff": float(self.expected_payoffs[p]),
                    "strategies": [
                        {"label": label,
                         "rating": None if np.isnan(self.ratings[p][i]) else float(self.ratings[p][i]),
                         "defined": bool(self.defined[p][i]),
                         "tier": int(self.tiers[p][i]),
                         "mass": float(masses[p][i])}
                        for i, label in enumerate(self.labels[p])
                    ],
                }
                for p in range(self.num_players)
            ],
            "joint": self.dist.probs.tolist(),
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, enum.Enum):
        return value.value
    return value


def _raw_ratings(game: NormalFormGame, dist: JointDistribution, tau: float):
    ratings, defined, exp = [], [], []
    probs = dist.probs
    for p in range(game.num_players):
        axes = tuple(q for q in range(game.num_players) if q != p)
        weighted = (game.payoffs[p] * probs).sum(axis=axes) if axes else game.payoffs[p] * probs
        marg = probs.sum(axis=axes) if axes else probs.copy()
        ok = marg > tau
        r = np.full(game.shape[p], np.nan)
        r[ok] = weighted[ok] / marg[ok]
        # guard against round-off pushing a conditional mean outside the payoff range
        lo, hi = game.payoffs[p].min(), game.payoffs[p].max()
        r[ok] = np.clip(r[ok], lo, hi)
        ratings.append(r)
        defined.append(ok)
        exp.append(float((game.payoffs[p] * probs).sum()))
    return ratings, defined, np.array(exp)


def payoff_rating(game: NormalFormGame, dist: JointDistribution,
                  policy=UndefinedPolicy.MARK, tau: float = DEFAULT_ZERO_THRESHOLD,
                  config: Optional[SolveConfig] = None, meta: Optional[dict] = None,
                  _depth: int = 0) -> RatingReport:
    """Rate every strategy of every player under ``dist``.

    Args:
      game: the game being rated.
      dist: joint distribution over the game's joint strategies.
      policy: treatment of strategies whose marginal mass is at most ``tau``.
        ``PRUNE`` removes each affected player's supported strategies, solves
        the remaining sub-game with ``config`` and rates the leftovers there;
        those ratings get a higher tier and rank below all supported ones.
      tau: marginal-mass threshold below which a rating is undefined.
      config: solver settings for ``PRUNE`` (defaults to max-entropy CCE at
        the minimum epsilon plus offset).
      meta: free-form metadata copied into the report.
    """
    _check_shapes(game, dist)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    policy = UndefinedPolicy(policy)
    ratings, defined, exp = _raw_ratings(game, dist, tau)
    tiers = [np.full(k, _depth) for k in game.shape]
    ranges = [(float(game.payoffs[p].min()), float(game.payoffs[p].max()))
              for p in range(game.num_players)]

    if policy is UndefinedPolicy.MIN_PAYOFF:
        for p in range(game.num_players):
            ratings[p][~defined[p]] = ranges[p][0]
    elif policy is UndefinedPolicy.PRUNE and not all(d.all() for d in defined):
        _prune_and_rerate(game, dist, defined, ratings, tiers, tau, config, _depth)

    return RatingReport([list(l) for l in game.strategy_labels], ratings, defined, tiers, dist, exp,
                        ranges, dict(meta or {}))


def _prune_and_rerate(game, dist, defined, ratings, tiers, tau, config, depth):
    keep = []
    for p in range(game.num_players):
        if defined[p].all():
            keep.append(np.arange(game.shape[p]))
        else:
            keep.append(np.flatnonzero(~defined[p]))
    sub = game.restrict(keep)
    config = config or SolveConfig()
    if config.concept == MENE and not _mene_ok(sub):
        config = SolveConfig(concept="cce", selection=config.selection,
                             epsilon_mode=config.epsilon_mode)
    try:
        sol = solve(sub, config)
    except EqRateError as exc:
        log.warning("sub-game solve failed while pruning: %s", exc)
        return
    sub_report = payoff_rating(sub, sol.dist, UndefinedPolicy.PRUNE, tau, config, _depth=depth + 1)
    for p in range(game.num_players):
        if defined[p].all():
            continue
        idx = keep[p]
        ratings[p][idx] = sub_report.ratings[p]
        defined[p][idx] = sub_report.defined[p]
        tiers[p][idx] = sub_report.tiers[p]


def _mene_ok(game):
    from .solvers import is_constant_sum
    return game.num_players == 2 and is_constant_sum(game)


def uniform_rating(game: NormalFormGame) -> RatingReport:
    """Mean payoff of each strategy against uniformly random opponents."""
    return payoff_rating(game, JointDistribution.uniform(game.shape), meta={"selection": "uniform"})


def mass_rating(dist: JointDistribution) -> List[np.ndarray]:
    """Marginal probabilities used directly as ratings."""
    return [dist.marginal(p) for p in range(dist.probs.ndim)]


def default_group_tol(report: RatingReport, player: int) -> float:
    lo, hi = report.payoff_ranges[player]
    return DEFAULT_GROUP_TOL_REL * (hi - lo)


def rank_from_ratings(report: RatingReport, group_tol: Optional[float] = None):
    """Ordered groups of labels per player, best group first.

    Ratings are sorted in descending order and neighbours within
    ``group_tol`` share a group (so a group can span more than ``group_tol``
    through a chain of close neighbours). Higher tiers come after lower ones
    and undefined ratings form the final group.
    """
    if group_tol is not None and group_tol < 0:
        raise ValueError("group_tol must be nonnegative")
    out = []
    for p in range(report.num_players):
        tol = default_group_tol(report, p) if group_tol is None else group_tol
        r = report.ratings[p]
        d = report.defined[p]
        t = report.tiers[p]
        labels = report.labels[p]
        groups = []
        for tier in sorted(set(t[d].tolist())):
            idx = np.flatnonzero(d & (t == tier))
            idx = idx[np.argsort(-r[idx], kind="stable")]
            current = [idx[0]]
            for a, b in zip(idx[:-1], idx[1:]):
                if r[a] - r[b] <= tol:
                    current.append(b)
                else:
                    groups.append([labels[i] for i in current])
                    current = [b]
            groups.append([labels[i] for i in current])
        undefined = np.flatnonzero(~d)
        if undefined.size:
            groups.append([labels[i] for i in undefined])
        out.append(groups)
    return out


def rate(game: NormalFormGame, config: Optional[SolveConfig] = None,
         policy=UndefinedPolicy.MARK, tau: float = DEFAULT_ZERO_THRESHOLD,
         epsilon=None) -> RatingReport:
    """Solve for an equilibrium under ``config`` and rate under it."""
    config = config or SolveConfig()
    sol = solve(game, config, epsilon=epsilon)
    return payoff_rating(game, sol.dist, policy, tau, config, meta=solution_meta(sol))


def solution_meta(sol: EquilibriumSolution) -> dict:
    return {
        "concept": sol.concept,
        "selection": sol.selection,
        "epsilon": None if sol.epsilon is None else np.asarray(sol.epsilon).tolist(),
        "achieved_violation": np.asarray(sol.achieved_violation).tolist(),
        "objective_value": sol.objective_value,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }


@dataclass
class SweepPoint:
    rho: float
    epsilon: Optional[np.ndarray]
    clamped: bool
    converged: bool
    masses: Optional[List[np.ndarray]] = None
    ratings: Optional[List[np.ndarray]] = None
    defined: Optional[List[np.ndarray]] = None
    entropy: float = float("nan")
    error: Optional[str] = None


@dataclass
class SweepTable:
    labels: List[List[str]]
    concept: str
    selection: str
    points: List[SweepPoint]

    def rows(self):
        """Long-format ``(rho, player, strategy, mass, rating, converged)`` records."""
        for pt in self.points:
            for p, labels in enumerate(self.labels):
                for i, label in enumerate(labels):
                    if pt.converged:
                        yield (pt.rho, p, label, float(pt.masses[p][i]),
                               float(pt.ratings[p][i]), True)
                    else:
                        yield pt.rho, p, label, float("nan"), float("nan"), False


def epsilon_sweep(game: NormalFormGame, concept, selection, grid: Sequence[float],
                  policy=UndefinedPolicy.MARK, config: Optional[SolveConfig] = None,
                  tau: float = DEFAULT_ZERO_THRESHOLD,
                  max_workers: Optional[int] = None) -> SweepTable:
    """Solve and rate at each normalized epsilon ``rho`` of ``grid``.

    ``epsilon = rho * eps_uni``. Values at or below the minimum epsilon are
    clamped to the minimum plus the configured offset and flagged. Failures
    are recorded on their grid point without aborting the sweep. Points are
    solved concurrently and returned sorted by ``rho``.
    """
    base = config or SolveConfig(concept=concept, selection=selection)
    config = SolveConfig(concept=concept, selection=selection, epsilon_mode=base.epsilon_mode,
                         weights=base.weights, constraint_tol=base.constraint_tol,
                         duality_gap_tol=base.duality_gap_tol, max_iterations=base.max_iterations)
    if config.concept == MENE:
        raise ValueError("epsilon sweeps need a CE or CCE concept")
    mode = config.epsilon_mode if config.epsilon_mode.kind == "eps-min-plus" else EpsilonMode()
    uni = epsilon_uniform(game, config.concept)
    em, _ = epsilon_min(game, config.concept)
    floor = em + np.maximum(mode.delta_abs, mode.delta_rel * np.abs(em))

    def run(rho):
        eps = rho * uni
        low = eps <= em
        clamped = bool(low.any())
        eps = np.where(low, floor, eps)
        try:
            sol = solve(game, config, epsilon=eps)
        except EqRateError as exc:
            log.warning("sweep point rho=%g failed: %s", rho, exc)
            return SweepPoint(float(rho), eps, clamped, False, error=str(exc))
        rep = payoff_rating(game, sol.dist, policy, tau, config)
        return SweepPoint(float(rho), eps, clamped, True, mass_rating(sol.dist), rep.ratings,
                          rep.defined, sol.dist.entropy())

    grid = sorted(float(r) for r in grid)
    workers = max_workers or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=min(workers, max(len(grid), 1))) as pool:
        points = list(pool.map(run, grid))
    return SweepTable([list(l) for l in game.strategy_labels], config.concept,
                      Selection(config.selection).value, points)
