"""Repeated-strategy handling: exact merging, similarity weights, mass lifting.

Equilibrium ratings are not automatically invariant to copies of a strategy.
Two remedies are provided. Hard elimination merges payoff-identical
strategies, solves the reduced game and spreads each reduced joint's mass
equally over its copies. Soft elimination builds similarity matrices whose
row sums reweight the entropy objective of the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .game import JointDistribution, NormalFormGame
from .errors import ShapeMismatchError

DEFAULT_KERNEL_TOL_REL = 1e-9


@dataclass(frozen=True)
class EliminationMapping:
    """Per-player map from original strategy indices to reduced indices.

    Attributes:
      index: ``index[p][i]`` is the reduced index of original strategy ``i``.
      representatives: ``representatives[p][j]`` is the original index kept
        for reduced strategy ``j`` (its first occurrence).
      counts: number of original strategies merged into each reduced one.
    """

    index: tuple
    representatives: tuple
    counts: tuple

    @property
    def original_shape(self) -> tuple:
        return tuple(len(i) for i in self.index)

    @property
    def reduced_shape(self) -> tuple:
        return tuple(len(r) for r in self.representatives)

    def is_identity(self) -> bool:
        return self.original_shape == self.reduced_shape

    def to_dict(self, labels=None) -> dict:
        out = []
        for p in range(len(self.index)):
            entry = {"index": [int(i) for i in self.index[p]],
                     "representatives": [int(i) for i in self.representatives[p]],
                     "counts": [int(c) for c in self.counts[p]]}
            if labels is not None:
                entry["map"] = {labels[p][i]: labels[p][self.representatives[p][j]]
                                for i, j in enumerate(self.index[p])}
            out.append(entry)
        return {"players": out}

    @classmethod
    def identity(cls, shape) -> "EliminationMapping":
        return cls(tuple(np.arange(k) for k in shape), tuple(np.arange(k) for k in shape),
                   tuple(np.ones(k, dtype=int) for k in shape))


def _slice(game: NormalFormGame, player: int, strategy: int) -> np.ndarray:
    """Every player's payoffs when ``player`` plays ``strategy``."""
    return np.take(game.payoffs, strategy, axis=player + 1)


def _group(game: NormalFormGame, player: int, tol: float):
    reps, index = [], np.empty(game.shape[player], dtype=int)
    for i in range(game.shape[player]):
        s = _slice(game, player, i)
        for j, r in enumerate(reps):
            if np.max(np.abs(s - _slice(game, player, r))) <= tol:
                index[i] = j
                break
        else:
            index[i] = len(reps)
            reps.append(i)
    return np.array(reps), index


def eliminate_exact_duplicates(game: NormalFormGame, tol: float = 0.0):
    """Merge strategies whose payoff slices (for all players) agree within ``tol``.

    Each group of copies is represented by its first occurrence. Returns the
    reduced game and the :class:`EliminationMapping` back to the original.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    n = game.num_players
    index = [np.arange(k) for k in game.shape]
    reps = [np.arange(k) for k in game.shape]
    current = game
    changed = True
    while changed:
        changed = False
        for p in range(n):
            r, idx = _group(current, p, tol)
            if r.size < current.shape[p]:
                changed = True
                keep = [np.arange(k) for k in current.shape]
                keep[p] = r
                current = current.restrict(keep)
                index[p] = idx[index[p]]
                reps[p] = reps[p][r]
    counts = tuple(np.bincount(index[p], minlength=reps[p].size) for p in range(n))
    return current, EliminationMapping(tuple(index), tuple(reps), counts)


def redistribute_mass(reduced_dist: JointDistribution,
                      mapping: EliminationMapping) -> JointDistribution:
    """Lift a reduced-game distribution, splitting mass equally over copies."""
    if tuple(reduced_dist.shape) != mapping.reduced_shape:
        raise ShapeMismatchError(
            f"distribution shape {reduced_dist.shape} does not match reduced shape "
            f"{mapping.reduced_shape}")
    probs = reduced_dist.probs
    for p, (idx, counts) in enumerate(zip(mapping.index, mapping.counts)):
        probs = np.take(probs, idx, axis=p)
        shape = [1] * probs.ndim
        shape[p] = len(idx)
        probs = probs / counts[idx].reshape(shape)
    return JointDistribution(probs / probs.sum())


Kernel = Callable[[np.ndarray, np.ndarray], float]


def threshold_kernel(tol: float) -> Kernel:
    """1 when the max-norm distance of two slices is at most ``tol``, else 0."""
    def kernel(x, y):
        return 1.0 if np.max(np.abs(x - y)) <= tol else 0.0
    return kernel


def gaussian_kernel(scale: float) -> Kernel:
    """``exp(-(||x - y||_2 / scale)**2)``, a soft similarity in (0, 1]."""
    if scale <= 0:
        raise ValueError("scale must be positive")

    def kernel(x, y):
        return float(np.exp(-(np.linalg.norm(x - y) / scale) ** 2))
    return kernel


def similarity_matrix(game: NormalFormGame, player: int,
                      kernel: Optional[Kernel] = None) -> np.ndarray:
    """Pairwise strategy similarity of ``player`` from their payoff slices.

    The default kernel thresholds the max-norm distance at ``1e-9`` times the
    game's payoff range. The diagonal is always one.

    Raises:
      ValueError: if the kernel returns a value outside ``[0, 1]``.
    """
    if kernel is None:
        kernel = threshold_kernel(DEFAULT_KERNEL_TOL_REL * game.payoff_range())
    k = game.shape[player]
    slices = [_slice(game, player, i) for i in range(k)]
    S = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            v = float(kernel(slices[i], slices[j]))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"kernel value {v} outside [0, 1]")
            S[i, j] = S[j, i] = v
    return S


def repeat_weights(similarities: Sequence[np.ndarray]) -> np.ndarray:
    """Joint weight tensor ``s(a) = prod_p s_p(a_p)`` from similarity row sums."""
    out = np.ones(())
    for S in similarities:
        out = np.multiply.outer(out, np.asarray(S, float).sum(axis=1))
    return out


def game_repeat_weights(game: NormalFormGame, kernel: Optional[Kernel] = None) -> np.ndarray:
    return repeat_weights([similarity_matrix(game, p, kernel) for p in range(game.num_players)])


def solve_with_elimination(game: NormalFormGame, config=None, tol: float = 0.0):
    """Eliminate exact duplicates, solve the reduced game, lift the result.

    Returns ``(dist over the original game, reduced solution, mapping)``.
    """
    from .solvers import solve
    reduced, mapping = eliminate_exact_duplicates(game, tol)
    sol = solve(reduced, config)
    return redistribute_mass(sol.dist, mapping), sol, mapping


def labels_of(mapping: EliminationMapping, labels: List[List[str]]):
    return [[labels[p][i] for i in mapping.representatives[p]] for p in range(len(labels))]
