"""Seeded random game generators for property tests and benchmarks."""

import itertools
from typing import Optional, Sequence

import numpy as np

from .game import NormalFormGame


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_game(shape: Sequence[int], seed=None, low: float = -1.0,
                high: float = 1.0) -> NormalFormGame:
    """General-sum game with i.i.d. uniform payoffs."""
    rng = _rng(seed)
    shape = tuple(int(s) for s in shape)
    return NormalFormGame(rng.uniform(low, high, size=(len(shape),) + shape))


def random_zero_sum(rows: int, cols: Optional[int] = None, seed=None) -> NormalFormGame:
    """Two-player zero-sum game ``G_2 = -G_1``."""
    rng = _rng(seed)
    cols = rows if cols is None else cols
    g1 = rng.uniform(-1.0, 1.0, size=(rows, cols))
    return NormalFormGame(np.stack([g1, -g1]))


def random_symmetric(num_strategies: int, num_players: int = 2, seed=None) -> NormalFormGame:
    """Symmetric game: permuting players permutes payoffs accordingly.

    Player 0's payoff is a random tensor symmetric in the opponents' axes;
    player ``p`` receives it with axes 0 and ``p`` exchanged.
    """
    rng = _rng(seed)
    k = num_strategies
    shape = (k,) * num_players
    base = rng.uniform(-1.0, 1.0, size=shape)
    if num_players > 2:
        others = list(range(1, num_players))
        perms = list(itertools.permutations(others))
        base = sum(np.transpose(base, [0] + list(p)) for p in perms) / len(perms)
    payoffs = [base]
    for p in range(1, num_players):
        axes = list(range(num_players))
        axes[0], axes[p] = axes[p], axes[0]
        payoffs.append(np.transpose(base, axes))
    return NormalFormGame(np.stack(payoffs))


def duplicate_strategy(game: NormalFormGame, player: int, strategy: int) -> NormalFormGame:
    """Append a payoff-identical copy of ``strategy`` to ``player``'s strategy set."""
    axis = player + 1
    extra = np.take(game.payoffs, [strategy], axis=axis)
    payoffs = np.concatenate([game.payoffs, extra], axis=axis)
    labels = [list(l) for l in game.strategy_labels]
    labels[player].append(labels[player][strategy] + "'")
    return NormalFormGame(payoffs, labels)


def duplicate_symmetric(game: NormalFormGame, strategy: int) -> NormalFormGame:
    """Duplicate ``strategy`` for every player, preserving symmetry."""
    for p in range(game.num_players):
        game = duplicate_strategy(game, p, strategy)
    return game
