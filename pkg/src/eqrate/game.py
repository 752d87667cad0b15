"""Normal-form games, joint strategy distributions and the game-document format.

Payoffs are stored as a single tensor of shape ``[n, |A_1|, ..., |A_n|]``
(player axis first). Joint distributions are tensors of shape
``[|A_1|, ..., |A_n|]``; flattening is always row-major so the column index
of a joint in the constraint matrices is ``np.ravel_multi_index(a, shape)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import GameParseError, NonFinitePayoffError, ShapeMismatchError

DEFAULT_ZERO_THRESHOLD = 1e-9
DEFAULT_SYMMETRY_TOL = 1e-12
DIST_SUM_TOL = 1e-9


def _frozen(array, dtype=float):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class NormalFormGame:
    """An n-player game given by per-player payoff tensors.

    Attributes:
      payoffs: read-only array of shape ``[n, |A_1|, ..., |A_n|]``.
      strategy_labels: per-player tuple of strategy labels.
    """

    payoffs: np.ndarray
    strategy_labels: tuple

    def __init__(self, payoffs, strategy_labels: Optional[Sequence[Sequence[str]]] = None):
        payoffs = np.asarray(payoffs, dtype=float)
        if payoffs.ndim < 2:
            raise ShapeMismatchError("payoff tensor needs a player axis and one axis per player")
        n = payoffs.shape[0]
        if payoffs.ndim != n + 1:
            raise ShapeMismatchError(
                f"payoff tensor has {payoffs.ndim - 1} strategy axes for {n} players")
        if any(s < 1 for s in payoffs.shape[1:]):
            raise ShapeMismatchError("every player needs at least one strategy")
        if not np.all(np.isfinite(payoffs)):
            raise NonFinitePayoffError("payoffs must be finite")
        if strategy_labels is None:
            strategy_labels = [[str(i) for i in range(s)] for s in payoffs.shape[1:]]
        labels = tuple(tuple(str(x) for x in player) for player in strategy_labels)
        if len(labels) != n:
            raise ShapeMismatchError(f"{len(labels)} label lists for {n} players")
        for p, (player_labels, size) in enumerate(zip(labels, payoffs.shape[1:])):
            if len(player_labels) != size:
                raise ShapeMismatchError(
                    f"player {p} has {len(player_labels)} labels but {size} strategies")
        object.__setattr__(self, "payoffs", _frozen(payoffs))
        object.__setattr__(self, "strategy_labels", labels)

    @property
    def num_players(self) -> int:
        return self.payoffs.shape[0]

    @property
    def shape(self) -> tuple:
        """Joint strategy space shape ``(|A_1|, ..., |A_n|)``."""
        return self.payoffs.shape[1:]

    @property
    def num_joints(self) -> int:
        return int(np.prod(self.shape))

    def player_payoff(self, player: int) -> np.ndarray:
        return self.payoffs[player]

    def payoff_range(self, player: Optional[int] = None) -> float:
        g = self.payoffs if player is None else self.payoffs[player]
        return float(g.max() - g.min())

    def restrict(self, keep: Sequence[Sequence[int]]) -> "NormalFormGame":
        """Sub-game keeping the listed strategy indices of each player."""
        index = np.ix_(range(self.num_players), *[list(k) for k in keep])
        labels = [[self.strategy_labels[p][i] for i in k] for p, k in enumerate(keep)]
        return NormalFormGame(self.payoffs[index], labels)

    def __eq__(self, other):
        if not isinstance(other, NormalFormGame):
            return NotImplemented
        return (self.strategy_labels == other.strategy_labels
                and self.payoffs.shape == other.payoffs.shape
                and np.array_equal(self.payoffs, other.payoffs))

    __hash__ = None


@dataclass(frozen=True)
class JointDistribution:
    """Probability tensor over joint strategies."""

    probs: np.ndarray

    def __init__(self, probs, *, validate: bool = True):
        probs = np.asarray(probs, dtype=float)
        if validate:
            if probs.ndim < 1:
                raise ShapeMismatchError("a joint distribution needs at least one axis")
            if not np.all(np.isfinite(probs)) or np.any(probs < 0):
                raise ValueError("probabilities must be finite and nonnegative")
            total = probs.sum()
            if abs(total - 1.0) > DIST_SUM_TOL:
                raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", _frozen(probs))

    @classmethod
    def from_flat(cls, flat, shape, *, clip: bool = True) -> "JointDistribution":
        """Build from a solver vector, removing round-off negatives and renormalizing."""
        flat = np.asarray(flat, dtype=float)
        if clip:
            flat = np.maximum(flat, 0.0)
            flat = flat / flat.sum()
        return cls(flat.reshape(shape))

    @classmethod
    def uniform(cls, shape) -> "JointDistribution":
        return cls(np.full(shape, 1.0 / np.prod(shape)))

    @classmethod
    def point_mass(cls, shape, joint) -> "JointDistribution":
        probs = np.zeros(shape)
        probs[tuple(joint)] = 1.0
        return cls(probs)

    @property
    def shape(self) -> tuple:
        return self.probs.shape

    @property
    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)

    def marginal(self, player: int) -> np.ndarray:
        return marginal(self, player)

    def entropy(self) -> float:
        p = self.flat[self.flat > 0]
        return float(-(p * np.log(p)).sum())


def marginal(dist: JointDistribution, player: int) -> np.ndarray:
    """Marginal distribution of ``player``'s strategies."""
    n = dist.probs.ndim
    if not 0 <= player < n:
        raise IndexError(f"player {player} out of range for {n} players")
    axes = tuple(q for q in range(n) if q != player)
    return dist.probs.sum(axis=axes)


def conditional(dist: JointDistribution, player: int, strategy: int,
                zero_threshold: float = DEFAULT_ZERO_THRESHOLD) -> Optional[np.ndarray]:
    """Distribution over the other players' joints given ``player`` plays ``strategy``.

    Returns None when the strategy's marginal probability is not above
    ``zero_threshold``: the conditional is undefined there.
    """
    if zero_threshold < 0:
        raise ValueError("zero_threshold must be nonnegative")
    mass = marginal(dist, player)[strategy]
    if not mass > zero_threshold:
        return None
    return np.take(dist.probs, strategy, axis=player) / mass


def expected_payoff(game: NormalFormGame, dist: JointDistribution, player: int) -> float:
    _check_shapes(game, dist)
    return float(np.sum(game.payoffs[player] * dist.probs))


def outer_product(marginals: Sequence[np.ndarray]) -> JointDistribution:
    """Factorized joint distribution from per-player marginals."""
    probs = np.ones(())
    for m in marginals:
        m = np.asarray(m, dtype=float)
        probs = np.multiply.outer(probs, m)
    return JointDistribution(probs)


def is_symmetric(game: NormalFormGame, tol: float = DEFAULT_SYMMETRY_TOL) -> bool:
    """True iff the game is invariant under every relabelling of the players.

    Checks that all players share the strategy count, that player 1's payoff is
    invariant to permuting the opponents, and that player p's payoff is player
    1's payoff with the roles of 1 and p swapped.
    """
    n = game.num_players
    if len(set(game.shape)) != 1:
        return False
    g0 = game.payoffs[0]
    for perm in itertools.permutations(range(1, n)):
        if np.max(np.abs(g0 - np.transpose(g0, (0,) + perm)), initial=0.0) > tol:
            return False
    for p in range(1, n):
        axes = list(range(n))
        axes[0], axes[p] = axes[p], axes[0]
        if np.max(np.abs(game.payoffs[p] - np.transpose(g0, axes))) > tol:
            return False
    return True


def _check_shapes(game: NormalFormGame, dist: JointDistribution) -> None:
    if tuple(dist.shape) != tuple(game.shape):
        raise ShapeMismatchError(
            f"distribution shape {dist.shape} does not match game shape {game.shape}")


# -- game documents -----------------------------------------------------------

def _parse_real(value, where):
    if isinstance(value, bool):
        raise GameParseError(f"{where}: booleans are not payoffs")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise GameParseError(f"{where}: {value!r} is not a number") from None


def game_from_document(doc: dict) -> NormalFormGame:
    """Validate a decoded game document and build the game."""
    if not isinstance(doc, dict):
        raise GameParseError("game document must be a JSON object")
    for key in ("players", "shape", "payoffs"):
        if key not in doc:
            raise GameParseError(f"missing key {key!r}")
    n = doc["players"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise GameParseError("'players' must be a positive integer")
    shape = doc["shape"]
    if (not isinstance(shape, list)
            or not all(isinstance(s, int) and not isinstance(s, bool) for s in shape)):
        raise GameParseError("'shape' must be a list of integers")
    if len(shape) != n:
        raise ShapeMismatchError(f"shape has {len(shape)} entries for {n} players")
    if any(s < 1 for s in shape):
        raise ShapeMismatchError("every player needs at least one strategy")
    raw = doc["payoffs"]
    if not isinstance(raw, list):
        raise GameParseError("'payoffs' must be a flat list")
    expected = n * int(np.prod(shape))
    if len(raw) != expected:
        raise ShapeMismatchError(f"expected {expected} payoffs, found {len(raw)}")
    values = np.array([_parse_real(v, f"payoffs[{i}]") for i, v in enumerate(raw)])
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise NonFinitePayoffError(f"payoffs[{bad}] is not finite")
    labels = doc.get("strategies")
    if labels is not None:
        if not isinstance(labels, list) or not all(isinstance(x, list) for x in labels):
            raise GameParseError("'strategies' must be a list of label lists")
    return NormalFormGame(values.reshape([n] + list(shape)), labels)


def load_game(document) -> NormalFormGame:
    """Parse a game document given as text or bytes."""
    if isinstance(document, (bytes, bytearray)):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GameParseError(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise GameParseError(str(exc)) from None
    return game_from_document(doc)


def game_to_document(game: NormalFormGame) -> dict:
    return {
        "players": game.num_players,
        "strategies": [list(labels) for labels in game.strategy_labels],
        "shape": list(game.shape),
        "payoffs": [float(x) for x in game.payoffs.reshape(-1)],
    }


def dump_game(game: NormalFormGame, indent: Optional[int] = None) -> str:
    return json.dumps(game_to_document(game), indent=indent)


def read_game(path) -> NormalFormGame:
    with open(path, "rb") as fh:
        return load_game(fh.read())
