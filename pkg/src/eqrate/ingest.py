"""Build empirical games from head-to-head match records.

Three constructions are supported:

* a symmetric two-player constant-sum win-probability game,
* a two-player general-sum points game under a scoring rule,
* a three-player location game where a third player bets on home or away.

Pair statistics are venue balanced: the payoff of club ``i`` against ``j`` is
the mean of its average result at home against ``j`` and its average result
away at ``j``. Clubs are ordered by their mean win probability, best first.
"""

from __future__ import annotations

import csv
import enum
import io
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import IngestError, MalformedRecordError, MissingPairError
from .game import NormalFormGame


class Outcome(str, enum.Enum):
    HOME_WIN = "H"
    AWAY_WIN = "A"
    DRAW = "D"


@dataclass(frozen=True)
class MatchRecord:
    home: str
    away: str
    outcome: Outcome
    home_score: Optional[int] = None
    away_score: Optional[int] = None

    def __post_init__(self):
        if self.home == self.away:
            raise IngestError(f"club {self.home!r} cannot play itself")
        object.__setattr__(self, "outcome", Outcome(self.outcome))


@dataclass(frozen=True)
class ScoringRule:
    win_points: float = 3.0
    draw_points: float = 1.0
    loss_points: float = 0.0

    def __post_init__(self):
        if not self.win_points >= self.draw_points >= self.loss_points:
            raise ValueError("scoring rule needs win >= draw >= loss")

    def points(self, record: MatchRecord):
        """``(home points, away points)`` for one fixture."""
        if record.outcome is Outcome.HOME_WIN:
            return self.win_points, self.loss_points
        if record.outcome is Outcome.AWAY_WIN:
            return self.loss_points, self.win_points
        return self.draw_points, self.draw_points


FOOTBALL = ScoringRule(3.0, 1.0, 0.0)
WIN_PROBABILITY = ScoringRule(1.0, 0.5, 0.0)


def read_matches_csv(source) -> List[MatchRecord]:
    """Parse ``home,away,result`` rows (result in H, A, D).

    Optional ``home_sets`` and ``away_sets`` integer columns are kept on the
    records. ``source`` may be a path or an open text stream.

    Raises:
      MalformedRecordError: for a bad row, with its 1-based line number.
      IngestError: if the header is wrong or there are no records.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_matches_csv(fh)
    reader = csv.DictReader(source)
    header = reader.fieldnames or []
    missing = [c for c in ("home", "away", "result") if c not in header]
    if missing:
        raise IngestError(f"CSV header lacks column(s) {', '.join(missing)}; found 0 records")
    records = []
    for row in reader:
        line = reader.line_num
        if None in row:
            raise MalformedRecordError(line, "too many fields")
        home = (row.get("home") or "").strip()
        away = (row.get("away") or "").strip()
        result = (row.get("result") or "").strip().upper()
        if not home or not away:
            raise MalformedRecordError(line, "missing club name")
        if home == away:
            raise MalformedRecordError(line, f"club {home!r} plays itself")
        if result not in ("H", "A", "D"):
            raise MalformedRecordError(line, f"result {result!r} is not one of H, A, D")
        scores = []
        for col in ("home_sets", "away_sets"):
            raw = (row.get(col) or "").strip()
            if not raw:
                scores.append(None)
                continue
            try:
                scores.append(int(raw))
            except ValueError:
                raise MalformedRecordError(line, f"{col} {raw!r} is not an integer") from None
        records.append(MatchRecord(home, away, Outcome(result), *scores))
    if not records:
        raise IngestError("no match records (0 records)")
    return records


def parse_matches_csv_text(text: str) -> List[MatchRecord]:
    return read_matches_csv(io.StringIO(text))


def _clubs(records: Sequence[MatchRecord]) -> List[str]:
    if not records:
        raise IngestError("no match records (0 records)")
    return sorted({r.home for r in records} | {r.away for r in records})


def _venue_means(records, clubs, value):
    """Per ordered (home, away) pair, the mean of ``value(record)`` (a tuple)."""
    pos = {c: i for i, c in enumerate(clubs)}
    sums = defaultdict(lambda: None)
    counts = defaultdict(int)
    for r in records:
        key = (pos[r.home], pos[r.away])
        v = np.asarray(value(r), float)
        sums[key] = v if sums[key] is None else sums[key] + v
        counts[key] += 1
    missing = [(clubs[i], clubs[j]) for i in range(len(clubs)) for j in range(len(clubs))
               if i != j and counts[(i, j)] == 0]
    if missing:
        raise MissingPairError(missing)
    k = len(clubs)
    out = {}
    for (i, j), s in sums.items():
        out[(i, j)] = s / counts[(i, j)]
    return out, k


def _pair_matrix(records, clubs, rule: ScoringRule, self_value):
    """``M[i, j]``: venue-balanced average points of ``i`` against ``j``."""
    means, k = _venue_means(records, clubs, rule.points)
    M = np.full((k, k), float(self_value))
    for i in range(k):
        for j in range(k):
            if i != j:
                # i at home against j, and i away at j
                M[i, j] = 0.5 * (means[(i, j)][0] + means[(j, i)][1])
    return M


def _filter(records, discard_draws):
    if discard_draws:
        return [r for r in records if r.outcome is not Outcome.DRAW]
    return list(records)


def _order(M, clubs):
    """Permutation sorting clubs by descending row mean (ties by label)."""
    means = M.mean(axis=1)
    return sorted(range(len(clubs)), key=lambda i: (-means[i], clubs[i]))


def win_matrix(records: Iterable[MatchRecord], draw_value: float = 0.5,
               discard_draws: bool = False):
    """Ordered clubs and the win-probability matrix (draws count ``draw_value``)."""
    game = build_points_game(_filter(records, discard_draws), ScoringRule(1.0, draw_value, 0.0))
    return list(game.strategy_labels[0]), np.array(game.payoffs[0])


def build_winprob_game(records: Iterable[MatchRecord], draw_value: float = 0.5,
                       discard_draws: bool = False) -> NormalFormGame:
    """Symmetric constant-sum game ``G_1(i, j) = P(i beats j)``, ``G_2 = 1 - G_1``.

    Self-pairings are worth one half. ``G_2`` is stored as the transpose of
    ``G_1``, which equals ``1 - G_1`` up to floating-point rounding.

    Raises:
      MissingPairError: when some ordered (home, away) pair has no record.
    """
    return build_points_game(_filter(records, discard_draws), ScoringRule(1.0, draw_value, 0.0))


def build_points_game(records: Iterable[MatchRecord],
                      rule: ScoringRule = FOOTBALL) -> NormalFormGame:
    """Two-player game of venue-balanced average points under ``rule``.

    ``G_1(i, j)`` is club ``i``'s average against ``j`` and ``G_2(i, j)`` is
    club ``j``'s average against ``i``. Self-pairings are worth the draw points.
    """
    records = list(records)
    clubs = _clubs(records)
    M = _pair_matrix(records, clubs, rule, rule.draw_points)
    order = _order(M, clubs)
    M = M[np.ix_(order, order)]
    clubs = [clubs[i] for i in order]
    return NormalFormGame(np.stack([M, M.T]), [clubs, clubs])


LOCATION_LABELS = ("Home", "Away")


def build_location_game(records: Iterable[MatchRecord], location_draw: float = 0.0,
                        club_draw: float = 0.5) -> NormalFormGame:
    """Three-player game: location bettor, home club, away club.

    The joint ``(l, i, j)`` is the fixture of club ``i`` at home against club
    ``j``. The location player scores the probability that the side it picked
    wins (plus ``location_draw`` per draw); each club scores its own win
    probability (plus ``club_draw`` per draw) whatever the location choice.
    Joints pairing a club with itself pay zero to everyone.
    """
    records = list(records)
    clubs, _ = win_matrix(records)
    means, k = _venue_means(records, clubs, lambda r: (
        r.outcome is Outcome.HOME_WIN, r.outcome is Outcome.AWAY_WIN, r.outcome is Outcome.DRAW))
    home_win = np.zeros((k, k))
    away_win = np.zeros((k, k))
    draw = np.zeros((k, k))
    for (i, j), (h, a, d) in means.items():
        home_win[i, j], away_win[i, j], draw[i, j] = h, a, d
    G = np.zeros((3, 2, k, k))
    G[0, 0] = home_win + location_draw * draw
    G[0, 1] = away_win + location_draw * draw
    G[1, :] = home_win + club_draw * draw
    G[2, :] = away_win + club_draw * draw
    diag = np.arange(k)
    G[:, :, diag, diag] = 0.0
    return NormalFormGame(G, [list(LOCATION_LABELS), clubs, clubs])


BUILDERS = {
    "winprob": build_winprob_game,
    "points": build_points_game,
    "location": build_location_game,
}
