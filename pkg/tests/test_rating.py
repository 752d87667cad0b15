import itertools
import json

import numpy as np
import pytest

from eqrate import standard_games as sg
from eqrate.game import JointDistribution, NormalFormGame, expected_payoff
from eqrate.generators import duplicate_strategy, random_game, random_symmetric, random_zero_sum
from eqrate.rating import (UndefinedPolicy, epsilon_sweep, mass_rating, payoff_rating,
                           rank_from_ratings, rate, uniform_rating)
from eqrate.solvers import SolveConfig, solve_mene_2p0s
from eqrate.constraints import epsilon_min, epsilon_uniform


def loop_rating(game, probs, player):
    """Conditional expected payoff by explicit enumeration of joints."""
    k = game.shape[player]
    num = np.zeros(k)
    den = np.zeros(k)
    for joint in itertools.product(*[range(s) for s in game.shape]):
        a = joint[player]
        num[a] += game.payoffs[(player,) + joint] * probs[joint]
        den[a] += probs[joint]
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / den


TABLE_ONE = [
    # game, equilibrium rating of player 0, uniform rating of player 0
    ("brps", [0.5, 0.5, 0.5], [0.567, 0.533, 0.400]),
    ("dominated-brps", [0.5, 0.5, 0.5, 0.25, 0.25, 0.25],
     [0.283, 0.267, 0.200, 0.142, 0.133, 0.100]),
    ("pd", [-3, -2], [-2, -1]),
    ("bos", [3, 2], [1.5, 1]),
    ("coordination", [1, 0.5], [0.5, 0.25]),
    ("chicken", [1, -1], [-4.5, -0.5]),
]


@pytest.mark.parametrize("name, er, ur", TABLE_ONE)
def test_table_one(name, er, ur):
    game = sg.STANDARD_GAMES[name]()
    report = rate(game, SolveConfig("cce"))
    np.testing.assert_allclose(report.ratings[0], er, atol=1e-2)
    assert report.defined[0].all()
    np.testing.assert_allclose(uniform_rating(game).ratings[0], ur, atol=1e-2)


def test_uniform_rating_exact_fractions():
    np.testing.assert_allclose(uniform_rating(sg.chicken()).ratings[0], [-4.5, -0.5], atol=1e-12)
    np.testing.assert_allclose(uniform_rating(sg.prisoners_dilemma()).ratings[0], [-2, -1], atol=1e-12)
    brps = uniform_rating(sg.biased_rps()).ratings[0]
    np.testing.assert_allclose(brps, [1.7 / 3, 1.6 / 3, 1.2 / 3], atol=1e-12)


def test_coordination_joint():
    report = rate(sg.preferential_coordination(), SolveConfig("cce"))
    np.testing.assert_allclose(report.dist.probs, np.diag([1 / 3, 2 / 3]), atol=1e-3)


def test_rating_of_given_joints():
    g = sg.chicken()
    sigma = JointDistribution(np.array([[0.0, 0.5], [0.5, 0.0]]))
    np.testing.assert_allclose(payoff_rating(g, sigma).ratings[0], [1, -1])
    g = sg.bach_or_stravinsky()
    sigma = JointDistribution(np.diag([0.5, 0.5]))
    np.testing.assert_allclose(payoff_rating(g, sigma).ratings[0], [3, 2])


def test_rating_matches_enumeration(rng):
    g = random_game((3, 2, 4), seed=rng)
    probs = rng.dirichlet(np.ones(24)).reshape(3, 2, 4)
    report = payoff_rating(g, JointDistribution(probs))
    for p in range(3):
        np.testing.assert_allclose(report.ratings[p], loop_rating(g, probs, p), atol=1e-12)


def test_bounds_and_value_consistency(rng):
    for _ in range(10):
        g = random_game((3, 4), seed=rng, low=-5, high=2)
        probs = rng.dirichlet(np.ones(12)).reshape(3, 4)
        report = payoff_rating(g, JointDistribution(probs))
        for p in range(2):
            lo, hi = g.payoffs[p].min(), g.payoffs[p].max()
            assert np.all(report.ratings[p] >= lo) and np.all(report.ratings[p] <= hi)
            marg = probs.sum(axis=1 - p)
            total = float(marg @ report.ratings[p])
            assert total == pytest.approx(expected_payoff(g, JointDistribution(probs), p), abs=1e-8)
            assert report.expected_payoffs[p] == pytest.approx(total, abs=1e-8)


def test_mass_rating():
    brps = sg.biased_rps()
    report = rate(brps, SolveConfig("cce"))
    np.testing.assert_allclose(report.masses()[0], [0.2, 0.5, 0.3], atol=1e-3)
    point = JointDistribution.point_mass((2, 3), (1, 2))
    m = mass_rating(point)
    np.testing.assert_array_equal(m[0], [0, 1])
    np.testing.assert_array_equal(m[1], [0, 0, 1])
    for vec in mass_rating(JointDistribution.uniform((4, 2))):
        np.testing.assert_allclose(vec, 1 / vec.size)


def _half_support():
    # player 0's third strategy is never played
    probs = np.array([[0.3, 0.2], [0.1, 0.4], [0.0, 0.0]])
    g = NormalFormGame(np.stack([np.arange(6.0).reshape(3, 2), -np.arange(6.0).reshape(3, 2)]))
    return g, JointDistribution(probs)


def test_mark_policy():
    g, sigma = _half_support()
    report = payoff_rating(g, sigma)
    assert np.isnan(report.ratings[0][2])
    assert not report.defined[0][2]
    assert report.defined[1].all()
    assert report.to_dict()["players"][0]["strategies"][2]["rating"] is None


def test_min_payoff_policy():
    g, sigma = _half_support()
    report = payoff_rating(g, sigma, UndefinedPolicy.MIN_PAYOFF)
    assert report.ratings[0][2] == 0.0
    assert not report.defined[0][2]


def test_prune_policy_rates_below_supported():
    g = sg.dominated_biased_rps()
    # the mixed Nash equilibrium of the full-scale cycle only
    m = np.array([0.2, 0.5, 0.3, 0, 0, 0])
    sigma = JointDistribution(np.outer(m, m))
    report = payoff_rating(g, sigma, UndefinedPolicy.PRUNE)
    assert all(d.all() for d in report.defined)
    np.testing.assert_allclose(report.ratings[0][:3], 0.5, atol=1e-9)
    np.testing.assert_allclose(report.ratings[0][3:], 0.25, atol=1e-2)
    np.testing.assert_array_equal(report.tiers[0], [0, 0, 0, 1, 1, 1])
    groups = rank_from_ratings(report, 1e-3)[0]
    assert set(groups[0]) == {"R", "P", "S"}
    assert set(sum(groups[1:], [])) == {"hR", "hP", "hS"}


def test_rank_examples():
    m = np.array([0.2, 0.5, 0.3])
    report = payoff_rating(sg.biased_rps(), JointDistribution(np.outer(m, m)))
    assert [set(g) for g in rank_from_ratings(report, 1e-6)[0]] == [{"R", "P", "S"}]
    report = rate(sg.prisoners_dilemma(), SolveConfig("cce"))
    assert rank_from_ratings(report)[0] == [["D"], ["C"]]
    g = NormalFormGame(np.stack([np.array([[1.0], [1.0 - 1e-9], [0.2]]), np.zeros((3, 1))]))
    report = payoff_rating(g, JointDistribution.uniform((3, 1)))
    assert rank_from_ratings(report, 1e-6)[0] == [["0", "1"], ["2"]]
    with pytest.raises(ValueError):
        rank_from_ratings(report, -1.0)


def test_rank_puts_undefined_last():
    g, sigma = _half_support()
    groups = rank_from_ratings(payoff_rating(g, sigma), 0.0)[0]
    assert groups[-1] == ["2"]


def test_report_serializes(brps):
    report = rate(brps, SolveConfig("cce"))
    doc = json.loads(json.dumps(report.to_dict()))
    assert doc["meta"]["concept"] == "cce"
    assert len(doc["players"]) == 2
    assert len(list(report.rows())) == 6


def test_nash_average_equivalence(rng):
    for _ in range(15):
        m, n = rng.integers(2, 6, size=2)
        g = random_zero_sum(m, n, seed=rng)
        sol = solve_mene_2p0s(g)
        report = payoff_rating(g, sol.dist)
        opp = sol.dist.marginal(1)
        d = report.defined[0]
        np.testing.assert_allclose(report.ratings[0][d], (g.payoffs[0] @ opp)[d], atol=1e-8)
        supported = np.flatnonzero(sol.dist.marginal(0) > 1e-6)
        r = report.ratings[0][supported]
        assert np.ptp(r) <= 1e-6


def test_nash_weak_dominance(rng):
    for _ in range(10):
        g1 = rng.uniform(-1, 1, size=(4, 4))
        g1[3] = g1[0] - rng.uniform(0, 0.3, size=4)   # row 0 weakly dominates row 3
        g = NormalFormGame(np.stack([g1, -g1]))
        sol = solve_mene_2p0s(g)
        report = payoff_rating(g, sol.dist)
        if report.defined[0][0] and report.defined[0][3]:
            assert report.ratings[0][0] >= report.ratings[0][3] - 1e-9


def test_nash_unsupported_never_rank_above(rng):
    for _ in range(10):
        g = random_zero_sum(5, 4, seed=rng)
        sol = solve_mene_2p0s(g)
        report = payoff_rating(g, sol.dist, UndefinedPolicy.PRUNE, config=SolveConfig("mene-2p0s"))
        groups = rank_from_ratings(report, 1e-6)[0]
        marg = sol.dist.marginal(0)
        order = [label for group in groups for label in group]
        supported = {str(i) for i in np.flatnonzero(marg > 1e-9)}
        last_supported = max(order.index(s) for s in supported)
        first_pruned = min((order.index(s) for s in order if s not in supported), default=len(order))
        assert last_supported < first_pruned
        # and the raw conditional payoff of an unsupported strategy is at most the value
        raw = g.payoffs[0] @ sol.dist.marginal(1)
        assert np.all(raw[marg <= 1e-9] <= sol.objective_value + 1e-8)


def test_ce_weak_dominance_observational(rng):
    # a planted weakly dominated strategy under maximum-entropy CE; logged only
    worst = -np.inf
    for _ in range(5):
        payoffs = random_game((3, 3), seed=rng).payoffs.copy()
        payoffs[0][2] = payoffs[0][0] - rng.uniform(0, 0.3, size=3)
        g = NormalFormGame(payoffs)
        report = rate(g, SolveConfig("ce"))
        m = report.masses()[0]
        eps = report.meta["epsilon"][0]
        slack = report.ratings[0][2] - report.ratings[0][0] - eps / max(m[0], 1e-12)
        worst = max(worst, slack)
    print(f"largest excess of dominated over dominating rating: {worst:.3g}")


@pytest.mark.parametrize("concept", ["mene-2p0s", "ce", "cce"])
def test_duplicate_strategies_rate_equal(concept, rng):
    base = random_zero_sum(3, 3, seed=rng) if concept == "mene-2p0s" else random_game((3, 3), seed=rng)
    g = duplicate_strategy(base, 0, 1)
    report = rate(g, SolveConfig(concept))
    assert report.ratings[0][1] == pytest.approx(report.ratings[0][3], abs=1e-6)


def test_symmetric_games_share_rating_multisets(rng):
    for concept in ("ce", "cce"):
        g = random_symmetric(3, 2, seed=rng)
        report = rate(g, SolveConfig(concept))
        np.testing.assert_allclose(np.sort(report.ratings[0]), np.sort(report.ratings[1]), atol=1e-6)
    g = random_symmetric(2, 3, seed=rng)
    report = rate(g, SolveConfig("cce"))
    for p in (1, 2):
        np.testing.assert_allclose(np.sort(report.ratings[0]), np.sort(report.ratings[p]), atol=1e-6)


def test_sweep_uniform_endpoint(rng):
    g = random_game((3, 2), seed=rng)
    table = epsilon_sweep(g, "cce", "max-entropy", [1.0])
    (point,) = table.points
    uni = uniform_rating(g)
    for p in range(2):
        np.testing.assert_allclose(point.ratings[p], uni.ratings[p], atol=1e-6)
        np.testing.assert_allclose(point.masses[p], 1 / g.shape[p], atol=1e-6)


def test_sweep_brps_endpoint_and_monotone_entropy(brps):
    uni = epsilon_uniform(brps, "cce")
    em, _ = epsilon_min(brps, "cce")
    rho_min = float(np.max(em / uni))
    grid = np.linspace(rho_min, 1.0, 10)
    table = epsilon_sweep(brps, "cce", "max-entropy", grid[::-1])
    assert [pt.rho for pt in table.points] == sorted(grid.tolist())
    assert table.points[0].clamped
    np.testing.assert_allclose(table.points[0].ratings[0], 0.5, atol=1e-2)
    entropy = [pt.entropy for pt in table.points]
    assert np.all(np.diff(entropy) >= -1e-9)
    rows = list(table.rows())
    assert len(rows) == 10 * 6
    assert rows[0][:3] == (pytest.approx(rho_min), 0, "R")


def test_sweep_marks_failed_points(brps):
    config = SolveConfig("cce", max_iterations=1)
    table = epsilon_sweep(brps, "cce", "max-entropy", [0.3, 1.0], config=config)
    # the uniform endpoint needs no iterations; the interior point fails
    assert [pt.converged for pt in table.points] == [False, True]
    assert table.points[0].error
    assert all(np.isnan(r[3]) for r in table.rows() if not r[5])
