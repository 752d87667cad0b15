"""Small textbook games used in examples, tests and the documentation."""

import numpy as np

from .game import NormalFormGame

BRPS_PAYOFF = np.array([
    [0.5, 0.2, 1.0],
    [0.8, 0.5, 0.3],
    [0.0, 0.7, 0.5],
])


def _bimatrix(g1, g2, labels1, labels2=None):
    return NormalFormGame(np.stack([np.asarray(g1, float), np.asarray(g2, float)]),
                          [labels1, labels2 or labels1])


def biased_rps() -> NormalFormGame:
    """Biased rock-paper-scissors, a symmetric constant-sum game (G2 = 1 - G1 = G1^T)."""
    return _bimatrix(BRPS_PAYOFF, BRPS_PAYOFF.T, ["R", "P", "S"])


def dominated_biased_rps() -> NormalFormGame:
    """Two copies of BRPS on a block diagonal, the second at half scale (G2 = G1^T)."""
    z = np.zeros((3, 3))
    g1 = np.block([[BRPS_PAYOFF, z], [z, 0.5 * BRPS_PAYOFF]])
    return _bimatrix(g1, g1.T, ["R", "P", "S", "hR", "hP", "hS"])


def rock_paper_scissors() -> NormalFormGame:
    g1 = np.array([[0.5, 0.0, 1.0], [1.0, 0.5, 0.0], [0.0, 1.0, 0.5]])
    return _bimatrix(g1, g1.T, ["R", "P", "S"])


def dwayne_rps() -> NormalFormGame:
    """RPS with a fourth strategy D whose payoffs coincide with R."""
    g1 = np.array([
        [0.5, 0.5, 0.0, 1.0],
        [0.5, 0.5, 0.0, 1.0],
        [1.0, 1.0, 0.5, 0.0],
        [0.0, 0.0, 1.0, 0.5],
    ])
    return _bimatrix(g1, g1.T, ["D", "R", "P", "S"])


def prisoners_dilemma() -> NormalFormGame:
    g1 = np.array([[-1.0, -3.0], [0.0, -2.0]])
    return _bimatrix(g1, g1.T, ["C", "D"])


def bach_or_stravinsky() -> NormalFormGame:
    g1 = np.array([[3.0, 0.0], [0.0, 2.0]])
    g2 = np.array([[2.0, 0.0], [0.0, 3.0]])
    return _bimatrix(g1, g2, ["B", "S"])


def preferential_coordination() -> NormalFormGame:
    g1 = np.array([[1.0, 0.0], [0.0, 0.5]])
    return _bimatrix(g1, g1, ["P", "L"])


def chicken() -> NormalFormGame:
    g1 = np.array([[-10.0, 1.0], [-1.0, 0.0]])
    return _bimatrix(g1, g1.T, ["C", "S"])


def matching_pennies() -> NormalFormGame:
    g1 = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return _bimatrix(g1, -g1, ["H", "T"])


STANDARD_GAMES = {
    "brps": biased_rps,
    "dominated-brps": dominated_biased_rps,
    "rps": rock_paper_scissors,
    "drps": dwayne_rps,
    "pd": prisoners_dilemma,
    "bos": bach_or_stravinsky,
    "coordination": preferential_coordination,
    "chicken": chicken,
    "matching-pennies": matching_pennies,
}
