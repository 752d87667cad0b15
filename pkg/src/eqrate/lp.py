"""Thin wrapper over scipy's HiGHS linear programming backend."""

import numpy as np
from scipy.optimize import linprog

from .errors import SolverError

LP_TOL = 1e-10


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(0, None)):
    """Minimize ``c @ x`` and return ``(x, objective)``.

    Raises SolverError on anything other than an optimal status; callers that
    expect infeasibility should check feasibility first.
    """
    res = linprog(
        np.asarray(c, float), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": LP_TOL,
                 "dual_feasibility_tolerance": LP_TOL,
                 "presolve": True},
    )
    if res.status != 0:
        raise SolverError(f"LP failed: {res.message}")
    return res.x, float(res.fun)
