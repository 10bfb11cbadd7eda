"""Solvency cone for the two-asset (cash, fuel) market.

The cone is spanned by the unit holdings and the two exchange legs priced by
the bid-ask quotes: holding pi12 cash covers a debt of one fuel unit, and
holding pi21 fuel covers a debt of one cash unit.  Its dual consists of the
nonnegative price vectors y whose implied fuel price y2/y1 lies inside the
bid-ask interval [1/pi21, pi12].
"""

from dataclasses import dataclass

import numpy as np

from . import lp


class FrictionViolation(ValueError):
    """Quotes admit a round trip at zero or negative cost (pi12*pi21 <= 1)."""


@dataclass(frozen=True)
class ConeRepr:
    """Solvency cone given by its four generators."""

    pi12: float
    pi21: float
    generators: tuple[tuple[float, float], ...]


def make_solvency_cone(pi12: float, pi21: float) -> ConeRepr:
    """Build the solvency cone for quotes (pi12, pi21).

    Raises FrictionViolation unless pi12 * pi21 > 1 (efficient frictions),
    which is exactly the condition for the cone to contain no line."""
    if not (pi12 > 0.0 and pi21 > 0.0):
        raise FrictionViolation(f"quotes must be positive, got ({pi12}, {pi21})")
    if not pi12 * pi21 > 1.0:
        raise FrictionViolation(
            f"efficient frictions require pi12*pi21 > 1, got {pi12 * pi21}")
    gens = ((1.0, 0.0), (0.0, 1.0), (pi12, -1.0), (-1.0, pi21))
    return ConeRepr(pi12, pi21, gens)


def contains(cone: ConeRepr, v, feas_tol: float = lp.FEAS_TOL) -> bool:
    """Cone membership, decided by a four-variable LP feasibility problem:
    is v a nonnegative combination of the generators?"""
    g = np.array(cone.generators, dtype=float).T          # 2 x 4
    problem = lp.LPProblem(
        "min", np.zeros(4), g, ("=", "="), np.asarray(v, dtype=float),
        np.zeros(4), np.full(4, np.inf))
    return lp.solve_lp(problem, feas_tol=feas_tol).status == lp.OPTIMAL


def dominates(v, w, cone: ConeRepr) -> bool:
    """True iff v - w lies in the solvency cone (v can be traded down to w)."""
    return contains(cone, np.asarray(v, dtype=float) - np.asarray(w, dtype=float))


def dual_contains(pi12: float, pi21: float, y, tol: float = lp.FEAS_TOL) -> bool:
    """Membership of y in the dual cone: y nonnegative and y.g >= 0 for every
    generator g of the solvency cone."""
    cone = make_solvency_cone(pi12, pi21)
    y = np.asarray(y, dtype=float)
    return all(float(y @ np.array(g)) >= -tol for g in cone.generators)


def fuel_price_bounds(pi12: float, pi21: float) -> tuple[float, float]:
    """Bid-ask interval for the fuel price y2/y1 of dual-cone elements with
    positive components."""
    return 1.0 / pi21, pi12
