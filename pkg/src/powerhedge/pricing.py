"""Dual pricing: consistent price systems and the support-function bound.

A consistent price system is a componentwise-positive martingale whose
implied fuel price stays inside every node's bid-ask interval.  The dual
price maximizes the expected claim value under such a system minus the
plant's support value, an LP after two classical moves: the price system is
carried in probability-weighted form (which removes every probability from
the constraints), and the per-node supremum over injections is replaced by
epigraph cuts at the candidate breakpoints, where a piecewise-linear
objective attains its maximum.  Strict interiority is approximated by a
small margin on the ratio bounds, so the computed value is a lower bound
that increases as the margin shrinks.
"""

from dataclasses import dataclass

import numpy as np

from . import lp
from .production import PlantStepData
from .tree import ContingentClaim, Node, ScenarioTree, node_probability, zero_claim

# Interiority margin: small enough that the margin-induced gap to the primal
# stays below the duality tolerance even for fuel volumes in the hundreds.
DEFAULT_EPS = 1e-9
DEFAULT_EPS_POS = 1e-8


class InvalidPriceSystem(ValueError):
    """Candidate price system violates martingality, positivity or ratios."""


class NoPriceSystem(RuntimeError):
    """No margin-interior price system exists: frictions too tight for eps."""


class MissingSpot(ValueError):
    """Power futures pricing needs a spot price at every delivery node."""


@dataclass(frozen=True)
class PriceSystem:
    """Per-node (cash, fuel) shadow prices, normalized to unit root cash."""

    z: dict[str, tuple[float, float]]


@dataclass(frozen=True)
class SupportValue:
    alpha: float
    regimes: dict[str, float]


def validate_price_system(tree: ScenarioTree, ps: PriceSystem,
                          martingale_tol: float = 1e-10,
                          ratio_tol: float = 1e-8) -> list[str]:
    """All violations of the price-system invariants, empty iff valid."""
    out = []
    root = ps.z.get(tree.root)
    if root is None or abs(root[0] - 1.0) > martingale_tol:
        out.append("root cash component must be normalized to 1")
    for node in tree.nodes.values():
        z = ps.z.get(node.id)
        if z is None:
            out.append(f"missing value at node {node.id!r}")
            continue
        if z[0] <= 0.0 or z[1] <= 0.0:
            out.append(f"non-positive component at node {node.id!r}")
            continue
        ratio = z[1] / z[0]
        lo, hi = 1.0 / node.pi21, node.pi12
        if not (lo - ratio_tol * (1 + lo) <= ratio <= hi + ratio_tol * (1 + hi)):
            out.append(f"fuel price {ratio} outside the bid-ask interval at node {node.id!r}")
        kids = tree.children(node.id)
        if kids:
            for comp in range(2):
                exp = sum(tree.node(k).cond_prob * ps.z[k][comp]
                          for k in kids if k in ps.z)
                if abs(exp - z[comp]) > martingale_tol * (1.0 + abs(z[comp])):
                    out.append(f"martingale property fails at node {node.id!r}")
                    break
    return out


def _candidates(kids: list[Node]) -> list[float]:
    cand = {0.0}
    for kid in kids:
        cand.update(z for z, _ in kid.plant.maintenance.breakpoints)
        cand.add(kid.plant.capacity)
    return sorted(cand)


def _injection_term(step: PlantStepData, spot: float, z: tuple[float, float],
                    beta: float) -> float:
    burned = min(beta, step.capacity)
    return (z[0] * (spot * step.heat_rate * burned - step.fixed_cost)
            + z[1] * (step.maintenance.value(burned) - burned))


def alpha_support(tree: ScenarioTree, ps: PriceSystem,
                  production_enabled: bool = True) -> SupportValue:
    """Support value of the plant under a valid price system: per production
    node, the best injection is found by evaluating the candidate
    breakpoints, and contributions are probability-weighted."""
    issues = validate_price_system(tree, ps)
    if issues:
        raise InvalidPriceSystem("; ".join(issues))
    alpha = 0.0
    regimes: dict[str, float] = {}
    if not production_enabled:
        return SupportValue(0.0, regimes)
    for parent in tree.production_parents():
        kids = [tree.node(k) for k in tree.children(parent.id)]
        best_val, best_beta = -np.inf, 0.0
        for beta in _candidates(kids):
            val = sum(k.cond_prob * _injection_term(k.plant, k.spot_power, ps.z[k.id], beta)
                      for k in kids)
            if val > best_val + 1e-15:
                best_val, best_beta = val, beta
        alpha += node_probability(tree, parent.id) * best_val
        regimes[parent.id] = best_beta
    return SupportValue(alpha, regimes)


def _build_dual_lp(tree: ScenarioTree, claim: ContingentClaim,
                   production_enabled: bool, eps: float, eps_pos: float):
    builder = lp.LinearProgramBuilder()
    zcols: dict[str, tuple[int, int]] = {}
    prob = {nid: node_probability(tree, nid) for nid in tree.nodes}
    payoffs = {leaf.id: claim.payoffs.get(leaf.id, (0.0, 0.0)) for leaf in tree.leaves()}

    for node in tree.nodes.values():
        floor = eps_pos * prob[node.id]
        obj = payoffs.get(node.id, (0.0, 0.0))
        z1 = builder.add_var(f"z1[{node.id}]", lb=floor, obj=obj[0])
        z2 = builder.add_var(f"z2[{node.id}]", lb=floor, obj=obj[1])
        zcols[node.id] = (z1, z2)

    builder.add_row({zcols[tree.root][0]: 1.0}, "=", 1.0)
    for node in tree.nodes.values():
        kids = tree.children(node.id)
        if kids:
            for comp in range(2):
                coeffs = {zcols[node.id][comp]: 1.0}
                for k in kids:
                    coeffs[zcols[k][comp]] = -1.0
                builder.add_row(coeffs, "=", 0.0)
        z1, z2 = zcols[node.id]
        builder.add_row({z2: 1.0, z1: -(1.0 / node.pi21 + eps)}, ">=", 0.0)
        builder.add_row({z2: -1.0, z1: node.pi12 - eps}, ">=", 0.0)

    prod_parents = tree.production_parents() if production_enabled else []
    for parent in prod_parents:
        kids = [tree.node(k) for k in tree.children(parent.id)]
        s = builder.add_var(f"support[{parent.id}]", lb=-np.inf, obj=-1.0)
        for beta in _candidates(kids):
            coeffs = {s: 1.0}
            for kid in kids:
                burned = min(beta, kid.plant.capacity)
                gain = kid.spot_power * kid.plant.heat_rate * burned - kid.plant.fixed_cost
                upkeep = kid.plant.maintenance.value(burned) - burned
                z1, z2 = zcols[kid.id]
                coeffs[z1] = coeffs.get(z1, 0.0) - gain
                coeffs[z2] = coeffs.get(z2, 0.0) - upkeep
            builder.add_row(coeffs, ">=", 0.0)
    return builder, zcols


def dual_price(tree: ScenarioTree, claim: ContingentClaim | None = None,
               production_enabled: bool = True, eps: float = DEFAULT_EPS,
               eps_pos: float = DEFAULT_EPS_POS) -> tuple[float, PriceSystem]:
    """Best lower bound on the super-replication price over margin-interior
    price systems; returns the value and an optimal system."""
    if claim is None:
        claim = tree.claim or zero_claim(tree)
    use_plant = production_enabled and tree.has_plant()
    builder, zcols = _build_dual_lp(tree, claim, use_plant, eps, eps_pos)
    sol = lp.solve_lp(builder.build("max"))
    if sol.status == lp.INFEASIBLE:
        raise NoPriceSystem(f"no price system with margin eps={eps}")
    if sol.status == lp.UNBOUNDED:  # pragma: no cover - dual of a feasible LP
        raise lp.NumericalTrouble("dual pricing LP unbounded")
    prob = {nid: node_probability(tree, nid) for nid in tree.nodes}
    z = {nid: (float(sol.x[c1]) / prob[nid], float(sol.x[c2]) / prob[nid])
         for nid, (c1, c2) in zcols.items()}
    return sol.value, PriceSystem(z)


def power_futures_claim(tree: ScenarioTree, power: float) -> ContingentClaim:
    """Cash-settled claim paying spot times the contracted power at every
    delivery hour, carried to maturity at zero interest."""
    if power < 0.0:
        raise ValueError("contracted power must be nonnegative")
    payoffs = {}
    for leaf in tree.leaves():
        total = 0.0
        for node in tree.path(leaf.id):
            if node.time_index == 0:
                continue
            if node.spot_power is None:
                raise MissingSpot(f"node {node.id!r} has no spot price")
            total += node.spot_power * power
        payoffs[leaf.id] = (total, 0.0)
    return ContingentClaim(payoffs, (max(abs(v[0]) for v in payoffs.values()), 0.0))


def power_futures_price(tree: ScenarioTree, power: float,
                        production_enabled: bool = True, eps: float = DEFAULT_EPS,
                        eps_pos: float = DEFAULT_EPS_POS) -> tuple[float, PriceSystem]:
    """Seller's price of the power futures contract: dual price of the
    accumulated cash delivery claim, production included by default."""
    claim = power_futures_claim(tree, power)
    return dual_price(tree, claim, production_enabled, eps, eps_pos)
