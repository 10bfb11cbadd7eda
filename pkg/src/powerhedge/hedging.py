"""Super-replication by linear programming.

The hedge LP minimizes the initial cash endowment w such that trading inside
the per-node trade cones, running the plant, and disposing of surpluses ends
with a position dominating the claim at every leaf.  Trades are nonnegative
weights on the negated cone generators (free disposal is the negated unit
legs), plant outcomes enter through hypograph variables bounded by each
linear piece of the output, and terminal domination is expressed as a
nonnegative generator combination at the leaf.
"""

from dataclasses import dataclass

import numpy as np

from . import lp
from .production import thermal_output
from .tree import ContingentClaim, Node, ScenarioTree, SchemaError, zero_claim

_GENS = ((1.0, 0.0), (0.0, 1.0), None, None)   # per-node: e1, e2, (pi12,-1), (-1,pi21)


class HedgeUnbounded(RuntimeError):
    """The hedge LP is unbounded below: the instance admits arbitrage."""


class HedgeInfeasible(RuntimeError):
    """Internal error: the hedge LP cannot be infeasible for a finite claim."""


class InstanceTooLarge(ValueError):
    """Brute-force oracle refused: too many grid points or too deep a tree."""


def _generators(node: Node) -> tuple[tuple[float, float], ...]:
    return ((1.0, 0.0), (0.0, 1.0), (node.pi12, -1.0), (-1.0, node.pi21))


@dataclass(frozen=True)
class HedgeStrategy:
    """Extracted primal strategy: initial cash, per-node trade weights on the
    negated generators, and per-production-node regimes."""

    initial_cash: float
    trade_weights: dict[str, tuple[float, float, float, float]]
    trade_vectors: dict[str, tuple[float, float]]
    regimes: dict[str, float]


@dataclass(frozen=True)
class PriceResult:
    price: float
    strategy: HedgeStrategy
    iterations: int
    status: str


def _claim_vector(tree: ScenarioTree, claim: ContingentClaim, leaf: Node) -> tuple[float, float]:
    return claim.payoffs.get(leaf.id, (0.0, 0.0))


def build_hedge_lp(tree: ScenarioTree, claim: ContingentClaim,
                   production_enabled: bool = True):
    """Assemble the hedge LP.  Returns (problem, index) where index maps
    variable groups to builder columns for extraction."""
    if production_enabled and not tree.has_plant():
        raise SchemaError("production enabled but the tree carries no plant data")
    builder = lp.LinearProgramBuilder()
    w = builder.add_var("w", lb=-np.inf, ub=np.inf, obj=1.0)

    trade_cols: dict[str, list[int]] = {}
    for node in tree.nodes.values():
        trade_cols[node.id] = [
            builder.add_var(f"trade[{node.id},{g}]") for g in range(4)]

    prod_parents = tree.production_parents() if production_enabled else []
    beta_cols: dict[str, int] = {}
    income_cols: dict[tuple[str, str], tuple[int, int]] = {}
    for parent in prod_parents:
        kids = [tree.node(k) for k in tree.children(parent.id)]
        cap = max(k.plant.capacity for k in kids)
        beta = builder.add_var(f"beta[{parent.id}]", lb=0.0, ub=cap)
        beta_cols[parent.id] = beta
        for kid in kids:
            r1 = builder.add_var(f"cash_out[{parent.id},{kid.id}]", lb=-np.inf)
            r2 = builder.add_var(f"fuel_out[{parent.id},{kid.id}]", lb=-np.inf)
            income_cols[(parent.id, kid.id)] = (r1, r2)
            step, spot = kid.plant, kid.spot_power
            gain = spot * step.heat_rate
            # cash piece below capacity and the flat piece beyond it
            builder.add_row({r1: 1.0, beta: -gain}, "<=", -step.fixed_cost)
            builder.add_row({r1: 1.0}, "<=", gain * step.capacity - step.fixed_cost)
            pts = step.maintenance.breakpoints
            for (z0, c0), (z1, c1) in zip(pts, pts[1:]):
                s = (c1 - c0) / (z1 - z0)
                builder.add_row({r2: 1.0, beta: -s}, "<=", c0 - s * z0)
            builder.add_row({r2: 1.0, beta: -1.0}, "<=",
                            step.maintenance.value(step.capacity) - step.capacity)

    dominance_cols: dict[str, list[int]] = {}
    for leaf in tree.leaves():
        dominance_cols[leaf.id] = [
            builder.add_var(f"cover[{leaf.id},{g}]") for g in range(4)]

    for leaf in tree.leaves():
        payoff = _claim_vector(tree, claim, leaf)
        for comp in range(2):
            coeffs: dict[int, float] = {}
            if comp == 0:
                coeffs[w] = 1.0
            path = tree.path(leaf.id)
            on_path = {n.id for n in path}
            for node in path:
                gens = _generators(node)
                for g in range(4):
                    coeffs[trade_cols[node.id][g]] = coeffs.get(
                        trade_cols[node.id][g], 0.0) - gens[g][comp]
            for parent in prod_parents:
                if parent.id not in on_path:
                    continue
                kid = next(k for k in tree.children(parent.id) if k in on_path)
                r_pair = income_cols[(parent.id, kid)]
                coeffs[r_pair[comp]] = coeffs.get(r_pair[comp], 0.0) + 1.0
                if comp == 1:
                    coeffs[beta_cols[parent.id]] = coeffs.get(
                        beta_cols[parent.id], 0.0) - 1.0
            gens = _generators(leaf)
            for g in range(4):
                coeffs[dominance_cols[leaf.id][g]] = coeffs.get(
                    dominance_cols[leaf.id][g], 0.0) - gens[g][comp]
            builder.add_row(coeffs, "=", payoff[comp])

    index = {"w": w, "trades": trade_cols, "betas": beta_cols,
             "incomes": income_cols, "covers": dominance_cols}
    return builder.build("min"), index


def _extract_strategy(tree: ScenarioTree, x: np.ndarray, index) -> HedgeStrategy:
    weights = {}
    vectors = {}
    for nid, cols in index["trades"].items():
        lam = tuple(float(x[c]) for c in cols)
        gens = _generators(tree.node(nid))
        vec = -sum(np.array(g) * l for g, l in zip(gens, lam))
        weights[nid] = lam
        vectors[nid] = (float(vec[0]), float(vec[1]))
    regimes = {nid: float(x[c]) for nid, c in index["betas"].items()}
    return HedgeStrategy(float(x[index["w"]]), weights, vectors, regimes)


def replay_strategy(tree: ScenarioTree, claim: ContingentClaim,
                    strategy: HedgeStrategy, tol: float = 1e-7) -> list[str]:
    """Re-run the wealth recursion with exact plant outputs and verify
    terminal domination leaf by leaf; returns the offending leaf ids."""
    bad = []
    for leaf in tree.leaves():
        cash = strategy.initial_cash
        fuel = 0.0
        path = tree.path(leaf.id)
        for node in path:
            dv = strategy.trade_vectors.get(node.id, (0.0, 0.0))
            cash += dv[0]
            fuel += dv[1]
            beta = strategy.regimes.get(node.id)
            if beta is not None:
                fuel -= beta
            if node.parent is not None and node.parent in strategy.regimes \
                    and node.plant is not None:
                r1, r2 = thermal_output(node.plant, node.spot_power,
                                        strategy.regimes[node.parent])
                cash += r1
                fuel += r2
        h1, h2 = _claim_vector(tree, claim, leaf)
        v1, v2 = cash - h1, fuel - h2
        scale = 1.0 + abs(v1) + abs(v2)
        if leaf.pi21 * v1 + v2 < -tol * scale or v1 + leaf.pi12 * v2 < -tol * scale:
            bad.append(leaf.id)
    return bad


def superreplication_price(tree: ScenarioTree, claim: ContingentClaim | None = None,
                           production_enabled: bool = True) -> PriceResult:
    """Least initial cash from which some strategy dominates the claim at
    maturity in every scenario; the extracted strategy is replayed through
    the exact wealth recursion before being returned."""
    if claim is None:
        claim = tree.claim or zero_claim(tree)
    use_plant = production_enabled and tree.has_plant()
    problem, index = build_hedge_lp(tree, claim, use_plant) if use_plant \
        else build_hedge_lp(tree, claim, False)
    sol = lp.solve_lp(problem)
    if sol.status == lp.UNBOUNDED:
        raise HedgeUnbounded("hedge cost is unbounded below; the instance admits arbitrage")
    if sol.status == lp.INFEASIBLE:
        raise HedgeInfeasible("hedge LP infeasible; this cannot happen for a finite claim")
    strategy = _extract_strategy(tree, sol.x, index)
    offenders = replay_strategy(tree, claim, strategy)
    if offenders:
        raise lp.NumericalTrouble(f"replay failed terminal domination at {offenders}")
    return PriceResult(sol.value, strategy, sol.iterations, sol.status)


# -- brute-force oracle --------------------------------------------------------

def _terminal_requirement(leaf: Node, cash: float, fuel: float,
                          payoff: tuple[float, float]) -> float:
    """Least extra root cash making the leaf position dominate the payoff,
    settling the fuel gap at the leaf quotes."""
    gap = fuel - payoff[1]
    base = payoff[0] - cash
    return max(base - gap / leaf.pi21, base - leaf.pi12 * gap)


def brute_force_price(tree: ScenarioTree, claim: ContingentClaim | None = None,
                      grid_step: float = 0.05, production_enabled: bool = True,
                      fuel_pad: float = 1.0, max_evals: float = 5e6) -> float:
    """Grid-search oracle for small trees (at most two periods and three
    children per node): fuel positions and regimes are gridded, cash follows
    from the quotes, and the result upper-bounds the LP price, converging to
    it as the grid is refined."""
    if claim is None:
        claim = tree.claim or zero_claim(tree)
    if tree.horizon > 2:
        raise InstanceTooLarge("oracle accepts at most two periods")
    if any(len(tree.children(n.id)) > 3 for n in tree.nodes.values()):
        raise InstanceTooLarge("oracle accepts at most three children per node")

    prod_ids = {n.id for n in tree.production_parents()} if production_enabled else set()
    total_cap = sum(max(tree.node(k).plant.capacity for k in tree.children(p))
                    for p in prod_ids) if prod_ids else 0.0
    payoff_fuel = [claim.payoffs.get(l.id, (0.0, 0.0))[1] for l in tree.leaves()]
    lo = min(0.0, min(payoff_fuel)) - total_cap - fuel_pad
    hi = max(0.0, max(payoff_fuel)) + total_cap + fuel_pad
    fuel_grid = np.arange(lo, hi + grid_step, grid_step)

    def beta_grid(parent_id: str) -> np.ndarray:
        cap = max(tree.node(k).plant.capacity for k in tree.children(parent_id))
        return np.arange(0.0, cap + grid_step, grid_step)

    def cost_evals(node: Node) -> float:
        if not tree.children(node.id):
            return 1.0
        mult = len(fuel_grid) * (len(beta_grid(node.id)) if node.id in prod_ids else 1.0)
        return mult * sum(cost_evals(tree.node(k)) for k in tree.children(node.id))

    if cost_evals(tree.node(tree.root)) > max_evals:
        raise InstanceTooLarge("grid too fine for this tree")

    def trade_cost(node: Node, delta: float) -> float:
        return node.pi12 * delta if delta >= 0.0 else delta / node.pi21

    def required(node: Node, fuel_in: float) -> float:
        """Min over decisions at `node` of (cash spent here and below plus
        terminal requirement), given the inherited fuel position."""
        if not tree.children(node.id):
            return _terminal_requirement(node, 0.0, fuel_in,
                                         claim.payoffs.get(node.id, (0.0, 0.0)))
        best = np.inf
        kids = [tree.node(k) for k in tree.children(node.id)]
        betas = beta_grid(node.id) if node.id in prod_ids else np.array([None])
        for f in fuel_grid:
            spend = trade_cost(node, f - fuel_in)
            for beta in betas:
                worst = -np.inf
                for kid in kids:
                    if beta is None:
                        kid_fuel, kid_cash = f, 0.0
                    else:
                        r1, r2 = thermal_output(kid.plant, kid.spot_power, float(beta))
                        kid_fuel, kid_cash = f - float(beta) + r2, r1
                    worst = max(worst, required(kid, kid_fuel) - kid_cash)
                best = min(best, spend + worst)
        return best

    return float(required(tree.node(tree.root), 0.0))
