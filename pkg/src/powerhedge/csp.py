"""Sure-profit audit for the production side.

At a production node the plant beats the idle regime outright once its cash
revenue covers, at the node's cash-to-fuel rate, the fuel advantage over
idling.  The feasible injections form a union of intervals delimited by the
maintenance breakpoints; the plant passes the audit when that set is bounded,
and the bound C* is the largest compatible injection.  The tree-level check
aggregates the per-node audits with one small LP per linear piece, so an
unbounded profitable regime surfaces as an actually unbounded LP.
"""

from dataclasses import dataclass

import numpy as np

from . import lp
from .production import PlantStepData, thermal_output
from .tree import Node, ScenarioTree


class MissingPlantData(ValueError):
    """Node-level audit requested on a node without plant data."""


@dataclass(frozen=True)
class NodeVerdict:
    """Audit of one production child node."""

    node: str | None
    bounded: bool
    c_star: float | None            # sup of compatible injections when bounded
    tail_lhs: float                 # cash revenue beyond capacity
    tail_rhs: float                 # rate-weighted fuel advantage beyond capacity

    @property
    def witness(self) -> dict | None:
        if self.bounded:
            return None
        return {"node": self.node, "tail_lhs": self.tail_lhs, "tail_rhs": self.tail_rhs}


@dataclass(frozen=True)
class CspVerdict:
    bounded: bool
    c_star: float | None
    witness: dict | None
    per_node: tuple[NodeVerdict, ...]


def _profit_gap(step: PlantStepData, spot: float, pi12: float, beta: float) -> float:
    """Cash revenue minus the rate-weighted fuel advantage over idling."""
    r1, r2 = thermal_output(step, spot, beta)
    lhs = r1 + step.fixed_cost
    rhs = (r2 - beta - step.maintenance.value(0.0)) / pi12
    return lhs - rhs


def _grid(step: PlantStepData) -> list[float]:
    pts = [z for z, _ in step.maintenance.breakpoints]
    if pts[-1] != step.capacity:
        pts.append(step.capacity)
    return pts


def check_node_arbitrage(node: Node, pi12: float | None = None) -> NodeVerdict:
    """Closed-form audit of one production node.

    Both sides of the sure-profit inequality are piecewise linear in the
    injection with kinks at the maintenance breakpoints and at capacity, and
    constant beyond capacity; the compatible set is scanned piece by piece."""
    if node.plant is None:
        raise MissingPlantData(f"node {node.id!r} carries no plant data")
    if node.spot_power is None:
        raise MissingPlantData(f"node {node.id!r} carries no spot price")
    step = node.plant
    rate = node.pi12 if pi12 is None else pi12
    spot = node.spot_power

    grid = _grid(step)
    tail_lhs = spot * step.heat_rate * step.capacity
    tail_rhs = (step.maintenance.value(step.capacity) - step.capacity
                - step.maintenance.value(0.0)) / rate
    if tail_lhs - tail_rhs >= 0.0:
        return NodeVerdict(node.id, False, None, tail_lhs, tail_rhs)

    best = 0.0
    for a, b in zip(grid, grid[1:]):
        ga = _profit_gap(step, spot, rate, a)
        gb = _profit_gap(step, spot, rate, b)
        if gb >= 0.0:
            best = max(best, b)
        elif ga >= 0.0:
            best = max(best, a + (b - a) * ga / (ga - gb))
    return NodeVerdict(node.id, True, best, tail_lhs, tail_rhs)


def _piece_lp(children: list[tuple[PlantStepData, float, float]],
              lo: float, hi: float | None) -> lp.LPSolution:
    """Maximize the injection on one linear piece subject to the sure-profit
    inequality at every child; hi = None leaves the piece unbounded above."""
    builder = lp.LinearProgramBuilder()
    j = builder.add_var("beta", lb=lo, ub=np.inf if hi is None else hi, obj=1.0)
    for step, spot, rate in children:
        g_lo = _profit_gap(step, spot, rate, lo)
        ref = lo + 1.0 if hi is None else hi
        g_hi = _profit_gap(step, spot, rate, ref)
        slope = (g_hi - g_lo) / (ref - lo)
        # slope*(beta - lo) + g_lo >= 0 on the piece
        builder.add_row({j: slope}, ">=", -g_lo + slope * lo)
    return lp.solve_lp(builder.build("max"))


def _node_lp_audit(children: list[tuple[PlantStepData, float, float]]) -> tuple[bool, float]:
    """LP-based sup of injections compatible with the sure-profit inequality
    at all children simultaneously."""
    grid = sorted({g for step, _, _ in children for g in _grid(step)})
    best = 0.0
    for a, b in zip(grid, grid[1:]):
        sol = _piece_lp(children, a, b)
        if sol.status == lp.OPTIMAL:
            best = max(best, sol.value)
    tail = _piece_lp(children, grid[-1], None)
    if tail.status == lp.UNBOUNDED:
        return False, best
    if tail.status == lp.OPTIMAL:
        best = max(best, tail.value)
    return True, best


def check_csp_tree(tree: ScenarioTree, start_index: int = 0) -> CspVerdict:
    """Tree-wide audit from the given start index.

    Every production node from the start index on is audited via per-piece
    LPs (the inequality must hold at all children of a regime at once); the
    verdict is bounded with C* equal to the sum of per-node suprema, or
    unbounded with the first offending node as witness.  A tree without
    production steps is trivially bounded at zero."""
    per_node: list[NodeVerdict] = []
    witness = None
    total = 0.0
    for parent in tree.production_parents(start_index):
        children = []
        for kid_id in tree.children(parent.id):
            kid = tree.node(kid_id)
            per_node.append(check_node_arbitrage(kid))
            children.append((kid.plant, kid.spot_power, kid.pi12))
        bounded, c_star = _node_lp_audit(children)
        if not bounded and witness is None:
            bad = next((v for v in per_node if not v.bounded), per_node[-1])
            witness = {"node": parent.id, "children": [c.node for c in per_node
                                                       if c.node in tree.children(parent.id)],
                       "detail": bad.witness or {"node": bad.node}}
        if bounded:
            total += c_star
    if witness is not None:
        return CspVerdict(False, None, witness, tuple(per_node))
    return CspVerdict(True, total, None, tuple(per_node))
