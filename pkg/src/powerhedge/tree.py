"""Finite scenario tree: market quotes, spot prices, plant data and claims.

The tree carries everything an instance needs: a strictly increasing time
grid, one root, per-node conditional probabilities and bid-ask quotes, the
electricity spot from the first period on, optional plant data marking the
production steps, and an optional terminal claim.  Parsing is strict; the
validator reports every violated invariant instead of stopping at the first.
"""

import json
import math
from dataclasses import dataclass, field, replace

from . import cones
from .production import PiecewiseConcave, PlantStepData


class TreeError(ValueError):
    """Base class for tree ingestion failures."""


class TreeSyntaxError(TreeError):
    """Document is not valid JSON (NaN/Infinity tokens included)."""


class SchemaError(TreeError):
    """Document shape is wrong: missing field, bad type, unknown reference."""


class InvariantError(TreeError):
    """Well-formed document violating a model invariant."""

    def __init__(self, code: str, node: str | None, message: str):
        super().__init__(f"{code} at node {node!r}: {message}" if node else f"{code}: {message}")
        self.code = code
        self.node = node


@dataclass(frozen=True)
class Violation:
    code: str
    node: str | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Node:
    id: str
    time_index: int
    parent: str | None
    cond_prob: float
    pi12: float
    pi21: float
    spot_power: float | None = None
    plant: PlantStepData | None = None


@dataclass(frozen=True)
class ContingentClaim:
    """Terminal payoff (cash, fuel) per leaf, bounded below by -kappa in the
    solvency order."""

    payoffs: dict[str, tuple[float, float]]
    kappa: tuple[float, float] = (0.0, 0.0)


@dataclass
class ScenarioTree:
    times: tuple[float, ...]
    nodes: dict[str, Node]
    root: str
    claim: ContingentClaim | None = None
    _children: dict[str, list[str]] = field(init=False, repr=False)

    def __post_init__(self):
        self._children = {nid: [] for nid in self.nodes}
        for node in self.nodes.values():
            if node.parent is not None and node.parent in self._children:
                self._children[node.parent].append(node.id)

    @property
    def horizon(self) -> int:
        return len(self.times) - 1

    def children(self, node_id: str) -> list[str]:
        return list(self._children[node_id])

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def nodes_at(self, time_index: int) -> list[Node]:
        return [n for n in self.nodes.values() if n.time_index == time_index]

    def leaves(self) -> list[Node]:
        return self.nodes_at(self.horizon)

    def path(self, node_id: str) -> list[Node]:
        """Root-to-node list of nodes."""
        out = []
        cur = self.node(node_id)
        while True:
            out.append(cur)
            if cur.parent is None:
                break
            cur = self.node(cur.parent)
        return out[::-1]

    def production_parents(self, start_index: int = 0) -> list[Node]:
        """Nodes whose children carry plant data, i.e. where a regime is
        chosen; ordered by document order."""
        out = []
        for node in self.nodes.values():
            if node.time_index < start_index:
                continue
            kids = self._children[node.id]
            if kids and all(self.nodes[k].plant is not None for k in kids):
                out.append(node)
        return out

    def has_plant(self) -> bool:
        return any(n.plant is not None for n in self.nodes.values())


class UnknownNode(KeyError):
    pass


def node_probability(tree: ScenarioTree, node_id: str) -> float:
    """Unconditional probability: product of conditional probabilities along
    the root-to-node path (the root maps to 1)."""
    prob = 1.0
    for node in tree.path(node_id):
        if node.parent is not None:
            prob *= node.cond_prob
    return prob


# -- parsing ------------------------------------------------------------------

def _reject_constant(token: str):
    raise TreeSyntaxError(f"non-finite token {token!r} not permitted")


def _number(obj: dict, key: str, node: str, optional: bool = False) -> float | None:
    if key not in obj:
        if optional:
            return None
        raise SchemaError(f"node {node!r}: missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"node {node!r}: field {key!r} must be a number")
    if not math.isfinite(v):
        raise SchemaError(f"node {node!r}: field {key!r} must be finite")
    return float(v)


def _parse_plant(obj, node: str) -> PlantStepData:
    if not isinstance(obj, dict):
        raise SchemaError(f"node {node!r}: 'plant' must be an object")
    heat = _number(obj, "heat_rate", node)
    cap = _number(obj, "capacity", node)
    fixed = _number(obj, "fixed_cost", node)
    raw = obj.get("maintenance")
    if not isinstance(raw, list) or not raw:
        raise SchemaError(f"node {node!r}: 'maintenance' must be a nonempty list of [z, c] pairs")
    pts = []
    for pair in raw:
        if (not isinstance(pair, list)) or len(pair) != 2 \
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in pair):
            raise SchemaError(f"node {node!r}: maintenance entries must be [z, c] number pairs")
        pts.append((float(pair[0]), float(pair[1])))
    return PlantStepData(heat, cap, fixed, PiecewiseConcave(tuple(pts)))


def parse_tree(document: bytes | str, check: bool = True) -> ScenarioTree:
    """Parse and fully validate the JSON tree document.

    Raises TreeSyntaxError for malformed JSON, SchemaError for shape
    problems, and InvariantError (naming the first offending node) when the
    data violates a model invariant.  With check=False the invariant gate is
    skipped so a caller can collect the full validation report itself."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        raw = json.loads(document, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise TreeSyntaxError(f"invalid JSON: {exc}") from None

    if not isinstance(raw, dict):
        raise SchemaError("top level must be an object")
    times = raw.get("times")
    if not isinstance(times, list) or len(times) < 2 \
            or any(isinstance(t, bool) or not isinstance(t, (int, float)) for t in times):
        raise SchemaError("'times' must be a list of at least two numbers")
    raw_nodes = raw.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise SchemaError("'nodes' must be a nonempty list")

    nodes: dict[str, Node] = {}
    roots = []
    for obj in raw_nodes:
        if not isinstance(obj, dict):
            raise SchemaError("each node must be an object")
        if "id" not in obj:
            raise SchemaError("node without 'id'")
        nid = str(obj["id"])
        if nid in nodes:
            raise SchemaError(f"duplicate node id {nid!r}")
        if "time_index" not in obj or isinstance(obj["time_index"], bool) \
                or not isinstance(obj["time_index"], int):
            raise SchemaError(f"node {nid!r}: 'time_index' must be an integer")
        if "parent" not in obj:
            raise SchemaError(f"node {nid!r}: missing field 'parent'")
        parent = obj["parent"]
        parent = None if parent is None else str(parent)
        plant = _parse_plant(obj["plant"], nid) if obj.get("plant") is not None else None
        node = Node(
            id=nid,
            time_index=obj["time_index"],
            parent=parent,
            cond_prob=_number(obj, "cond_prob", nid),
            pi12=_number(obj, "pi12", nid),
            pi21=_number(obj, "pi21", nid),
            spot_power=_number(obj, "spot_power", nid, optional=True),
            plant=plant,
        )
        nodes[nid] = node
        if parent is None:
            roots.append(nid)

    if len(roots) != 1:
        raise SchemaError(f"expected exactly one root, found {len(roots)}")
    for node in nodes.values():
        if node.parent is not None and node.parent not in nodes:
            raise SchemaError(f"node {node.id!r}: unknown parent {node.parent!r}")

    claim = None
    if raw.get("claim") is not None:
        cobj = raw["claim"]
        if not isinstance(cobj, dict) or not isinstance(cobj.get("payoffs"), dict):
            raise SchemaError("'claim' must be an object with a 'payoffs' map")
        payoffs = {}
        for key, val in cobj["payoffs"].items():
            if (not isinstance(val, list)) or len(val) != 2 \
                    or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in val):
                raise SchemaError(f"claim payoff for {key!r} must be a [cash, fuel] pair")
            payoffs[str(key)] = (float(val[0]), float(val[1]))
        kappa = cobj.get("kappa", [0.0, 0.0])
        if (not isinstance(kappa, list)) or len(kappa) != 2:
            raise SchemaError("claim 'kappa' must be a [k1, k2] pair")
        claim = ContingentClaim(payoffs, (float(kappa[0]), float(kappa[1])))

    tree = ScenarioTree(tuple(float(t) for t in times), nodes, roots[0], claim)
    if check:
        report = validate(tree)
        if not report.ok:
            first = report.violations[0]
            raise InvariantError(first.code, first.node, first.message)
    return tree


def serialize_tree(tree: ScenarioTree) -> dict:
    """JSON-ready dict that parse_tree accepts back, preserving every float
    exactly."""
    nodes = []
    for node in tree.nodes.values():
        obj = {
            "id": node.id,
            "time_index": node.time_index,
            "parent": node.parent,
            "cond_prob": node.cond_prob,
            "pi12": node.pi12,
            "pi21": node.pi21,
        }
        if node.spot_power is not None:
            obj["spot_power"] = node.spot_power
        if node.plant is not None:
            obj["plant"] = {
                "heat_rate": node.plant.heat_rate,
                "capacity": node.plant.capacity,
                "fixed_cost": node.plant.fixed_cost,
                "maintenance": [[z, c] for z, c in node.plant.maintenance.breakpoints],
            }
        nodes.append(obj)
    out = {"times": list(tree.times), "nodes": nodes}
    if tree.claim is not None:
        out["claim"] = {
            "payoffs": {k: list(v) for k, v in tree.claim.payoffs.items()},
            "kappa": list(tree.claim.kappa),
        }
    return out


# -- validation ---------------------------------------------------------------

def validate(tree: ScenarioTree) -> ValidationReport:
    """Check every structural and model invariant; returns an empty report
    iff the tree is valid."""
    out: list[Violation] = []
    horizon = tree.horizon

    if any(b <= a for a, b in zip(tree.times, tree.times[1:])):
        out.append(Violation("times", None, "time grid must be strictly increasing"))

    root = tree.nodes.get(tree.root)
    if root is None or root.parent is not None or root.time_index != 0:
        out.append(Violation("root", tree.root, "root must have no parent and time index 0"))
    elif root.cond_prob != 1.0:
        out.append(Violation("root-probability", tree.root, "root conditional probability must be 1"))

    for node in tree.nodes.values():
        if node.id == tree.root:
            continue
        if node.parent is None:
            out.append(Violation("root", node.id, "second root"))
            continue
        parent = tree.nodes.get(node.parent)
        if parent is None:
            out.append(Violation("parent", node.id, f"unknown parent {node.parent!r}"))
        elif node.time_index != parent.time_index + 1:
            out.append(Violation("parent", node.id, "parent must sit at the previous time index"))
        if not (0.0 < node.cond_prob <= 1.0):
            out.append(Violation("probability", node.id,
                                 "conditional probability must be in (0, 1]"))

    for node in tree.nodes.values():
        if not (0 <= node.time_index <= horizon):
            out.append(Violation("time-index", node.id,
                                 f"time index must be within [0, {horizon}]"))
        if node.time_index < horizon and not tree._children.get(node.id):
            out.append(Violation("childless", node.id,
                                 "every node before the horizon needs at least one child"))
        if node.time_index == horizon and tree._children.get(node.id):
            out.append(Violation("leaf", node.id, "nodes at the horizon cannot have children"))

        if node.pi12 <= 0.0 or node.pi21 <= 0.0:
            out.append(Violation("quotes", node.id, "bid-ask quotes must be positive"))
        elif not node.pi12 * node.pi21 > 1.0:
            out.append(Violation("efficient frictions", node.id,
                                 f"pi12*pi21 must exceed 1, got {node.pi12 * node.pi21}"))

        if node.plant is not None:
            if node.time_index == 0:
                out.append(Violation("plant", node.id, "plant data is not allowed at the root"))
            for msg in node.plant.issues():
                out.append(Violation("plant", node.id, msg))
            if node.spot_power is None:
                out.append(Violation("spot", node.id, "production node without spot price"))
            elif node.spot_power < 0.0:
                out.append(Violation("spot", node.id,
                                     "production requires a nonnegative spot price"))

    for node in tree.nodes.values():
        kids = tree._children.get(node.id, [])
        if kids:
            total = sum(tree.nodes[k].cond_prob for k in kids)
            if abs(total - 1.0) > 1e-12:
                out.append(Violation("probability-sum", node.id,
                                     f"children probabilities sum to {total!r}"))
            with_plant = sum(1 for k in kids if tree.nodes[k].plant is not None)
            if 0 < with_plant < len(kids):
                out.append(Violation("plant", node.id,
                                     "production must be enabled uniformly across a step"))

    for idx in range(1, horizon + 1):
        level = tree.nodes_at(idx)
        flags = {n.plant is not None for n in level}
        if len(flags) > 1:
            out.append(Violation("plant", None,
                                 f"production at time index {idx} must cover all nodes of the step"))

    if tree.claim is not None:
        leaf_ids = {n.id for n in tree.leaves()}
        for key in tree.claim.payoffs:
            if key not in leaf_ids:
                out.append(Violation("claim", key, "payoff key is not a leaf"))
        for leaf in leaf_ids:
            if leaf not in tree.claim.payoffs:
                out.append(Violation("claim", leaf, "leaf without payoff entry"))
        k1, k2 = tree.claim.kappa
        if k1 < 0.0 or k2 < 0.0:
            out.append(Violation("claim", None, "kappa must be componentwise nonnegative"))
        else:
            for leaf in tree.leaves():
                payoff = tree.claim.payoffs.get(leaf.id)
                if payoff is None or leaf.pi12 <= 0 or leaf.pi21 <= 0 \
                        or leaf.pi12 * leaf.pi21 <= 1.0:
                    continue
                cone = cones.make_solvency_cone(leaf.pi12, leaf.pi21)
                if not cones.contains(cone, (payoff[0] + k1, payoff[1] + k2)):
                    out.append(Violation("claim", leaf.id,
                                         "payoff plus kappa is not solvent at the leaf"))

    return ValidationReport(tuple(out))


def zero_claim(tree: ScenarioTree) -> ContingentClaim:
    return ContingentClaim({n.id: (0.0, 0.0) for n in tree.leaves()}, (0.0, 0.0))


def with_claim(tree: ScenarioTree, claim: ContingentClaim) -> ScenarioTree:
    return ScenarioTree(tree.times, dict(tree.nodes), tree.root, claim)


def reweighted(tree: ScenarioTree, weights: dict[str, float]) -> ScenarioTree:
    """Copy of the tree with new conditional probabilities; weights are
    renormalized per sibling group."""
    new_nodes: dict[str, Node] = {}
    for node in tree.nodes.values():
        if node.parent is None:
            new_nodes[node.id] = node
            continue
        siblings = tree._children[node.parent]
        total = sum(weights.get(s, tree.nodes[s].cond_prob) for s in siblings)
        w = weights.get(node.id, node.cond_prob)
        new_nodes[node.id] = replace(node, cond_prob=w / total)
    return ScenarioTree(tree.times, new_nodes, tree.root, tree.claim)
