"""Shared fixtures: desk instances and a randomized instance generator."""

import json

import numpy as np
import pytest

from powerhedge.cones import make_solvency_cone, contains
from powerhedge.production import thermal_output
from powerhedge.tree import ContingentClaim, ScenarioTree, parse_tree

PLANT_E = {
    "heat_rate": 0.5,
    "capacity": 10.0,
    "fixed_cost": 5.0,
    "maintenance": [[0.0, -100.0], [5.0, -10.0], [10.0, -2.0]],
}


def desk1_doc() -> dict:
    return {
        "times": [0.0, 1.0],
        "nodes": [
            {"id": "root", "time_index": 0, "parent": None, "cond_prob": 1.0,
             "pi12": 2.0, "pi21": 1.0},
            {"id": "up", "time_index": 1, "parent": "root", "cond_prob": 0.5,
             "pi12": 1.8, "pi21": 1.0, "spot_power": 40.0},
            {"id": "down", "time_index": 1, "parent": "root", "cond_prob": 0.5,
             "pi12": 2.4, "pi21": 1.0, "spot_power": 20.0},
        ],
        "claim": {"payoffs": {"up": [0.0, 1.0], "down": [0.0, 1.0]},
                  "kappa": [0.0, 1.0]},
    }


def desk2_doc(spot: float = 8.0) -> dict:
    return {
        "times": [0.0, 1.0],
        "nodes": [
            {"id": "root", "time_index": 0, "parent": None, "cond_prob": 1.0,
             "pi12": 2.0, "pi21": 1.0},
            {"id": "up", "time_index": 1, "parent": "root", "cond_prob": 0.5,
             "pi12": 2.0, "pi21": 1.0, "spot_power": spot, "plant": dict(PLANT_E)},
            {"id": "down", "time_index": 1, "parent": "root", "cond_prob": 0.5,
             "pi12": 2.0, "pi21": 1.0, "spot_power": spot, "plant": dict(PLANT_E)},
        ],
    }


@pytest.fixture
def desk1() -> ScenarioTree:
    return parse_tree(json.dumps(desk1_doc()))


@pytest.fixture
def desk2() -> ScenarioTree:
    return parse_tree(json.dumps(desk2_doc()))


@pytest.fixture
def desk2_p50() -> ScenarioTree:
    return parse_tree(json.dumps(desk2_doc(50.0)))


def random_plant(rng: np.random.Generator) -> dict:
    """Plant data shaped like plant E: decreasing positive maintenance slopes
    ending at >= 1, nonpositive increasing values."""
    cap = float(rng.uniform(5.0, 15.0))
    n_seg = int(rng.integers(1, 4))
    internal = np.sort(rng.uniform(0.15, 0.85, size=n_seg - 1)) * cap
    grid = [0.0, *[float(z) for z in internal], cap]
    s_last = float(rng.uniform(1.0, 2.0))
    extra = sorted((float(s) for s in rng.uniform(s_last + 0.1, 20.0, size=len(grid) - 2)),
                   reverse=True)
    slopes = extra + [s_last]
    values = [-float(rng.uniform(1.0, 6.0))]
    for (z0, z1), s in zip(reversed(list(zip(grid, grid[1:]))), reversed(slopes)):
        values.insert(0, values[0] - s * (z1 - z0))
    return {
        "heat_rate": float(rng.uniform(0.3, 0.8)),
        "capacity": cap,
        "fixed_cost": float(rng.uniform(1.0, 8.0)),
        "maintenance": [[z, v] for z, v in zip(grid, values)],
    }


def _quotes(rng: np.random.Generator) -> tuple[float, float]:
    """Bid-ask interval containing the fuel price 1.5 with a healthy margin,
    so a constant price system exists and the instance is arbitrage-free."""
    ask = 1.5 + float(rng.uniform(0.15, 1.0))
    bid = 1.5 - float(rng.uniform(0.15, 0.9))
    return ask, 1.0 / bid


def _viable(plant: dict, spot: float, pi12: float, pi21: float) -> bool:
    """Some injection liquidates to a solvent position: running the plant can
    then never raise a hedge cost."""
    from powerhedge.production import PiecewiseConcave, PlantStepData
    step = PlantStepData(plant["heat_rate"], plant["capacity"], plant["fixed_cost"],
                         PiecewiseConcave(tuple((z, v) for z, v in plant["maintenance"])))
    cone = make_solvency_cone(pi12, pi21)
    for beta in [z for z, _ in step.maintenance.breakpoints] + [step.capacity]:
        r1, r2 = thermal_output(step, spot, beta)
        if contains(cone, (r1, r2 - beta)):
            return True
    return False


def random_instance(rng: np.random.Generator, periods: int | None = None,
                    max_branch: int = 3, production: bool | None = None,
                    viable: bool = False, with_claim: bool = True) -> ScenarioTree:
    """Small random arbitrage-free instance, optionally with plant-E-like
    production steps (viable=True additionally guarantees some injection
    liquidates to a solvent position at every production step)."""
    periods = int(rng.integers(1, 4)) if periods is None else periods
    if production is None:
        production = bool(rng.uniform() < 0.5)
    prod_steps = {int(i) for i in range(1, periods + 1) if production and rng.uniform() < 0.7}
    if production and not prod_steps:
        prod_steps = {periods}

    nodes = []
    counter = [0]

    def fresh(prefix: str) -> str:
        counter[0] += 1
        return f"{prefix}{counter[0]}"

    def grow(parent_id: str | None, index: int) -> None:
        if parent_id is None:
            pi12, pi21 = _quotes(rng)
            nodes.append({"id": "n0", "time_index": 0, "parent": None,
                          "cond_prob": 1.0, "pi12": pi12, "pi21": pi21})
            grow("n0", 1)
            return
        if index > periods:
            return
        n_kids = int(rng.integers(1, max_branch + 1))
        weights = rng.uniform(0.1, 1.0, size=n_kids)
        weights /= weights.sum()
        plant = random_plant(rng) if index in prod_steps else None
        for w in weights:
            pi12, pi21 = _quotes(rng)
            spot = float(rng.uniform(5.0, 12.0))
            if plant is not None and viable:
                tries = 0
                while not _viable(plant, spot, pi12, pi21) and tries < 40:
                    spot *= 1.3
                    tries += 1
            kid = {"id": fresh("n"), "time_index": index, "parent": parent_id,
                   "cond_prob": float(w), "pi12": pi12, "pi21": pi21,
                   "spot_power": spot}
            if plant is not None:
                kid["plant"] = dict(plant)
            nodes.append(kid)
            grow(kid["id"], index + 1)

    grow(None, 0)
    doc = {"times": [float(i) for i in range(periods + 1)], "nodes": nodes}
    tree = parse_tree(json.dumps(doc))
    if with_claim:
        payoffs = {leaf.id: (float(rng.uniform(-3.0, 3.0)), float(rng.uniform(-2.0, 2.0)))
                   for leaf in tree.leaves()}
        tree.claim = ContingentClaim(payoffs, (20.0, 20.0))
    return tree
