"""Thermal plant production step and regularity checks.

A production step converts an injected fuel quantity beta into next-period
cash and fuel: electricity revenue at the spot price minus a fixed cost on
the cash side, and a concave piecewise-linear maintenance balance with a
capacity clamp on the fuel side.  Injection above capacity passes through to
storage unchanged.
"""

from dataclasses import dataclass

import numpy as np


class NegativeRegime(ValueError):
    """Injected fuel quantity must be nonnegative."""


@dataclass(frozen=True)
class PiecewiseConcave:
    """Maintenance fuel balance c on [0, capacity], given by breakpoints
    ((z_0, c_0), ..., (z_k, c_k)) with z_0 = 0 and z_k = capacity.

    Valid data is nonpositive, increasing and concave with left derivative
    at capacity >= 1; `issues()` lists violations instead of raising so the
    tree validator can report them."""

    breakpoints: tuple[tuple[float, float], ...]

    @property
    def capacity(self) -> float:
        return self.breakpoints[-1][0]

    def value(self, z: float) -> float:
        pts = self.breakpoints
        if z <= pts[0][0]:
            return pts[0][1]
        for (z0, c0), (z1, c1) in zip(pts, pts[1:]):
            if z <= z1:
                return c0 + (c1 - c0) * (z - z0) / (z1 - z0)
        return pts[-1][1]

    def slopes(self) -> list[float]:
        return [(c1 - c0) / (z1 - z0)
                for (z0, c0), (z1, c1) in zip(self.breakpoints, self.breakpoints[1:])]

    def issues(self) -> list[str]:
        out = []
        pts = self.breakpoints
        if not pts:
            return ["maintenance needs at least one breakpoint"]
        if pts[0][0] != 0.0:
            out.append("maintenance must start at injection 0")
        zs = [z for z, _ in pts]
        if any(b <= a for a, b in zip(zs, zs[1:])):
            out.append("maintenance breakpoints must be strictly increasing")
        if any(c > 0.0 for _, c in pts):
            out.append("maintenance values must be nonpositive")
        slopes = self.slopes()
        if any(s <= 0.0 for s in slopes):
            out.append("maintenance must be increasing (all slopes positive)")
        if any(b > a + 1e-12 for a, b in zip(slopes, slopes[1:])):
            out.append("maintenance slopes must be nonincreasing (concavity)")
        if slopes and slopes[-1] < 1.0 - 1e-12:
            out.append("maintenance slope at capacity must be at least 1")
        return out


@dataclass(frozen=True)
class PlantStepData:
    """Plant parameters effective at one production time."""

    heat_rate: float      # MWh of power per unit of fuel burned
    capacity: float       # fuel units accepted per step
    fixed_cost: float     # cash cost per step
    maintenance: PiecewiseConcave

    def issues(self) -> list[str]:
        out = []
        if self.heat_rate < 0.0:
            out.append("heat rate must be nonnegative")
        if self.capacity < 0.0:
            out.append("capacity must be nonnegative")
        if self.maintenance.capacity != self.capacity:
            out.append("maintenance must be defined exactly on [0, capacity]")
        out.extend(self.maintenance.issues())
        return out


def thermal_output(step: PlantStepData, spot: float, beta2: float) -> tuple[float, float]:
    """Evaluate the production step at injection beta2 (cash leg of the
    regime pinned to zero).  Returns (cash, fuel) produced next period."""
    if beta2 < 0.0:
        raise NegativeRegime(f"injection must be nonnegative, got {beta2}")
    burned = min(beta2, step.capacity)
    cash = spot * step.heat_rate * burned - step.fixed_cost
    fuel = step.maintenance.value(burned) + max(beta2 - step.capacity, 0.0)
    return cash, fuel


def production_bound(step: PlantStepData, spot: float) -> tuple[float, float]:
    """Componentwise bound on |output - injection|, valid for every regime:
    the cash leg moves at most |spot * heat_rate * capacity| + |fixed_cost|
    and the fuel leg at most max(|c(0)|, |c(capacity) - capacity|)."""
    k1 = abs(spot * step.heat_rate * step.capacity) + abs(step.fixed_cost)
    c0 = step.maintenance.value(0.0)
    c_cap = step.maintenance.value(step.capacity)
    k2 = max(abs(c0), abs(c_cap - step.capacity))
    return k1, k2


@dataclass(frozen=True)
class Verdict:
    ok: bool
    detail: str = ""
    witness: tuple | None = None


@dataclass(frozen=True)
class AssumptionReport:
    concavity: Verdict
    boundedness: Verdict
    continuity: Verdict

    @property
    def ok(self) -> bool:
        return self.concavity.ok and self.boundedness.ok and self.continuity.ok


def check_production_map(r_fn, bound: tuple[float, float], kinks: list[float],
                         span: float, samples: int, seed: int = 0,
                         tol: float = 1e-9) -> AssumptionReport:
    """Sampling-based regularity audit of a production map beta -> (r1, r2).

    Checks componentwise concavity on random pairs, the componentwise
    boundedness |r(beta) - beta| <= bound including far beyond the span, and
    continuity at the given kink locations."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)

    concavity = Verdict(True)
    hi = max(span, 1.0)
    for _ in range(samples):
        a = rng.uniform(0.0, 3.0 * hi)
        b = rng.uniform(0.0, 3.0 * hi)
        lam = rng.uniform(0.0, 1.0)
        mid = np.array(r_fn(lam * a + (1.0 - lam) * b))
        chord = lam * np.array(r_fn(a)) + (1.0 - lam) * np.array(r_fn(b))
        if np.any(mid - chord < -tol):
            concavity = Verdict(False, "midpoint below chord", (a, b, lam))
            break

    boundedness = Verdict(True)
    betas = np.concatenate([
        rng.uniform(0.0, 3.0 * hi, size=samples),
        np.array([0.0, span, 10.0 * hi, 1e6]),
    ])
    kb = np.array(bound)
    for beta in betas:
        gap = np.abs(np.array(r_fn(beta)) - np.array([0.0, beta]))
        if np.any(gap > kb + tol):
            boundedness = Verdict(False, "net production income exceeds bound", (float(beta),))
            break

    continuity = Verdict(True)
    h = 1e-12 * max(1.0, hi)
    for z in kinks:
        at = np.array(r_fn(z))
        for side in (max(z - h, 0.0), z + h):
            if np.any(np.abs(np.array(r_fn(side)) - at) > tol):
                continuity = Verdict(False, "jump at kink", (z,))
                break
        if not continuity.ok:
            break

    return AssumptionReport(concavity, boundedness, continuity)


def check_assumptions(step: PlantStepData, spot: float, samples: int,
                      seed: int = 0, tol: float = 1e-9) -> AssumptionReport:
    """Audit the thermal step: concavity, boundedness against
    production_bound, and continuity at the maintenance breakpoints and at
    capacity."""
    bound = production_bound(step, spot)
    kinks = [z for z, _ in step.maintenance.breakpoints] + [step.capacity]
    return check_production_map(
        lambda beta: thermal_output(step, spot, beta),
        bound, kinks, step.capacity, samples, seed=seed, tol=tol)


def thermal_slope_audit(step: PlantStepData, spot: float) -> list[str]:
    """Exact piecewise check of the thermal step, complementary to the
    sampling audit: both output components must have nonincreasing slopes
    across all linear pieces (tail included)."""
    out = []
    if spot < 0.0:
        out.append("cash output is convex when the spot price is negative")
    slopes = step.maintenance.slopes()
    fuel_slopes = slopes + [1.0]    # overflow piece beyond capacity
    if any(b > a + 1e-12 for a, b in zip(fuel_slopes, fuel_slopes[1:])):
        out.append("fuel output slopes increase across a breakpoint")
    return out
