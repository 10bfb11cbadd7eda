"""Dense linear programming kernel.

Solves small dense LPs with a two-phase revised simplex and returns
certificate-carrying solutions: optimal primal/dual pairs, an improving ray
when unbounded, and a Farkas row combination when infeasible.  Instances at
desk scale have at most a few hundred variables, so robustness is preferred
over speed: the basis inverse is kept explicitly and refactorized
periodically, and Bland's rule guards against cycling.
"""

from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
GAP_TOL_REL = 1e-7

_REFACTOR_EVERY = 50
_BLAND_AFTER = 40


class MalformedProblem(ValueError):
    """Raised when an LPProblem has inconsistent or non-finite data."""


class NumericalTrouble(RuntimeError):
    """Raised when a solve finishes without a certifiable solution."""


@dataclass
class LPProblem:
    """minimize / maximize  c'x  subject to rows  a_i'x {<=,=,>=} b_i  and
    per-variable bounds lb <= x <= ub (entries may be infinite)."""

    sense: str
    c: np.ndarray
    a: np.ndarray
    rel: tuple[str, ...]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.a = np.asarray(self.a, dtype=float).reshape(len(self.b), -1) if len(self.b) else np.zeros((0, len(self.c)))
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.rel = tuple(self.rel)

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.b)

    def validate(self) -> None:
        n = self.n_vars
        if self.sense not in ("min", "max"):
            raise MalformedProblem(f"unknown sense {self.sense!r}")
        if self.a.shape != (self.n_rows, n):
            raise MalformedProblem(f"constraint matrix is {self.a.shape}, expected {(self.n_rows, n)}")
        if len(self.rel) != self.n_rows:
            raise MalformedProblem("one relation required per constraint row")
        if any(r not in ("<=", "=", ">=") for r in self.rel):
            raise MalformedProblem("relations must be '<=', '=' or '>='")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise MalformedProblem("bounds must have one entry per variable")
        for arr, what in ((self.c, "objective"), (self.a, "matrix"), (self.b, "rhs")):
            if arr.size and not np.all(np.isfinite(arr)):
                raise MalformedProblem(f"non-finite entry in {what}")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise MalformedProblem("NaN bound")
        if np.any(self.lb > self.ub):
            raise MalformedProblem("lower bound exceeds upper bound")


@dataclass
class LPSolution:
    """Solve outcome.  `value`, `x` and `duals` are set iff optimal; `ray`
    iff unbounded; `farkas` iff infeasible.

    Dual sign convention: duals are marginal values of the row rhs, so for a
    minimization '>=' rows carry nonnegative multipliers and '<=' rows
    nonpositive ones (flipped for maximization)."""

    status: str
    value: float | None = None
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    ray: np.ndarray | None = None
    farkas: np.ndarray | None = None
    iterations: int = 0


class LinearProgramBuilder:
    """Incremental builder used by the hedging / pricing / CSP modules."""

    def __init__(self):
        self._names: list[str] = []
        self._obj: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._rows: list[tuple[dict[int, float], str, float]] = []

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf, obj: float = 0.0) -> int:
        self._names.append(name)
        self._obj.append(obj)
        self._lb.append(lb)
        self._ub.append(ub)
        return len(self._names) - 1

    def add_row(self, coeffs: dict[int, float], rel: str, rhs: float) -> None:
        self._rows.append((coeffs, rel, rhs))

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def build(self, sense: str) -> LPProblem:
        n = len(self._names)
        a = np.zeros((len(self._rows), n))
        rel = []
        b = np.zeros(len(self._rows))
        for i, (coeffs, r, rhs) in enumerate(self._rows):
            for j, v in coeffs.items():
                a[i, j] += v
            rel.append(r)
            b[i] = rhs
        return LPProblem(sense, np.array(self._obj), a, tuple(rel), b,
                         np.array(self._lb), np.array(self._ub))


def format_problem(problem: LPProblem) -> str:
    """Plain-text dump, one constraint per line.  Debug aid, not a stable
    interchange format."""
    def term(v, j):
        return f"{v:+.12g} x{j}"

    lines = [f"{problem.sense} " + " ".join(term(v, j) for j, v in enumerate(problem.c))]
    lines.append("s.t.")
    for i in range(problem.n_rows):
        body = " ".join(term(v, j) for j, v in enumerate(problem.a[i]) if v != 0.0) or "0"
        lines.append(f"  {body} {problem.rel[i]} {problem.b[i]:.12g}")
    lines.append("bounds")
    for j in range(problem.n_vars):
        lines.append(f"  {problem.lb[j]:.12g} <= x{j} <= {problem.ub[j]:.12g}")
    return "\n".join(lines) + "\n"


# -- standard-form conversion ------------------------------------------------

@dataclass
class _StdForm:
    a: np.ndarray               # equality matrix  (rows x structural+slack cols)
    b: np.ndarray               # rhs, nonnegative
    c: np.ndarray               # minimization costs for structural+slack cols
    const: float                # objective constant from bound shifts
    row_sign: np.ndarray        # +-1 applied to each row to make b >= 0
    n_orig_rows: int            # original rows come first, bound rows after
    var_map: list[tuple]        # per original var: ('shift',col,l)|('neg',col,u)|('split',p,m)
    n_cols: int = field(init=False)

    def __post_init__(self):
        self.n_cols = self.a.shape[1]


def _standardize(p: LPProblem, minimize_c: np.ndarray) -> _StdForm:
    """Rewrite as  min c'z, A z = b, z >= 0, b >= 0.

    Finite lower bounds are shifted out, upper-only bounds negated, free
    variables split; two-sided bounds add one '<=' row for the width."""
    m0, n = p.n_rows, p.n_vars
    cols: list[np.ndarray] = []          # structural columns over original rows
    ccost: list[float] = []
    var_map: list[tuple] = []
    bound_rows: list[tuple[int, float]] = []   # (structural col, width)
    b = p.b.copy()
    const = 0.0

    for j in range(n):
        lo, hi = p.lb[j], p.ub[j]
        col = p.a[:, j] if m0 else np.zeros(0)
        if np.isfinite(lo):
            k = len(cols)
            cols.append(col.copy())
            ccost.append(minimize_c[j])
            var_map.append(("shift", k, lo))
            if lo != 0.0:
                b -= col * lo
                const += minimize_c[j] * lo
            if np.isfinite(hi):
                bound_rows.append((k, hi - lo))
        elif np.isfinite(hi):
            k = len(cols)
            cols.append(-col)
            ccost.append(-minimize_c[j])
            var_map.append(("neg", k, hi))
            b -= col * hi
            const += minimize_c[j] * hi
        else:
            kp = len(cols)
            cols.append(col.copy())
            ccost.append(minimize_c[j])
            km = len(cols)
            cols.append(-col)
            ccost.append(-minimize_c[j])
            var_map.append(("split", kp, km))

    n_struct = len(cols)
    m = m0 + len(bound_rows)
    a = np.zeros((m, n_struct))
    if n_struct:
        a[:m0, :] = np.column_stack(cols) if m0 else np.zeros((0, n_struct))
    rel = list(p.rel)
    rhs = np.concatenate([b, np.array([w for _, w in bound_rows])]) if bound_rows else b.copy()
    for i, (k, _) in enumerate(bound_rows):
        a[m0 + i, k] = 1.0
        rel.append("<=")

    # slack / surplus columns
    slack_cols = []
    slack_cost = []
    for i, r in enumerate(rel):
        if r == "=":
            continue
        e = np.zeros(m)
        e[i] = 1.0 if r == "<=" else -1.0
        slack_cols.append(e)
        slack_cost.append(0.0)
    if slack_cols:
        a = np.hstack([a, np.column_stack(slack_cols)])
    c = np.array(ccost + slack_cost)

    row_sign = np.where(rhs < 0.0, -1.0, 1.0)
    a = a * row_sign[:, None]
    rhs = rhs * row_sign

    return _StdForm(a, rhs, c, const, row_sign, m0, var_map)


# -- revised simplex core ----------------------------------------------------

class _Tableau:
    """Explicit-inverse revised simplex state over  A z = b, z >= 0."""

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: np.ndarray):
        self.a = a
        self.b = b
        self.basis = basis.copy()
        self.m = a.shape[0]
        self.n = a.shape[1]
        self.b_inv = np.eye(self.m)
        self.refactor()

    def refactor(self) -> None:
        if self.m == 0:
            return
        base = self.a[:, self.basis]
        try:
            self.b_inv = np.linalg.inv(base)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by pivots
            raise NumericalTrouble("singular basis") from exc

    def x_basic(self) -> np.ndarray:
        return self.b_inv @ self.b if self.m else np.zeros(0)

    def duals_for(self, cost: np.ndarray) -> np.ndarray:
        return cost[self.basis] @ self.b_inv if self.m else np.zeros(0)

    def pivot(self, row: int, col: int, d_col: np.ndarray) -> None:
        piv = d_col[row]
        self.b_inv[row] /= piv
        others = np.arange(self.m) != row
        self.b_inv[others] -= np.outer(d_col[others], self.b_inv[row])
        self.basis[row] = col


def _run_simplex(tab: _Tableau, cost: np.ndarray, banned: np.ndarray,
                 max_iter: int, art_start: int | None = None,
                 ) -> tuple[str, int, int | None, np.ndarray | None]:
    """Minimize cost over the tableau from its current basis.

    Returns (status, iterations, entering_col, direction) where the last two
    describe the improving ray when unbounded.  Columns >= art_start are
    phase-1 artificials kept at zero: if an entering column touches the row
    of a basic artificial, that artificial is pivoted out at zero step."""
    m = tab.m
    opt_tol = 1e-9 * (1.0 + (np.abs(cost).max() if cost.size else 0.0))
    bland = False
    degenerate_run = 0
    it = 0
    while it < max_iter:
        it += 1
        if m and it % _REFACTOR_EVERY == 0:
            tab.refactor()
        y = tab.duals_for(cost)
        reduced = cost - (y @ tab.a if m else 0.0)
        reduced[tab.basis] = 0.0
        reduced = np.where(banned, np.inf, reduced)
        candidates = np.flatnonzero(reduced < -opt_tol)
        if candidates.size == 0:
            return OPTIMAL, it, None, None
        if bland:
            j = int(candidates[0])
        else:
            j = int(candidates[np.argmin(reduced[candidates])])
        d_col = tab.b_inv @ tab.a[:, j] if m else np.zeros(0)
        if art_start is not None:
            art_rows = np.flatnonzero((tab.basis >= art_start) & (np.abs(d_col) > 1e-7))
            if art_rows.size:
                tab.pivot(int(art_rows[0]), j, d_col)
                continue
        pos = np.flatnonzero(d_col > PIVOT_TOL)
        if pos.size == 0:
            return UNBOUNDED, it, j, d_col
        xb = tab.x_basic()
        ratios = xb[pos] / d_col[pos]
        theta = ratios.min()
        ties = pos[np.flatnonzero(ratios <= theta + 1e-12 * (1.0 + abs(theta)))]
        row = int(ties[np.argmin(tab.basis[ties])])   # Bland tie-break: lowest variable index
        if theta < 1e-12:
            degenerate_run += 1
            if degenerate_run > _BLAND_AFTER:
                bland = True
        else:
            degenerate_run = 0
        tab.pivot(row, j, d_col)
    raise NumericalTrouble(f"simplex did not converge within {max_iter} iterations")


# -- certificates and mapping back -------------------------------------------

def _x_from_std(std: _StdForm, z: np.ndarray) -> np.ndarray:
    x = np.zeros(len(std.var_map))
    for j, entry in enumerate(std.var_map):
        kind = entry[0]
        if kind == "shift":
            x[j] = z[entry[1]] + entry[2]
        elif kind == "neg":
            x[j] = entry[2] - z[entry[1]]
        else:
            x[j] = z[entry[1]] - z[entry[2]]
    return x


def _ray_from_std(std: _StdForm, dz: np.ndarray) -> np.ndarray:
    r = np.zeros(len(std.var_map))
    for j, entry in enumerate(std.var_map):
        kind = entry[0]
        if kind == "shift":
            r[j] = dz[entry[1]]
        elif kind == "neg":
            r[j] = -dz[entry[1]]
        else:
            r[j] = dz[entry[1]] - dz[entry[2]]
    return r


def _dual_value(p: LPProblem, minimize_c: np.ndarray, y: np.ndarray) -> float:
    """Evaluate the bound-aware dual objective of the minimization form."""
    value = float(y @ p.b) if p.n_rows else 0.0
    d = minimize_c - (p.a.T @ y if p.n_rows else 0.0)
    for j in range(p.n_vars):
        dj = d[j]
        if dj > 0.0 and np.isfinite(p.lb[j]):
            value += dj * p.lb[j]
        elif dj < 0.0 and np.isfinite(p.ub[j]):
            value += dj * p.ub[j]
    return value


def _residuals(p: LPProblem, x: np.ndarray) -> float:
    worst = 0.0
    ax = p.a @ x if p.n_rows else np.zeros(0)
    for i, r in enumerate(p.rel):
        gap = ax[i] - p.b[i]
        if r == "<=":
            worst = max(worst, gap)
        elif r == ">=":
            worst = max(worst, -gap)
        else:
            worst = max(worst, abs(gap))
    worst = max(worst, float(np.max(p.lb - x, initial=0.0)))
    worst = max(worst, float(np.max(x - p.ub, initial=0.0)))
    return worst


def solve_lp(problem: LPProblem, *, feas_tol: float = FEAS_TOL,
             gap_tol_rel: float = GAP_TOL_REL, max_iter: int = 50_000) -> LPSolution:
    """Solve a dense LP and certify the outcome.

    Optimal results satisfy row residuals <= feas_tol (scaled) and
    |primal - dual| <= gap_tol_rel * (1 + |value|); unbounded results carry
    an improving ray in original variables; infeasible results carry a
    Farkas multiplier per original row."""
    problem.validate()
    flip = -1.0 if problem.sense == "max" else 1.0
    min_c = flip * problem.c
    std = _standardize(problem, min_c)
    m = std.a.shape[0]

    # phase 1: artificial identity basis
    n_real = std.n_cols
    a1 = np.hstack([std.a, np.eye(m)]) if m else std.a
    c1 = np.concatenate([np.zeros(n_real), np.ones(m)])
    tab = _Tableau(a1, std.b, np.arange(n_real, n_real + m))
    banned1 = np.zeros(n_real + m, dtype=bool)
    status, it1, _, _ = _run_simplex(tab, c1, banned1, max_iter)
    if status != OPTIMAL:  # pragma: no cover - phase 1 is always bounded below by 0
        raise NumericalTrouble("phase 1 terminated abnormally")
    phase1_val = float(c1[tab.basis] @ tab.x_basic()) if m else 0.0
    b_scale = 1.0 + (np.abs(std.b).max() if m else 0.0)

    if phase1_val > feas_tol * b_scale:
        y1 = tab.duals_for(c1)
        farkas = std.row_sign[: std.n_orig_rows] * y1[: std.n_orig_rows]
        return LPSolution(INFEASIBLE, farkas=farkas, iterations=it1)

    # drive remaining artificial variables out of the basis where possible
    if m:
        for i in range(m):
            if tab.basis[i] >= n_real:
                in_basis = np.zeros(n_real, dtype=bool)
                in_basis[tab.basis[tab.basis < n_real]] = True
                trow = tab.b_inv[i] @ std.a
                pivots = np.flatnonzero((np.abs(trow) > 1e-7) & ~in_basis)
                if pivots.size:
                    j = int(pivots[0])
                    d_col = tab.b_inv @ a1[:, j]
                    tab.pivot(i, j, d_col)
        tab.refactor()

    # phase 2
    c2 = np.concatenate([std.c, np.zeros(m)])
    banned2 = np.zeros(n_real + m, dtype=bool)
    banned2[n_real:] = True
    status, it2, j_enter, d_col = _run_simplex(tab, c2, banned2, max_iter, art_start=n_real)
    iters = it1 + it2

    if status == UNBOUNDED:
        dz = np.zeros(n_real)
        dz[j_enter] = 1.0
        for i in range(m):
            if tab.basis[i] < n_real:
                dz[tab.basis[i]] = -d_col[i]
        ray = _ray_from_std(std, dz)
        norm = np.abs(ray).max()
        if norm > 0:
            ray = ray / norm
        return LPSolution(UNBOUNDED, ray=ray, iterations=iters)

    tab.refactor()
    z = np.zeros(n_real + m)
    if m:
        z[tab.basis] = tab.x_basic()
    z = np.where(np.abs(z) < 1e-13, 0.0, z)
    x = _x_from_std(std, z[:n_real])
    y_std = tab.duals_for(c2)
    y_min = (std.row_sign * y_std)[: std.n_orig_rows] if m else np.zeros(0)
    value_min = float(min_c @ x) + 0.0
    dual_min = _dual_value(problem, min_c, y_min)

    resid = _residuals(problem, x)
    scale = 1.0 + max(
        float(np.abs(problem.b).max(initial=0.0)),
        float(np.abs(x).max(initial=0.0)),
    )
    gap = abs(value_min - dual_min)
    if resid > feas_tol * scale or gap > gap_tol_rel * (1.0 + abs(value_min)):
        raise NumericalTrouble(
            f"solution failed certification: residual={resid:.3e}, gap={gap:.3e}")

    value = flip * value_min
    duals = flip * y_min
    return LPSolution(OPTIMAL, value=value, x=x, duals=duals, iterations=iters)
