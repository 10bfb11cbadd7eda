"""Command-line front end.

Subcommands: validate, check-assumptions, check-csp, price, hedge.  Reports
are printed as text or as deterministic JSON (fixed key order, floats at 12
significant digits).  Exit codes: 0 success, 1 I/O or schema problem, 2
validation or assumption failure, 3 unbounded sure-profit verdict.
"""

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from . import csp, hedging, lp, pricing, production, tree as tree_mod


@dataclass
class RunConfig:
    command: str
    tree_path: str
    contract: str = "tree-claim"
    power: float = 0.0
    production: str = "auto"
    eps: float = pricing.DEFAULT_EPS
    fmt: str = "text"
    samples: int = 10_000
    seed: int = 0
    start_index: int = 0
    emit_cps: str | None = None
    emit_strategy: str | None = None
    dump_lp: str | None = None


def render_json(obj) -> str:
    """Deterministic JSON: insertion key order, floats at 12 significant
    digits, no whitespace surprises."""
    def emit(v) -> str:
        if v is None:
            return "null"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            if v == 0.0:
                return "0"
            return format(v, ".12g")
        if isinstance(v, str):
            return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if isinstance(v, dict):
            return "{" + ", ".join(f'{emit(str(k))}: {emit(x)}' for k, x in v.items()) + "}"
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(emit(x) for x in v) + "]"
        raise TypeError(f"cannot render {type(v)!r}")

    return emit(obj)


def render_text(report: dict) -> str:
    lines = []

    def walk(prefix: str, v):
        if isinstance(v, dict):
            for k, x in v.items():
                walk(f"{prefix}{k}.", x) if isinstance(x, (dict, list, tuple)) \
                    else lines.append(f"{prefix}{k}: {render_json(x)}")
        elif isinstance(v, (list, tuple)):
            for i, x in enumerate(v):
                walk(f"{prefix}{i}.", x) if isinstance(x, (dict, list, tuple)) \
                    else lines.append(f"{prefix}{i}: {render_json(x)}")

    walk("", report)
    return "\n".join(lines) + "\n"


def _resolve_production(tree: tree_mod.ScenarioTree, mode: str) -> bool:
    if mode == "on":
        if not tree.has_plant():
            raise tree_mod.SchemaError("production requested but no plant data present")
        return True
    if mode == "off":
        return False
    return tree.has_plant()


def _claim_for(tree: tree_mod.ScenarioTree, config: RunConfig) -> tree_mod.ContingentClaim:
    if config.contract == "power-futures":
        return pricing.power_futures_claim(tree, config.power)
    return tree.claim or tree_mod.zero_claim(tree)


def _cmd_validate(tree, config: RunConfig) -> tuple[int, dict]:
    report = tree_mod.validate(tree)
    out = {
        "command": "validate",
        "valid": report.ok,
        "violations": [{"code": v.code, "node": v.node, "message": v.message}
                       for v in report.violations],
    }
    return (0 if report.ok else 2), out


def _cmd_check_assumptions(tree, config: RunConfig) -> tuple[int, dict]:
    steps = []
    ok = True
    for parent in tree.production_parents():
        for kid_id in tree.children(parent.id):
            kid = tree.node(kid_id)
            rep = production.check_assumptions(kid.plant, kid.spot_power,
                                               config.samples, seed=config.seed)
            slope_issues = production.thermal_slope_audit(kid.plant, kid.spot_power)
            bound = production.production_bound(kid.plant, kid.spot_power)
            ok = ok and rep.ok and not slope_issues
            steps.append({
                "node": kid.id,
                "concavity": rep.concavity.ok,
                "boundedness": rep.boundedness.ok,
                "continuity": rep.continuity.ok,
                "slope_audit": slope_issues,
                "bound": [bound[0], bound[1]],
            })
    return (0 if ok else 2), {"command": "check-assumptions", "ok": ok,
                              "samples": config.samples, "steps": steps}


def _cmd_check_csp(tree, config: RunConfig) -> tuple[int, dict]:
    verdict = csp.check_csp_tree(tree, config.start_index)
    out = {
        "command": "check-csp",
        "start_index": config.start_index,
        "status": "bounded" if verdict.bounded else "unbounded",
        "c_star": verdict.c_star,
        "witness": verdict.witness,
        "per_node": [{"node": v.node, "bounded": v.bounded, "c_star": v.c_star,
                      "tail_lhs": v.tail_lhs, "tail_rhs": v.tail_rhs}
                     for v in verdict.per_node],
    }
    return (0 if verdict.bounded else 3), out


def _cmd_price(tree, config: RunConfig) -> tuple[int, dict]:
    use_plant = _resolve_production(tree, config.production)
    claim = _claim_for(tree, config)
    if config.dump_lp:
        problem, _ = hedging.build_hedge_lp(tree, claim, use_plant and tree.has_plant())
        Path(config.dump_lp).write_text(lp.format_problem(problem))
    primal = hedging.superreplication_price(tree, claim, use_plant)
    dual, system = pricing.dual_price(tree, claim, use_plant, eps=config.eps)
    if config.emit_cps:
        payload = {nid: [z1, z2] for nid, (z1, z2) in system.z.items()}
        Path(config.emit_cps).write_text(render_json(payload) + "\n")
    out = {
        "command": "price",
        "contract": config.contract,
        "production": use_plant,
        "eps": config.eps,
        "primal": primal.price,
        "dual": dual,
        "gap": abs(primal.price - dual),
    }
    if config.contract == "power-futures":
        out["power"] = config.power
    return 0, out


def _cmd_hedge(tree, config: RunConfig) -> tuple[int, dict]:
    use_plant = _resolve_production(tree, config.production)
    claim = _claim_for(tree, config)
    result = hedging.superreplication_price(tree, claim, use_plant)
    strategy = {
        "initial_cash": result.strategy.initial_cash,
        "trades": {nid: {"weights": list(w),
                         "vector": list(result.strategy.trade_vectors[nid])}
                   for nid, w in result.strategy.trade_weights.items()},
        "regimes": result.strategy.regimes,
    }
    if config.emit_strategy:
        Path(config.emit_strategy).write_text(render_json(strategy) + "\n")
    out = {
        "command": "hedge",
        "contract": config.contract,
        "production": use_plant,
        "price": result.price,
        "iterations": result.iterations,
        "strategy": strategy,
    }
    return 0, out


_COMMANDS = {
    "validate": _cmd_validate,
    "check-assumptions": _cmd_check_assumptions,
    "check-csp": _cmd_check_csp,
    "price": _cmd_price,
    "hedge": _cmd_hedge,
}


def run(config: RunConfig, document: bytes | str) -> tuple[int, dict]:
    """Execute one command against a tree document; returns (exit code,
    report)."""
    if config.contract == "power-futures" and config.power < 0.0:
        raise ValueError("--power must be nonnegative")
    if not (0.0 < config.eps <= 1e-3):
        raise ValueError("--eps must lie in (0, 1e-3]")
    check = config.command != "validate"
    tree = tree_mod.parse_tree(document, check=check)
    return _COMMANDS[config.command](tree, config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powerhedge",
        description="Super-replication pricing for a cash/fuel market with "
                    "transaction costs and a thermal plant.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("tree", help="path to the JSON tree document")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("validate", help="report every violated invariant")
    common(p)

    p = sub.add_parser("check-assumptions", help="audit plant regularity")
    common(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("check-csp", help="audit conditional sure profits")
    common(p)
    p.add_argument("--start-index", type=int, default=0)

    for name in ("price", "hedge"):
        p = sub.add_parser(name, help=f"{name} a contract on the tree")
        common(p)
        p.add_argument("--contract", choices=("tree-claim", "power-futures"),
                       default="tree-claim")
        p.add_argument("--power", type=float, default=0.0,
                       help="contracted power in MW (power-futures)")
        p.add_argument("--production", choices=("on", "off", "auto"), default="auto")
        p.add_argument("--eps", type=float, default=pricing.DEFAULT_EPS,
                       help="interiority margin for the dual ratio bounds")
        if name == "price":
            p.add_argument("--emit-cps", dest="emit_cps", default=None,
                           help="write the optimal price system to this path")
            p.add_argument("--dump-lp", dest="dump_lp", default=None,
                           help="write the hedge LP in plain text to this path")
        else:
            p.add_argument("--emit-strategy", dest="emit_strategy", default=None,
                           help="write the hedge strategy to this path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    config = RunConfig(
        command=args.command,
        tree_path=args.tree,
        fmt=args.format,
        contract=getattr(args, "contract", "tree-claim"),
        power=getattr(args, "power", 0.0),
        production=getattr(args, "production", "auto"),
        eps=getattr(args, "eps", pricing.DEFAULT_EPS),
        samples=getattr(args, "samples", 10_000),
        seed=getattr(args, "seed", 0),
        start_index=getattr(args, "start_index", 0),
        emit_cps=getattr(args, "emit_cps", None),
        emit_strategy=getattr(args, "emit_strategy", None),
        dump_lp=getattr(args, "dump_lp", None),
    )
    try:
        document = Path(config.tree_path).read_bytes()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        code, report = run(config, document)
    except (tree_mod.TreeError, pricing.MissingSpot, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (hedging.HedgeUnbounded, pricing.NoPriceSystem, lp.NumericalTrouble) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = render_json(report) + "\n" if config.fmt == "json" else render_text(report)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
