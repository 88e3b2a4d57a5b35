"""Command-line interface: synthetic benchmarks, file ingestion, rendering.

Subcommands: ``ot`` (plan one instance), ``branch`` (one-to-many build),
``net`` (plan-then-branch forest), ``dual`` (paired artery/vein trees),
``santa`` (geographic hierarchy from a cities CSV), ``render`` (network
JSON to SVG/GeoJSON).  Exit codes: 0 success, 2 bad input or parameters,
3 solver non-convergence, 4 structurally invalid network.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .branching import BuildResult, OneToManyProblem, build_one_to_many, star_cost
from .core import (
    BotParams,
    BranchFlowError,
    ConvergenceError,
    InputError,
    ParameterError,
    StructuralError,
    TransportInstance,
    bot_cost,
)
from .io import (
    load_cities_csv,
    network_from_json,
    network_to_json,
    plan_to_json,
    sample_cities_path,
)
from .ot import SinkhornConfig, cost_matrix, plan_cost, solve_exact, solve_sinkhorn
from .pipeline import (
    DEFAULT_POLE,
    NetworkResult,
    dual_network,
    santa_pipeline,
    solve_network,
)
from .render import render_geojson, render_svg
from .seeding import substream

SEED_ENV = "BRANCHFLOW_SEED"
WORKERS_ENV = "BRANCHFLOW_WORKERS"


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one CLI invocation."""

    subcommand: str
    alpha: float = 0.5
    formula: str = "interp"
    seed: int = 0
    ot_mode: str = "exact"
    reg: float = 0.01
    tol: float = 1e-9
    max_iter: int = 100_000
    shift_norm: float = 0.0
    shift_delta: float = 0.01
    d: int = 2
    n_sources: int = 2
    n_targets: int = 100
    threshold: float | None = None
    workers: int | None = None
    pole: tuple = DEFAULT_POLE
    cities: Path | None = None
    out: Path | None = None
    trace: Path | None = None

    def bot_params(self) -> BotParams:
        return BotParams(
            alpha=self.alpha,
            formula=self.formula,
            shift_norm=self.shift_norm,
            shift_delta=self.shift_delta,
            seed=self.seed,
        )

    def sinkhorn_config(self) -> SinkhornConfig:
        return SinkhornConfig(reg=self.reg, tol=self.tol, max_iter=self.max_iter)


def _env_int(name: str):
    raw = os.environ.get(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"environment variable {name} must be an integer, got {raw!r}") from None


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = _env_int(SEED_ENV)
    return 0 if env is None else env


def _resolve_workers(value):
    if value is not None:
        return int(value)
    return _env_int(WORKERS_ENV)


# ---------------------------------------------------------------------------
# synthetic problem generators


def _positive_masses(rng, n: int) -> np.ndarray:
    w = rng.random(n)
    while np.any(w <= 0):
        w[w <= 0] = rng.random(int(np.sum(w <= 0)))
    return w / w.sum()


def run_synthetic_single(
    seed: int,
    n_targets: int,
    alpha: float = 0.5,
    d: int = 2,
    *,
    formula: str = "interp",
    shift_norm: float = 0.0,
    shift_delta: float = 0.01,
) -> BuildResult:
    """Seeded one-to-many benchmark: source at the origin, targets uniform
    in [-1, 1]^d, areas positive random normalized to total 1."""
    if d not in (2, 3):
        raise ParameterError(f"d must be 2 or 3, got {d}")
    targets = substream(seed, "single", "positions").uniform(-1.0, 1.0, (n_targets, d))
    areas = _positive_masses(substream(seed, "single", "areas"), n_targets)
    problem = OneToManyProblem(np.zeros(d), targets, areas)
    params = BotParams(
        alpha=alpha, formula=formula, shift_norm=shift_norm, shift_delta=shift_delta, seed=seed
    )
    return build_one_to_many(problem, params)


def synthetic_instance(seed: int, n_sources: int, n_targets: int) -> TransportInstance:
    """Seeded planar transport instance with uniform positions and random masses."""
    sources = substream(seed, "multi", "source-positions").uniform(-1.0, 1.0, (n_sources, 2))
    targets = substream(seed, "multi", "target-positions").uniform(-1.0, 1.0, (n_targets, 2))
    p = _positive_masses(substream(seed, "multi", "p"), n_sources)
    q = _positive_masses(substream(seed, "multi", "q"), n_targets)
    return TransportInstance(sources, targets, p, q)


def run_synthetic_multi(
    seed: int,
    n_sources: int,
    n_targets: int,
    alpha: float = 0.25,
    *,
    formula: str = "interp",
    ot_mode: str = "exact",
    cfg: SinkhornConfig | None = None,
    threshold: float | None = None,
) -> NetworkResult:
    """Seeded many-to-many benchmark: plan the instance, branch each source."""
    instance = synthetic_instance(seed, n_sources, n_targets)
    params = BotParams(alpha=alpha, formula=formula, seed=seed)
    return solve_network(instance, params, ot_mode, cfg, threshold=threshold)


# ---------------------------------------------------------------------------
# subcommand bodies


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def _json_text(obj) -> str:
    import json

    return json.dumps(obj, separators=(",", ":"))


def _cmd_ot(cfg: RunConfig) -> int:
    instance = synthetic_instance(cfg.seed, cfg.n_sources, cfg.n_targets)
    c = cost_matrix(instance)
    if cfg.ot_mode == "exact":
        plan = solve_exact(instance, c)
        print(f"ot cost {plan_cost(plan, c)!r} (exact)")
    elif cfg.ot_mode == "sinkhorn":
        res = solve_sinkhorn(instance, c, cfg.sinkhorn_config())
        plan = res.plan
        print(f"ot cost {plan_cost(plan, c)!r} (sinkhorn)")
        print(f"iterations {res.n_iter} converged {res.converged} "
              f"marginal error {res.marginal_error!r}")
    else:
        raise ParameterError(f"unknown ot mode {cfg.ot_mode!r}")
    if cfg.out is not None:
        _write_text(cfg.out, plan_to_json(instance, plan))
        print(f"wrote {cfg.out}")
    return 0


def _cmd_branch(cfg: RunConfig) -> int:
    result = run_synthetic_single(
        cfg.seed,
        cfg.n_targets,
        cfg.alpha,
        cfg.d,
        formula=cfg.formula,
        shift_norm=cfg.shift_norm,
        shift_delta=cfg.shift_delta,
    )
    n_branch = int(np.sum(result.tree.kind == "branch"))
    print(f"star cost {float(result.trace[0])!r}")
    print(f"tree cost {float(result.trace[-1])!r}")
    print(f"branches {n_branch} candidate evals {result.candidate_evals}")
    if cfg.out is not None:
        _write_text(cfg.out, network_to_json(result.tree, cfg.alpha))
        print(f"wrote {cfg.out}")
    if cfg.trace is not None:
        rows = "\n".join(f"{i},{float(v)!r}" for i, v in enumerate(result.trace))
        _write_text(cfg.trace, "iter,cost\n" + rows)
        print(f"wrote {cfg.trace}")
    return 0


def _forest_manifest(result: NetworkResult, cfg: RunConfig, files) -> dict:
    rep = result.report
    return {
        "trees": [
            {"file": name, "source": src, "star_cost": star, "bot_cost": bot}
            for name, (src, star, bot) in zip(files, rep.per_source)
        ],
        "alpha": cfg.alpha,
        "formula": cfg.formula,
        "seed": cfg.seed,
        "ot_mode": rep.ot_mode,
        "threshold": rep.threshold,
        "ot_cost": rep.ot_cost,
        "star_cost": rep.star_cost,
        "bot_cost": rep.bot_cost,
    }


def _cmd_net(cfg: RunConfig) -> int:
    result = run_synthetic_multi(
        cfg.seed,
        cfg.n_sources,
        cfg.n_targets,
        cfg.alpha,
        formula=cfg.formula,
        ot_mode=cfg.ot_mode,
        cfg=cfg.sinkhorn_config(),
        threshold=cfg.threshold,
    )
    rep = result.report
    print(f"ot cost {rep.ot_cost!r} ({rep.ot_mode})")
    print(f"star cost {rep.star_cost!r} (alpha {cfg.alpha!r})")
    print(f"bot cost {rep.bot_cost!r}")
    print(f"trees {len(result.trees)}")
    if cfg.out is not None:
        files = [f"tree_{k:04d}.json" for k in range(len(result.trees))]
        for name, tree in zip(files, result.trees):
            _write_text(cfg.out / name, network_to_json(tree, cfg.alpha))
        _write_text(cfg.out / "manifest.json", _json_text(_forest_manifest(result, cfg, files)))
        print(f"wrote {cfg.out / 'manifest.json'}")
    return 0


def _cmd_dual(cfg: RunConfig) -> int:
    targets = substream(cfg.seed, "single", "positions").uniform(-1.0, 1.0, (cfg.n_targets, cfg.d))
    areas = _positive_masses(substream(cfg.seed, "single", "areas"), cfg.n_targets)
    problem = OneToManyProblem(np.zeros(cfg.d), targets, areas)
    artery, vein = dual_network(problem, cfg.bot_params())
    print(f"artery cost {bot_cost(artery, cfg.alpha)!r}")
    print(f"vein cost {bot_cost(vein, cfg.alpha)!r}")
    if cfg.out is not None:
        _write_text(cfg.out / "artery.json", network_to_json(artery, cfg.alpha))
        _write_text(cfg.out / "vein.json", network_to_json(vein, cfg.alpha))
        print(f"wrote {cfg.out / 'artery.json'} and {cfg.out / 'vein.json'}")
    return 0


def _cmd_santa(cfg: RunConfig) -> int:
    path = cfg.cities if cfg.cities is not None else sample_cities_path()
    report = load_cities_csv(path)
    print(report.summary())
    if not report.cities:
        raise InputError(f"{path} contains no loadable cities")
    network = santa_pipeline(
        report.cities, cfg.pole, cfg.bot_params(), workers=cfg.workers
    )
    entries = list(network.all_trees())
    total = sum(bot_cost(tree, cfg.alpha) for _, _, tree in entries)
    print(f"countries {len(network.countries)} trees {network.n_trees}")
    print(f"total cost {total!r}")
    if cfg.out is not None:
        files = [f"tree_{k:04d}.json" for k in range(len(entries))]
        manifest_trees = []
        for name, (level, label, tree) in zip(files, entries):
            cost = bot_cost(tree, cfg.alpha)
            _write_text(cfg.out / name, network_to_json(tree, cfg.alpha, cost))
            manifest_trees.append(
                {"file": name, "level": level, "label": label,
                 "cost": cost, "n_nodes": tree.n_nodes}
            )
        manifest = {
            "levels": ["global", "country", "regional"],
            "pole": [network.pole[0], network.pole[1]],
            "alpha": cfg.alpha,
            "formula": cfg.formula,
            "seed": cfg.seed,
            "share_rule": "population-proportional",
            "n_cities": len(report.cities),
            "countries": list(network.countries),
            "trees": manifest_trees,
        }
        _write_text(cfg.out / "manifest.json", _json_text(manifest))
        geo = render_geojson(
            [tree for _, _, tree in entries], [level for level, _, _ in entries]
        )
        _write_text(cfg.out / "network.geojson", geo)
        print(f"wrote {cfg.out / 'manifest.json'} and {cfg.out / 'network.geojson'}")
    return 0


def _load_forest(path: Path):
    """Read one network JSON file, or a directory of them (manifest-aware)."""
    import json as _json

    if path.is_dir():
        manifest = path / "manifest.json"
        entries = []
        if manifest.is_file():
            try:
                doc = _json.loads(manifest.read_text(encoding="utf-8"))
                listed = doc["trees"]
            except (OSError, _json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"cannot read manifest {manifest}: {exc}") from None
            for item in listed:
                entries.append((path / item["file"], item.get("level")))
        else:
            names = sorted(p for p in path.glob("*.json"))
            if not names:
                raise InputError(f"{path} contains no network JSON files")
            entries = [(p, None) for p in names]
    elif path.is_file():
        entries = [(path, None)]
    else:
        raise InputError(f"{path} does not exist")

    trees, levels = [], []
    for k, (file, level) in enumerate(entries):
        try:
            text = file.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {file}: {exc}") from None
        doc = network_from_json(text)
        trees.append(doc.tree)
        levels.append(level if level is not None else k)
    return trees, levels


def _cmd_render(cfg: RunConfig, svg_out, geojson_out) -> int:
    trees, levels = _load_forest(cfg.cities)  # reused field: input path
    if svg_out is None and geojson_out is None:
        raise ParameterError("render needs --svg and/or --geojson output paths")
    if svg_out is not None:
        _write_text(Path(svg_out), render_svg(trees, alpha=cfg.alpha))
        print(f"wrote {svg_out}")
    if geojson_out is not None:
        _write_text(Path(geojson_out), render_geojson(trees, levels))
        print(f"wrote {geojson_out}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub, *, alpha: float):
    sub.add_argument("--seed", type=int, default=None,
                     help=f"random seed (default: ${SEED_ENV} or 0)")
    sub.add_argument("--alpha", type=float, default=alpha,
                     help=f"cost exponent in [0, 1] (default {alpha})")
    sub.add_argument("--formula", choices=("interp", "power"), default="interp",
                     help="branch-point rule (default interp)")


def _add_sinkhorn(sub):
    sub.add_argument("--ot-mode", choices=("exact", "sinkhorn"), default="exact",
                     help="planning solver (default exact)")
    sub.add_argument("--lambda", dest="reg", type=float, default=0.01,
                     help="entropic regularization strength (default 0.01)")
    sub.add_argument("--tol", type=float, default=1e-9,
                     help="marginal L1 convergence threshold (default 1e-9)")
    sub.add_argument("--max-iter", type=int, default=100_000,
                     help="scaling iteration cap (default 100000)")
    sub.add_argument("--threshold", type=float, default=None,
                     help="drop plan entries at or below this before branching "
                          "(default 0 exact, 1e-8 sinkhorn)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchflow",
        description="Branched transport networks: plan mass flows, then "
                    "merge them into trees with cheap shared trunks.",
    )
    commands = parser.add_subparsers(dest="subcommand", required=True)

    ot = commands.add_parser("ot", help="solve one seeded transport instance")
    _add_common(ot, alpha=1.0)
    _add_sinkhorn(ot)
    ot.add_argument("--n-sources", type=int, default=3)
    ot.add_argument("--n-targets", type=int, default=4)
    ot.add_argument("--out", type=Path, default=None, help="write the plan as JSON")

    br = commands.add_parser("branch", help="build one one-to-many tree")
    _add_common(br, alpha=0.5)
    br.add_argument("--n-targets", type=int, default=100)
    br.add_argument("--d", type=int, choices=(2, 3), default=2,
                    help="ambient dimension (default 2)")
    br.add_argument("--shift-norm", type=float, default=0.0)
    br.add_argument("--shift-delta", type=float, default=0.01)
    br.add_argument("--out", type=Path, default=None, help="write the tree as network JSON")
    br.add_argument("--trace", type=Path, default=None, help="write iter,cost CSV")

    net = commands.add_parser("net", help="plan an instance, then branch every source")
    _add_common(net, alpha=0.25)
    _add_sinkhorn(net)
    net.add_argument("--n-sources", type=int, default=50)
    net.add_argument("--n-targets", type=int, default=1000)
    net.add_argument("--out", type=Path, default=None,
                     help="directory for tree_*.json and manifest.json")

    dual = commands.add_parser("dual", help="build paired artery/vein trees")
    _add_common(dual, alpha=0.5)
    dual.add_argument("--n-targets", type=int, default=200)
    dual.add_argument("--d", type=int, choices=(2, 3), default=2)
    dual.add_argument("--shift-norm", type=float, default=0.01)
    dual.add_argument("--shift-delta", type=float, default=0.01)
    dual.add_argument("--out", type=Path, default=None,
                      help="directory for artery.json and vein.json")

    santa = commands.add_parser("santa", help="geographic hierarchy from a cities CSV")
    _add_common(santa, alpha=0.5)
    santa.add_argument("--cities", type=Path, default=None,
                       help="cities CSV (default: bundled 1000-city sample)")
    santa.add_argument("--pole-lat", type=float, default=DEFAULT_POLE[0])
    santa.add_argument("--pole-lon", type=float, default=DEFAULT_POLE[1])
    santa.add_argument("--workers", type=int, default=None,
                       help=f"country-level parallelism (default: ${WORKERS_ENV} or serial)")
    santa.add_argument("--out", type=Path, default=None,
                       help="directory for tree files, manifest.json, network.geojson")

    render = commands.add_parser("render", help="draw network JSON as SVG or GeoJSON")
    render.add_argument("input", type=Path,
                        help="a network JSON file or a directory of them")
    render.add_argument("--alpha", type=float, default=0.5,
                        help="stroke-width exponent for SVG (default 0.5)")
    render.add_argument("--svg", type=Path, default=None)
    render.add_argument("--geojson", type=Path, default=None)
    return parser


def _config_from(args: argparse.Namespace) -> RunConfig:
    fields = {}
    for name in ("alpha", "formula", "ot_mode", "reg", "tol", "max_iter",
                 "shift_norm", "shift_delta", "d", "n_sources", "n_targets",
                 "threshold", "out", "trace"):
        if hasattr(args, name):
            fields[name] = getattr(args, name)
    fields["seed"] = _resolve_seed(getattr(args, "seed", None))
    if hasattr(args, "workers"):
        fields["workers"] = _resolve_workers(args.workers)
    if hasattr(args, "pole_lat"):
        fields["pole"] = (args.pole_lat, args.pole_lon)
    if hasattr(args, "cities"):
        fields["cities"] = args.cities
    if hasattr(args, "input"):
        fields["cities"] = args.input
    return RunConfig(subcommand=args.subcommand, **fields)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from(args)
        if args.subcommand == "ot":
            return _cmd_ot(cfg)
        if args.subcommand == "branch":
            return _cmd_branch(cfg)
        if args.subcommand == "net":
            return _cmd_net(cfg)
        if args.subcommand == "dual":
            return _cmd_dual(cfg)
        if args.subcommand == "santa":
            return _cmd_santa(cfg)
        if args.subcommand == "render":
            return _cmd_render(cfg, args.svg, args.geojson)
        raise ParameterError(f"unknown subcommand {args.subcommand!r}")
    except (ParameterError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except StructuralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BranchFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
