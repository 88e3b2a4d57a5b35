"""End-to-end flows: plan-then-branch networks, paired artery/vein
trees, and the three-level geographic delivery hierarchy.

Geographic work happens in 3-D unit-sphere coordinates: chordal
(straight-line) geometry keeps the closed-form branch points valid, and
every computed point is radially pushed back onto the sphere, which
distorts lengths only at second order in the arc size.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .branching import OneToManyProblem, build_one_to_many, star_cost
from .clustering import WeightedPointSet, choose_k, weighted_centroid, weighted_kmeans
from .core import (
    BotParams,
    FlowTree,
    ParameterError,
    TransportInstance,
    TransportPlan,
    bot_cost,
)
from .io import GeoCity, normalize_lon
from .ot import (
    SinkhornConfig,
    cost_matrix,
    plan_cost,
    plan_to_assignments,
    solve_exact,
    solve_sinkhorn,
)
from .seeding import random_direction, substream, substream_seed

OT_MODES = ("exact", "sinkhorn")
# dense regularized plans need trimming before decomposition; exact plans do not
DEFAULT_THRESHOLD = {"exact": 0.0, "sinkhorn": 1e-8}

DEFAULT_POLE = (90.0, 0.0)


# ---------------------------------------------------------------------------
# plan-then-branch networks


@dataclass(frozen=True)
class NetworkReport:
    """Cost summary of a two-stage build.

    ``ot_cost`` is the plan's mass-times-distance objective; ``star_cost``
    re-weights the same direct edges by area**alpha, which is the
    baseline the branched trees strictly improve; ``bot_cost`` is the
    forest total after branching.
    """

    ot_mode: str
    ot_cost: float
    star_cost: float
    bot_cost: float
    threshold: float
    per_source: tuple
    sinkhorn_iterations: int | None = None
    sinkhorn_converged: bool | None = None


@dataclass(frozen=True)
class NetworkResult:
    trees: tuple
    source_index: tuple
    plan: TransportPlan
    report: NetworkReport


def solve_network(
    instance: TransportInstance,
    params: BotParams,
    ot_mode: str = "exact",
    cfg: SinkhornConfig | None = None,
    *,
    threshold: float | None = None,
) -> NetworkResult:
    """Plan mass between sources and targets, then branch each source's share.

    Stage one computes a transport plan (exact or entropic); stage two
    decomposes it into one one-to-many problem per source, with the
    plan's coupling entries as target areas, and builds a branched tree
    for each.  Sources whose every coupling falls below ``threshold``
    get no tree.
    """
    if ot_mode not in OT_MODES:
        raise ParameterError(f"ot_mode must be one of {OT_MODES}, got {ot_mode!r}")
    if threshold is None:
        threshold = DEFAULT_THRESHOLD[ot_mode]

    c = cost_matrix(instance)
    sink_iters = None
    sink_conv = None
    if ot_mode == "exact":
        plan = solve_exact(instance, c)
    else:
        res = solve_sinkhorn(instance, c, cfg)
        plan = res.plan
        sink_iters = res.n_iter
        sink_conv = res.converged

    assignments = plan_to_assignments(plan, threshold)
    trees = []
    source_index = []
    per_source = []
    total_star = 0.0
    total_bot = 0.0
    for i, assignment in enumerate(assignments):
        if not assignment:
            continue
        idx = [j for j, _ in assignment]
        areas = [a for _, a in assignment]
        problem = OneToManyProblem(instance.sources[i], instance.targets[idx], areas)
        sub = replace(params, seed=substream_seed(params.seed, "network", str(i)))
        result = build_one_to_many(problem, sub)
        star = star_cost(problem, params.alpha)
        bot = bot_cost(result.tree, params.alpha)
        trees.append(result.tree)
        source_index.append(i)
        per_source.append((i, star, bot))
        total_star += star
        total_bot += bot

    report = NetworkReport(
        ot_mode=ot_mode,
        ot_cost=plan_cost(plan, c),
        star_cost=total_star,
        bot_cost=total_bot,
        threshold=threshold,
        per_source=tuple(per_source),
        sinkhorn_iterations=sink_iters,
        sinkhorn_converged=sink_conv,
    )
    return NetworkResult(tuple(trees), tuple(source_index), plan, report)


def dual_network(problem: OneToManyProblem, params: BotParams) -> tuple:
    """Build two interleaved trees over the same targets, e.g. arteries and veins.

    Each build gets its own frozen displacement vector drawn from a
    distinct sub-seed, so the two trees share every target leaf but their
    branch nodes come apart, more so on thin edges than on thick ones.
    With ``shift_norm = 0`` both builds coincide exactly.
    """
    trees = []
    for role in ("artery", "vein"):
        if params.shift_norm > 0:
            rng = substream(params.seed, "dual", role)
            eps = random_direction(rng, problem.dim) * params.shift_norm
        else:
            eps = None
        trees.append(build_one_to_many(problem, params, eps=eps).tree)
    return tuple(trees)


# ---------------------------------------------------------------------------
# spherical geometry

EARTH_RADIUS_KM = 6371.0


def geo_embed(lat: float, lon: float) -> np.ndarray:
    """Map latitude/longitude in degrees to 3-D unit-sphere coordinates.

    (0, 0) maps to (1, 0, 0) and (90, anything) to (0, 0, 1).
    """
    lat, lon = float(lat), float(lon)
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise ParameterError(f"latitude must lie in [-90, 90], got {lat}")
    if not math.isfinite(lon):
        raise ParameterError("longitude must be finite")
    phi = math.radians(lat)
    lam = math.radians(normalize_lon(lon))
    return np.array(
        [math.cos(phi) * math.cos(lam), math.cos(phi) * math.sin(lam), math.sin(phi)]
    )


def geo_project(point) -> tuple:
    """Renormalize a 3-D point to the unit sphere and return (lat, lon) degrees."""
    p = np.asarray(point, dtype=float).reshape(3)
    norm = float(np.linalg.norm(p))
    if not norm > 0:
        raise ParameterError("cannot project the sphere center")
    x, y, z = p / norm
    lat = math.degrees(math.asin(min(1.0, max(-1.0, z))))
    lon = math.degrees(math.atan2(y, x))
    return lat, normalize_lon(lon)


def to_sphere(points: np.ndarray) -> np.ndarray:
    """Radially push an (n, 3) array of points onto the unit sphere."""
    pts = np.asarray(points, dtype=float)
    norms = np.linalg.norm(pts, axis=-1, keepdims=True)
    if np.any(norms <= 0):
        raise ParameterError("cannot project the sphere center")
    return pts / norms


def _embed_cities(lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    phi = np.radians(lats)
    lam = np.radians(lons)
    return np.column_stack(
        [np.cos(phi) * np.cos(lam), np.cos(phi) * np.sin(lam), np.sin(phi)]
    )


# ---------------------------------------------------------------------------
# the geographic hierarchy


@dataclass(frozen=True)
class HierarchicalNetwork:
    """Three tree levels: pole to countries, country to regions, region to cities.

    ``regional_members[c][r]`` lists indices into the input city list, so
    membership of every city in exactly one regional tree is checkable.
    Leaf areas are population shares normalized within each tree.
    """

    countries: tuple
    shares: tuple             # per-country fraction of total population
    global_tree: FlowTree
    country_trees: tuple
    regional_trees: tuple     # per country: tuple of per-region trees
    regional_members: tuple   # per country: tuple of city-index tuples
    params: BotParams
    pole: tuple

    def all_trees(self):
        """Yield (level, label, tree) for every tree, in deterministic order."""
        yield "global", "global", self.global_tree
        for name, tree in zip(self.countries, self.country_trees):
            yield "country", name, tree
        for name, region_trees in zip(self.countries, self.regional_trees):
            for r, tree in enumerate(region_trees):
                yield "regional", f"{name}/{r}", tree

    @property
    def n_trees(self) -> int:
        return 1 + len(self.country_trees) + sum(len(t) for t in self.regional_trees)


def _country_stage(xyz, pops, city_idx, params, seed_base, country):
    """National center, regional centers, and regional trees for one country."""
    pts = xyz[city_idx]
    w = pops[city_idx]
    center = to_sphere(weighted_centroid(pts, w)[None, :])[0]

    k = choose_k(len(city_idx))
    km = weighted_kmeans(
        WeightedPointSet(pts, w), k, seed=substream_seed(seed_base, "regions", country)
    )
    centers = to_sphere(km.centroids)

    region_pops = np.array([w[km.labels == r].sum() for r in range(k)])
    country_pop = float(w.sum())

    # country tree: national center feeding the regional centers
    region_shares = region_pops / country_pop
    country_tree = _build_geo_tree(
        center, centers, region_shares, params, seed_base, f"country/{country}"
    )

    region_trees = []
    members = []
    for r in range(k):
        mask = km.labels == r
        idx = tuple(int(city_idx[t]) for t in np.flatnonzero(mask))
        areas = w[mask] / region_pops[r]
        tree = _build_geo_tree(
            centers[r], pts[mask], areas, params, seed_base, f"region/{country}/{r}"
        )
        region_trees.append(tree)
        members.append(idx)
    return center, country_pop, country_tree, tuple(region_trees), tuple(members)


def _build_geo_tree(source, targets, areas, params, seed_base, label) -> FlowTree:
    problem = OneToManyProblem(source, targets, areas)
    sub = replace(params, seed=substream_seed(seed_base, "tree", label))
    return build_one_to_many(problem, sub, post_point=to_sphere).tree


def santa_pipeline(
    cities,
    pole: tuple = DEFAULT_POLE,
    params: BotParams | None = None,
    *,
    workers: int | None = None,
) -> HierarchicalNetwork:
    """Build the full three-level delivery hierarchy over a city list.

    Per country (processed independently, optionally in parallel): the
    national center is the population-weighted centroid pushed onto the
    sphere, regional centers come from weighted K-means with
    K = floor(sqrt(N)) + 1 capped at N, and each level's tree is built
    with branch points re-projected onto the sphere.  Leaf areas are
    population shares normalized per tree; the global tree splits unit
    mass between countries in proportion to population.
    """
    cities = list(cities)
    if not cities:
        raise ParameterError("at least one city is required")
    if params is None:
        params = BotParams()

    lats = np.array([c.lat for c in cities])
    lons = np.array([c.lon for c in cities])
    pops = np.array([c.population for c in cities])
    xyz = _embed_cities(lats, lons)

    by_country: dict[str, list[int]] = {}
    for i, city in enumerate(cities):
        by_country.setdefault(city.country, []).append(i)
    countries = tuple(sorted(by_country))

    seed_base = params.seed

    def stage(name):
        return _country_stage(
            xyz, pops, np.array(by_country[name]), params, seed_base, name
        )

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            staged = list(pool.map(stage, countries))
    else:
        staged = [stage(name) for name in countries]

    centers = np.array([s[0] for s in staged])
    country_pops = np.array([s[1] for s in staged])
    shares = country_pops / country_pops.sum()

    pole_point = geo_embed(*pole)
    global_tree = _build_geo_tree(pole_point, centers, shares, params, seed_base, "global")

    return HierarchicalNetwork(
        countries=countries,
        shares=tuple(float(s) for s in shares),
        global_tree=global_tree,
        country_trees=tuple(s[2] for s in staged),
        regional_trees=tuple(s[3] for s in staged),
        regional_members=tuple(s[4] for s in staged),
        params=params,
        pole=(float(pole[0]), float(pole[1])),
    )
