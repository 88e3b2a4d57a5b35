"""Two-stage network solving, dual trees, spherical geometry, hierarchy."""

import math

import numpy as np
import pytest

from branchflow import (
    BotParams,
    GeoCity,
    OneToManyProblem,
    ParameterError,
    TransportInstance,
    bot_cost,
    build_one_to_many,
    dual_network,
    geo_embed,
    geo_project,
    santa_pipeline,
    solve_network,
    validate_tree,
)
from branchflow.clustering import choose_k
from branchflow.pipeline import DEFAULT_POLE, EARTH_RADIUS_KM, to_sphere
from branchflow.seeding import substream


def random_instance(seed, m, n):
    rng = substream(seed, "pipe-test")
    xs = rng.uniform(-1.0, 1.0, (m, 2))
    ys = rng.uniform(-1.0, 1.0, (n, 2))
    p = rng.uniform(0.2, 1.0, m)
    q = rng.uniform(0.2, 1.0, n)
    return TransportInstance(xs, ys, p / p.sum(), q / q.sum())


def random_cities(seed, n, countries):
    rng = substream(seed, "cities")
    out = []
    for i in range(n):
        out.append(
            GeoCity(
                name=f"city{i}",
                country=countries[i % len(countries)],
                lat=float(rng.uniform(-60, 70)),
                lon=float(rng.uniform(-179, 179)),
                population=float(rng.lognormal(10, 1)),
            )
        )
    return out


# ---------------------------------------------------------------------------
# solve_network


def test_single_source_reduces_to_direct_build():
    inst = random_instance(1, 1, 20)
    params = BotParams(alpha=0.4)
    res = solve_network(inst, params)
    assert len(res.trees) == 1
    assert res.source_index == (0,)

    problem = OneToManyProblem(inst.sources[0], inst.targets, inst.q)
    direct = build_one_to_many(problem, params)
    assert np.array_equal(res.trees[0].coords, direct.tree.coords)
    assert np.array_equal(res.trees[0].parent, direct.tree.parent)
    assert np.array_equal(res.trees[0].area, direct.tree.area)


def test_mirror_symmetric_instance_gives_mirror_trees():
    rng = substream(5, "mirror")
    k = 16
    half = rng.uniform(0.3, 1.2, (k, 2)) + np.array([0.2, -0.4])
    targets = np.vstack([half, half * np.array([-1.0, 1.0])])
    q = np.full(2 * k, 1.0 / (2 * k))  # halves sum to exactly 0.5 each
    inst = TransportInstance([[1.0, 0.0], [-1.0, 0.0]], targets, [0.5, 0.5], q)

    res = solve_network(inst, BotParams(alpha=0.5))
    perm = np.concatenate([np.arange(k, 2 * k), np.arange(0, k)])
    assert np.array_equal(res.plan.gamma[0], res.plan.gamma[1][perm])

    t0, t1 = res.trees
    flip = np.array([-1.0, 1.0])
    assert np.array_equal(t1.coords, t0.coords * flip)
    assert np.array_equal(t1.area, t0.area)
    assert np.array_equal(t1.parent, t0.parent)
    assert np.array_equal(t1.kind, t0.kind)


def test_forest_report_is_consistent():
    inst = random_instance(2, 8, 60)
    params = BotParams(alpha=0.25)
    res = solve_network(inst, params)

    assert res.report.ot_mode == "exact"
    assert res.report.threshold == 0.0
    assert res.report.sinkhorn_iterations is None

    stars = [s for _, s, _ in res.report.per_source]
    bots = [b for _, _, b in res.report.per_source]
    assert res.report.star_cost == pytest.approx(sum(stars), rel=1e-12)
    assert res.report.bot_cost == pytest.approx(sum(bots), rel=1e-12)
    assert res.report.bot_cost < res.report.star_cost
    assert all(b <= s + 1e-12 for s, b in zip(stars, bots))

    recomputed = sum(bot_cost(t, 0.25) for t in res.trees)
    assert res.report.bot_cost == pytest.approx(recomputed, rel=1e-12)

    for tree, i in zip(res.trees, res.source_index):
        assert validate_tree(tree).ok
        assert np.array_equal(tree.coords[0], inst.sources[i])
        targets = tree.kind == "target"
        assert float(tree.area[targets].sum()) == pytest.approx(float(tree.area[0]), abs=1e-12)

    # every target's full mass is distributed across the forest
    placed = np.zeros(inst.n_targets)
    for tree, i in zip(res.trees, res.source_index):
        for node in np.flatnonzero(tree.kind == "target"):
            j = int(np.argmin(np.linalg.norm(inst.targets - tree.coords[node], axis=1)))
            placed[j] += tree.area[node]
    assert np.allclose(placed, inst.q, atol=1e-9)


def test_sinkhorn_mode_thresholds_and_reports():
    inst = random_instance(3, 4, 30)
    res = solve_network(inst, BotParams(alpha=0.5), ot_mode="sinkhorn")
    assert res.report.ot_mode == "sinkhorn"
    assert res.report.threshold == 1e-8
    assert res.report.sinkhorn_iterations >= 1
    assert res.report.sinkhorn_converged
    for tree in res.trees:
        assert float(tree.area[tree.kind == "target"].min()) > 1e-8

    # a huge threshold silences every coupling and yields an empty forest
    empty = solve_network(inst, BotParams(alpha=0.5), ot_mode="sinkhorn", threshold=10.0)
    assert empty.trees == ()
    assert empty.report.bot_cost == 0.0


def test_solve_network_rejects_unknown_mode():
    inst = random_instance(4, 2, 5)
    with pytest.raises(ParameterError):
        solve_network(inst, BotParams(), ot_mode="simplex")


# ---------------------------------------------------------------------------
# dual_network


def dual_problem(seed=7, n=40):
    rng = substream(seed, "dual-test")
    targets = rng.uniform(-1.0, 1.0, (n, 2))
    areas = rng.uniform(0.1, 1.0, n)
    return OneToManyProblem(np.zeros(2), targets, areas / areas.sum())


def test_dual_zero_shift_trees_coincide():
    problem = dual_problem()
    artery, vein = dual_network(problem, BotParams(alpha=0.5, shift_norm=0.0))
    assert np.array_equal(artery.coords, vein.coords)
    assert np.array_equal(artery.parent, vein.parent)


def test_dual_shifted_trees_share_leaves_but_not_branches():
    problem = dual_problem()
    params = BotParams(alpha=0.5, shift_norm=0.01, shift_delta=0.01, seed=3)
    artery, vein = dual_network(problem, params)

    for tree in (artery, vein):
        assert validate_tree(tree).ok
        targets = tree.kind == "target"
        assert np.array_equal(tree.coords[targets], problem.targets)
        assert np.array_equal(tree.area[targets], problem.areas)

    a_branch = artery.coords[artery.kind == "branch"]
    v_branch = vein.coords[vein.kind == "branch"]
    if a_branch.shape == v_branch.shape:
        assert float(np.abs(a_branch - v_branch).max()) > 0.0
    # repeatable given the same seed
    artery2, _ = dual_network(problem, params)
    assert np.array_equal(artery2.coords, artery.coords)


# ---------------------------------------------------------------------------
# spherical geometry


def test_geo_embed_anchors():
    origin = geo_embed(0.0, 0.0)
    assert origin[0] == 1.0 and origin[1] == 0.0 and origin[2] == 0.0
    pole = geo_embed(90.0, 123.0)
    assert pole[2] == 1.0
    assert abs(pole[0]) < 1e-12 and abs(pole[1]) < 1e-12


def test_geo_embed_rejects_out_of_range():
    with pytest.raises(ParameterError):
        geo_embed(91.0, 0.0)
    with pytest.raises(ParameterError):
        geo_embed(0.0, float("nan"))


def test_geo_roundtrip_identity():
    rng = substream(11, "roundtrip")
    lats = rng.uniform(-89.9, 89.9, 1000)
    lons = rng.uniform(-179.9, 179.9, 1000)
    worst = 0.0
    for lat, lon in zip(lats, lons):
        lat2, lon2 = geo_project(geo_embed(lat, lon))
        dlon = abs(lon2 - lon)
        dlon = min(dlon, 360.0 - dlon)
        worst = max(worst, abs(lat2 - lat), dlon)
    assert math.radians(worst) < 1e-12


def test_geo_project_normalizes_off_sphere_points():
    lat, lon = geo_project(np.array([0.0, 0.0, 5.0]))
    assert lat == pytest.approx(90.0, abs=1e-12)
    assert -180.0 < lon <= 180.0


def test_to_sphere_unit_rows():
    rng = substream(12, "sphere")
    pts = rng.normal(0, 1, (50, 3))
    out = to_sphere(pts)
    assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# santa_pipeline


def test_hierarchy_structure_and_coverage():
    cities = random_cities(1, 60, ["A", "B", "C"])
    net = santa_pipeline(cities, params=BotParams(alpha=0.5, seed=5))

    assert net.countries == ("A", "B", "C")
    assert net.pole == DEFAULT_POLE

    # population-proportional top-level shares
    pops = np.array([c.population for c in cities])
    for ci, name in enumerate(net.countries):
        expected = sum(c.population for c in cities if c.country == name) / pops.sum()
        assert net.shares[ci] == pytest.approx(expected, rel=1e-12)

    # every city in exactly one regional tree
    seen = []
    for ci, name in enumerate(net.countries):
        n_cities = sum(1 for c in cities if c.country == name)
        assert len(net.regional_trees[ci]) == choose_k(n_cities)
        for members in net.regional_members[ci]:
            seen.extend(members)
    assert sorted(seen) == list(range(len(cities)))

    for level, label, tree in net.all_trees():
        assert validate_tree(tree).ok
        leaves = tree.kind == "target"
        assert float(tree.area[leaves].sum()) == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(np.linalg.norm(tree.coords, axis=1), 1.0, atol=1e-12)

    assert net.global_tree is next(net.all_trees())[2]
    assert np.allclose(net.global_tree.coords[0], geo_embed(*DEFAULT_POLE), atol=1e-15)
    assert net.n_trees == 1 + 3 + sum(len(t) for t in net.regional_trees)


def test_hierarchy_single_city_country_degenerates():
    cities = [GeoCity("only", "Z", 10.0, 20.0, 1000.0)]
    net = santa_pipeline(cities)
    assert net.countries == ("Z",)
    assert net.global_tree.n_nodes == 2
    assert len(net.country_trees) == 1
    assert len(net.regional_trees[0]) == 1
    leaf = net.regional_trees[0][0]
    assert list(leaf.kind) == ["source", "target"]
    assert np.allclose(leaf.coords[1], geo_embed(10.0, 20.0), atol=1e-15)
    for _, _, tree in net.all_trees():
        assert validate_tree(tree).ok


def test_hierarchy_workers_match_serial():
    cities = random_cities(2, 40, ["A", "B"])
    serial = santa_pipeline(cities, params=BotParams(seed=9))
    parallel = santa_pipeline(cities, params=BotParams(seed=9), workers=2)
    for (l1, n1, t1), (l2, n2, t2) in zip(serial.all_trees(), parallel.all_trees()):
        assert (l1, n1) == (l2, n2)
        assert np.array_equal(t1.coords, t2.coords)
        assert np.array_equal(t1.area, t2.area)
        assert np.array_equal(t1.parent, t2.parent)


def test_hierarchy_custom_pole():
    cities = random_cities(3, 10, ["A"])
    net = santa_pipeline(cities, pole=(80.0, 10.0))
    assert net.pole == (80.0, 10.0)
    assert np.allclose(net.global_tree.coords[0], geo_embed(80.0, 10.0), atol=1e-15)


def test_hierarchy_rejects_empty_city_list():
    with pytest.raises(ParameterError):
        santa_pipeline([])


def test_earth_radius_constant():
    assert EARTH_RADIUS_KM == 6371.0
