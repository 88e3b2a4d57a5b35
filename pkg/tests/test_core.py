"""Domain types, cost functional, and structural validation."""

import math

import numpy as np
import pytest

from branchflow import (
    BotParams,
    FlowTree,
    ParameterError,
    StructuralError,
    TransportInstance,
    TransportPlan,
    bot_cost,
    subadditivity_gain,
    validate_tree,
)


def single_edge_tree(length=2.0, area=1.0):
    return FlowTree(
        coords=[[0.0, 0.0], [length, 0.0]],
        kind=["source", "target"],
        parent=[-1, 0],
        area=[area, area],
    )


def y_tree():
    """Source at origin, branch at (0.5, 0), two symmetric leaves."""
    return FlowTree(
        coords=[[0.0, 0.0], [0.5, 0.0], [1.0, 0.2], [1.0, -0.2]],
        kind=["source", "branch", "target", "target"],
        parent=[-1, 0, 1, 1],
        area=[1.0, 1.0, 0.5, 0.5],
    )


# ---------------------------------------------------------------------------
# bot_cost


def test_bot_cost_single_edge():
    assert bot_cost(single_edge_tree(), 0.5) == 2.0


def test_bot_cost_y_tree_hand_value():
    # 1.0**0.5 * 0.5 + 2 * 0.5**0.5 * hypot(0.5, 0.2)
    expected = 0.5 + 2.0 * math.sqrt(0.5) * math.hypot(0.5, 0.2)
    got = bot_cost(y_tree(), 0.5)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(1.261577, abs=1e-6)


def test_bot_cost_alpha_zero_is_total_length():
    tree = y_tree()
    total_len = 0.5 + 2.0 * math.hypot(0.5, 0.2)
    assert bot_cost(tree, 0.0) == pytest.approx(total_len, rel=1e-12)


def test_bot_cost_scales_linearly_with_coordinates():
    tree = y_tree()
    base = bot_cost(tree, 0.3)
    doubled = FlowTree(tree.coords * 2.0, tree.kind, tree.parent, tree.area)
    assert bot_cost(doubled, 0.3) == 2.0 * base
    scaled = FlowTree(tree.coords * 3.7, tree.kind, tree.parent, tree.area)
    assert bot_cost(scaled, 0.3) == pytest.approx(3.7 * base, rel=1e-12)


def test_bot_cost_alpha_one_matches_mass_times_distance():
    tree = y_tree()
    lengths = tree.edge_lengths()
    expected = float(np.sum(tree.area[1:] * lengths[1:]))
    assert bot_cost(tree, 1.0) == pytest.approx(expected, rel=1e-15)


def test_bot_cost_rejects_bad_alpha_and_bad_tree():
    with pytest.raises(ParameterError):
        bot_cost(single_edge_tree(), 1.5)
    broken = FlowTree(
        coords=[[0.0, 0.0], [1.0, 0.0]],
        kind=["source", "target"],
        parent=[-1, 0],
        area=[1.0, 0.4],
    )
    with pytest.raises(StructuralError):
        bot_cost(broken, 0.5)


# ---------------------------------------------------------------------------
# validate_tree


def test_validate_single_edge_passes():
    report = validate_tree(single_edge_tree())
    assert report.ok
    assert bool(report)
    assert report.summary() == "valid"


def test_validate_conservation_residual():
    tree = FlowTree(
        coords=[[0.0, 0.0], [1.0, 0.0], [2.0, 0.5], [2.0, -0.5]],
        kind=["source", "branch", "target", "target"],
        parent=[-1, 0, 1, 1],
        area=[1.0, 1.0, 0.5, 0.4],
    )
    report = validate_tree(tree)
    assert not report.ok
    kinds = [v.kind for v in report.violations]
    assert "conservation" in kinds
    bad = [v for v in report.violations if v.kind == "conservation"]
    assert any(abs(v.residual - 0.1) < 1e-12 for v in bad)
    assert any(1 in v.nodes for v in bad)


def test_validate_mutual_parents_is_cycle():
    tree = FlowTree(
        coords=[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
        kind=["source", "branch", "branch"],
        parent=[-1, 2, 1],
        area=[1.0, 1.0, 1.0],
    )
    report = validate_tree(tree)
    assert any(v.kind == "cycle" for v in report.violations)


def test_validate_orphan_and_source_count():
    no_source = FlowTree(
        coords=[[0.0, 0.0], [1.0, 0.0]],
        kind=["target", "target"],
        parent=[-1, 0],
        area=[1.0, 1.0],
    )
    kinds = [v.kind for v in validate_tree(no_source).violations]
    assert "source-count" in kinds

    dangling = FlowTree(
        coords=[[0.0, 0.0], [1.0, 0.0]],
        kind=["source", "target"],
        parent=[-1, 7],
        area=[1.0, 1.0],
    )
    kinds = [v.kind for v in validate_tree(dangling).violations]
    assert "orphan" in kinds


def test_validate_target_must_be_leaf():
    tree = FlowTree(
        coords=[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
        kind=["source", "target", "target"],
        parent=[-1, 0, 1],
        area=[1.0, 1.0, 1.0],
    )
    kinds = [v.kind for v in validate_tree(tree).violations]
    assert "target-not-leaf" in kinds


def test_validate_demands_checked_when_given():
    tree = single_edge_tree()
    assert validate_tree(tree, demands={1: 1.0}).ok
    report = validate_tree(tree, demands={1: 0.7})
    assert any(v.kind == "demand-mismatch" for v in report.violations)
    report = validate_tree(tree, demands={0: 1.0})
    assert any(v.kind == "demand-mismatch" for v in report.violations)


def test_valid_tree_source_equals_sum_of_targets():
    tree = y_tree()
    assert validate_tree(tree).ok
    targets = tree.kind == "target"
    assert tree.area[0] == pytest.approx(float(tree.area[targets].sum()), rel=1e-12)


# ---------------------------------------------------------------------------
# subadditivity_gain


def test_subadditivity_hand_values():
    assert subadditivity_gain(1.0, 1.0, 0.5) == pytest.approx(2.0 - math.sqrt(2.0), rel=1e-12)
    assert subadditivity_gain(1.0, 1.0, 0.5) == pytest.approx(0.585786, abs=1e-6)
    assert subadditivity_gain(3.0, 7.0, 1.0) == 0.0
    assert subadditivity_gain(1.0, 1.0, 0.0) == 1.0


def test_subadditivity_strictly_positive_below_one():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        m1, m2 = rng.uniform(1e-3, 10.0, 2)
        alpha = rng.uniform(0.0, 0.999)
        assert subadditivity_gain(m1, m2, alpha) > 0.0


def test_subadditivity_rejects_nonpositive_masses():
    with pytest.raises(ParameterError):
        subadditivity_gain(0.0, 1.0, 0.5)
    with pytest.raises(ParameterError):
        subadditivity_gain(1.0, -2.0, 0.5)


# ---------------------------------------------------------------------------
# construction-time validation


def test_transport_instance_validation():
    xs = [[0.0, 0.0]]
    ys = [[1.0, 0.0], [0.0, 1.0]]
    TransportInstance(xs, ys, [1.0], [0.5, 0.5])
    with pytest.raises(ParameterError):
        TransportInstance(xs, ys, [1.0], [0.6, 0.6])
    with pytest.raises(ParameterError):
        TransportInstance(xs, ys, [1.0], [1.1, -0.1])
    with pytest.raises(ParameterError):
        TransportInstance(xs, [[0.0, 0.0], [0.0, 1.0]], [1.0], [0.5, 0.5])
    with pytest.raises(ParameterError):
        TransportInstance(xs, [[1.0, 0.0, 0.0]], [1.0], [1.0])


def test_transport_plan_marginal_error():
    plan = TransportPlan(
        gamma=[[0.5, 0.0], [0.0, 0.5]],
        row_marginal=[0.5, 0.5],
        col_marginal=[0.4, 0.6],
    )
    row_err, col_err = plan.marginal_error()
    assert row_err == 0.0
    assert col_err == pytest.approx(0.2, rel=1e-12)


def test_bot_params_validation():
    BotParams(alpha=0.0)
    BotParams(alpha=1.0, formula="power")
    with pytest.raises(ParameterError):
        BotParams(alpha=-0.1)
    with pytest.raises(ParameterError):
        BotParams(alpha=0.5, formula="cubic")
    with pytest.raises(ParameterError):
        BotParams(shift_norm=-1.0)
    with pytest.raises(ParameterError):
        BotParams(shift_norm=0.01, shift_delta=0.0)
    # delta is free to be anything when the shift is disabled
    BotParams(shift_norm=0.0, shift_delta=0.0)


def test_flow_tree_helpers():
    tree = y_tree()
    assert tree.n_nodes == 4
    assert tree.dim == 2
    assert tree.children() == [[1], [2, 3], [], []]
    lengths = tree.edge_lengths()
    assert lengths[0] == 0.0
    assert lengths[1] == 0.5
    assert lengths[2] == pytest.approx(math.hypot(0.5, 0.2), rel=1e-15)


def test_flow_tree_shape_mismatch_rejected():
    with pytest.raises(ParameterError):
        FlowTree(
            coords=[[0.0, 0.0], [1.0, 0.0]],
            kind=["source"],
            parent=[-1, 0],
            area=[1.0, 1.0],
        )
