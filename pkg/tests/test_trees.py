"""Decision tree and random forest baselines."""

import numpy as np
import pytest

from qkml import trees
from qkml.trees import (
    ForestConfig,
    ForestModel,
    TreeConfig,
    TreeNode,
    forest_from_text,
    forest_to_text,
    gini_impurity,
    predict_forest,
    predict_forest_batch,
    predict_tree,
    predict_tree_batch,
    train_forest,
    train_tree,
    tree_depth,
    tree_from_text,
    tree_to_text,
)
from helpers import best_root_split


def _random_xy(rng, n, d):
    x = rng.uniform(-2.0, 2.0, size=(n, d))
    y = rng.integers(0, 2, size=n)
    return x, y


# -- Gini impurity -----------------------------------------------------------


def test_gini_pure_node_is_zero():
    assert gini_impurity((5, 0)) == 0.0
    assert gini_impurity((0, 5)) == 0.0


def test_gini_balanced_node():
    assert gini_impurity((3, 3)) == pytest.approx(0.5, abs=1e-15)


def test_gini_one_three():
    # 1 - (0.25**2 + 0.75**2)
    assert gini_impurity((1, 3)) == pytest.approx(0.375, abs=1e-15)


def test_gini_empty_node_rejected():
    with pytest.raises(ValueError, match="empty"):
        gini_impurity((0, 0))


def test_gini_negative_counts_rejected():
    with pytest.raises(ValueError, match="negative"):
        gini_impurity((-1, 3))


def test_gini_label_wrapper():
    assert trees.gini([0, 1, 1, 0]) == pytest.approx(0.5)
    assert trees.gini([1, 1, 1]) == 0.0
    assert trees.gini([0, 1, 1, 1]) == pytest.approx(0.375)


# -- single tree -------------------------------------------------------------


def test_pure_labels_single_leaf():
    x = np.arange(8.0).reshape(4, 2)
    tree = train_tree(x, [1, 1, 1, 1])
    assert tree.is_leaf
    assert tree.predicted_class == 1
    assert tree.class_counts == (0, 4)


def test_root_threshold_is_midpoint():
    # Only the 2/3 boundary zeroes the weighted child impurity.
    x = np.array([[1.0], [2.0], [3.0], [4.0]])
    tree = train_tree(x, [0, 0, 1, 1])
    assert not tree.is_leaf
    assert tree.feature_index == 0
    assert tree.threshold == 2.5
    assert tree.left.is_leaf and tree.left.predicted_class == 0
    assert tree.right.is_leaf and tree.right.predicted_class == 1


def test_max_depth_one_gives_stump():
    rng = np.random.default_rng(5)
    x, y = _random_xy(rng, 40, 3)
    tree = train_tree(x, y, TreeConfig(max_depth=1))
    assert tree_depth(tree) <= 1


def test_stump_routes_by_threshold():
    x = np.array([[1.0], [2.0], [3.0], [4.0]])
    stump = train_tree(x, [0, 0, 1, 1], TreeConfig(max_depth=1))
    assert predict_tree(stump, (3.0,)) == 1
    # Boundary value goes left.
    assert predict_tree(stump, (2.5,)) == 0


def test_single_leaf_predicts_everywhere():
    leaf = TreeNode(class_counts=(1, 4), predicted_class=1)
    for v in (-100.0, 0.0, 3.5):
        assert predict_tree(leaf, (v, v)) == 1


def test_leaf_tie_predicts_class_zero():
    x = np.array([[0.0], [0.0]])
    tree = train_tree(x, [0, 1])
    assert tree.is_leaf
    assert tree.predicted_class == 0


def test_predict_batch_matches_scalar():
    rng = np.random.default_rng(11)
    x, y = _random_xy(rng, 50, 2)
    tree = train_tree(x, y)
    probe = rng.uniform(-2, 2, size=(20, 2))
    batch = predict_tree_batch(tree, probe)
    assert batch.tolist() == [predict_tree(tree, row) for row in probe]


def _walk(node):
    yield node
    if not node.is_leaf:
        yield from _walk(node.left)
        yield from _walk(node.right)


def test_grown_trees_respect_bounds():
    rng = np.random.default_rng(23)
    cfg = TreeConfig(max_depth=3, min_samples_split=6, min_samples_leaf=3)
    for _ in range(10):
        x, y = _random_xy(rng, 60, 3)
        tree = train_tree(x, y, cfg)
        assert tree_depth(tree) <= cfg.max_depth
        for node in _walk(tree):
            n_node = sum(node.class_counts)
            if node.is_leaf:
                assert n_node >= cfg.min_samples_leaf
            else:
                assert n_node >= cfg.min_samples_split
                left_n = sum(node.left.class_counts)
                right_n = sum(node.right.class_counts)
                assert left_n >= cfg.min_samples_leaf
                assert right_n >= cfg.min_samples_leaf
                assert left_n + right_n == n_node


def test_splits_strictly_decrease_impurity():
    rng = np.random.default_rng(31)
    for _ in range(10):
        x, y = _random_xy(rng, 50, 2)
        tree = train_tree(x, y)
        for node in _walk(tree):
            if node.is_leaf:
                continue
            parent = gini_impurity(node.class_counts)
            nl = sum(node.left.class_counts)
            nr = sum(node.right.class_counts)
            child = (
                nl * gini_impurity(node.left.class_counts)
                + nr * gini_impurity(node.right.class_counts)
            ) / (nl + nr)
            assert child < parent


def test_min_samples_split_forces_leaf():
    x = np.array([[0.0], [1.0]])
    tree = train_tree(x, [0, 1], TreeConfig(min_samples_split=3))
    assert tree.is_leaf


def test_root_split_matches_exhaustive_scan():
    rng = np.random.default_rng(47)
    for _ in range(12):
        n = int(rng.integers(4, 13))
        x = rng.uniform(0.0, 1.0, size=(n, 2))
        y = rng.integers(0, 2, size=n)
        if len(np.unique(y)) < 2:
            y[0] = 1 - y[0]
        tree = train_tree(x, y)
        oracle = best_root_split(x, y)
        ones = int(y.sum())
        node_imp = gini_impurity((n - ones, ones))
        if oracle is None or not oracle[0] < node_imp:
            assert tree.is_leaf
        else:
            assert tree.feature_index == oracle[1]
            assert tree.threshold == oracle[2]


def test_tied_gain_prefers_lowest_feature_then_threshold():
    # Both columns identical: feature 0 must win.
    x = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    tree = train_tree(x, [0, 0, 1, 1])
    assert tree.feature_index == 0
    # Symmetric labels: thresholds 0.5 and 2.5 tie, lower one wins.
    x2 = np.array([[0.0], [1.0], [2.0], [3.0]])
    tree2 = train_tree(x2, [0, 1, 1, 0], TreeConfig(max_depth=1))
    assert tree2.threshold == 0.5


def test_no_useful_split_gives_leaf():
    # Constant feature: no admissible candidate exists.
    x = np.zeros((6, 1))
    tree = train_tree(x, [0, 1, 0, 1, 0, 1])
    assert tree.is_leaf


def test_train_tree_rejections():
    with pytest.raises(ValueError, match="2-d"):
        train_tree(np.zeros(3), [0, 1, 0])
    with pytest.raises(ValueError, match="does not match"):
        train_tree(np.zeros((3, 2)), [0, 1])
    with pytest.raises(ValueError, match="no training rows"):
        train_tree(np.zeros((0, 2)), [])
    with pytest.raises(ValueError, match="0/1"):
        train_tree(np.zeros((2, 1)), [0, 2])
    with pytest.raises(ValueError, match="non-finite"):
        train_tree(np.array([[np.nan], [1.0]]), [0, 1])


def test_tree_config_validation():
    with pytest.raises(ValueError):
        TreeConfig(max_depth=0)
    with pytest.raises(ValueError):
        TreeConfig(min_samples_split=1)
    with pytest.raises(ValueError):
        TreeConfig(min_samples_leaf=0)


# -- forest ------------------------------------------------------------------


def test_degenerate_forest_equals_plain_tree():
    rng = np.random.default_rng(7)
    for _ in range(5):
        x, y = _random_xy(rng, 30, 3)
        tree = train_tree(x, y)
        forest = train_forest(
            x, y, forest_config=ForestConfig(n_trees=1, mtry=3, bootstrap=False)
        )
        assert tree_to_text(forest.trees[0]) == tree_to_text(tree)


def test_forest_bootstrap_off_all_trees_identical():
    rng = np.random.default_rng(9)
    x, y = _random_xy(rng, 30, 2)
    forest = train_forest(
        x, y, forest_config=ForestConfig(n_trees=5, mtry=2, bootstrap=False)
    )
    texts = {tree_to_text(t) for t in forest.trees}
    assert len(texts) == 1


def test_forest_seed_determinism():
    rng = np.random.default_rng(13)
    x, y = _random_xy(rng, 40, 3)
    fc = ForestConfig(n_trees=7, seed=42)
    a = train_forest(x, y, forest_config=fc)
    b = train_forest(x, y, forest_config=fc)
    assert forest_to_text(a) == forest_to_text(b)
    c = train_forest(x, y, forest_config=ForestConfig(n_trees=7, seed=43))
    assert forest_to_text(c) != forest_to_text(a)


def test_forest_threads_do_not_change_result():
    rng = np.random.default_rng(17)
    x, y = _random_xy(rng, 40, 3)
    fc = ForestConfig(n_trees=9, seed=3)
    serial = train_forest(x, y, forest_config=fc, threads=1)
    parallel = train_forest(x, y, forest_config=fc, threads=4)
    assert forest_to_text(serial) == forest_to_text(parallel)


def test_forest_pure_labels_all_leaves():
    x = np.random.default_rng(19).uniform(size=(12, 2))
    forest = train_forest(x, np.ones(12, dtype=int), forest_config=ForestConfig(n_trees=99))
    assert all(t.is_leaf for t in forest.trees)
    assert predict_forest(forest, (0.5, 0.5)) == 1


def test_default_mtry_is_ceil_sqrt_d():
    rng = np.random.default_rng(29)
    x, y = _random_xy(rng, 40, 5)
    auto = train_forest(x, y, forest_config=ForestConfig(n_trees=5, mtry=None, seed=1))
    explicit = train_forest(x, y, forest_config=ForestConfig(n_trees=5, mtry=3, seed=1))
    assert [tree_to_text(t) for t in auto.trees] == [
        tree_to_text(t) for t in explicit.trees
    ]


def _leaf_tree(cls):
    return TreeNode(class_counts=(1 - cls, cls), predicted_class=cls)


def test_forest_majority_vote():
    model = ForestModel(
        trees=(_leaf_tree(1), _leaf_tree(1), _leaf_tree(0)),
        tree_config=TreeConfig(),
        forest_config=ForestConfig(n_trees=3),
    )
    assert predict_forest(model, (0.0,)) == 1


def test_forest_vote_tie_falls_to_class_zero():
    model = ForestModel(
        trees=(_leaf_tree(1), _leaf_tree(0)),
        tree_config=TreeConfig(),
        forest_config=ForestConfig(n_trees=2),
    )
    assert predict_forest(model, (0.0,)) == 0


def test_forest_unanimous_vote():
    for cls in (0, 1):
        model = ForestModel(
            trees=tuple(_leaf_tree(cls) for _ in range(5)),
            tree_config=TreeConfig(),
            forest_config=ForestConfig(n_trees=5),
        )
        assert predict_forest(model, (0.0,)) == cls


def test_forest_batch_matches_scalar():
    rng = np.random.default_rng(37)
    x, y = _random_xy(rng, 30, 2)
    forest = train_forest(x, y, forest_config=ForestConfig(n_trees=5))
    probe = rng.uniform(-2, 2, size=(15, 2))
    batch = predict_forest_batch(forest, probe)
    assert batch.tolist() == [predict_forest(forest, row) for row in probe]


def test_forest_config_validation():
    with pytest.raises(ValueError):
        ForestConfig(n_trees=0)
    with pytest.raises(ValueError):
        ForestConfig(mtry=0)


# -- serialization -----------------------------------------------------------


def test_tree_text_round_trip():
    rng = np.random.default_rng(41)
    x, y = _random_xy(rng, 40, 3)
    tree = train_tree(x, y)
    text = tree_to_text(tree)
    back = tree_from_text(text)
    assert tree_to_text(back) == text
    probe = rng.uniform(-2, 2, size=(20, 3))
    assert predict_tree_batch(back, probe).tolist() == predict_tree_batch(
        tree, probe
    ).tolist()


def test_forest_text_round_trip():
    rng = np.random.default_rng(43)
    x, y = _random_xy(rng, 30, 2)
    forest = train_forest(
        x, y, forest_config=ForestConfig(n_trees=5, mtry=1, seed=8)
    )
    text = forest_to_text(forest)
    back = forest_from_text(text)
    assert forest_to_text(back) == text
    assert back.forest_config == forest.forest_config
    probe = rng.uniform(-2, 2, size=(10, 2))
    assert predict_forest_batch(back, probe).tolist() == predict_forest_batch(
        forest, probe
    ).tolist()


def test_serialization_rejects_foreign_documents():
    with pytest.raises(ValueError, match="qkml-tree"):
        tree_from_text('{"format": "other", "version": 1, "root": {}}')
    with pytest.raises(ValueError, match="qkml-forest"):
        forest_from_text('{"format": "qkml-forest", "version": 2, "trees": []}')
