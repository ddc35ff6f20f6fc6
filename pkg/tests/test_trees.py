"""Scenario trees: conditional operators, statistics, moment inequalities."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gexpect import (DomainError, MartingaleArray, ScenarioTree, TreeRandomVariable,
                     cond_expect, cond_expect_lower, drift_stat, expectation,
                     iid_level_tree, lift, lindeberg_stat, quadratic_characteristic,
                     random_tree, rosenthal_check, symmetric_bernoulli_family,
                     tree_from_text, tree_to_text, verify_operator_laws)
from gexpect.ambiguity import LatticeSpec

B = symmetric_bernoulli_family((0.5, 1.0))


# ---------------------------------------------------------------- oracles

def policy_enumeration_expect(tree, X):
    """Independent oracle: maximise the classical mean over every assignment
    of one member per node.  Exponential; small trees only."""
    nodes = [(k, j) for k in range(tree.depth) for j in range(tree.sizes[k])]
    choices = [range(len(tree.members[k][j])) for k, j in nodes]
    leaf_vals = lift(tree, X, tree.depth).values
    best = None
    for pick in itertools.product(*choices):
        choice = dict(zip(nodes, pick))
        probs = np.ones(1)
        for k in range(tree.depth):
            nxt = np.empty(tree.sizes[k + 1])
            for j in range(tree.sizes[k]):
                s, c = tree.child_start[k][j], tree.child_count[k][j]
                nxt[s:s + c] = probs[j] * np.asarray(tree.members[k][j][choice[(k, j)]])
            probs = nxt
        mean = float(probs @ leaf_vals)
        best = mean if best is None else max(best, mean)
    return best


def small_tree(rng):
    return random_tree(rng, max_depth=3, max_children=3, max_members=2)


# ------------------------------------------------------------ cond_expect

def test_cond_expect_nodewise_variance(bernoulli):
    tree = iid_level_tree(bernoulli, 2)
    sq = TreeRandomVariable(2, tree.inc[2][:, 0] ** 2)
    at1 = cond_expect(tree, sq, 1)
    assert np.allclose(at1.values, 1.0, atol=1e-14)


def test_cond_expect_of_measurable_variable_is_identity(bernoulli):
    tree = iid_level_tree(bernoulli, 3)
    rng = np.random.default_rng(5)
    X = TreeRandomVariable(1, rng.uniform(-1, 1, size=tree.sizes[1]))
    lifted = lift(tree, X, 3)
    back = cond_expect(tree, lifted, 1)
    assert np.allclose(back.values, X.values, atol=1e-12)


@given(st.integers(0, 2_000))
@settings(max_examples=25)
def test_aggregation_matches_policy_enumeration(seed):
    rng = np.random.default_rng(seed)
    tree = small_tree(rng)
    X = TreeRandomVariable(tree.depth,
                           rng.uniform(-2, 2, size=tree.sizes[tree.depth]))
    assert expectation(tree, X) == pytest.approx(
        policy_enumeration_expect(tree, X), abs=1e-11)
    for k in range(tree.depth):
        via_cond = expectation(tree, cond_expect(tree, X, k))
        assert via_cond == pytest.approx(expectation(tree, X), abs=1e-11)


def test_cond_expect_level_mismatch():
    tree = iid_level_tree(B, 2)
    X = TreeRandomVariable(1, np.zeros(tree.sizes[1]))
    with pytest.raises(DomainError, match="level mismatch"):
        cond_expect(tree, X, 2)


def test_lower_conditional_is_conjugate(bernoulli):
    tree = iid_level_tree(bernoulli, 2)
    sq = TreeRandomVariable(2, tree.inc[2][:, 0] ** 2)
    lower = cond_expect_lower(tree, sq, 1)
    assert np.allclose(lower.values, 0.5, atol=1e-14)


# -------------------------------------------------------------- operator laws

def test_laws_pass_on_constant_variable():
    tree = iid_level_tree(B, 2)
    c = TreeRandomVariable(2, np.full(tree.sizes[2], 2.5))
    for k in (0, 1):
        assert np.allclose(cond_expect(tree, c, k).values, 2.5, atol=1e-14)


@given(st.integers(0, 5_000))
@settings(max_examples=30)
def test_operator_laws_on_random_trees(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng)
    report = verify_operator_laws(tree, rng, samples=2)
    assert report.passed, report.violations


def test_operator_laws_accept_supplied_variables(bernoulli):
    tree = iid_level_tree(bernoulli, 3)
    sums = [np.zeros((1, 1))]
    for k in (1, 2, 3):
        sums.append(sums[k - 1][tree.parent[k]] + tree.inc[k])
    supplied = [TreeRandomVariable(3, np.maximum(sums[3][:, 0], 0.0)),
                TreeRandomVariable(2, sums[2][:, 0] ** 2)]
    report = verify_operator_laws(tree, np.random.default_rng(4), samples=1,
                                  variables=supplied)
    assert report.passed, report.violations


def test_tower_with_coarser_target():
    rng = np.random.default_rng(11)
    tree = random_tree(rng, max_depth=3)
    if tree.depth < 3:
        tree = iid_level_tree(B, 3)
    X = TreeRandomVariable(tree.depth, np.arange(tree.sizes[tree.depth], dtype=float))
    inner = cond_expect(tree, X, 1)  # level l = 1
    lifted = lift(tree, inner, tree.depth)
    back = cond_expect(tree, lifted, 2)  # E_k with k = 2 > l
    assert np.allclose(back.values, lift(tree, inner, 2).values, atol=1e-12)


# --------------------------------------------------------------- statistics

def test_lindeberg_zero_when_increments_small(bernoulli):
    tree = iid_level_tree(bernoulli, 2, scale=0.25)
    _, val = lindeberg_stat(tree, MartingaleArray(tree), eps=0.5)
    assert val == 0.0


def test_lindeberg_single_jump():
    lat = LatticeSpec(1, 1.0, (0.0,))
    parent = [None, np.array([0]), np.array([0])]
    inc = [None, np.array([[2.0]]), np.array([[0.0]])]
    members = [[[np.array([1.0])]], [[np.array([1.0])]]]
    tree = ScenarioTree(lat, parent, inc, members)
    root, val = lindeberg_stat(tree, MartingaleArray(tree), eps=1.0)
    assert val == pytest.approx(3.0, abs=1e-14)
    assert root.values[0] == pytest.approx(3.0, abs=1e-14)


def test_drift_zero_mean(bernoulli):
    tree = iid_level_tree(bernoulli, 3)
    assert drift_stat(tree, MartingaleArray(tree)) == pytest.approx(0.0, abs=1e-12)


def test_drift_single_deterministic_increment():
    lat = LatticeSpec(1, 1.0, (0.0,))
    parent = [None, np.array([0])]
    inc = [None, np.array([[-3.0]])]
    members = [[[np.array([1.0])]]]
    tree = ScenarioTree(lat, parent, inc, members)
    assert drift_stat(tree, MartingaleArray(tree)) == pytest.approx(6.0, abs=1e-14)


def test_quadratic_characteristic_iid_levels(bernoulli):
    n = 4
    tree = iid_level_tree(bernoulli, n, scale=1 / np.sqrt(n))
    Z = MartingaleArray(tree)
    assert quadratic_characteristic(tree, Z, np.array([[1.0]]), n) == pytest.approx(
        1.0, abs=1e-12)
    assert quadratic_characteristic(tree, Z, np.array([[-1.0]]), n) == pytest.approx(
        -0.5, abs=1e-12)
    assert quadratic_characteristic(tree, Z, np.array([[0.0]]), n) == 0.0


def test_quadratic_characteristic_rejects_asymmetric():
    from gexpect import AmbiguitySet, DiscreteDistribution

    lat = LatticeSpec(2, 1.0, (0.0, 0.0))
    support = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    members = [DiscreteDistribution(support, np.full(4, 0.25)),
               DiscreteDistribution(support, np.array([0.4, 0.1, 0.1, 0.4]))]
    pair = AmbiguitySet(lat, members)
    tree = iid_level_tree(pair, 2)
    with pytest.raises(DomainError, match="symmetric"):
        quadratic_characteristic(tree, MartingaleArray(tree),
                                 np.array([[1.0, 1.0], [0.0, 1.0]]), 2)


def drift_statistic_by_hand(tree):
    """Leafwise reconstruction of the drift statistic from raw members and
    increments, aggregated by policy enumeration (no cond_expect calls)."""
    leaf_total = np.zeros(tree.sizes[tree.depth])
    for k in range(1, tree.depth + 1):
        term = np.empty(tree.sizes[k - 1])
        for j in range(tree.sizes[k - 1]):
            s, c = tree.child_start[k - 1][j], tree.child_count[k - 1][j]
            block = tree.inc[k][s:s + c]
            means = [np.asarray(p) @ block for p in tree.members[k - 1][j]]
            hi = np.max(np.stack(means), axis=0)
            lo = np.min(np.stack(means), axis=0)
            term[j] = np.linalg.norm(hi) + np.linalg.norm(lo)
        vals = term
        for level in range(k - 1, tree.depth):
            vals = vals[tree.parent[level + 1]]
        leaf_total += vals
    return TreeRandomVariable(tree.depth, leaf_total)


def test_drift_matches_policy_enumeration():
    rng = np.random.default_rng(99)
    for _ in range(8):
        tree = small_tree(rng)
        stat = drift_statistic_by_hand(tree)
        oracle = policy_enumeration_expect(tree, stat)
        assert drift_stat(tree, MartingaleArray(tree)) == pytest.approx(
            oracle, abs=1e-11)


def test_rosenthal_depth_two_both_sides_by_enumeration(bernoulli):
    """Recompute both sides of the first display from raw paths and policy
    enumeration on the depth-2 zero-mean tree."""
    tree = iid_level_tree(bernoulli, 2)
    rep = rosenthal_check(tree)

    sums = [np.zeros((1, 1))]
    for k in (1, 2):
        sums.append(sums[k - 1][tree.parent[k]] + tree.inc[k])
    s1 = sums[1][:, 0][tree.parent[2]]
    s2 = sums[2][:, 0]
    rebound = (s2 - np.minimum(0.0, np.minimum(s1, s2))) ** 2
    lhs = policy_enumeration_expect(tree, TreeRandomVariable(2, rebound))

    per_node_sq = []
    for k in (1, 2):
        term = np.empty(tree.sizes[k - 1])
        for j in range(tree.sizes[k - 1]):
            s, c = tree.child_start[k - 1][j], tree.child_count[k - 1][j]
            block = tree.inc[k][s:s + c, 0] ** 2
            term[j] = max(float(np.asarray(p) @ block)
                          for p in tree.members[k - 1][j])
        per_node_sq.append(term)
    leaf = per_node_sq[0][tree.parent[1]][tree.parent[2]] + \
        per_node_sq[1][tree.parent[2]]
    rhs = policy_enumeration_expect(tree, TreeRandomVariable(2, leaf))

    assert rep.first_lhs == pytest.approx(lhs, abs=1e-12)
    assert rep.first_rhs == pytest.approx(rhs, abs=1e-12)
    assert lhs <= rhs


def test_martingale_transport_zero_mean_trees():
    rng = np.random.default_rng(21)
    for _ in range(10):
        tree = random_tree(rng, max_depth=4, zero_mean=True)
        Z = MartingaleArray(tree)
        sums = [np.zeros((1, 1))]
        for k in range(1, tree.depth + 1):
            sums.append(sums[k - 1][tree.parent[k]] + Z.level(k))
        terminal = TreeRandomVariable(tree.depth, sums[tree.depth][:, 0])
        for k in range(tree.depth + 1):
            up = cond_expect(tree, terminal, k).values
            lo = -cond_expect(tree, -terminal, k).values
            assert np.allclose(up, sums[k][:, 0], atol=1e-10)
            assert np.allclose(lo, sums[k][:, 0], atol=1e-10)


# ----------------------------------------------------------------- Rosenthal

def test_rosenthal_zero_increments():
    lat = LatticeSpec(1, 1.0, (0.0,))
    parent = [None, np.array([0]), np.array([0])]
    inc = [None, np.array([[0.0]]), np.array([[0.0]])]
    members = [[[np.array([1.0])]], [[np.array([1.0])]]]
    tree = ScenarioTree(lat, parent, inc, members)
    rep = rosenthal_check(tree)
    assert (rep.first_lhs, rep.first_rhs, rep.first_pass) == (0.0, 0.0, True)
    assert rep.second_ratio == 0.0


def test_rosenthal_depth_two_has_slack(bernoulli):
    tree = iid_level_tree(bernoulli, 2)
    rep = rosenthal_check(tree)
    assert rep.first_pass and rep.first_rhs - rep.first_lhs > 0


def test_rosenthal_precondition_violation():
    lat = LatticeSpec(1, 1.0, (0.0,))
    parent = [None, np.array([0])]
    inc = [None, np.array([[1.0]])]
    members = [[[np.array([1.0])]]]
    tree = ScenarioTree(lat, parent, inc, members)
    with pytest.raises(DomainError, match="conditional mean sign violated"):
        rosenthal_check(tree)


@given(st.integers(0, 5_000))
@settings(max_examples=30)
def test_rosenthal_first_display_never_fails(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng, max_depth=5, max_children=3, nonpositive_mean=True)
    rep = rosenthal_check(tree, p=float(rng.choice([2.0, 3.0, 4.0])))
    assert rep.first_pass
    assert np.isfinite(rep.second_ratio)


# ------------------------------------------------------------- serialization

def test_shipped_fixture_regression():
    """Frozen values pin the text format and the backward recursion."""
    import pathlib

    path = pathlib.Path(__file__).parent / "fixtures" / "tree_small.txt"
    tree = tree_from_text(path.read_text())
    assert (tree.depth, tree.node_count) == (3, 15)
    X = TreeRandomVariable(tree.depth,
                           np.sin(np.arange(tree.sizes[tree.depth], dtype=float)))
    assert expectation(tree, X) == 0.1535478039835115
    assert -expectation(tree, TreeRandomVariable(X.level, -X.values)) == \
        0.05124805800904611
    _, lind = lindeberg_stat(tree, MartingaleArray(tree), 1.5)
    assert lind == 16.247602975696996


@given(st.integers(0, 5_000))
@settings(max_examples=20)
def test_tree_text_roundtrip(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng, max_depth=4)
    text = tree_to_text(tree)
    again = tree_from_text(text)
    assert tree_to_text(again) == text
    X = TreeRandomVariable(tree.depth, np.arange(tree.sizes[tree.depth], dtype=float))
    assert expectation(tree, X) == expectation(again, X)


def test_tree_validation_rejects_bad_probs():
    lat = LatticeSpec(1, 1.0, (0.0,))
    parent = [None, np.array([0, 0])]
    inc = [None, np.array([[1.0], [-1.0]])]
    members = [[[np.array([0.7, 0.7])]]]
    with pytest.raises(DomainError, match="sum to 1"):
        ScenarioTree(lat, parent, inc, members)


def test_tree_validation_rejects_unreachable_child():
    lat = LatticeSpec(1, 1.0, (0.0,))
    parent = [None, np.array([0, 0])]
    inc = [None, np.array([[1.0], [-1.0]])]
    members = [[[np.array([1.0, 0.0])]]]
    with pytest.raises(DomainError, match="unreachable"):
        ScenarioTree(lat, parent, inc, members)
