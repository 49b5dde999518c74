import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bci.tables import (
    ConditionalTable,
    JointTable,
    TableError,
    VariableSpace,
    check_ci,
    condition,
    expectation,
    marginalize,
)


def space_uv():
    return VariableSpace.of(("u", 2), ("v", 3))


def test_space_rejects_duplicates_and_bad_cards():
    with pytest.raises(TableError):
        VariableSpace.of(("u", 2), ("u", 2))
    with pytest.raises(TableError):
        VariableSpace.of(("u", 0))
    with pytest.raises(TableError):
        VariableSpace.of(("u", 2.0))  # non-integer cardinality


def test_joint_requires_normalized_nonnegative():
    sp = space_uv()
    with pytest.raises(TableError):
        JointTable(sp, np.full((2, 3), 0.2))  # sums to 1.2
    bad = np.array([[0.5, 0.6, 0.0], [0.0, -0.1, 0.0]])
    with pytest.raises(TableError):
        JointTable(sp, bad)


def test_marginalize_and_condition_against_hand_sums():
    sp = space_uv()
    probs = np.array([[0.1, 0.2, 0.3], [0.15, 0.05, 0.2]])
    jt = JointTable(sp, probs)
    mu = marginalize(jt, ["u"])
    assert np.allclose(mu.probs, [0.6, 0.4])
    cond = condition(jt, {"u": 1})
    assert cond is not None
    assert cond.space.names == ("v",)
    assert np.isclose(float(cond.probs[0]), 0.15 / 0.4)
    # conditioning on a zero-mass event must signal absence, not crash
    probs0 = np.zeros((2, 3))
    probs0[0] = [0.5, 0.25, 0.25]
    assert condition(JointTable(sp, probs0), {"u": 1}) is None


def test_expectation_is_linear_probe():
    sp = space_uv()
    probs = np.array([[0.1, 0.2, 0.3], [0.15, 0.05, 0.2]])
    jt = JointTable(sp, probs)
    mean_v = expectation(jt, lambda asg: asg["v"])
    assert np.isclose(mean_v, sum(probs[u, v] * v for u in range(2) for v in range(3)))


def test_check_ci_on_product_and_coupled_tables():
    sp = space_uv()
    pu = np.array([0.3, 0.7])
    pv = np.array([0.2, 0.5, 0.3])
    jt = JointTable(sp, np.outer(pu, pv))
    assert check_ci(jt, ["u"], ["v"])
    coupled = np.array([[0.3, 0.0, 0.0], [0.0, 0.5, 0.2]])
    assert not check_ci(JointTable(sp, coupled), ["u"], ["v"])


def test_conditional_table_masks_unsupported_rows():
    sp = VariableSpace.of(("g", 2), ("w", 2))
    probs = np.array([[0.25, 0.75], [0.0, 0.0]])
    jt = JointTable(sp, probs / probs.sum())
    ct = ConditionalTable.from_joint(jt, given=["g"], target=["w"])
    assert bool(ct.support[0]) and not bool(ct.support[1])
    assert ct.prob({"g": 1}, {"w": 0}) is None
    assert np.isclose(ct.prob({"g": 0}, {"w": 1}), 0.75)
    # expand() must reproduce the joint it came from
    back = ct.expand(jt.marginalize(["g"]))
    assert np.allclose(back.probs, jt.probs, atol=1e-15)


def test_empty_space_scalar_table():
    sp = VariableSpace(())
    jt = JointTable(sp, np.array(1.0))
    assert jt.p(()) == 1.0
    assert expectation(jt, lambda asg: 7.5) == 7.5


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_marginalization_commutes(seed):
    rng = np.random.default_rng(seed)
    sp = VariableSpace.of(("p", 2), ("q", 2), ("r", 3))
    raw = rng.random((2, 2, 3))
    jt = JointTable(sp, raw / raw.sum())
    one_step = marginalize(jt, ["p"])
    two_step = marginalize(marginalize(jt, ["p", "r"]), ["p"])
    assert np.allclose(one_step.probs, two_step.probs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_condition_then_marginalize_is_bayes(seed):
    rng = np.random.default_rng(seed)
    sp = VariableSpace.of(("p", 2), ("q", 3))
    raw = rng.random((2, 3)) + 1e-6
    jt = JointTable(sp, raw / raw.sum())
    cond = condition(jt, {"p": 1})
    direct = jt.probs[1] / jt.probs[1].sum()
    assert np.allclose(cond.probs, direct, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_ci_holds_for_constructed_product_given_z(seed):
    rng = np.random.default_rng(seed)
    pz = rng.dirichlet(np.ones(2))
    pl = rng.dirichlet(np.ones(2), size=2)  # p(l | z)
    pr = rng.dirichlet(np.ones(3), size=2)  # p(r | z)
    probs = np.einsum("z,zl,zr->lrz", pz, pl, pr)
    sp = VariableSpace.of(("l", 2), ("r", 3), ("z", 2))
    jt = JointTable(sp, probs)
    assert check_ci(jt, ["l"], ["r"], ["z"])
