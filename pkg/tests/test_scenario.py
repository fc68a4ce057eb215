"""Scenario-layer tests: realize, no-disturbance, supports."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from contextuality.qstate import (
    Distribution,
    StateVector,
    computational_basis,
    diagonal_basis,
)
from contextuality.scenario import (
    EPS_ND,
    EmpiricalModel,
    MeasurementRecipe,
    Observable,
    PossibilisticModel,
    QuantumRealization,
    Scenario,
    marginal,
    no_disturbance,
    realize,
    snap_to_rationals,
    support_of,
)

from conftest import HARDY_CONTEXTS


# ------------------------------------------------------------------ Scenario


def test_scenario_rejects_unknown_observable():
    with pytest.raises(ValueError, match="unknown observable"):
        Scenario((Observable("X", ("0", "1")),), (("X", "Y"),))


def test_scenario_rejects_duplicate_context():
    obs = (Observable("X", ("0", "1")), Observable("Y", ("0", "1")))
    with pytest.raises(ValueError, match="duplicate context"):
        Scenario(obs, (("X", "Y"), ("Y", "X")))


def test_scenario_rejects_uncovered_observable():
    obs = (Observable("X", ("0", "1")), Observable("Y", ("0", "1")))
    with pytest.raises(ValueError, match="appear in no context"):
        Scenario(obs, (("X",),))


def test_singleton_context_is_permitted():
    sc = Scenario((Observable("X", ("0", "1")),), (("X",),))
    assert sc.joint_outcomes(("X",)) == [("0",), ("1",)]


# ------------------------------------------------------------------- realize


def test_realize_hardy_tables(hardy_model):
    t = hardy_model.table
    assert t(("A_d", "B_c"))[("+", "0")] == pytest.approx(2 / 3, abs=1e-12)
    assert t(("A_d", "B_c"))[("-", "0")] == pytest.approx(0.0, abs=1e-12)
    assert t(("A_c", "B_c"))[("0", "0")] == pytest.approx(1 / 3, abs=1e-12)
    assert t(("A_c", "B_c"))[("0", "1")] == pytest.approx(0.0, abs=1e-12)
    assert t(("A_c", "B_d"))[("1", "-")] == pytest.approx(0.0, abs=1e-12)
    assert t(("A_d", "B_d"))[("+", "+")] == pytest.approx(9 / 12, abs=1e-12)
    assert t(("A_d", "B_d"))[("-", "-")] == pytest.approx(1 / 12, abs=1e-12)


def test_realize_product_state_factorizes(hardy_scenario):
    plus = 1.0 / np.sqrt(2.0)
    state = StateVector((2, 2), np.array([plus, plus, 0, 0], dtype=complex))
    qr = QuantumRealization(
        state,
        {
            "A_c": MeasurementRecipe((0,), computational_basis()),
            "A_d": MeasurementRecipe((0,), diagonal_basis()),
            "B_c": MeasurementRecipe((1,), computational_basis()),
            "B_d": MeasurementRecipe((1,), diagonal_basis()),
        },
    )
    m = realize(qr, hardy_scenario)
    for ctx in hardy_scenario.contexts:
        left = marginal(m.table(ctx), ctx, (ctx[0],))
        right = marginal(m.table(ctx), ctx, (ctx[1],))
        for key, p in m.table(ctx).items():
            assert p == pytest.approx(
                left[(key[0],)] * right[(key[1],)], abs=1e-9
            )


def test_realize_missing_recipe(hardy_scenario, hardy_realization):
    recipes = dict(hardy_realization.recipes)
    del recipes["B_d"]
    qr = QuantumRealization(hardy_realization.state, recipes)
    with pytest.raises(ValueError, match="no measurement recipe"):
        realize(qr, hardy_scenario)


def test_realize_rejects_overlapping_sites(hardy_scenario, hardy_realization):
    recipes = dict(hardy_realization.recipes)
    recipes["B_c"] = MeasurementRecipe((0,), computational_basis())
    qr = QuantumRealization(hardy_realization.state, recipes)
    with pytest.raises(ValueError, match="overlap"):
        realize(qr, hardy_scenario)


def test_realize_applies_outcome_map(hardy_scenario, hardy_realization):
    recipes = dict(hardy_realization.recipes)
    recipes["A_c"] = MeasurementRecipe(
        (0,), computational_basis(), {"0": "1", "1": "0"}
    )
    qr = QuantumRealization(hardy_realization.state, recipes)
    m = realize(qr, hardy_scenario)
    assert m.table(("A_c", "B_c"))[("1", "1")] == pytest.approx(0.0, abs=1e-12)
    assert m.table(("A_c", "B_c"))[("0", "1")] == pytest.approx(1 / 3, abs=1e-12)


# ------------------------------------------------------------ no_disturbance


def test_hardy_passes_no_disturbance(hardy_model):
    worst, records = no_disturbance(hardy_model)
    assert worst <= EPS_ND
    # every pair of contexts here shares exactly one observable
    assert len(records) == 4


def test_hardy_shared_marginal_value(hardy_model):
    ctx = ("A_c", "B_c")
    m1 = marginal(hardy_model.table(ctx), ctx, ("A_c",))
    ctx2 = ("A_c", "B_d")
    m2 = marginal(hardy_model.table(ctx2), ctx2, ("A_c",))
    assert m1[("1",)] == pytest.approx(2 / 3, abs=1e-9)
    assert m2[("1",)] == pytest.approx(2 / 3, abs=1e-9)


def test_signalling_model_reports_violation():
    obs = (
        Observable("X", ("0", "1")),
        Observable("Y", ("0", "1")),
        Observable("Z", ("0", "1")),
    )
    sc = Scenario(obs, (("X", "Y"), ("X", "Z")))
    t1 = Distribution({("0", "0"): 1.0, ("0", "1"): 0.0, ("1", "0"): 0.0, ("1", "1"): 0.0})
    t2 = Distribution({("0", "0"): 0.0, ("0", "1"): 0.0, ("1", "0"): 1.0, ("1", "1"): 0.0})
    m = EmpiricalModel(sc, {("X", "Y"): t1, ("X", "Z"): t2})
    worst, records = no_disturbance(m)
    assert worst == pytest.approx(1.0, abs=1e-12)
    assert records[0].shared == ("X",)


def test_single_context_trivially_passes():
    sc = Scenario((Observable("X", ("0", "1")),), (("X",),))
    m = EmpiricalModel(
        sc, {("X",): Distribution({("0",): 0.25, ("1",): 0.75})}
    )
    assert no_disturbance(m) == (0.0, [])


def test_randomized_realizations_pass_no_disturbance(hardy_scenario):
    rng = np.random.default_rng(23)
    for _ in range(40):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        state = StateVector((2, 2), v / np.linalg.norm(v))
        qr = QuantumRealization(
            state,
            {
                "A_c": MeasurementRecipe((0,), computational_basis()),
                "A_d": MeasurementRecipe((0,), diagonal_basis()),
                "B_c": MeasurementRecipe((1,), computational_basis()),
                "B_d": MeasurementRecipe((1,), diagonal_basis()),
            },
        )
        worst, _ = no_disturbance(realize(qr, hardy_scenario))
        assert worst <= EPS_ND


# ------------------------------------------------------------------ supports


def test_hardy_supports(hardy_model):
    p = support_of(hardy_model)
    assert p.support(("A_d", "B_c")) == frozenset(
        {("+", "0"), ("+", "1"), ("-", "1")}
    )
    assert p.support(("A_c", "B_c")) == frozenset(
        {("0", "0"), ("1", "0"), ("1", "1")}
    )
    assert p.support(("A_d", "B_d")) == frozenset(
        {("+", "+"), ("+", "-"), ("-", "+"), ("-", "-")}
    )


def test_support_respects_eps(hardy_model):
    p = support_of(hardy_model, eps=0.2)
    assert p.support(("A_d", "B_c")) == frozenset({("+", "0")})
    assert p.support(("A_c", "B_c")) == frozenset(
        {("0", "0"), ("1", "0"), ("1", "1")}
    )


def test_support_rejects_degenerate(hardy_model):
    with pytest.raises(ValueError, match="degenerate"):
        support_of(hardy_model, eps=1.0)


def test_possibilistic_rejects_foreign_tuple(hardy_scenario):
    sups = {ctx: frozenset({tuple(o[0] for o in ctx)}) for ctx in HARDY_CONTEXTS}
    sups[("A_d", "B_c")] = frozenset({("up", "0")})
    with pytest.raises(ValueError, match="foreign"):
        PossibilisticModel(hardy_scenario, sups)


# ---------------------------------------------------------------- exactness


def test_snap_to_rationals_on_hardy(hardy_model):
    snapped = snap_to_rationals(hardy_model)
    assert snapped is not None
    exact = snapped.table(("A_d", "B_d")).exact
    assert exact[("+", "+")] == Fraction(3, 4)
    assert exact[("-", "-")] == Fraction(1, 12)


def test_snap_to_rationals_refuses_irrational(hardy_scenario):
    # a state with Born probabilities cos^2/sin^2 of an awkward angle
    a = np.cos(0.7345)
    b = np.sin(0.7345)
    state = StateVector((2, 2), np.array([a, 0, b, 0], dtype=complex))
    qr = QuantumRealization(
        state,
        {
            "A_c": MeasurementRecipe((0,), computational_basis()),
            "A_d": MeasurementRecipe((0,), diagonal_basis()),
            "B_c": MeasurementRecipe((1,), computational_basis()),
            "B_d": MeasurementRecipe((1,), diagonal_basis()),
        },
    )
    assert snap_to_rationals(realize(qr, hardy_scenario)) is None


def test_empirical_model_requires_complete_tables(hardy_scenario):
    with pytest.raises(ValueError, match="missing table"):
        EmpiricalModel(hardy_scenario, {})
