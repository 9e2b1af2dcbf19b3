from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piif import audit as A
from piif import generators as gen
from piif import io as pio
from piif.core import Allocation, Policy, ValidationError


ALL_BUILDS = {
    "career-expo": lambda: gen.career_expo()[0],
    "distinct-favorites": lambda: gen.distinct_favorites(5),
    "shared-favorites": lambda: gen.shared_favorites(6, 3),
    "mef-gap": lambda: gen.mef_gap()[0],
    "decision-maker-conflict": lambda: gen.decision_maker_conflict(0.2)[0],
    "multitask-cascade": lambda: gen.multitask_cascade(4, 10),
    "tech-and-toys": lambda: gen.tech_and_toys()[0],
}


@pytest.mark.parametrize("name", sorted(ALL_BUILDS))
def test_deterministic_bytes(name):
    first = json.dumps(pio.instance_to_dict(ALL_BUILDS[name]()))
    second = json.dumps(pio.instance_to_dict(ALL_BUILDS[name]()))
    assert first == second


class TestCareerExpo:
    def test_shape(self):
        inst, policies = gen.career_expo()
        assert [x.label for x in inst.individuals] == ["i", "j", "k", "l"]
        assert [o.label for o in inst.outcomes] == ["X", "Y", "Z"]
        assert inst.metric(0, 1) == 0 and inst.metric(3, 0) == 1
        assert set(policies) == {"top_choice", "top_choice_l_to_Y", "top_choice_l_to_Z", "uniform"}

    def test_uniform_is_if(self):
        inst, policies = gen.career_expo()
        assert A.audit_if(inst, policies["uniform"]).overall

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(0, 1, allow_nan=False), min_size=3, max_size=3)
        .map(lambda xs: tuple(sorted(xs, reverse=True)))
        .filter(lambda xs: min(xs[0] - xs[1], xs[1] - xs[2]) > 1e-6)
    )
    def test_verdicts_do_not_depend_on_levels(self, levels):
        # strictly decreasing levels (separated beyond the comparison tolerance) give the same verdicts
        inst, policies = gen.career_expo(levels)
        for name in ("top_choice", "top_choice_l_to_Y", "top_choice_l_to_Z"):
            pi = policies[name]
            assert A.audit_piif(inst, pi).overall
            assert not A.audit_if(inst, pi).overall
        assert A.audit_ef(inst, policies["top_choice"]).overall
        assert not A.audit_ef(inst, policies["top_choice_l_to_Y"]).overall


class TestFavorites:
    def test_distinct_identity_is_ef(self):
        inst = gen.distinct_favorites(4)
        assert A.audit_ef(inst, Policy.deterministic(range(4), 4)).overall

    def test_distinct_rejects_one(self):
        with pytest.raises(ValidationError):
            gen.distinct_favorites(1)

    def test_shared_blocks(self):
        inst = gen.shared_favorites(6, 3)
        assert inst.utility_matrix().sum(axis=0).tolist() == [2, 2, 2]
        assert not inst.metrics[0].dist.any()

    def test_indivisible(self):
        with pytest.raises(gen.IndivisibleSplit):
            gen.shared_favorites(7, 3)


class TestMefGap:
    def test_constant_p(self):
        inst, policies = gen.mef_gap()
        assert A.audit_if(inst, policies["constant_p"]).overall
        assert A.audit_piif(inst, policies["constant_p"]).overall


class TestDecisionMakerConflict:
    def test_objective_table(self):
        inst, f = gen.decision_maker_conflict(0.1)
        assert np.allclose(f.weights, [[0.6, 1, 0], [0.6, 0, 1]])
        assert inst.weights.tolist() == [0.5, 0.5]

    @pytest.mark.parametrize("eps", [0.0, 0.5, -0.1])
    def test_eps_range(self, eps):
        with pytest.raises(ValidationError):
            gen.decision_maker_conflict(eps)


class TestSeparation:
    @pytest.mark.parametrize("d", [1.0, 0.5, 0.0])
    def test_verdicts(self, d):
        for case in gen.if_ef_separation(d):
            assert A.audit_if(case.instance, case.policy).overall is case.expect_if, case.name
            assert A.audit_ef(case.instance, case.policy).overall is case.expect_ef, case.name
            assert case.expect_if != case.expect_ef
            assert A.audit_piif(case.instance, case.policy).overall


class TestCascade:
    def test_shares_and_utilities(self):
        inst = gen.multitask_cascade(3, 10)
        assert inst.weights.tolist() == pytest.approx([1 - 0.1 - 0.01, 0.1, 0.01])
        assert inst.utility_matrix().tolist() == [[1, 0, 0], [1, 10, 0], [1, 10, 100]]

    def test_metrics_are_zero_or_one(self):
        inst = gen.multitask_cascade(4, 10)
        for m in inst.metrics:
            assert set(np.unique(m.dist)) <= {0.0, 1.0}
        # task 0 is valued alike by everyone, task 1 separates S0 from the rest
        assert not inst.metrics[0].dist.any()
        assert inst.metrics[1](0, 1) == 1 and inst.metrics[1](1, 2) == 0

    def test_bad_params(self):
        with pytest.raises(ValidationError):
            gen.multitask_cascade(1, 10)


class TestTechAndToys:
    def test_constant_is_mt_if(self):
        inst, _ = gen.tech_and_toys()
        assert A.audit_mt_if(inst, Policy.constant(Allocation.uniform(2), 2)).overall


class TestRegistry:
    def test_generate_each(self):
        for name in gen.GENERATORS:
            inst, policies = gen.generate(gen.GeneratorSpec(name))
            assert inst.n_individuals >= 2
            for pi in policies.values():
                assert len(pi) == inst.n_individuals

    def test_params(self):
        inst, _ = gen.generate(gen.GeneratorSpec("multitask-cascade", {"n": 4, "t": 10}))
        assert inst.n_outcomes == 4

    def test_unknown(self):
        with pytest.raises(ValidationError):
            gen.generate(gen.GeneratorSpec("nope"))
