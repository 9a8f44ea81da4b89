"""Tests for the forward-chaining engine: worked examples and properties."""

from __future__ import annotations

import random

import pytest

from dsage.engine import (
    CatalogMismatchError,
    Observation,
    UnknownHypothesisError,
    WorkingMemory,
    explain,
    premise_cf,
    run,
)
from dsage.kb import (
    Condition,
    Connective,
    Hypothesis,
    KnowledgeBase,
    Relation,
    Rule,
)

from genkb import oracle_scores, random_kb, random_wm

TOL = 1e-12

NO_DROUGHT = Hypothesis("No evidence of drought")


def certain_rule(rule_id: str, cf: float, obj="humidity", value="high") -> Rule:
    """A single-premise rule used to inject a fixed contribution."""
    return Rule(
        id=rule_id,
        premises=(Condition(obj, Relation.IS, value),),
        connective=Connective.AND,
        conclusion=NO_DROUGHT,
        expert_cf=cf,
    )


class TestPremiseCf:
    def test_worked_example_minimum(self, r25_kb, worked_example_wm):
        rule = r25_kb.rule("R25")
        assert premise_cf(rule, worked_example_wm) == 0.5

    def test_and_with_missing_premise_is_not_applicable(self, r25_kb, worked_example_wm):
        rule = r25_kb.rule("R25")
        wm = worked_example_wm.without(("humidity", "high"))
        assert premise_cf(rule, wm) is None

    def test_or_over_matched_subset(self, seed):
        # three premises, one unmatched; maximum over the matched pair is 0.6
        # (frozen from an exhaustive scan of all matched subsets)
        rule = Rule(
            "RX1",
            (
                Condition("humidity", Relation.IS, "high"),
                Condition("soil_moisture", Relation.IS, "low"),
                Condition("rainfall", Relation.IS, "none"),
            ),
            Connective.OR,
            NO_DROUGHT,
            0.5,
        )
        wm = WorkingMemory(
            [
                Observation(Condition("humidity", Relation.IS, "high"), 0.2),
                Observation(Condition("soil_moisture", Relation.IS, "low"), 0.6),
            ]
        )
        assert premise_cf(rule, wm) == 0.6

    def test_or_with_nothing_matched_is_not_applicable(self):
        rule = Rule(
            "RX1",
            (Condition("humidity", Relation.IS, "high"),),
            Connective.OR,
            NO_DROUGHT,
            0.5,
        )
        assert premise_cf(rule, WorkingMemory()) is None


class TestRun:
    def test_worked_example_scores_forty_percent(self, r25_kb, worked_example_wm):
        result = run(r25_kb, worked_example_wm)
        assert result.scores == {NO_DROUGHT: pytest.approx(0.40, abs=TOL)}
        assert len(result.firings) == 1
        firing = result.firings[0]
        assert firing.rule_id == "R25"
        assert firing.premise_cf == 0.5
        assert firing.contribution_cf == pytest.approx(0.40, abs=TOL)

    def test_prior_contribution_combines_to_094(self, seed):
        # Two rules concluding the same hypothesis with contributions 0.9
        # and 0.4: the second firing lifts the score to 0.94.
        kb = KnowledgeBase(
            seed.catalog,
            (
                certain_rule("R1", 0.9, "humidity", "high"),
                certain_rule("R2", 0.4, "soil_moisture", "high"),
            ),
            seed.mitigations,
        )
        wm = WorkingMemory(
            [
                Observation(Condition("humidity", Relation.IS, "high"), 1.0),
                Observation(Condition("soil_moisture", Relation.IS, "high"), 1.0),
            ]
        )
        result = run(kb, wm)
        assert result.scores[NO_DROUGHT] == pytest.approx(0.94, abs=TOL)

    def test_empty_working_memory_skips_everything(self, seed):
        result = run(seed, WorkingMemory())
        assert result.scores == {}
        assert result.firings == ()
        assert {s.rule_id for s in result.skipped} == {r.id for r in seed.rules}

    def test_full_drought_composite(self, seed):
        kb = KnowledgeBase(seed.catalog, (seed.rule("RC38"),), seed.mitigations)
        observations = [
            Observation(premise, 1.0) for premise in seed.rule("RC38").premises
        ]
        result = run(kb, WorkingMemory(observations))
        assert result.scores == {Hypothesis("Evidence of drought"): 0.68}

    def test_full_drought_composite_needs_every_premise(self, seed):
        kb = KnowledgeBase(seed.catalog, (seed.rule("RC38"),), seed.mitigations)
        premises = seed.rule("RC38").premises
        for index in range(len(premises)):
            observations = [
                Observation(p, 1.0) for i, p in enumerate(premises) if i != index
            ]
            result = run(kb, WorkingMemory(observations))
            assert result.firings == ()
            assert result.scores == {}

    def test_unknown_observation_is_a_catalog_mismatch(self, seed):
        wm = WorkingMemory([Observation(Condition("unicorn", Relation.IS, "sighted"), 1.0)])
        with pytest.raises(CatalogMismatchError):
            run(seed, wm)

    def test_illegal_state_is_a_catalog_mismatch(self, seed):
        wm = WorkingMemory([Observation(Condition("humidity", Relation.IS, "purple"), 1.0)])
        with pytest.raises(CatalogMismatchError):
            run(seed, wm)

    def test_contradictory_observations_warn(self, seed):
        wm = WorkingMemory(
            [
                Observation(Condition("soil_moisture", Relation.IS, "high"), 0.8),
                Observation(Condition("soil_moisture", Relation.IS, "low"), 0.8),
            ]
        )
        result = run(seed, wm)
        assert len(result.warnings) == 1
        assert "soil_moisture" in result.warnings[0]

    def test_determinism(self, seed, worked_example_wm):
        first = run(seed, worked_example_wm)
        second = run(seed, worked_example_wm)
        assert first == second


class TestExplain:
    def test_two_step_trace(self, seed):
        kb = KnowledgeBase(
            seed.catalog,
            (
                certain_rule("R1", 0.9, "humidity", "high"),
                certain_rule("R2", 0.4, "soil_moisture", "high"),
            ),
            seed.mitigations,
        )
        wm = WorkingMemory(
            [
                Observation(Condition("humidity", Relation.IS, "high"), 1.0),
                Observation(Condition("soil_moisture", Relation.IS, "high"), 1.0),
            ]
        )
        result = run(kb, wm)
        steps = explain(result, NO_DROUGHT)
        assert [(s.firing.contribution_cf, s.running_cf) for s in steps] == [
            (0.9, 0.9),
            (pytest.approx(0.4), pytest.approx(0.94, abs=TOL)),
        ]

    def test_single_firing_trace(self, r25_kb, worked_example_wm):
        result = run(r25_kb, worked_example_wm)
        steps = explain(result, NO_DROUGHT)
        assert len(steps) == 1
        assert steps[0].running_cf == steps[0].firing.contribution_cf

    def test_three_equal_contributions(self, seed):
        # frozen from the closed form 1 - 0.5**k: 0.5, 0.75, 0.875
        kb = KnowledgeBase(
            seed.catalog,
            (
                certain_rule("R1", 0.5, "humidity", "high"),
                certain_rule("R2", 0.5, "soil_moisture", "high"),
                certain_rule("R3", 0.5, "rainfall", "none"),
            ),
            seed.mitigations,
        )
        wm = WorkingMemory(
            [
                Observation(Condition("humidity", Relation.IS, "high"), 1.0),
                Observation(Condition("soil_moisture", Relation.IS, "high"), 1.0),
                Observation(Condition("rainfall", Relation.IS, "none"), 1.0),
            ]
        )
        result = run(kb, wm)
        steps = explain(result, NO_DROUGHT)
        assert [s.running_cf for s in steps] == [
            pytest.approx(0.5, abs=TOL),
            pytest.approx(0.75, abs=TOL),
            pytest.approx(0.875, abs=TOL),
        ]

    def test_unknown_hypothesis(self, r25_kb, worked_example_wm):
        result = run(r25_kb, worked_example_wm)
        with pytest.raises(UnknownHypothesisError):
            explain(result, Hypothesis("Evidence of drought"))


class TestProperties:
    def test_rule_storage_order_does_not_matter(self):
        rng = random.Random(99)
        for _ in range(60):
            kb = random_kb(rng)
            wm = random_wm(rng, kb)
            baseline = run(kb, wm)
            rules = list(kb.rules)
            for _ in range(5):
                rng.shuffle(rules)
                permuted = KnowledgeBase(kb.catalog, tuple(rules), kb.mitigations)
                result = run(permuted, wm)
                assert result.scores == baseline.scores
                assert result.firings == baseline.firings

    def test_score_bounds(self):
        rng = random.Random(100)
        for _ in range(60):
            kb = random_kb(rng)
            wm = random_wm(rng, kb)
            result = run(kb, wm)
            best = {}
            for firing in result.firings:
                best[firing.hypothesis] = max(
                    best.get(firing.hypothesis, 0.0), firing.contribution_cf
                )
            for hypothesis, score in result.scores.items():
                assert score <= 1.0
                assert score >= best[hypothesis] - TOL

    def test_raising_an_observation_cf_never_lowers_scores(self):
        rng = random.Random(101)
        checked = 0
        while checked < 60:
            kb = random_kb(rng)
            wm = random_wm(rng, kb)
            if len(wm) == 0:
                continue
            checked += 1
            before = run(kb, wm).scores
            target = rng.choice(list(wm))
            raised = Observation(
                target.condition,
                min(1.0, target.cf + rng.random() * (1.0 - target.cf)),
                target.source,
            )
            after = run(kb, wm.with_observation(raised)).scores
            for hypothesis, score in before.items():
                assert after[hypothesis] >= score - TOL

    def test_conservativity(self):
        rng = random.Random(102)
        for _ in range(60):
            kb = random_kb(rng)
            wm = random_wm(rng, kb)
            result = run(kb, wm)
            fired = {f.rule_id for f in result.firings}
            assert fired | {s.rule_id for s in result.skipped} == {r.id for r in kb.rules}
            for hypothesis in result.scores:
                assert any(f.hypothesis == hypothesis for f in result.firings)
            by_id = {r.id: r for r in kb.rules}
            for firing in result.firings:
                rule = by_id[firing.rule_id]
                present = [wm.get(p.key) is not None for p in rule.premises]
                if rule.connective is Connective.AND:
                    assert all(present)
                else:
                    assert any(present)

    def test_matches_independent_closed_form_oracle(self):
        rng = random.Random(103)
        for _ in range(120):
            kb = random_kb(rng, max_rules=5, max_indicators=4)
            wm = random_wm(rng, kb)
            engine = run(kb, wm).scores
            oracle = oracle_scores(kb, wm)
            assert engine.keys() == oracle.keys()
            for hypothesis, score in engine.items():
                assert score == pytest.approx(oracle[hypothesis], abs=TOL)
