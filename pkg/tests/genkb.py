"""Seeded random generators for knowledge bases and observations, plus an
independent closed-form scorer used to cross-check the engine.

The oracle here deliberately reimplements the scoring semantics with plain
arithmetic (min/max/product and the closed form 1 - prod(1 - c_i)) so that
it shares no code path with the engine it checks.
"""

from __future__ import annotations

import math
import random

from dsage.engine import Observation, ObservationSource, WorkingMemory
from dsage.kb import (
    Condition,
    Connective,
    Hypothesis,
    Indicator,
    IndicatorCategory,
    KnowledgeBase,
    KnowledgeKind,
    Relation,
    Rule,
    Season,
    State,
)

WORDS = [
    "acacia", "aloe", "beetle", "breeze", "cicada", "cloud", "crane", "dew",
    "egret", "fig", "gecko", "heron", "ibis", "jackal", "kite", "locust",
    "marula", "mist", "njala", "oriole", "pan", "quail", "reed", "sorghum",
    "termite", "umbrella_thorn", "veld", "weaver", "xerophyte", "zinnia",
]

VALUES = [
    "abundant", "active", "bare", "blooming", "clear", "dense", "dry",
    "early", "flowering", "full", "high", "late", "low", "none", "scarce",
    "sighted", "thin", "wet", "wilting",
]

STATEMENTS = [
    "No evidence of drought",
    "Moderate evidence of drought",
    "Evidence of drought",
    "Severe water stress expected",
]

MITIGATIONS = {
    "moderate": "Check water reserves and stagger planting.",
    "evidence": "Activate rationing and secure fodder.",
}


def grid_cf(rng: random.Random) -> float:
    """A confidence on the 1e-6 grid, exactly representable in the text format."""
    return rng.randint(0, 1_000_000) / 1_000_000


def random_indicator(rng: random.Random, index: int) -> Indicator:
    word = rng.choice(WORDS)
    name = f"{word}_{index}"
    n_states = rng.randint(1, 3)
    values = rng.sample(VALUES, n_states)
    states = tuple(State(rng.choice(list(Relation)), value) for value in values)
    display = name.replace("_", " ").title() if rng.random() < 0.5 else ""
    return Indicator(name=name, category=rng.choice(list(IndicatorCategory)), states=states, display_name=display)


def random_hypothesis(rng: random.Random) -> Hypothesis:
    return Hypothesis(rng.choice(STATEMENTS), rng.choice(list(Season)))


def random_kb(
    rng: random.Random,
    max_rules: int = 12,
    max_indicators: int = 8,
    max_premises: int = 4,
) -> KnowledgeBase:
    indicators = [random_indicator(rng, i) for i in range(rng.randint(1, max_indicators))]
    pairs = [
        (indicator.name, state.verb, state.value)
        for indicator in indicators
        for state in indicator.states
    ]
    rules = []
    ids = rng.sample(range(1, 200), rng.randint(0, max_rules))
    for n in ids:
        count = rng.randint(1, min(max_premises, len(pairs)))
        premises = tuple(
            Condition(obj, verb, value) for obj, verb, value in rng.sample(pairs, count)
        )
        rules.append(
            Rule(
                id=f"R{n}",
                premises=premises,
                connective=rng.choice(list(Connective)),
                conclusion=random_hypothesis(rng),
                expert_cf=grid_cf(rng),
                knowledge_kind=rng.choice(list(KnowledgeKind)),
            )
        )
    mitigations = {k: v for k, v in MITIGATIONS.items()}
    return KnowledgeBase(tuple(indicators), tuple(rules), mitigations)


def random_observations(
    rng: random.Random, kb: KnowledgeBase, max_count: int = 8, grid: bool = False
) -> list[Observation]:
    pairs = [
        (indicator.name, state.verb, state.value)
        for indicator in kb.catalog
        for state in indicator.states
    ]
    if not pairs:
        return []
    count = rng.randint(0, min(max_count, len(pairs)))
    observations = []
    for obj, verb, value in rng.sample(pairs, count):
        cf = grid_cf(rng) if grid else rng.random()
        observations.append(
            Observation(Condition(obj, verb, value), cf, rng.choice(list(ObservationSource)))
        )
    return observations


def random_wm(rng: random.Random, kb: KnowledgeBase, max_count: int = 8) -> WorkingMemory:
    return WorkingMemory(random_observations(rng, kb, max_count))


def oracle_scores(kb: KnowledgeBase, wm: WorkingMemory) -> dict[Hypothesis, float]:
    """Closed-form scorer: 1 - prod(1 - r_i * p_i) over applicable rules."""
    entries = {obs.condition.key: obs.cf for obs in wm}
    contributions: dict[Hypothesis, list[float]] = {}
    for rule in kb.rules:
        cfs = [entries.get((p.object, p.value)) for p in rule.premises]
        if rule.connective is Connective.AND:
            if any(cf is None for cf in cfs):
                continue
            p = min(cf for cf in cfs if cf is not None)
        else:
            present = [cf for cf in cfs if cf is not None]
            if not present:
                continue
            p = max(present)
        contributions.setdefault(rule.conclusion, []).append(rule.expert_cf * p)
    return {
        hyp: 1.0 - math.prod(1.0 - c for c in parts)
        for hyp, parts in contributions.items()
    }
