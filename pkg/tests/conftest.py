from __future__ import annotations

import pytest

from dsage.engine import Observation, WorkingMemory
from dsage.kb import Condition, KnowledgeBase, Relation
from dsage.seed import seed_kb


@pytest.fixture(scope="session")
def seed() -> KnowledgeBase:
    return seed_kb()


@pytest.fixture(scope="session")
def r25_kb(seed: KnowledgeBase) -> KnowledgeBase:
    """The seed catalog with the rule set reduced to the composite R25."""
    r25 = seed.rule("R25")
    assert r25 is not None
    return KnowledgeBase(seed.catalog, (r25,), seed.mitigations)


def worked_example_observations() -> list[Observation]:
    """The four user inputs of the worked scoring example: blooming tree at
    0.90, high soil moisture at 0.50, bird sighted at 0.80, high humidity
    at 0.70."""
    return [
        Observation(Condition("umphenjane", Relation.IS, "blooming"), 0.90),
        Observation(Condition("soil_moisture", Relation.IS, "high"), 0.50),
        Observation(Condition("phezukomkhono", Relation.IS, "sighted"), 0.80),
        Observation(Condition("humidity", Relation.IS, "high"), 0.70),
    ]


@pytest.fixture()
def worked_example_wm() -> WorkingMemory:
    return WorkingMemory(worked_example_observations())
