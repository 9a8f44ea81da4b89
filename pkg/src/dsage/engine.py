"""Forward-chaining evaluation of rules against observed indicator states.

``run`` takes a knowledge base and a working memory of observations and
evaluates every rule once, in ascending rule-id order:

* A conjunctive rule applies only when every premise has a matching
  observation; its premise confidence is the minimum of the matched
  observation confidences.
* A disjunctive rule applies when at least one premise matches; its
  premise confidence is the maximum over the matched subset.
* An applicable rule contributes its expert confidence times the premise
  confidence. Contributions to the same hypothesis are merged with the
  parallel-evidence combination, folded in ascending rule-id order.

Conclusions are hypotheses, not indicator states, so nothing re-enters
working memory and a single pass reaches the fixpoint. Identical inputs
produce identical results, including the order of the firing trace and
the skipped-rule list.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional

from .cf import CertaintyFactor, aggregate_and, aggregate_or, combine, fire
from .kb import Condition, Connective, Hypothesis, KnowledgeBase, Rule, rule_sort_key

__all__ = [
    "CatalogMismatchError",
    "ExplainStep",
    "InferenceError",
    "InferenceResult",
    "Observation",
    "ObservationSource",
    "RuleFiring",
    "SkippedRule",
    "UnknownHypothesisError",
    "WorkingMemory",
    "explain",
    "premise_cf",
    "run",
]


class InferenceError(Exception):
    pass


class CatalogMismatchError(InferenceError):
    """An observation references an indicator or state the catalog lacks."""


class UnknownHypothesisError(InferenceError):
    pass


class ObservationSource(str, Enum):
    USER = "user"
    DEFAULT = "default"


@dataclass(frozen=True)
class Observation:
    """One observed indicator state with the observer's confidence in it."""

    condition: Condition
    cf: float = 1.0
    source: ObservationSource = ObservationSource.USER

    def __post_init__(self) -> None:
        object.__setattr__(self, "cf", float(CertaintyFactor(self.cf)))

    @property
    def key(self) -> tuple[str, str]:
        return self.condition.key


class WorkingMemory:
    """Immutable set of observations, at most one per (object, value) key."""

    __slots__ = ("_entries",)

    def __init__(self, observations: Iterable[Observation] = ()):
        entries: dict[tuple[str, str], Observation] = {}
        for obs in observations:
            entries[obs.key] = obs  # later entries overwrite earlier ones
        self._entries = dict(sorted(entries.items()))

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(self._entries.values())

    def get(self, key: tuple[str, str]) -> Optional[Observation]:
        return self._entries.get(key)

    def with_observation(self, obs: Observation) -> "WorkingMemory":
        return WorkingMemory(list(self._entries.values()) + [obs])

    def without(self, key: tuple[str, str]) -> "WorkingMemory":
        return WorkingMemory(o for k, o in self._entries.items() if k != key)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self._entries.values())

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WorkingMemory):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:
        return hash(tuple(self._entries.items()))

    def __repr__(self) -> str:
        return f"WorkingMemory({list(self._entries.values())!r})"


@dataclass(frozen=True)
class RuleFiring:
    """Trace record of one applicable rule's contribution."""

    rule_id: str
    hypothesis: Hypothesis
    premise_cf: float
    contribution_cf: float
    matched_observations: tuple[tuple[str, str, float], ...]


@dataclass(frozen=True)
class SkippedRule:
    rule_id: str
    missing: tuple[Condition, ...]


@dataclass(frozen=True)
class ExplainStep:
    firing: RuleFiring
    running_cf: float


@dataclass(frozen=True)
class InferenceResult:
    scores: Mapping[Hypothesis, float]
    firings: tuple[RuleFiring, ...]
    skipped: tuple[SkippedRule, ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", dict(self.scores))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InferenceResult):
            return NotImplemented
        return (
            self.scores == other.scores
            and self.firings == other.firings
            and self.skipped == other.skipped
            and self.warnings == other.warnings
        )


def premise_cf(rule: Rule, wm: WorkingMemory) -> Optional[CertaintyFactor]:
    """Premise confidence of ``rule`` given ``wm``, or None if not applicable."""
    matched = [wm.get(p.key) for p in rule.premises]
    if rule.connective is Connective.AND:
        if any(obs is None for obs in matched):
            return None
        return aggregate_and(obs.cf for obs in matched if obs is not None)
    present = [obs for obs in matched if obs is not None]
    if not present:
        return None
    return aggregate_or(obs.cf for obs in present)


def _check_observations(kb: KnowledgeBase, wm: WorkingMemory) -> None:
    for obs in wm:
        indicator = kb.indicator(obs.condition.object)
        if indicator is None:
            raise CatalogMismatchError(
                f"observation references unknown indicator {obs.condition.object!r}"
            )
        if obs.condition.value not in indicator.legal_values:
            raise CatalogMismatchError(
                f"{obs.condition.value!r} is not a legal state of {obs.condition.object!r}"
            )


def _conflict_warnings(wm: WorkingMemory) -> tuple[str, ...]:
    by_object: dict[str, list[str]] = {}
    for obs in wm:
        by_object.setdefault(obs.condition.object, []).append(obs.condition.value)
    warnings = []
    for name in sorted(by_object):
        values = sorted(by_object[name])
        if len(values) > 1:
            warnings.append(
                f"conflicting observations for {name}: " + ", ".join(values)
            )
    return tuple(warnings)


def run(kb: KnowledgeBase, wm: WorkingMemory) -> InferenceResult:
    """Evaluate every rule once and score the concluded hypotheses.

    Deterministic: rules are visited in ascending id order and per-hypothesis
    contributions are folded in that same order, so equal inputs give equal
    results down to the trace. Raises :class:`CatalogMismatchError` if any
    observation does not validate against the catalog.
    """
    _check_observations(kb, wm)

    firings: list[RuleFiring] = []
    skipped: list[SkippedRule] = []
    scores: dict[Hypothesis, CertaintyFactor] = {}

    for rule in sorted(kb.rules, key=lambda r: rule_sort_key(r.id)):
        p_cf = premise_cf(rule, wm)
        if p_cf is None:
            missing = tuple(p for p in rule.premises if wm.get(p.key) is None)
            skipped.append(SkippedRule(rule.id, missing))
            continue
        contribution = fire(rule.expert_cf, p_cf)
        matched = tuple(
            (obs.condition.object, obs.condition.value, obs.cf)
            for obs in (wm.get(p.key) for p in rule.premises)
            if obs is not None
        )
        firings.append(
            RuleFiring(rule.id, rule.conclusion, float(p_cf), float(contribution), matched)
        )
        previous = scores.get(rule.conclusion, CertaintyFactor(0.0))
        scores[rule.conclusion] = combine(previous, contribution)

    return InferenceResult(
        scores={h: float(cf) for h, cf in scores.items()},
        firings=tuple(firings),
        skipped=tuple(skipped),
        warnings=_conflict_warnings(wm),
    )


def explain(result: InferenceResult, hypothesis: Hypothesis) -> list[ExplainStep]:
    """Firing-by-firing trace of how a hypothesis reached its score."""
    if hypothesis not in result.scores:
        raise UnknownHypothesisError(f"no score for hypothesis {hypothesis.display!r}")
    steps: list[ExplainStep] = []
    running = CertaintyFactor(0.0)
    for firing in result.firings:
        if firing.hypothesis == hypothesis:
            running = combine(running, firing.contribution_cf)
            steps.append(ExplainStep(firing, float(running)))
    return steps
