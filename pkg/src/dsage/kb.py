"""Domain model and validation for the drought-indicator knowledge base.

A knowledge base holds three things: a catalog of natural indicators (each
with the states it may legally take), a set of advisory rules over those
indicators, and mitigation guidance keyed by drought severity.

Names and state values are normalized (lowercase, underscores) so that the
same entity spelled differently in different sources compares equal; the
original label survives as ``display_name``. The four relation verbs (is,
shows, appears, are) all express the same has-state predicate and are
interchangeable for matching, but each condition remembers the verb it was
written with.

Knowledge bases are immutable values: the edit operations return new
versions and reject any edit that would leave the result invalid.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional

__all__ = [
    "Condition",
    "Connective",
    "Hypothesis",
    "Indicator",
    "IndicatorCategory",
    "IntegrityError",
    "Issue",
    "IssueKind",
    "KnowledgeBase",
    "KnowledgeBaseError",
    "KnowledgeKind",
    "Relation",
    "Rule",
    "Season",
    "Severity",
    "State",
    "UnknownIndicatorError",
    "UnknownRuleError",
    "canonical_statement",
    "catalog_size",
    "classify_severity",
    "delete_indicator",
    "delete_rule",
    "normalize_name",
    "rule_sort_key",
    "upsert_indicator",
    "upsert_rule",
    "validate",
]


class KnowledgeBaseError(Exception):
    """Base class for knowledge-base editing errors."""


class IntegrityError(KnowledgeBaseError):
    """An edit would leave the knowledge base invalid."""

    def __init__(self, issues: list["Issue"]):
        self.issues = list(issues)
        summary = "; ".join(issue.message for issue in self.issues) or "invalid knowledge base"
        super().__init__(summary)


class UnknownRuleError(KnowledgeBaseError):
    pass


class UnknownIndicatorError(KnowledgeBaseError):
    pass


class IndicatorCategory(str, Enum):
    ANIMAL = "animal"
    PLANT = "plant"
    METEOROLOGICAL = "meteorological"
    ASTRONOMICAL = "astronomical"


class Relation(str, Enum):
    """The verbs a condition may be written with; all match interchangeably."""

    IS = "is"
    SHOWS = "shows"
    APPEARS = "appears"
    ARE = "are"


class Connective(str, Enum):
    AND = "and"
    OR = "or"


class Severity(str, Enum):
    NONE = "none"
    MODERATE = "moderate"
    EVIDENCE = "evidence"

    @property
    def rank(self) -> int:
        return _SEVERITY_RANK[self]


_SEVERITY_RANK = {Severity.NONE: 0, Severity.MODERATE: 1, Severity.EVIDENCE: 2}


class Season(str, Enum):
    SPRING = "spring"
    SUMMER = "summer"
    AUTUMN = "autumn"
    WINTER = "winter"
    UNSPECIFIED = "unspecified"


class KnowledgeKind(str, Enum):
    """Provenance tag for a rule; carried as metadata only."""

    DERIVATION = "derivation"
    FACTUAL = "factual"
    CONTROL = "control"


_NAME_SEPARATORS = re.compile(r"[\s\-]+")
_NAME_ILLEGAL = re.compile(r"[^a-z0-9_]")
_UNDERSCORE_RUNS = re.compile(r"_+")


def normalize_name(raw: str) -> str:
    """Canonicalize an indicator or state name: lowercase, underscores.

    Idempotent: normalizing an already-normalized name is the identity.
    """
    name = _NAME_SEPARATORS.sub("_", raw.strip().lower())
    name = _NAME_ILLEGAL.sub("", name)
    return _UNDERSCORE_RUNS.sub("_", name).strip("_")


def canonical_statement(raw: str) -> str:
    """Canonicalize a conclusion statement: collapsed whitespace, sentence case."""
    text = " ".join(raw.split()).lower()
    return text[:1].upper() + text[1:]


def classify_severity(statement: str) -> Severity:
    """Derive the severity class from the statement family.

    Statements outside the three known families classify as ``EVIDENCE``:
    for an early-warning output, an unrecognized conclusion must rank as an
    alert rather than silently as benign.
    """
    lowered = statement.strip().lower()
    if lowered.startswith("no evidence"):
        return Severity.NONE
    if lowered.startswith("moderate evidence"):
        return Severity.MODERATE
    return Severity.EVIDENCE


@dataclass(frozen=True)
class State:
    """One legal (verb, value) state of an indicator, e.g. ``is high``."""

    verb: Relation
    value: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", normalize_name(self.value))


@dataclass(frozen=True)
class Indicator:
    """A catalog entry for one natural sign and the states it may take."""

    name: str
    category: IndicatorCategory
    states: tuple[State, ...]
    display_name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", normalize_name(self.name))
        canonical = tuple(sorted(set(self.states), key=lambda s: (s.value, s.verb.value)))
        object.__setattr__(self, "states", canonical)
        if not self.display_name:
            object.__setattr__(self, "display_name", self.name)

    @property
    def legal_values(self) -> frozenset[str]:
        return frozenset(state.value for state in self.states)


@dataclass(frozen=True)
class Condition:
    """An object-attribute-value triple, e.g. ``soil_moisture is high``."""

    object: str
    relation: Relation
    value: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "object", normalize_name(self.object))
        object.__setattr__(self, "value", normalize_name(self.value))

    @property
    def key(self) -> tuple[str, str]:
        """Matching identity; the relation verb does not participate."""
        return (self.object, self.value)


@dataclass(frozen=True)
class Hypothesis:
    """A conclusion a rule may reach; severity derives from the statement."""

    statement: str
    season: Season = Season.UNSPECIFIED
    severity: Severity = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "statement", canonical_statement(self.statement))
        object.__setattr__(self, "severity", classify_severity(self.statement))

    @property
    def display(self) -> str:
        if self.season is Season.UNSPECIFIED:
            return self.statement
        return f"{self.statement}, onset of {self.season.value}"


@dataclass(frozen=True)
class Rule:
    """An if-premises-then-conclusion rule with an expert confidence."""

    id: str
    premises: tuple[Condition, ...]
    connective: Connective
    conclusion: Hypothesis
    expert_cf: float
    knowledge_kind: KnowledgeKind = KnowledgeKind.DERIVATION

    def __post_init__(self) -> None:
        object.__setattr__(self, "premises", tuple(self.premises))
        object.__setattr__(self, "expert_cf", float(self.expert_cf))
        # A single premise is the same rule under either connective; keep one
        # canonical form so structural equality survives a round trip.
        if len(self.premises) <= 1:
            object.__setattr__(self, "connective", Connective.AND)


def rule_sort_key(rule_id: str) -> tuple:
    """Natural ordering key: digit runs compare numerically (RC2 < RC10)."""
    parts = re.split(r"(\d+)", rule_id)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts)) + (rule_id,)


@dataclass(frozen=True, eq=True)
class KnowledgeBase:
    """Immutable catalog + rules + mitigation texts, canonically ordered."""

    catalog: tuple[Indicator, ...] = ()
    rules: tuple[Rule, ...] = ()
    mitigations: Mapping[Severity, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "catalog", tuple(sorted(self.catalog, key=lambda i: i.name)))
        object.__setattr__(self, "rules", tuple(sorted(self.rules, key=lambda r: rule_sort_key(r.id))))
        object.__setattr__(
            self,
            "mitigations",
            {Severity(k): v for k, v in dict(self.mitigations).items()},
        )

    def indicator(self, name: str) -> Optional[Indicator]:
        wanted = normalize_name(name)
        for indicator in self.catalog:
            if indicator.name == wanted:
                return indicator
        return None

    def rule(self, rule_id: str) -> Optional[Rule]:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        return None


class IssueKind(str, Enum):
    UNKNOWN_INDICATOR = "unknown_indicator"
    ILLEGAL_STATE = "illegal_state"
    DUPLICATE_RULE_ID = "duplicate_rule_id"
    CF_OUT_OF_RANGE = "cf_out_of_range"
    EMPTY_PREMISES = "empty_premises"
    DUPLICATE_PREMISE = "duplicate_premise"
    DUPLICATE_INDICATOR = "duplicate_indicator"
    EMPTY_STATES = "empty_states"
    MISSING_MITIGATION = "missing_mitigation"


@dataclass(frozen=True)
class Issue:
    """One validation finding; issues are data, not failures."""

    kind: IssueKind
    message: str
    rule_id: Optional[str] = None
    indicator: Optional[str] = None
    position: Optional[int] = None


def validate(kb: KnowledgeBase) -> list[Issue]:
    """Check every knowledge-base invariant; an empty report means valid.

    Mitigation texts are required for each severity in {moderate, evidence}
    that some rule actually concludes; a knowledge base with no such rules
    (including the empty one) needs none.
    """
    issues: list[Issue] = []

    seen_indicators: set[str] = set()
    for indicator in kb.catalog:
        if indicator.name in seen_indicators:
            issues.append(
                Issue(
                    IssueKind.DUPLICATE_INDICATOR,
                    f"duplicate indicator {indicator.name!r} in catalog",
                    indicator=indicator.name,
                )
            )
        seen_indicators.add(indicator.name)
        if not indicator.states:
            issues.append(
                Issue(
                    IssueKind.EMPTY_STATES,
                    f"indicator {indicator.name!r} declares no legal states",
                    indicator=indicator.name,
                )
            )

    by_name = {indicator.name: indicator for indicator in kb.catalog}

    seen_rules: set[str] = set()
    concluded: set[Severity] = set()
    for rule in kb.rules:
        if rule.id in seen_rules:
            issues.append(
                Issue(
                    IssueKind.DUPLICATE_RULE_ID,
                    f"duplicate rule id {rule.id!r}",
                    rule_id=rule.id,
                )
            )
        seen_rules.add(rule.id)
        concluded.add(rule.conclusion.severity)

        if not rule.premises:
            issues.append(
                Issue(
                    IssueKind.EMPTY_PREMISES,
                    f"rule {rule.id!r} has no premises",
                    rule_id=rule.id,
                )
            )
        cf = rule.expert_cf
        if not 0.0 <= cf <= 1.0:
            issues.append(
                Issue(
                    IssueKind.CF_OUT_OF_RANGE,
                    f"rule {rule.id!r} has confidence {cf!r} outside [0, 1]",
                    rule_id=rule.id,
                )
            )

        seen_keys: set[tuple[str, str]] = set()
        for index, premise in enumerate(rule.premises):
            if premise.key in seen_keys:
                issues.append(
                    Issue(
                        IssueKind.DUPLICATE_PREMISE,
                        f"rule {rule.id!r} repeats premise "
                        f"{premise.object} / {premise.value}",
                        rule_id=rule.id,
                        position=index,
                    )
                )
            seen_keys.add(premise.key)

            indicator = by_name.get(premise.object)
            if indicator is None:
                issues.append(
                    Issue(
                        IssueKind.UNKNOWN_INDICATOR,
                        f"rule {rule.id!r} premise {index + 1} references "
                        f"unknown indicator {premise.object!r}",
                        rule_id=rule.id,
                        indicator=premise.object,
                        position=index,
                    )
                )
            elif premise.value not in indicator.legal_values:
                issues.append(
                    Issue(
                        IssueKind.ILLEGAL_STATE,
                        f"rule {rule.id!r} premise {index + 1}: "
                        f"{premise.value!r} is not a legal state of {premise.object!r}",
                        rule_id=rule.id,
                        indicator=premise.object,
                        position=index,
                    )
                )

    for severity in (Severity.MODERATE, Severity.EVIDENCE):
        if severity in concluded and severity not in kb.mitigations:
            issues.append(
                Issue(
                    IssueKind.MISSING_MITIGATION,
                    f"no mitigation text for severity {severity.value!r}",
                )
            )

    return issues


def catalog_size(kb: KnowledgeBase) -> int:
    """Number of indicators in the catalog."""
    return len(kb.catalog)


def _checked(kb: KnowledgeBase) -> KnowledgeBase:
    issues = validate(kb)
    if issues:
        raise IntegrityError(issues)
    return kb


def upsert_rule(kb: KnowledgeBase, rule: Rule) -> KnowledgeBase:
    """Insert or replace a rule; rejects an edit that breaks the KB."""
    rules = tuple(r for r in kb.rules if r.id != rule.id) + (rule,)
    return _checked(replace(kb, rules=rules))


def delete_rule(kb: KnowledgeBase, rule_id: str) -> KnowledgeBase:
    if kb.rule(rule_id) is None:
        raise UnknownRuleError(f"no rule {rule_id!r} in knowledge base")
    rules = tuple(r for r in kb.rules if r.id != rule_id)
    return _checked(replace(kb, rules=rules))


def upsert_indicator(kb: KnowledgeBase, indicator: Indicator) -> KnowledgeBase:
    catalog = tuple(i for i in kb.catalog if i.name != indicator.name) + (indicator,)
    return _checked(replace(kb, catalog=catalog))


def delete_indicator(kb: KnowledgeBase, name: str) -> KnowledgeBase:
    """Remove an indicator; fails if any rule still references it."""
    wanted = normalize_name(name)
    if kb.indicator(wanted) is None:
        raise UnknownIndicatorError(f"no indicator {wanted!r} in catalog")
    referencing = sorted(
        {rule.id for rule in kb.rules if any(p.object == wanted for p in rule.premises)},
        key=rule_sort_key,
    )
    if referencing:
        raise IntegrityError(
            [
                Issue(
                    IssueKind.UNKNOWN_INDICATOR,
                    f"indicator {wanted!r} is still referenced by rule(s) "
                    f"{', '.join(referencing)}",
                    indicator=wanted,
                )
            ]
        )
    catalog = tuple(i for i in kb.catalog if i.name != wanted)
    return _checked(replace(kb, catalog=catalog))


def set_mitigation(kb: KnowledgeBase, severity: Severity, text: str) -> KnowledgeBase:
    mitigations = dict(kb.mitigations)
    mitigations[severity] = text
    return _checked(replace(kb, mitigations=mitigations))


def used_severities(kb: KnowledgeBase) -> set[Severity]:
    return {rule.conclusion.severity for rule in kb.rules}
