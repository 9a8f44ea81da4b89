"""JSON wire format shared by the CLI's ``--json`` output and the HTTP API.

Confidence values are rendered with a fixed six-decimal format (``0.400000``)
so that the textual representation of a score is identical everywhere it
appears. The standard library encoder offers no control over float
rendering, hence the small renderer here. Payload shapes are documented in
FORMATS.md and validated by ``schemas/consultation.schema.json``.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Optional

from .engine import ExplainStep, InferenceResult, SkippedRule
from .kb import Indicator, KnowledgeBase, Rule, Season

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "advisory_payload",
    "consultation_payload",
    "kb_payload",
    "render_json",
]


def render_json(value: Any, indent: int = 0) -> str:
    """Serialize to JSON with floats fixed at six decimals.

    Dict insertion order is preserved; payload builders construct dicts in
    a deterministic order, so identical payloads render byte-identically.
    """
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = ",\n".join(
            f"{inner}{json.dumps(str(k))}: {render_json(v, indent + 2)}" for k, v in value.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = ",\n".join(f"{inner}{render_json(v, indent + 2)}" for v in value)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6f}"
    return json.dumps(value, ensure_ascii=False)


def _explain_payload(steps: Iterable[ExplainStep]) -> list[dict]:
    return [
        {
            "rule_id": step.firing.rule_id,
            "premise_cf": float(step.firing.premise_cf),
            "contribution_cf": float(step.firing.contribution_cf),
            "running_cf": float(step.running_cf),
            "matched": [
                {"object": obj, "value": val, "cf": float(cf)}
                for obj, val, cf in step.firing.matched_observations
            ],
        }
        for step in steps
    ]


def advisory_payload(advisory, explain_steps: Optional[list[ExplainStep]] = None) -> dict:
    payload = {
        "rank": advisory.rank,
        "statement": advisory.hypothesis.statement,
        "display": advisory.hypothesis.display,
        "season": None
        if advisory.hypothesis.season is Season.UNSPECIFIED
        else advisory.hypothesis.season.value,
        "severity": advisory.hypothesis.severity.value,
        "cf": float(advisory.score),
        "cf_percent": advisory.cf_percent,
        "mitigation": advisory.mitigation,
    }
    if explain_steps is not None:
        payload["explain"] = _explain_payload(explain_steps)
    return payload


def _skipped_payload(skipped: Iterable[SkippedRule]) -> list[dict]:
    return [
        {
            "rule_id": entry.rule_id,
            "missing": [
                {"object": c.object, "verb": c.relation.value, "value": c.value}
                for c in entry.missing
            ],
        }
        for entry in skipped
    ]


def consultation_payload(
    advisories: list,
    result: InferenceResult,
    kb_version: Optional[str] = None,
    explain_for=None,
) -> dict:
    """The consultation result shape used by ``consult --json`` and the API.

    ``explain_for`` maps each advisory to its explain trace; when omitted the
    advisories carry no trace.
    """
    payload: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    if kb_version is not None:
        payload["kb_version"] = kb_version
    payload["advisories"] = [
        advisory_payload(a, explain_for(a) if explain_for is not None else None)
        for a in advisories
    ]
    payload["warnings"] = list(result.warnings)
    payload["skipped"] = _skipped_payload(result.skipped)
    return payload


def _indicator_payload(indicator: Indicator) -> dict:
    return {
        "name": indicator.name,
        "display_name": indicator.display_name,
        "category": indicator.category.value,
        "states": [{"verb": s.verb.value, "value": s.value} for s in indicator.states],
    }


def _rule_payload(rule: Rule) -> dict:
    return {
        "id": rule.id,
        "premises": [
            {"object": p.object, "verb": p.relation.value, "value": p.value}
            for p in rule.premises
        ],
        "connective": rule.connective.value,
        "conclusion": {
            "statement": rule.conclusion.statement,
            "season": None
            if rule.conclusion.season is Season.UNSPECIFIED
            else rule.conclusion.season.value,
            "severity": rule.conclusion.severity.value,
        },
        "cf": float(rule.expert_cf),
        "knowledge_kind": rule.knowledge_kind.value,
    }


def kb_payload(kb: KnowledgeBase, version: str) -> dict:
    return {
        "version": version,
        "catalog": [_indicator_payload(i) for i in kb.catalog],
        "rules": [_rule_payload(r) for r in kb.rules],
        "mitigations": {sev.value: text for sev, text in sorted(kb.mitigations.items(), key=lambda kv: kv[0].rank)},
    }
