"""dsage: rule-based drought early-warning advisories with certainty factors."""

from .cf import CertaintyFactor, aggregate_and, aggregate_or, combine, combine_all, fire
from .engine import (
    InferenceResult,
    Observation,
    ObservationSource,
    WorkingMemory,
    explain,
    premise_cf,
    run,
)
from .dsl import ParseError, ParseResult, SourceSpan, parse_kb, serialize_kb
from .kb import (
    Condition,
    Connective,
    Hypothesis,
    Indicator,
    IndicatorCategory,
    KnowledgeBase,
    Relation,
    Rule,
    Season,
    Severity,
    catalog_size,
    delete_indicator,
    delete_rule,
    upsert_indicator,
    upsert_rule,
    validate,
)
from .seed import seed_kb, seed_text

__version__ = "0.1.0"
