"""Parser and serializer for the ``.dkb`` knowledge-base text format.

The format is a small keyword language mirroring the if/then shape of the
rules themselves::

    kbformat 1

    indicator soil_moisture category meteorological
      states [is high, is low]
      alias "Soil moisture"

    rule RC5 {
      if soil_moisture is high
      then "No evidence of drought" cf 0.5
    }

    mitigation moderate "..."

``#`` starts a comment running to end of line. Files are UTF-8; the parser
accepts CRLF line endings, the serializer emits LF only. Confidence values
carry at most six fraction digits. The ``assert`` keyword is reserved.

Parsing is total: arbitrary bytes produce a (possibly long) error list,
never an exception. Errors are collected rather than raised, each with a
1-based line/column span, up to a cap of 100. Lexical and syntax errors
suppress the semantic pass, since checking names against a half-parsed
catalog would only produce noise.

``serialize_kb`` emits a canonical form (indicators sorted by name, rules
by natural id order, two-space indent) so that equal knowledge bases always
produce byte-identical text; ``parse_kb(serialize_kb(kb))`` reproduces
``kb`` whenever every confidence value is representable in six decimals.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .kb import (
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
    Severity,
    State,
    normalize_name,
    rule_sort_key,
    validate,
)

__all__ = [
    "FORMAT_VERSION",
    "MAX_ERRORS",
    "ErrorKind",
    "ParseError",
    "ParseResult",
    "SourceSpan",
    "format_cf",
    "parse_kb",
    "serialize_kb",
]

FORMAT_VERSION = 1
MAX_ERRORS = 100

_VERBS = {r.value for r in Relation}
_CATEGORIES = {c.value for c in IndicatorCategory}
_SEVERITIES = {s.value for s in Severity}
_SEASONS = {s.value for s in Season}
_KINDS = {k.value for k in KnowledgeKind}
_TOP_LEVEL = {"indicator", "rule", "mitigation"}


class ErrorKind(str, Enum):
    LEX = "lex"
    SYNTAX = "syntax"
    SEMANTIC = "semantic"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    kind: ErrorKind
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.kind.value} error: {self.message}"


@dataclass
class ParseResult:
    """Outcome of :func:`parse_kb`: a knowledge base or a list of errors."""

    kb: Optional[KnowledgeBase]
    errors: list[ParseError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


class _TooManyErrors(Exception):
    """Internal signal: the error cap was reached, stop parsing."""


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<string>"(?:\\.|[^"\\\r\n])*")
  | (?P<badstring>"(?:\\.|[^"\\\r\n])*)
  | (?P<punct>[{}\[\],])
    """,
    re.VERBOSE,
)

_STRING_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


def _unescape(lexeme: str) -> str:
    body = lexeme[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_STRING_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _escape(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")


@dataclass(frozen=True)
class _Token:
    type: str  # ident | number | string | punct | eof
    value: str
    span: SourceSpan


class _ErrorSink:
    def __init__(self, filename: str):
        self.filename = filename
        self.errors: list[ParseError] = []

    def add(self, span: SourceSpan, kind: ErrorKind, message: str) -> None:
        if len(self.errors) >= MAX_ERRORS:
            raise _TooManyErrors
        self.errors.append(ParseError(span, kind, message))


def _lex(text: str, filename: str, sink: _ErrorSink) -> list[_Token]:
    line_starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            line_starts.append(i + 1)

    def span_at(pos: int) -> SourceSpan:
        line = bisect_right(line_starts, pos)
        return SourceSpan(filename, line, pos - line_starts[line - 1] + 1)

    tokens: list[_Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            # Coalesce a run of illegal characters into one error.
            start = pos
            while pos < n and _TOKEN_RE.match(text, pos) is None:
                pos += 1
            bad = text[start:pos]
            shown = bad[:8] + ("..." if len(bad) > 8 else "")
            sink.add(span_at(start), ErrorKind.LEX, f"illegal character(s) {shown!r}")
            continue
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "badstring":
            sink.add(span_at(pos), ErrorKind.LEX, "unterminated string literal")
        elif kind == "ident" and lexeme == "assert":
            sink.add(span_at(pos), ErrorKind.SYNTAX, "'assert' is a reserved keyword")
        elif kind not in ("ws", "comment"):
            tokens.append(_Token(kind, lexeme, span_at(pos)))
        pos = m.end()

    tokens.append(_Token("eof", "", span_at(n) if n else SourceSpan(filename, 1, 1)))
    return tokens


# Raw syntax-level items; semantic checks and domain construction run after
# the whole file has been read.


@dataclass
class _RawState:
    verb: str
    value: str
    span: SourceSpan


@dataclass
class _RawIndicator:
    name: str
    category: str
    states: list[_RawState]
    alias: Optional[str]
    span: SourceSpan


@dataclass
class _RawPremise:
    keyword: str
    object: str
    verb: str
    value: str
    span: SourceSpan


@dataclass
class _RawRule:
    id: str
    premises: list[_RawPremise]
    connective: str
    statement: str
    season: Optional[str]
    kind: Optional[str]
    cf_lexeme: str
    cf_span: SourceSpan
    span: SourceSpan


@dataclass
class _RawMitigation:
    severity: str
    text: str
    span: SourceSpan


class _Parser:
    def __init__(self, tokens: list[_Token], sink: _ErrorSink):
        self.tokens = tokens
        self.pos = 0
        self.sink = sink
        self.indicators: list[_RawIndicator] = []
        self.rules: list[_RawRule] = []
        self.mitigations: list[_RawMitigation] = []
        self.version: Optional[tuple[int, SourceSpan]] = None

    def peek(self, offset: int = 0) -> _Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.type != "eof":
            self.pos += 1
        return tok

    def error(self, span: SourceSpan, message: str, kind: ErrorKind = ErrorKind.SYNTAX) -> None:
        self.sink.add(span, kind, message)

    def expect_ident(self, what: str) -> Optional[_Token]:
        tok = self.peek()
        if tok.type == "ident":
            return self.advance()
        self.error(tok.span, f"expected {what}, found {tok.value!r}" if tok.value else f"expected {what}, found end of file")
        return None

    def expect_keyword(self, keyword: str) -> bool:
        tok = self.peek()
        if tok.type == "ident" and tok.value == keyword:
            self.advance()
            return True
        found = tok.value if tok.value else "end of file"
        self.error(tok.span, f"expected {keyword!r}, found {found!r}")
        return False

    def expect_punct(self, symbol: str) -> bool:
        tok = self.peek()
        if tok.type == "punct" and tok.value == symbol:
            self.advance()
            return True
        found = tok.value if tok.value else "end of file"
        self.error(tok.span, f"expected {symbol!r}, found {found!r}")
        return False

    def expect_string(self, what: str) -> Optional[str]:
        tok = self.peek()
        if tok.type == "string":
            self.advance()
            return _unescape(tok.value)
        found = tok.value if tok.value else "end of file"
        self.error(tok.span, f"expected {what} string, found {found!r}")
        return None

    def sync_top_level(self) -> None:
        while True:
            tok = self.peek()
            if tok.type == "eof" or (tok.type == "ident" and tok.value in _TOP_LEVEL):
                return
            self.advance()

    def sync_rule_body(self) -> None:
        while True:
            tok = self.peek()
            if tok.type == "eof" or (tok.type == "ident" and tok.value in _TOP_LEVEL):
                return
            if tok.type == "punct" and tok.value == "}":
                self.advance()
                return
            self.advance()

    def parse_file(self) -> None:
        if self.peek().type == "eof":
            return  # an empty file is a valid empty knowledge base
        self.parse_header()
        while True:
            tok = self.peek()
            if tok.type == "eof":
                return
            if tok.type == "ident" and tok.value == "indicator":
                self.parse_indicator()
            elif tok.type == "ident" and tok.value == "rule":
                self.parse_rule()
            elif tok.type == "ident" and tok.value == "mitigation":
                self.parse_mitigation()
            else:
                found = tok.value if tok.value else "end of file"
                self.error(tok.span, f"expected 'indicator', 'rule', or 'mitigation', found {found!r}")
                self.advance()
                self.sync_top_level()

    def parse_header(self) -> None:
        tok = self.peek()
        if not (tok.type == "ident" and tok.value == "kbformat"):
            found = tok.value if tok.value else "end of file"
            self.error(tok.span, f"expected 'kbformat' header, found {found!r}")
            self.sync_top_level()
            return
        self.advance()
        version_tok = self.peek()
        if version_tok.type != "number" or "." in version_tok.value:
            found = version_tok.value if version_tok.value else "end of file"
            self.error(version_tok.span, f"expected integer format version, found {found!r}")
            self.sync_top_level()
            return
        self.advance()
        self.version = (int(version_tok.value), version_tok.span)

    def parse_indicator(self) -> None:
        start = self.advance().span  # 'indicator'
        name_tok = self.expect_ident("indicator name")
        if name_tok is None:
            self.sync_top_level()
            return
        if not self.expect_keyword("category"):
            self.sync_top_level()
            return
        cat_tok = self.expect_ident("category")
        if cat_tok is None or cat_tok.value not in _CATEGORIES:
            if cat_tok is not None:
                self.error(cat_tok.span, f"unknown category {cat_tok.value!r} (expected one of {sorted(_CATEGORIES)})")
            self.sync_top_level()
            return
        if not self.expect_keyword("states") or not self.expect_punct("["):
            self.sync_top_level()
            return
        states: list[_RawState] = []
        while True:
            verb_tok = self.expect_ident("state verb")
            if verb_tok is None:
                self.sync_top_level()
                return
            if verb_tok.value not in _VERBS:
                self.error(verb_tok.span, f"unknown verb {verb_tok.value!r} (expected one of {sorted(_VERBS)})")
                self.sync_top_level()
                return
            value_tok = self.expect_ident("state value")
            if value_tok is None:
                self.sync_top_level()
                return
            states.append(_RawState(verb_tok.value, value_tok.value, verb_tok.span))
            tok = self.peek()
            if tok.type == "punct" and tok.value == ",":
                self.advance()
                continue
            if tok.type == "punct" and tok.value == "]":
                self.advance()
                break
            found = tok.value if tok.value else "end of file"
            self.error(tok.span, f"expected ',' or ']' in state list, found {found!r}")
            self.sync_top_level()
            return
        alias: Optional[str] = None
        if self.peek().type == "ident" and self.peek().value == "alias":
            self.advance()
            alias = self.expect_string("alias")
            if alias is None:
                self.sync_top_level()
                return
        self.indicators.append(_RawIndicator(name_tok.value, cat_tok.value, states, alias, start))

    def parse_rule(self) -> None:
        start = self.advance().span  # 'rule'
        id_tok = self.expect_ident("rule id")
        if id_tok is None or not self.expect_punct("{"):
            self.sync_rule_body()
            return

        premises: list[_RawPremise] = []
        connective_seen: dict[str, SourceSpan] = {}
        while True:
            tok = self.peek()
            if not (tok.type == "ident" and tok.value in ("if", "and", "or")):
                break
            # A bare 'and'/'or' directly before 'then' states the connective
            # explicitly instead of introducing a premise.
            nxt = self.peek(1)
            if tok.value in ("and", "or") and nxt.type == "ident" and nxt.value == "then":
                self.advance()
                connective_seen.setdefault(tok.value, tok.span)
                break
            self.advance()
            obj_tok = self.expect_ident("indicator name")
            if obj_tok is None:
                self.sync_rule_body()
                return
            verb_tok = self.expect_ident("verb")
            if verb_tok is None:
                self.sync_rule_body()
                return
            if verb_tok.value not in _VERBS:
                self.error(verb_tok.span, f"unknown verb {verb_tok.value!r} (expected one of {sorted(_VERBS)})")
                self.sync_rule_body()
                return
            value_tok = self.expect_ident("state value")
            if value_tok is None:
                self.sync_rule_body()
                return
            if tok.value in ("and", "or"):
                connective_seen.setdefault(tok.value, tok.span)
            premises.append(_RawPremise(tok.value, obj_tok.value, verb_tok.value, value_tok.value, obj_tok.span))

        if not premises:
            self.error(start, f"rule {id_tok.value!r} has no premises")
            self.sync_rule_body()
            return
        if "and" in connective_seen and "or" in connective_seen:
            second = max(connective_seen.values(), key=lambda s: (s.line, s.column))
            self.error(second, f"rule {id_tok.value!r} mixes 'and' and 'or'; a rule uses one connective")
            self.sync_rule_body()
            return
        connective = "or" if "or" in connective_seen else "and"

        if not self.expect_keyword("then"):
            self.sync_rule_body()
            return
        statement = self.expect_string("conclusion")
        if statement is None:
            self.sync_rule_body()
            return

        season: Optional[str] = None
        if self.peek().type == "ident" and self.peek().value == "season":
            self.advance()
            season_tok = self.expect_ident("season")
            if season_tok is None or season_tok.value not in _SEASONS:
                if season_tok is not None:
                    self.error(season_tok.span, f"unknown season {season_tok.value!r} (expected one of {sorted(_SEASONS)})")
                self.sync_rule_body()
                return
            season = season_tok.value

        kind: Optional[str] = None
        if self.peek().type == "ident" and self.peek().value == "kind":
            self.advance()
            kind_tok = self.expect_ident("knowledge kind")
            if kind_tok is None or kind_tok.value not in _KINDS:
                if kind_tok is not None:
                    self.error(kind_tok.span, f"unknown knowledge kind {kind_tok.value!r} (expected one of {sorted(_KINDS)})")
                self.sync_rule_body()
                return
            kind = kind_tok.value

        if not self.expect_keyword("cf"):
            self.sync_rule_body()
            return
        cf_tok = self.peek()
        if cf_tok.type != "number":
            found = cf_tok.value if cf_tok.value else "end of file"
            self.error(cf_tok.span, f"expected confidence value, found {found!r}")
            self.sync_rule_body()
            return
        self.advance()
        if "." in cf_tok.value and len(cf_tok.value.split(".", 1)[1]) > 6:
            self.error(cf_tok.span, "confidence values carry at most 6 fraction digits")
            self.sync_rule_body()
            return
        if not self.expect_punct("}"):
            self.sync_rule_body()
            return
        self.rules.append(
            _RawRule(
                id_tok.value,
                premises,
                connective,
                statement,
                season,
                kind,
                cf_tok.value,
                cf_tok.span,
                start,
            )
        )

    def parse_mitigation(self) -> None:
        start = self.advance().span  # 'mitigation'
        sev_tok = self.expect_ident("severity")
        if sev_tok is None:
            self.sync_top_level()
            return
        if sev_tok.value not in _SEVERITIES:
            self.error(sev_tok.span, f"unknown severity {sev_tok.value!r} (expected one of {sorted(_SEVERITIES)})")
            self.sync_top_level()
            return
        text = self.expect_string("mitigation")
        if text is None:
            self.sync_top_level()
            return
        self.mitigations.append(_RawMitigation(sev_tok.value, text, start))


def _semantic_pass(parser: _Parser, sink: _ErrorSink, filename: str) -> Optional[KnowledgeBase]:
    top = SourceSpan(filename, 1, 1)
    if parser.version is None:
        if parser.indicators or parser.rules or parser.mitigations:
            sink.add(top, ErrorKind.SEMANTIC, "missing 'kbformat' header")
            return None
    else:
        version, span = parser.version
        if version != FORMAT_VERSION:
            sink.add(span, ErrorKind.SEMANTIC, f"unsupported format version {version} (this reader understands {FORMAT_VERSION})")
            return None

    errors_before = len(sink.errors)

    catalog: dict[str, Indicator] = {}
    for raw in parser.indicators:
        name = normalize_name(raw.name)
        if not name:
            sink.add(raw.span, ErrorKind.SEMANTIC, f"indicator name {raw.name!r} normalizes to nothing")
            continue
        if name in catalog:
            sink.add(raw.span, ErrorKind.SEMANTIC, f"duplicate indicator {name!r}")
            continue
        states = tuple(State(Relation(s.verb), s.value) for s in raw.states)
        if any(not state.value for state in states):
            sink.add(raw.span, ErrorKind.SEMANTIC, f"indicator {name!r} has a state value that normalizes to nothing")
            continue
        catalog[name] = Indicator(
            name=name,
            category=IndicatorCategory(raw.category),
            states=states,
            display_name=raw.alias or "",
        )

    rules: dict[str, Rule] = {}
    severity_first_span: dict[Severity, SourceSpan] = {}
    for raw in parser.rules:
        if raw.id in rules:
            sink.add(raw.span, ErrorKind.SEMANTIC, f"duplicate rule id {raw.id!r}")
            continue
        premises: list[Condition] = []
        bad = False
        seen_keys: set[tuple[str, str]] = set()
        for index, p in enumerate(raw.premises):
            condition = Condition(p.object, Relation(p.verb), p.value)
            if not condition.object or not condition.value:
                sink.add(p.span, ErrorKind.SEMANTIC, f"premise {index + 1} of rule {raw.id!r} has a name that normalizes to nothing")
                bad = True
                continue
            indicator = catalog.get(condition.object)
            if indicator is None:
                sink.add(p.span, ErrorKind.SEMANTIC, f"rule {raw.id!r} references unknown indicator {condition.object!r}")
                bad = True
            elif condition.value not in indicator.legal_values:
                sink.add(p.span, ErrorKind.SEMANTIC, f"{condition.value!r} is not a legal state of {condition.object!r} in rule {raw.id!r}")
                bad = True
            if condition.key in seen_keys:
                sink.add(p.span, ErrorKind.SEMANTIC, f"rule {raw.id!r} repeats premise {condition.object} / {condition.value}")
                bad = True
            seen_keys.add(condition.key)
            premises.append(condition)
        cf = float(raw.cf_lexeme)
        if not 0.0 <= cf <= 1.0:
            sink.add(raw.cf_span, ErrorKind.SEMANTIC, f"confidence {raw.cf_lexeme} is outside [0, 1]")
            bad = True
        if bad:
            continue
        hypothesis = Hypothesis(raw.statement, Season(raw.season) if raw.season else Season.UNSPECIFIED)
        severity_first_span.setdefault(hypothesis.severity, raw.span)
        rules[raw.id] = Rule(
            id=raw.id,
            premises=tuple(premises),
            connective=Connective(raw.connective),
            conclusion=hypothesis,
            expert_cf=cf,
            knowledge_kind=KnowledgeKind(raw.kind) if raw.kind else KnowledgeKind.DERIVATION,
        )

    mitigations: dict[Severity, str] = {}
    for raw in parser.mitigations:
        severity = Severity(raw.severity)
        if severity in mitigations:
            sink.add(raw.span, ErrorKind.SEMANTIC, f"duplicate mitigation for severity {severity.value!r}")
            continue
        mitigations[severity] = raw.text

    concluded = {rule.conclusion.severity for rule in rules.values()}
    for severity in (Severity.MODERATE, Severity.EVIDENCE):
        if severity in concluded and severity not in mitigations:
            sink.add(
                severity_first_span.get(severity, top),
                ErrorKind.SEMANTIC,
                f"a rule concludes severity {severity.value!r} but no mitigation text is defined for it",
            )

    if len(sink.errors) > errors_before:
        return None

    kb = KnowledgeBase(tuple(catalog.values()), tuple(rules.values()), mitigations)
    # Belt-and-braces: the checks above mirror kb.validate(); anything it
    # still finds is reported rather than silently returned.
    for issue in validate(kb):
        sink.add(top, ErrorKind.SEMANTIC, issue.message)
    if len(sink.errors) > errors_before:
        return None
    return kb


def parse_kb(source: Union[str, bytes], filename: str = "<string>") -> ParseResult:
    """Parse ``.dkb`` text into a knowledge base, collecting all errors.

    Never raises on malformed input; at most :data:`MAX_ERRORS` errors are
    reported. On success the returned knowledge base passes ``validate()``.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8", errors="replace")
    else:
        text = source
    # The replacement character marks undecodable bytes; it can never begin
    # a token, so it surfaces as an ordinary lex error with a span.
    sink = _ErrorSink(filename)
    try:
        tokens = _lex(text, filename, sink)
        parser = _Parser(tokens, sink)
        parser.parse_file()
        if sink.errors:
            return ParseResult(None, sink.errors)
        kb = _semantic_pass(parser, sink, filename)
        return ParseResult(kb, sink.errors)
    except _TooManyErrors:
        return ParseResult(None, sink.errors)


def parse_rule_fragment(source: str, filename: str = "<rule>") -> tuple[Optional[Rule], list[ParseError]]:
    """Parse a single ``rule ID { ... }`` block outside any knowledge base.

    Catalog checks are the caller's business (the rule is meant to be
    upserted into an existing knowledge base, which validates it); only the
    structure and the confidence range are checked here.
    """
    sink = _ErrorSink(filename)
    try:
        tokens = _lex(source, filename, sink)
        parser = _Parser(tokens, sink)
        tok = parser.peek()
        if not (tok.type == "ident" and tok.value == "rule"):
            found = tok.value if tok.value else "end of file"
            sink.add(tok.span, ErrorKind.SYNTAX, f"expected a 'rule' block, found {found!r}")
            return None, sink.errors
        parser.parse_rule()
        trailing = parser.peek()
        if trailing.type != "eof":
            sink.add(trailing.span, ErrorKind.SYNTAX, f"unexpected trailing input {trailing.value!r}")
        if sink.errors or not parser.rules:
            return None, sink.errors
        raw = parser.rules[0]
        cf = float(raw.cf_lexeme)
        if not 0.0 <= cf <= 1.0:
            sink.add(raw.cf_span, ErrorKind.SEMANTIC, f"confidence {raw.cf_lexeme} is outside [0, 1]")
            return None, sink.errors
        rule = Rule(
            id=raw.id,
            premises=tuple(Condition(p.object, Relation(p.verb), p.value) for p in raw.premises),
            connective=Connective(raw.connective),
            conclusion=Hypothesis(raw.statement, Season(raw.season) if raw.season else Season.UNSPECIFIED),
            expert_cf=cf,
            knowledge_kind=KnowledgeKind(raw.kind) if raw.kind else KnowledgeKind.DERIVATION,
        )
        return rule, []
    except _TooManyErrors:
        return None, sink.errors


def format_cf(value: float) -> str:
    """Render a confidence with at most six fraction digits, no trailing zeros."""
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    return text or "0"


def serialize_kb(kb: KnowledgeBase) -> str:
    """Render a knowledge base in canonical ``.dkb`` form.

    Deterministic: equal knowledge bases yield byte-identical text.
    """
    lines: list[str] = [f"kbformat {FORMAT_VERSION}"]

    for indicator in sorted(kb.catalog, key=lambda i: i.name):
        lines.append("")
        lines.append(f"indicator {indicator.name} category {indicator.category.value}")
        states = ", ".join(f"{s.verb.value} {s.value}" for s in indicator.states)
        lines.append(f"  states [{states}]")
        if indicator.display_name != indicator.name:
            lines.append(f'  alias "{_escape(indicator.display_name)}"')

    for rule in sorted(kb.rules, key=lambda r: rule_sort_key(r.id)):
        lines.append("")
        lines.append(f"rule {rule.id} {{")
        for index, premise in enumerate(rule.premises):
            keyword = "if" if index == 0 else rule.connective.value
            lines.append(f"  {keyword} {premise.object} {premise.relation.value} {premise.value}")
        conclusion = f'  then "{_escape(rule.conclusion.statement)}"'
        if rule.conclusion.season is not Season.UNSPECIFIED:
            conclusion += f" season {rule.conclusion.season.value}"
        if rule.knowledge_kind is not KnowledgeKind.DERIVATION:
            conclusion += f" kind {rule.knowledge_kind.value}"
        conclusion += f" cf {format_cf(rule.expert_cf)}"
        lines.append(conclusion)
        lines.append("}")

    ordered = sorted(kb.mitigations.items(), key=lambda item: item[0].rank)
    if ordered:
        lines.append("")
        for severity, text in ordered:
            lines.append(f'mitigation {severity.value} "{_escape(text)}"')

    return "\n".join(lines) + "\n"
