"""File-backed storage for knowledge-base snapshots and consultation sessions.

Layout under the store root::

    kb/<digest>.dkb    immutable snapshot, canonical text, sha256-addressed
    kb/HEAD            hex digest of the current version
    sessions/<id>.session

Snapshots are content-addressed: the file name is the SHA-256 of the
canonical serialization, verified again on load, so any corruption is
detected as a digest mismatch. Knowledge-base edits write a new snapshot
and move HEAD; sessions stay pinned to the version they were created with
until explicitly rebased.

Session files use a line-oriented key-value format (see FORMATS.md). A
session's last inference result is not stored: inference is deterministic,
so a session flagged ``result computed`` is re-run on load, which is
guaranteed to reproduce the identical result.

Concurrency: one writer per store (guarded by an in-process lock); snapshot
files are immutable after write, so concurrent readers need no locking.
"""

from __future__ import annotations

import hashlib
import re
import secrets
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional

from .dsl import parse_kb, serialize_kb
from .engine import (
    CatalogMismatchError,
    InferenceResult,
    Observation,
    ObservationSource,
    WorkingMemory,
    run,
)
from .kb import Condition, Hypothesis, KnowledgeBase, Relation, Severity

__all__ = [
    "Advisory",
    "AdvisoryStore",
    "DigestMismatchError",
    "MissingSnapshotError",
    "Session",
    "StoreError",
    "UnknownSessionError",
    "cf_percent",
    "kb_digest",
    "rank_advisories",
]


class StoreError(Exception):
    pass


class MissingSnapshotError(StoreError):
    pass


class DigestMismatchError(StoreError):
    pass


class UnknownSessionError(StoreError):
    pass


def kb_digest(kb: KnowledgeBase) -> str:
    """SHA-256 of the canonical serialization; the snapshot identity."""
    return hashlib.sha256(serialize_kb(kb).encode("utf-8")).hexdigest()


def cf_percent(score: float) -> int:
    """Score as a whole percentage, rounding halves up (0.945 -> 95)."""
    percent = Decimal(repr(float(score))) * 100
    return int(percent.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class Advisory:
    """One ranked line of a drought forecast advisory."""

    hypothesis: Hypothesis
    score: float
    cf_percent: int
    mitigation: Optional[str]
    rank: int


def rank_advisories(result: InferenceResult, kb: KnowledgeBase) -> list[Advisory]:
    """Order scored hypotheses into the advisory list.

    Descending percentage first; ties broken by severity (evidence over
    moderate over none), then statement, then season, which makes the order
    total for any result.
    """
    entries = sorted(
        result.scores.items(),
        key=lambda item: (
            -cf_percent(item[1]),
            -item[0].severity.rank,
            item[0].statement,
            item[0].season.value,
        ),
    )
    advisories = []
    for rank, (hypothesis, score) in enumerate(entries, start=1):
        mitigation = None
        if hypothesis.severity in (Severity.MODERATE, Severity.EVIDENCE):
            mitigation = kb.mitigations.get(hypothesis.severity)
        advisories.append(
            Advisory(hypothesis, float(score), cf_percent(score), mitigation, rank)
        )
    return advisories


@dataclass(frozen=True)
class Session:
    """A consultation pinned to one knowledge-base snapshot."""

    id: str
    created_at: datetime
    kb_version: str
    wm: WorkingMemory
    last_result: Optional[InferenceResult] = None


_SESSION_ID_RE = re.compile(r"^[0-9a-f]{32}$")


class AdvisoryStore:
    """Embedded store rooted at a directory; see module docstring for layout."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.kb_dir = self.root / "kb"
        self.sessions_dir = self.root / "sessions"
        self.kb_dir.mkdir(parents=True, exist_ok=True)
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()

    # -- knowledge-base snapshots ------------------------------------------

    def put_kb(self, kb: KnowledgeBase) -> str:
        """Write a snapshot if absent; returns its digest. Does not move HEAD."""
        text = serialize_kb(kb)
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        path = self.kb_dir / f"{digest}.dkb"
        with self._lock:
            if not path.exists():
                path.write_text(text, encoding="utf-8")
        return digest

    def set_head(self, digest: str) -> None:
        if not (self.kb_dir / f"{digest}.dkb").exists():
            raise MissingSnapshotError(f"no snapshot {digest!r} to point HEAD at")
        with self._lock:
            (self.kb_dir / "HEAD").write_text(digest + "\n", encoding="utf-8")

    def head(self) -> Optional[str]:
        path = self.kb_dir / "HEAD"
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8").strip() or None

    def commit_kb(self, kb: KnowledgeBase) -> str:
        """Snapshot ``kb`` and move HEAD to it."""
        digest = self.put_kb(kb)
        self.set_head(digest)
        return digest

    def load_kb(self, digest: str) -> KnowledgeBase:
        path = self.kb_dir / f"{digest}.dkb"
        if not path.exists():
            raise MissingSnapshotError(f"no knowledge-base snapshot {digest!r}")
        data = path.read_bytes()
        actual = hashlib.sha256(data).hexdigest()
        if actual != digest:
            raise DigestMismatchError(
                f"snapshot {digest!r} is corrupt (content hashes to {actual!r})"
            )
        result = parse_kb(data, filename=path.name)
        if result.kb is None:
            raise StoreError(
                f"snapshot {digest!r} no longer parses: "
                + "; ".join(str(e) for e in result.errors)
            )
        return result.kb

    def head_kb(self) -> KnowledgeBase:
        digest = self.head()
        if digest is None:
            raise MissingSnapshotError("store has no current knowledge base (empty HEAD)")
        return self.load_kb(digest)

    # -- sessions -----------------------------------------------------------

    def create_session(self, kb_version: Optional[str] = None) -> Session:
        if kb_version is None:
            kb_version = self.head()
            if kb_version is None:
                raise MissingSnapshotError("cannot create a session: store has no knowledge base")
        elif not (self.kb_dir / f"{kb_version}.dkb").exists():
            raise MissingSnapshotError(f"no knowledge-base snapshot {kb_version!r}")
        session = Session(
            id=secrets.token_hex(16),
            created_at=datetime.now(timezone.utc),
            kb_version=kb_version,
            wm=WorkingMemory(),
        )
        self.save_session(session)
        return session

    def save_session(self, session: Session) -> None:
        lines = [
            "session 1",
            f"id {session.id}",
            f"created {session.created_at.isoformat()}",
            f"kb {session.kb_version}",
        ]
        for obs in session.wm:
            lines.append(
                "observation "
                f"{obs.condition.object} {obs.condition.relation.value} "
                f"{obs.condition.value} {obs.cf!r} {obs.source.value}"
            )
        lines.append(f"result {'computed' if session.last_result is not None else 'pending'}")
        path = self.sessions_dir / f"{session.id}.session"
        with self._lock:
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    def load_session(self, session_id: str) -> Session:
        path = self.sessions_dir / f"{session_id}.session"
        if not _SESSION_ID_RE.match(session_id) or not path.exists():
            raise UnknownSessionError(f"no session {session_id!r}")
        fields: dict[str, str] = {}
        observations: list[Observation] = []
        for raw in path.read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            if key == "observation":
                obj, verb, value, cf, source = rest.split(" ")
                observations.append(
                    Observation(
                        Condition(obj, Relation(verb), value),
                        float(cf),
                        ObservationSource(source),
                    )
                )
            else:
                fields[key] = rest
        try:
            session = Session(
                id=fields["id"],
                created_at=datetime.fromisoformat(fields["created"]),
                kb_version=fields["kb"],
                wm=WorkingMemory(observations),
            )
        except KeyError as missing:
            raise StoreError(f"session file {path.name} lacks field {missing}") from None
        if fields.get("result") == "computed":
            # Inference is deterministic, so re-running reproduces exactly
            # the result that was current when the session was saved.
            result = run(self.load_kb(session.kb_version), session.wm)
            session = replace(session, last_result=result)
        return session

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self.sessions_dir.glob("*.session"))

    # -- consultation workflow ----------------------------------------------

    def _check_observation(self, kb: KnowledgeBase, obs: Observation) -> None:
        indicator = kb.indicator(obs.condition.object)
        if indicator is None:
            raise CatalogMismatchError(
                f"observation references unknown indicator {obs.condition.object!r}"
            )
        if obs.condition.value not in indicator.legal_values:
            raise CatalogMismatchError(
                f"{obs.condition.value!r} is not a legal state of {obs.condition.object!r}"
            )

    def add_observation(self, session: Session, obs: Observation) -> Session:
        self._check_observation(self.load_kb(session.kb_version), obs)
        updated = replace(session, wm=session.wm.with_observation(obs), last_result=None)
        self.save_session(updated)
        return updated

    def remove_observation(self, session: Session, key: tuple[str, str]) -> Session:
        updated = replace(session, wm=session.wm.without(key), last_result=None)
        self.save_session(updated)
        return updated

    def replace_observations(self, session: Session, observations: list[Observation]) -> Session:
        kb = self.load_kb(session.kb_version)
        for obs in observations:
            self._check_observation(kb, obs)
        updated = replace(session, wm=WorkingMemory(observations), last_result=None)
        self.save_session(updated)
        return updated

    def advise(self, session: Session) -> tuple[Session, list[Advisory]]:
        """Run inference for the session and return the ranked advisories."""
        kb = self.load_kb(session.kb_version)
        result = run(kb, session.wm)
        updated = replace(session, last_result=result)
        self.save_session(updated)
        return updated, rank_advisories(result, kb)

    def rebase_session(self, session: Session) -> Session:
        """Re-pin the session to the newest knowledge base."""
        head = self.head()
        if head is None:
            raise MissingSnapshotError("store has no current knowledge base (empty HEAD)")
        updated = replace(session, kb_version=head, last_result=None)
        self.save_session(updated)
        return updated
