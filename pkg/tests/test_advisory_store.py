"""Tests for session storage, snapshots, and advisory ranking."""

from __future__ import annotations

import itertools
import random

import pytest

from dsage.engine import CatalogMismatchError, InferenceResult, Observation
from dsage.kb import Condition, Hypothesis, Relation, Season
from dsage.store import (
    AdvisoryStore,
    DigestMismatchError,
    MissingSnapshotError,
    UnknownSessionError,
    cf_percent,
    kb_digest,
    rank_advisories,
)

from conftest import worked_example_observations
from genkb import random_kb, random_observations


@pytest.fixture()
def store(tmp_path, seed) -> AdvisoryStore:
    s = AdvisoryStore(tmp_path / "store")
    s.commit_kb(seed)
    return s


class TestCfPercent:
    @pytest.mark.parametrize(
        "score,expected",
        [(0.945, 95), (0.944999, 94), (0.0, 0), (1.0, 100), (0.4, 40), (0.005, 1), (0.004999, 0)],
    )
    def test_round_half_up(self, score, expected):
        assert cf_percent(score) == expected


class TestSnapshots:
    def test_round_trip(self, store, seed):
        digest = store.put_kb(seed)
        assert store.load_kb(digest) == seed
        assert digest == kb_digest(seed)

    def test_tampering_is_detected(self, store, seed):
        digest = store.put_kb(seed)
        path = store.kb_dir / f"{digest}.dkb"
        data = bytearray(path.read_bytes())
        data[10] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(DigestMismatchError):
            store.load_kb(digest)

    def test_missing_snapshot(self, store):
        with pytest.raises(MissingSnapshotError):
            store.load_kb("0" * 64)

    def test_head_moves_with_commit(self, store, seed):
        from dsage.kb import delete_rule

        first = store.head()
        second = store.commit_kb(delete_rule(seed, "RC5"))
        assert store.head() == second != first
        assert store.load_kb(first) == seed  # old snapshot still readable


class TestSessions:
    def test_create_and_add_observation(self, store):
        session = store.create_session()
        session = store.add_observation(
            session,
            Observation(Condition("umphenjane", Relation.IS, "blooming"), 0.90),
        )
        assert len(session.wm) == 1

    def test_add_then_remove_restores_working_memory(self, store):
        session = store.create_session()
        original = session.wm
        obs = Observation(Condition("umphenjane", Relation.IS, "blooming"), 0.90)
        session = store.add_observation(session, obs)
        session = store.remove_observation(session, obs.key)
        assert session.wm == original

    def test_duplicate_key_overwrites_cf(self, store):
        session = store.create_session()
        key = Condition("umphenjane", Relation.IS, "blooming")
        session = store.add_observation(session, Observation(key, 0.90))
        session = store.add_observation(session, Observation(key, 0.30))
        assert len(session.wm) == 1
        assert session.wm.get(key.key).cf == 0.30

    def test_unknown_indicator_rejected(self, store):
        session = store.create_session()
        with pytest.raises(CatalogMismatchError):
            store.add_observation(
                session, Observation(Condition("unicorn", Relation.IS, "sighted"), 1.0)
            )

    def test_unknown_session(self, store):
        with pytest.raises(UnknownSessionError):
            store.load_session("f" * 32)

    def test_session_round_trip(self, store):
        session = store.create_session()
        for obs in worked_example_observations():
            session = store.add_observation(session, obs)
        loaded = store.load_session(session.id)
        assert loaded == session

    def test_session_round_trip_with_result(self, store):
        session = store.create_session()
        for obs in worked_example_observations():
            session = store.add_observation(session, obs)
        session, _ = store.advise(session)
        assert session.last_result is not None
        loaded = store.load_session(session.id)
        assert loaded == session

    def test_many_random_sessions_round_trip(self, tmp_path):
        rng = random.Random(4242)
        store = AdvisoryStore(tmp_path / "bulk")
        sessions = []
        for _ in range(100):
            kb = random_kb(rng)
            store.commit_kb(kb)
            session = store.create_session()
            session = store.replace_observations(session, random_observations(rng, kb))
            if rng.random() < 0.5:
                session, _ = store.advise(session)
            sessions.append(session)
        for session in sessions:
            assert store.load_session(session.id) == session

    def test_sessions_stay_pinned_until_rebase(self, store, seed):
        from dsage.kb import delete_rule

        session = store.create_session()
        old = session.kb_version
        store.commit_kb(delete_rule(seed, "RC5"))
        assert store.load_session(session.id).kb_version == old
        rebased = store.rebase_session(session)
        assert rebased.kb_version == store.head() != old


class TestAdvise:
    def test_worked_example_advisory(self, tmp_path, r25_kb):
        store = AdvisoryStore(tmp_path / "r25")
        store.commit_kb(r25_kb)
        session = store.create_session()
        session = store.replace_observations(session, worked_example_observations())
        session, advisories = store.advise(session)
        assert len(advisories) == 1
        advisory = advisories[0]
        assert advisory.hypothesis == Hypothesis("No evidence of drought")
        assert advisory.cf_percent == 40
        assert advisory.rank == 1
        assert advisory.mitigation is None  # severity "none" carries no guidance

    def test_no_observations_means_no_advisories(self, store):
        session = store.create_session()
        session, advisories = store.advise(session)
        assert advisories == []

    def test_advise_is_idempotent(self, store):
        session = store.create_session()
        session = store.replace_observations(session, worked_example_observations())
        first_session, first = store.advise(session)
        second_session, second = store.advise(first_session)
        assert first == second
        assert first_session.last_result == second_session.last_result
        # replacing with the same observations and advising again also agrees
        replayed = store.replace_observations(second_session, worked_example_observations())
        _, third = store.advise(replayed)
        assert third == first

    def test_observation_edits_invalidate_the_result(self, store):
        session = store.create_session()
        session = store.replace_observations(session, worked_example_observations())
        session, _ = store.advise(session)
        assert session.last_result is not None
        touched = store.add_observation(
            session, Observation(Condition("rainfall", Relation.IS, "none"), 0.5)
        )
        assert touched.last_result is None
        removed = store.remove_observation(session, ("humidity", "high"))
        assert removed.last_result is None

    def test_mitigation_attached_for_alert_severities(self, store, seed):
        session = store.create_session()
        session = store.replace_observations(
            session, [Observation(p, 1.0) for p in seed.rule("RC38").premises]
        )
        _, advisories = store.advise(session)
        by_statement = {a.hypothesis.statement: a for a in advisories}
        drought = by_statement["Evidence of drought"]
        assert drought.mitigation == seed.mitigations[drought.hypothesis.severity]


class TestRanking:
    def test_two_scores_rank_descending(self, seed):
        result = InferenceResult(
            scores={
                Hypothesis("No evidence of drought"): 0.40,
                Hypothesis("Evidence of drought"): 0.94,
            },
            firings=(),
            skipped=(),
        )
        advisories = rank_advisories(result, seed)
        assert [(a.rank, a.cf_percent) for a in advisories] == [(1, 94), (2, 40)]

    def test_ordering_is_total_and_input_order_free(self, seed):
        hypotheses = [
            (Hypothesis("Evidence of drought"), 0.40),
            (Hypothesis("Moderate evidence of drought"), 0.40),
            (Hypothesis("No evidence of drought"), 0.40),
            (Hypothesis("No evidence of drought", Season.SPRING), 0.401),
        ]
        expected = None
        for perm in itertools.permutations(hypotheses):
            result = InferenceResult(scores=dict(perm), firings=(), skipped=())
            advisories = rank_advisories(result, seed)
            assert [a.rank for a in advisories] == [1, 2, 3, 4]
            keyed = [(a.hypothesis, a.cf_percent, a.rank) for a in advisories]
            if expected is None:
                expected = keyed
            assert keyed == expected
        # severity breaks the 40% tie: evidence, then moderate, then none
        assert [a.hypothesis.severity.value for a in advisories] == [
            "evidence", "moderate", "none", "none",
        ]
