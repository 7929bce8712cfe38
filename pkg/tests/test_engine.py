import numpy as np
import pytest

from dopi import engine as eng
from dopi.errors import StateError, UnknownNodeError, ValidationError
from dopi.kg import CaseRecord, build_graph
from dopi.scoring import NoiseSchedule
from tests.conftest import brute_force_best_question, make_random_graph


def _config(**kw):
    defaults = dict(
        epsilon_stop=0.9,
        max_rounds=10,
        batch_size=3,
        noise=NoiseSchedule(sigma0=0.0),
        seed=0,
    )
    defaults.update(kw)
    return eng.EngineConfig(**defaults)


def _honest_answers(batch, truth: set[str]) -> eng.AnswerSet:
    return {
        s: (eng.Answer.PRESENT if s in truth else eng.Answer.ABSENT)
        for s in batch.symptoms
    }


def _run_to_diagnosis(g, initial, config, truth):
    session = eng.start_session(g, initial, config)
    while session.state is eng.SessionState.READY_TO_ASK:
        batch = eng.next_questions(session)
        if batch is None:
            break
        eng.record_answers(session, _honest_answers(batch, truth))
    return session, eng.finalize(session)


class TestStartSession:
    def test_full_signature_finalizes_without_questions(self, uniform_graph):
        s = eng.start_session(uniform_graph, {"a1", "a2", "a3"}, _config())
        assert s.state is eng.SessionState.FINALIZED
        assert s.round_no == 0
        assert s.top_similarity() == pytest.approx(1.0)

    def test_cold_start_allowed(self, uniform_graph):
        s = eng.start_session(uniform_graph, set(), _config())
        assert s.state is eng.SessionState.READY_TO_ASK
        assert all(sim == 0.0 for _, sim in s.ranking)

    def test_shared_symptom_ties_broken_by_id(self):
        g = build_graph(
            [
                CaseRecord.make("apple", ["shared", "a_only"]),
                CaseRecord.make("berry", ["shared", "b_only"]),
            ]
        )
        s = eng.start_session(g, {"shared"}, _config())
        assert s.state is eng.SessionState.READY_TO_ASK
        assert s.ranking[0][0] == "apple"
        assert s.ranking[0][1] == pytest.approx(s.ranking[1][1])

    def test_unknown_symptom_rejected(self, uniform_graph):
        with pytest.raises(UnknownNodeError):
            eng.start_session(uniform_graph, {"nope"}, _config())


class TestNextQuestions:
    def test_batch_matches_brute_force_with_zero_noise(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config(batch_size=1))
        batch = eng.next_questions(s)
        expected = brute_force_best_question(toy_graph, {"fever"}, {"fever"})
        assert list(batch.symptoms) == [expected]

    def test_second_call_without_answers_is_state_error(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config())
        eng.next_questions(s)
        with pytest.raises(StateError):
            eng.next_questions(s)

    def test_exhausted_symptoms_force_finalize(self):
        g = build_graph([CaseRecord.make("A", ["s1", "s2"])])
        s = eng.start_session(g, {"s1"}, _config(epsilon_stop=1.0, batch_size=5))
        batch = eng.next_questions(s)
        assert set(batch.symptoms) == {"s2"}
        eng.record_answers(s, {"s2": eng.Answer.ABSENT})
        assert s.state is eng.SessionState.READY_TO_ASK
        assert eng.next_questions(s) is None
        assert s.state is eng.SessionState.FINALIZED

    def test_cold_start_falls_back_to_weight_mass(self, toy_graph):
        s = eng.start_session(toy_graph, set(), _config(batch_size=1))
        batch = eng.next_questions(s)
        m = toy_graph.weight_matrix()
        totals = {
            sym: m[toy_graph.symptom_index(sym)].sum() for sym in toy_graph.symptoms
        }
        best = sorted(totals.items(), key=lambda t: (-t[1], t[0]))[0][0]
        assert list(batch.symptoms) == [best]


class TestRecordAnswers:
    def test_completing_signature_finalizes_with_confidence_one(self, uniform_graph):
        s = eng.start_session(uniform_graph, {"a1"}, _config())
        batch = eng.next_questions(s)
        eng.record_answers(s, _honest_answers(batch, {"a1", "a2", "a3"}))
        # keep answering until the signature is complete
        while s.state is eng.SessionState.READY_TO_ASK:
            batch = eng.next_questions(s)
            if batch is None:
                break
            eng.record_answers(s, _honest_answers(batch, {"a1", "a2", "a3"}))
        assert s.state is eng.SessionState.FINALIZED
        assert s.top_similarity() == pytest.approx(1.0)

    def test_all_unsure_leaves_ranking_unchanged(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config())
        before = list(s.ranking)
        batch = eng.next_questions(s)
        eng.record_answers(s, {sym: eng.Answer.UNSURE for sym in batch.symptoms})
        assert s.ranking == before
        assert s.state is eng.SessionState.READY_TO_ASK

    def test_absent_answers_never_reasked(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config())
        batch = eng.next_questions(s)
        eng.record_answers(s, {sym: eng.Answer.ABSENT for sym in batch.symptoms})
        assert set(batch.symptoms) <= s.recorder.absent
        while s.state is eng.SessionState.READY_TO_ASK:
            nxt = eng.next_questions(s)
            if nxt is None:
                break
            assert not (set(nxt.symptoms) & set(batch.symptoms))
            eng.record_answers(s, {sym: eng.Answer.UNSURE for sym in nxt.symptoms})

    def test_answer_outside_batch_rejected_atomically(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config())
        batch = eng.next_questions(s)
        outside = next(
            sym for sym in toy_graph.symptoms
            if sym not in batch.symptoms and sym != "fever"
        )
        payload = {batch.symptoms[0]: eng.Answer.PRESENT, outside: eng.Answer.PRESENT}
        with pytest.raises(ValidationError):
            eng.record_answers(s, payload)
        assert s.state is eng.SessionState.AWAITING_ANSWERS
        assert batch.symptoms[0] not in s.recorder.present

    def test_max_rounds_forces_finalized(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config(epsilon_stop=1.0, max_rounds=2, batch_size=1))
        for _ in range(2):
            batch = eng.next_questions(s)
            if batch is None:
                break
            eng.record_answers(s, {sym: eng.Answer.ABSENT for sym in batch.symptoms})
        assert s.state is eng.SessionState.FINALIZED
        assert s.round_no <= 2


class TestFinalize:
    def test_rule_based_picks_top_ranked(self, uniform_graph):
        s, d = _run_to_diagnosis(uniform_graph, {"a1"}, _config(), {"a1", "a2", "a3"})
        assert d.disease == s.ranking[0][0]
        assert d.confidence == s.top_similarity()
        assert d.provenance == "rule_based"

    def test_proposal_polarity(self, uniform_graph):
        s, d = _run_to_diagnosis(uniform_graph, {"a1"}, _config(), {"a1", "a2", "a3"})
        ups = {x.a for x in d.update_proposal.deltas if x.delta > 0}
        downs = {x.a for x in d.update_proposal.deltas if x.delta < 0}
        assert ups == s.recorder.present
        assert downs == s.recorder.absent
        assert all(x.b == d.disease for x in d.update_proposal.deltas)

    def test_proposal_only_references_recorder(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            g = make_random_graph(rng)
            truth = {s for s in g.symptoms if rng.random() < 0.4}
            initial = set(list(truth)[:1])
            s, d = _run_to_diagnosis(g, initial, _config(epsilon_stop=0.95), truth)
            touched = {x.a for x in d.update_proposal.deltas}
            assert touched <= (s.recorder.present | s.recorder.absent)

    def test_failing_expert_falls_back(self, uniform_graph):
        class Exploding:
            provenance = "remote"

            def diagnose(self, recorder, ranking):
                raise RuntimeError("boom")

        s, _ = _run_to_diagnosis(uniform_graph, {"a1"}, _config(), {"a1", "a2", "a3"})
        s.diagnosis = None  # rerun finalization with the failing expert
        d = eng.finalize(s, Exploding())
        assert d.provenance == "fallback"
        assert d.disease == s.ranking[0][0]

    def test_expert_naming_unranked_disease_falls_back(self, uniform_graph):
        class Hallucinating:
            provenance = "remote"

            def diagnose(self, recorder, ranking):
                from dopi.adapters import ExpertReply

                return ExpertReply(disease="made_up", advice_text="x")

        s, _ = _run_to_diagnosis(uniform_graph, {"a1"}, _config(), {"a1", "a2", "a3"})
        s.diagnosis = None
        d = eng.finalize(s, Hallucinating())
        assert d.provenance == "fallback"

    def test_finalize_in_wrong_state_raises(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config())
        with pytest.raises(StateError):
            eng.finalize(s)


class TestSessionProperties:
    def test_no_symptom_proposed_twice(self):
        rng = np.random.default_rng(13)
        for trial in range(25):
            g = make_random_graph(rng)
            truth = {s for s in g.symptoms if rng.random() < 0.5}
            config = _config(
                epsilon_stop=0.99,
                noise=NoiseSchedule(sigma0=float(rng.uniform(0, 0.2))),
                seed=trial,
                batch_size=int(rng.integers(1, 4)),
            )
            session = eng.start_session(g, set(list(truth)[:1]), config)
            seen: set[str] = set()
            while session.state is eng.SessionState.READY_TO_ASK:
                batch = eng.next_questions(session)
                if batch is None:
                    break
                assert not (set(batch.symptoms) & seen)
                assert not (set(batch.symptoms) & set(session.initial_symptoms))
                seen |= set(batch.symptoms)
                eng.record_answers(session, _honest_answers(batch, truth))
            assert session.round_no <= config.max_rounds

    def test_replay_determinism(self):
        rng = np.random.default_rng(14)
        for trial in range(10):
            g = make_random_graph(rng)
            truth = {s for s in g.symptoms if rng.random() < 0.5}
            config = _config(noise=NoiseSchedule(sigma0=0.1), seed=trial, epsilon_stop=0.95)
            initial = set(list(sorted(truth))[:2])

            def run():
                session = eng.start_session(g, initial, config)
                while session.state is eng.SessionState.READY_TO_ASK:
                    batch = eng.next_questions(session)
                    if batch is None:
                        break
                    eng.record_answers(session, _honest_answers(batch, truth))
                eng.finalize(session)
                return session

            s1, s2 = run(), run()
            assert s1.snapshot() == s2.snapshot()
            assert eng.transcript_lines(s1) == eng.transcript_lines(s2)

    def test_honest_separable_session_hits_threshold(self, uniform_graph):
        config = _config(epsilon_stop=0.9)
        s, d = _run_to_diagnosis(uniform_graph, {"b1"}, config, {"b1", "b2", "b3"})
        assert d.disease == "beta"
        assert s.top_similarity() >= 0.9 or s.round_no == config.max_rounds


class TestForceFinalize:
    def test_force_finalize_from_ready(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config())
        eng.force_finalize(s)
        assert s.state is eng.SessionState.FINALIZED
        d = eng.finalize(s)
        assert d.disease == s.ranking[0][0]

    def test_force_finalize_rejected_while_awaiting(self, toy_graph):
        s = eng.start_session(toy_graph, {"fever"}, _config())
        eng.next_questions(s)
        with pytest.raises(StateError):
            eng.force_finalize(s)
