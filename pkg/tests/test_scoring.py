import numpy as np
import pytest

from dopi.errors import DataError, UnknownNodeError
from dopi.kg import KnowledgeGraph
from dopi.scoring import (
    NoiseSchedule,
    cosine_similarity,
    patient_vector,
    perturb_scores,
    rank_diseases,
    score_symptoms,
    select_candidates,
)
from tests.conftest import cosine_oracle, make_random_graph, similarity_oracle


class TestPatientVector:
    def test_present_marks_one(self):
        g = KnowledgeGraph(["s1", "s2", "s3"], ["A"], {("s1", "A"): 1.0})
        assert patient_vector({"s1"}, g).tolist() == [1.0, 0.0, 0.0]

    def test_empty_gives_zero_vector(self, toy_graph):
        assert patient_vector(set(), toy_graph).sum() == 0.0

    def test_absent_stays_zero(self):
        g = KnowledgeGraph(["s1", "s2", "s3"], ["A"], {("s1", "A"): 1.0})
        # absent symptoms are simply not in the present set
        assert patient_vector({"s1", "s3"}, g).tolist() == [1.0, 0.0, 1.0]

    def test_unknown_symptom_named(self, toy_graph):
        with pytest.raises(UnknownNodeError, match="mystery"):
            patient_vector({"mystery"}, toy_graph)


class TestCosineSimilarity:
    def test_parallel(self):
        assert cosine_similarity(np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 0.7])) == 0.0

    def test_spec_value(self):
        got = cosine_similarity(np.array([1.0, 1.0, 0.0]), np.array([0.5, 0.5, 0.5]))
        assert got == pytest.approx(0.81650, abs=1e-5)

    def test_zero_vector_defined_as_zero(self):
        assert cosine_similarity(np.zeros(3), np.ones(3)) == 0.0
        assert cosine_similarity(np.ones(3), np.zeros(3)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            cosine_similarity(np.ones(2), np.ones(3))

    def test_against_fsum_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            n = int(rng.integers(1, 30))
            x = rng.random(n)
            y = rng.random(n)
            assert cosine_similarity(x, y) == pytest.approx(
                cosine_oracle(x.tolist(), y.tolist()), abs=1e-9
            )

    def test_bounded_for_non_negative_vectors(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            n = int(rng.integers(1, 20))
            v = cosine_similarity(rng.random(n), rng.random(n))
            assert 0.0 <= v <= 1.0


class TestRankDiseases:
    def test_exact_match_is_top_with_similarity_one(self, uniform_graph):
        p = patient_vector({"a1", "a2", "a3"}, uniform_graph)
        ranking = rank_diseases(uniform_graph, p)
        assert ranking[0] == ("alpha", pytest.approx(1.0))

    def test_zero_vector_ranks_all_zero_in_id_order(self, uniform_graph):
        ranking = rank_diseases(uniform_graph, patient_vector(set(), uniform_graph))
        assert [d for d, _ in ranking] == ["alpha", "beta", "gamma"]
        assert all(s == 0.0 for _, s in ranking)

    def test_matches_brute_force_sort(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            g = make_random_graph(rng)
            present = {
                s for s in g.symptoms if rng.random() < 0.4
            }
            ranking = rank_diseases(g, patient_vector(present, g))
            oracle = similarity_oracle(g, present)
            expected = sorted(
                ((d, min(1.0, max(0.0, v))) for d, v in oracle.items()),
                key=lambda t: (-t[1], t[0]),
            )
            assert [d for d, _ in ranking] == [d for d, _ in expected]
            for (d1, s1), (d2, s2) in zip(ranking, expected):
                assert s1 == pytest.approx(s2, abs=1e-12)

    def test_tie_break_by_id(self):
        g = KnowledgeGraph(
            ["s1"], ["b_disease", "a_disease"], {("s1", "a_disease"): 0.5, ("s1", "b_disease"): 0.5}
        )
        ranking = rank_diseases(g, patient_vector({"s1"}, g))
        assert [d for d, _ in ranking] == ["a_disease", "b_disease"]

    def test_common_weight_scale_leaves_argmax_unchanged(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            g = make_random_graph(rng)
            present = {s for s in g.symptoms if rng.random() < 0.5}
            top1 = rank_diseases(g, patient_vector(present, g))[0][0]
            scaled = KnowledgeGraph(
                g.symptoms,
                g.diseases,
                {k: w * 0.37 for k, w in g.sd_weights.items()},
            )
            top2 = rank_diseases(scaled, patient_vector(present, scaled))[0][0]
            assert top1 == top2


class TestScoreSymptoms:
    def test_single_disease_single_term(self):
        g = KnowledgeGraph(["j", "k"], ["A"], {("j", "A"): 0.6, ("k", "A"): 0.1})
        scores = score_symptoms(g, [("A", 1.0)], known={"k"})
        assert scores == {"j": pytest.approx(0.6)}

    def test_hand_evaluated_weighted_sum(self):
        g = KnowledgeGraph(
            ["j"], ["A", "B"], {("j", "A"): 0.5, ("j", "B"): 1.0}
        )
        scores = score_symptoms(g, [("A", 0.8), ("B", 0.2)], known=set())
        assert scores["j"] == pytest.approx(0.5 * 0.8 + 1.0 * 0.2)

    def test_known_symptoms_excluded(self, toy_graph):
        from dopi.scoring import rank_diseases as rd

        p = patient_vector({"fever"}, toy_graph)
        ranking = rd(toy_graph, p)
        scores = score_symptoms(
            toy_graph, ranking, known={"fever", "cough", "sneeze"}
        )
        assert "fever" not in scores
        assert "cough" not in scores
        assert "sneeze" not in scores
        assert set(scores) == set(toy_graph.symptoms) - {"fever", "cough", "sneeze"}

    def test_top_n_restricts_the_sum(self):
        g = KnowledgeGraph(
            ["j"], ["A", "B"], {("j", "A"): 0.5, ("j", "B"): 1.0}
        )
        ranking = [("A", 0.8), ("B", 0.2)]
        only_top = score_symptoms(g, ranking, known=set(), top_n_diseases=1)
        assert only_top["j"] == pytest.approx(0.5 * 0.8)


class TestPerturbScores:
    def test_zero_sigma_is_identity(self):
        scores = {"a": 0.4, "b": 0.1}
        rng = np.random.default_rng(0)
        out = perturb_scores(scores, 1, NoiseSchedule(sigma0=0.0), rng)
        assert out == scores

    def test_fixed_seed_reproduces(self):
        scores = {"a": 0.4, "b": 0.1, "c": 0.9}
        sched = NoiseSchedule(sigma0=0.3)
        out1 = perturb_scores(scores, 2, sched, np.random.default_rng(42))
        out2 = perturb_scores(scores, 2, sched, np.random.default_rng(42))
        assert out1 == out2

    def test_noise_std_matches_sigma(self):
        # Monte-Carlo estimate over 1e5 draws
        sigma = 0.1
        sched = NoiseSchedule(sigma0=sigma)
        rng = np.random.default_rng(9)
        n = 100_000
        scores = {f"s{i}": 0.0 for i in range(n)}
        out = perturb_scores(scores, 1, sched, rng)
        deltas = np.array([out[k] for k in scores])
        assert deltas.std() == pytest.approx(sigma, abs=0.005)

    def test_sigma_decays_with_rounds(self):
        sched = NoiseSchedule(sigma0=0.2)
        sigmas = [sched.sigma(r) for r in range(1, 6)]
        assert all(a >= b for a, b in zip(sigmas, sigmas[1:]))
        assert all(s >= 0 for s in sigmas)


class TestSelectCandidates:
    def test_top_k(self):
        assert select_candidates({"a": 0.9, "b": 0.5, "c": 0.1}, 2) == ["a", "b"]

    def test_tie_break_by_id(self):
        assert select_candidates({"b": 0.5, "a": 0.5}, 1) == ["a"]

    def test_truncates_to_available(self):
        assert select_candidates({"a": 0.1, "b": 0.2}, 5) == ["b", "a"]

    def test_empty_scores_give_empty_list(self):
        assert select_candidates({}, 3) == []

    def test_bad_batch_size(self):
        with pytest.raises(DataError):
            select_candidates({"a": 1.0}, 0)


def test_zero_weight_present_symptom_keeps_argmax():
    # adding a confirmed symptom with no edges changes only the common norm
    rng = np.random.default_rng(10)
    for _ in range(20):
        g = make_random_graph(rng)
        extra = "zzz_extra"
        g2 = KnowledgeGraph(
            list(g.symptoms) + [extra], g.diseases, dict(g.sd_weights)
        )
        present = {s for s in g.symptoms if rng.random() < 0.5}
        if not present:
            present = {g.symptoms[0]}
        base = rank_diseases(g2, patient_vector(present, g2))
        with_extra = rank_diseases(g2, patient_vector(present | {extra}, g2))
        assert base[0][0] == with_extra[0][0]
        assert [d for d, _ in base] == [d for d, _ in with_extra]
