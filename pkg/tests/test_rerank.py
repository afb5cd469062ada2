"""Distractor re-ranking, template accumulation, and score calibration."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datrack.corr import FeatureMap
from datrack.errors import (DimensionError, NoCandidatesError,
                            UninitializedError)
from datrack.rerank import (CompositeTemplates, DistractorSet, RerankConfig,
                            beta_weight, calibrated_score, composite_query,
                            distractor_set_from, fold_query, rerank_direct,
                            rerank_factored, score_candidates,
                            select_target_and_distractors, update_templates)

from .conftest import make_map, make_proposal
from .oracles import beta_loop_ref, composite_batch_ref, rerank_direct_ref


class TestRerankConfig:
    def test_defaults(self):
        cfg = RerankConfig()
        assert cfg.alpha_hat == 0.5
        assert cfg.default_alpha_i == 1.0
        assert cfg.eta == 0.01

    def test_negative_alpha_hat_rejected(self):
        with pytest.raises(ValueError):
            RerankConfig(alpha_hat=-0.1)

    @pytest.mark.parametrize("eta", [0.0, 1.0, -0.5, 1.5])
    def test_eta_range_enforced(self, eta):
        with pytest.raises(ValueError):
            RerankConfig(eta=eta)


class TestDistractorSet:
    def test_alpha_total_and_len(self, rng):
        ds = DistractorSet([(make_map(rng), 1.0), (make_map(rng), 0.5)])
        assert len(ds) == 2
        assert ds.alpha_total == pytest.approx(1.5)

    def test_mixed_shapes_rejected(self, rng):
        with pytest.raises(DimensionError):
            DistractorSet([(make_map(rng, h=6), 1.0), (make_map(rng, h=5), 1.0)])

    def test_negative_weight_rejected(self, rng):
        with pytest.raises(ValueError):
            DistractorSet([(make_map(rng), -1.0)])

    def test_from_proposals_uses_default_alpha(self, rng):
        props = [make_proposal(rng), make_proposal(rng)]
        ds = distractor_set_from(props, default_alpha=0.25)
        assert [a for _, a in ds.entries] == [0.25, 0.25]

    def test_from_proposals_requires_embeddings(self, rng):
        p = make_proposal(rng)
        p.embedding = None
        with pytest.raises(ValueError):
            distractor_set_from([p])


class TestSelectTargetAndDistractors:
    def test_best_score_wins(self, rng):
        survivors = [make_proposal(rng, cell=(0, i, 0), score=s)
                     for i, s in enumerate([0.3, 0.9, 0.5])]
        target, rest = select_target_and_distractors(survivors, h=0.2)
        assert target is survivors[1]
        assert rest == [survivors[0], survivors[2]]

    def test_tie_breaks_toward_lower_cell(self, rng):
        survivors = [make_proposal(rng, cell=(2, 0, 0), score=0.9),
                     make_proposal(rng, cell=(1, 5, 1), score=0.9)]
        target, _ = select_target_and_distractors(survivors, h=0.2)
        assert target is survivors[1]

    def test_membership_is_strictly_above_h(self, rng):
        survivors = [make_proposal(rng, cell=(0, 0, 0), score=0.9),
                     make_proposal(rng, cell=(0, 1, 0), score=0.2),
                     make_proposal(rng, cell=(0, 2, 0), score=0.21)]
        _, rest = select_target_and_distractors(survivors, h=0.2)
        assert rest == [survivors[2]]

    def test_membership_scores_do_not_move_the_target(self, rng):
        # ranking stays on stored scores even when membership runs on others
        survivors = [make_proposal(rng, cell=(0, 0, 0), score=0.9),
                     make_proposal(rng, cell=(0, 1, 0), score=0.5)]
        target, rest = select_target_and_distractors(
            survivors, h=0.2, scores=[0.1, 0.95])
        assert target is survivors[0]
        assert rest == [survivors[1]]

    def test_membership_scores_gate_entry(self, rng):
        survivors = [make_proposal(rng, cell=(0, 0, 0), score=0.9),
                     make_proposal(rng, cell=(0, 1, 0), score=0.5)]
        _, rest = select_target_and_distractors(survivors, h=0.2, scores=[0.9, 0.1])
        assert rest == []

    def test_score_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            select_target_and_distractors([make_proposal(rng)], h=0.2, scores=[1.0, 2.0])

    def test_empty_input(self):
        with pytest.raises(NoCandidatesError):
            select_target_and_distractors([], h=0.2)


def _random_setup(seed: int, n_dist: int, n_cand: int, bias: float = 0.0):
    r = np.random.default_rng(seed)
    exemplar = FeatureMap(r.standard_normal((4, 4, 3)))
    dists = DistractorSet([(FeatureMap(r.standard_normal((4, 4, 3))),
                            float(r.uniform(0.2, 2.0))) for _ in range(n_dist)])
    cands = [make_proposal(r, cell=(0, i, 0), h=4, w=4, c=3) for i in range(n_cand)]
    cfg = RerankConfig(bias=bias)
    return exemplar, dists, cands, cfg


class TestRerank:
    @pytest.mark.parametrize("n_dist", [0, 1, 4])
    def test_direct_matches_loop_reference(self, n_dist):
        exemplar, dists, cands, cfg = _random_setup(7, n_dist, 6, bias=0.3)
        _, scores = rerank_direct(exemplar, dists, cands, cfg)
        ref = rerank_direct_ref(
            exemplar.data, [(d.data, a) for d, a in dists.entries],
            [p.embedding.data for p in cands], cfg.alpha_hat, cfg.bias)
        np.testing.assert_allclose(scores, ref, rtol=1e-12)

    @pytest.mark.parametrize("seed", range(8))
    def test_factored_agrees_with_direct_ranking(self, seed):
        exemplar, dists, cands, cfg = _random_setup(seed, 3, 8, bias=0.7)
        direct_win, direct_scores = rerank_direct(exemplar, dists, cands, cfg)
        fact_win, fact_scores = rerank_factored(exemplar, dists, cands, cfg)
        assert fact_win is direct_win
        assert np.argsort(direct_scores).tolist() == np.argsort(fact_scores).tolist()

    def test_factored_offset_is_bias_scaled(self):
        # folding drops the partially cancelled bias, so the direct scores
        # sit exactly bias * (1 - alpha_hat) above the factored ones
        exemplar, dists, cands, cfg = _random_setup(3, 2, 5, bias=0.7)
        _, direct_scores = rerank_direct(exemplar, dists, cands, cfg)
        _, fact_scores = rerank_factored(exemplar, dists, cands, cfg)
        expected = cfg.bias * (1.0 - cfg.alpha_hat)
        gaps = np.subtract(direct_scores, fact_scores)
        np.testing.assert_allclose(gaps, expected, rtol=1e-9)

    def test_no_distractors_identical_scores(self):
        exemplar, dists, cands, cfg = _random_setup(5, 0, 5, bias=0.7)
        _, direct_scores = rerank_direct(exemplar, dists, cands, cfg)
        _, fact_scores = rerank_factored(exemplar, dists, cands, cfg)
        np.testing.assert_allclose(fact_scores, direct_scores, rtol=1e-12)

    def test_zero_total_weight_behaves_like_empty(self, rng):
        exemplar = make_map(rng, h=4, w=4, c=3)
        dists = DistractorSet([(make_map(rng, h=4, w=4, c=3), 0.0)])
        cands = [make_proposal(rng, cell=(0, i, 0), h=4, w=4, c=3) for i in range(3)]
        cfg = RerankConfig(bias=0.2)
        _, scores = rerank_factored(exemplar, dists, cands, cfg)
        np.testing.assert_allclose(
            scores, score_candidates(exemplar, cands, 0.2), rtol=1e-12)

    def test_empty_candidates_raise(self, rng):
        with pytest.raises(NoCandidatesError):
            rerank_factored(make_map(rng), DistractorSet(), [], RerankConfig())
        with pytest.raises(NoCandidatesError):
            rerank_direct(make_map(rng), DistractorSet(), [], RerankConfig())

    def test_winner_tie_breaks_toward_lower_cell(self, rng):
        emb = make_map(rng, h=4, w=4, c=3)
        cands = [make_proposal(rng, cell=(1, 0, 0), h=4, w=4, c=3),
                 make_proposal(rng, cell=(0, 2, 0), h=4, w=4, c=3)]
        for p in cands:
            p.embedding = emb  # identical embeddings force a score tie
        win, _ = rerank_factored(emb, DistractorSet(), cands, RerankConfig())
        assert win is cands[1]


class TestFoldQuery:
    def test_no_distractors_returns_exemplar(self, rng):
        exemplar = make_map(rng)
        assert fold_query(exemplar, DistractorSet(), 0.5) is exemplar

    def test_subtracts_weighted_average(self, rng):
        exemplar = make_map(rng, h=3, w=3, c=2)
        d1, d2 = make_map(rng, h=3, w=3, c=2), make_map(rng, h=3, w=3, c=2)
        folded = fold_query(exemplar, DistractorSet([(d1, 3.0), (d2, 1.0)]), 0.5)
        expected = exemplar.data - 0.5 * (3.0 * d1.data + 1.0 * d2.data) / 4.0
        np.testing.assert_allclose(folded.data, expected, rtol=1e-12)


class TestBetaWeight:
    def test_first_update_is_unit(self):
        for eta in (0.01, 0.1, 0.5, 0.99):
            assert beta_weight(1, eta) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("eta", [0.01, 0.1, 0.5])
    @pytest.mark.parametrize("t", [1, 2, 3, 10, 50])
    def test_matches_geometric_sum(self, t, eta):
        assert beta_weight(t, eta) == pytest.approx(beta_loop_ref(t, eta), rel=1e-12)

    def test_eta_half_counts_updates(self):
        # r = eta/(1-eta) = 1 exactly, so the sum degenerates to t terms of 1
        for t in (1, 7, 123):
            assert beta_weight(t, 0.5) == float(t)

    def test_monotone_in_t(self):
        # strictly increasing until the geometric tail underflows, never after
        values = [beta_weight(t, 0.1) for t in range(1, 30)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert all(b > a for a, b in zip(values[:5], values[1:6]))

    def test_validation(self):
        with pytest.raises(ValueError):
            beta_weight(0, 0.1)
        with pytest.raises(ValueError):
            beta_weight(3, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 500), st.floats(0.001, 0.6))
    def test_closed_form_property(self, t, eta):
        # eta above ~0.6 makes r ** t overflow for large t in both forms,
        # so the comparison stays on the jointly representable domain
        assert beta_weight(t, eta) == pytest.approx(beta_loop_ref(t, eta), rel=1e-9)


class TestCompositeTemplates:
    def test_query_before_any_update_raises(self):
        ct = CompositeTemplates.empty(3, 3, 2)
        with pytest.raises(UninitializedError):
            composite_query(ct)

    def test_single_update_reproduces_template(self, rng):
        z = make_map(rng, h=3, w=3, c=2)
        ct = update_templates(CompositeTemplates.empty(3, 3, 2), z,
                              DistractorSet(), RerankConfig())
        assert ct.frames == 1
        np.testing.assert_allclose(composite_query(ct).data, z.data, rtol=1e-12)

    def test_matches_batch_recomputation(self):
        r = np.random.default_rng(42)
        cfg = RerankConfig(eta=0.05, alpha_hat=0.5)
        ct = CompositeTemplates.empty(3, 3, 2)
        history = []
        for k in range(12):
            z = FeatureMap(r.standard_normal((3, 3, 2)))
            n_d = int(r.integers(0, 4))
            dists = [(FeatureMap(r.standard_normal((3, 3, 2))),
                      float(r.uniform(0.1, 2.0))) for _ in range(n_d)]
            history.append((z.data, [(d.data, a) for d, a in dists]))
            ct = update_templates(ct, z, DistractorSet(list(dists)), cfg)
            ref = composite_batch_ref(history, cfg.eta, cfg.alpha_hat)
            np.testing.assert_allclose(composite_query(ct).data, ref, rtol=1e-9)

    def test_distractor_less_frames_leave_denominator_alone(self, rng):
        cfg = RerankConfig()
        ct = CompositeTemplates.empty(3, 3, 2)
        ct = update_templates(ct, make_map(rng, h=3, w=3, c=2), DistractorSet(), cfg)
        ct = update_templates(ct, make_map(rng, h=3, w=3, c=2), DistractorSet(), cfg)
        assert ct.distractor_den == 0.0
        assert not ct.distractor_num.any()

    def test_template_shape_mismatch(self, rng):
        ct = CompositeTemplates.empty(3, 3, 2)
        with pytest.raises(DimensionError):
            update_templates(ct, make_map(rng, h=4, w=3, c=2),
                             DistractorSet(), RerankConfig())

    def test_distractor_shape_mismatch(self, rng):
        ct = CompositeTemplates.empty(3, 3, 2)
        bad = DistractorSet([(make_map(rng, h=4, w=4, c=2), 1.0)])
        with pytest.raises(DimensionError):
            update_templates(ct, make_map(rng, h=3, w=3, c=2), bad, RerankConfig())

    def test_accumulators_are_immutable_records(self, rng):
        ct = CompositeTemplates.empty(3, 3, 2)
        ct2 = update_templates(ct, make_map(rng, h=3, w=3, c=2),
                               DistractorSet(), RerankConfig())
        assert ct.frames == 0 and ct2.frames == 1
        assert not ct.target_num.any()


class TestCalibratedScore:
    def test_self_similarity_maps_to_one(self):
        assert calibrated_score(5.0, 5.0) == pytest.approx(1.0)

    def test_zero_maps_low_but_positive(self):
        v = calibrated_score(0.0, 5.0)
        assert 0.0 < v < 0.2

    def test_above_self_similarity_clamps(self):
        assert calibrated_score(50.0, 5.0) == 1.0

    def test_monotone(self):
        xs = np.linspace(-2.0, 8.0, 41)
        ys = [calibrated_score(float(x), 5.0) for x in xs]
        assert all(b >= a for a, b in zip(ys, ys[1:]))

    def test_array_input_keeps_shape(self):
        raw = np.array([[0.0, 2.5], [5.0, 7.5]])
        out = calibrated_score(raw, 5.0)
        assert out.shape == raw.shape
        assert out[1, 0] == pytest.approx(1.0)

    def test_non_positive_self_sim_falls_back_to_unit_scale(self):
        assert calibrated_score(1.0, 0.0) == calibrated_score(1.0, 1.0)

    def test_never_reorders(self, rng):
        raw = np.sort(rng.standard_normal(20))
        cal = calibrated_score(raw, 2.0)
        assert np.all(np.diff(cal) >= 0)
