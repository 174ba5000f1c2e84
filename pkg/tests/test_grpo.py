"""Tests for the group-relative policy optimization simulator."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rewardgraph as rg
from rewardgraph.grpo import (GrpoConfig, advantages, grpo_objective, grpo_step,
                              held_out_accuracy, kl_categorical, make_policy,
                              run_experiment, sample_rollouts, softmax_rows,
                              tasks_from_store)
from rewardgraph.store import LabelBudget, SynthConfig, split_labels, synth_generate
from rewardgraph.tensor import make_rng


@pytest.fixture(scope="module")
def toy_store():
    store = synth_generate(SynthConfig(
        num_clusters=2, queries_per_cluster=10, rollouts_per_query=4,
        embedding_dim=8, answer_vocab=4, cluster_noise=0.5, seed=17))
    return split_labels(store, LabelBudget(gt_ratio=0.5, seed=17))


class TestAdvantages:
    def test_two_point_case(self):
        np.testing.assert_array_equal(advantages([1.0, 0.0]), [1.0, -1.0])

    def test_all_equal_is_zero(self):
        np.testing.assert_array_equal(advantages([1.0] * 8), np.zeros(8))

    def test_hand_computed_n8(self):
        adv = advantages([1, 1, 0, 0, 0, 0, 0, 0])
        expected = [math.sqrt(3)] * 2 + [-1 / math.sqrt(3)] * 6
        np.testing.assert_allclose(adv, expected, rtol=1e-12)
        np.testing.assert_allclose(adv, [1.732] * 2 + [-0.577] * 6, atol=1e-3)

    def test_needs_two_rewards(self):
        with pytest.raises(ValueError):
            advantages([1.0])

    @given(st.lists(st.integers(0, 1), min_size=2, max_size=16),
           st.floats(0.1, 10), st.floats(-5, 5))
    @settings(max_examples=100, deadline=None)
    def test_mean_zero_std_one_and_affine_invariance(self, rewards, scale, shift):
        adv = advantages(rewards)
        assert abs(adv.mean()) < 1e-9
        if adv.any():
            assert abs(adv.std() - 1.0) < 1e-6
        transformed = advantages(np.asarray(rewards, float) * scale + shift)
        assert np.max(np.abs(adv - transformed)) < 1e-9


class TestClipArithmetic:
    def test_positive_advantage_clips_high_ratio(self):
        rho, eps, adv = 1.5, 0.2, 1.0
        assert min(rho * adv, np.clip(rho, 1 - eps, 1 + eps) * adv) == pytest.approx(1.2)

    def test_negative_advantage_keeps_pessimistic_branch(self):
        rho, eps, adv = 0.5, 0.2, -1.0
        assert min(rho * adv, np.clip(rho, 1 - eps, 1 + eps) * adv) == -0.8

    @given(st.floats(0.8001, 1.1999), st.floats(-3, 3))
    @settings(max_examples=100, deadline=None)
    def test_clip_identity_inside_band(self, rho, adv):
        eps = 0.2
        clipped = float(np.clip(rho, 1 - eps, 1 + eps))
        assert min(rho * adv, clipped * adv) == rho * adv


class TestObjective:
    def test_kl_zero_when_policy_equals_reference(self):
        logits = make_rng(0).standard_normal((3, 5))
        assert kl_categorical(logits, logits) == 0.0

    def test_kl_term_reduces_objective(self):
        rng = make_rng(1)
        logits = rng.standard_normal((2, 4))
        ref = rng.standard_normal((2, 4))
        args = dict(
            temperature=1.0,
            cluster_ids=np.array([0]),
            answers=np.array([[1, 2]]),
            logp_old=np.log(softmax_rows(logits)[0][[1, 2]])[None, :],
            adv=np.array([[0.0, 0.0]]),
            epsilon=0.2,
        )
        j_without, _ = grpo_objective(logits, ref, beta=0.0, **args)
        j_with, _ = grpo_objective(logits, ref, beta=0.5, **args)
        assert j_with < j_without

    @pytest.mark.parametrize("seed", range(6))
    def test_gradient_matches_finite_differences(self, seed):
        rng = make_rng(seed)
        n_clusters, vocab, batch, n_roll = 3, 5, 4, 6
        logits = rng.standard_normal((n_clusters, vocab)) * 0.5
        ref = rng.standard_normal((n_clusters, vocab)) * 0.5
        cluster_ids = rng.integers(0, n_clusters, batch)
        answers = rng.integers(0, vocab, (batch, n_roll))
        # old log-probs deliberately close to current so clipping stays inactive
        cur = softmax_rows(logits)
        logp_old = np.log(np.array([cur[c][answers[b]]
                                    for b, c in enumerate(cluster_ids)]))
        logp_old += rng.uniform(-0.01, 0.01, logp_old.shape)
        adv = rng.standard_normal((batch, n_roll))
        _, grad = grpo_objective(logits, ref, 1.0, cluster_ids, answers,
                                 logp_old, adv, epsilon=0.2, beta=1e-2)
        eps = 1e-6
        for c in range(n_clusters):
            for v in range(vocab):
                bumped = logits.copy()
                bumped[c, v] += eps
                up, _ = grpo_objective(bumped, ref, 1.0, cluster_ids, answers,
                                       logp_old, adv, epsilon=0.2, beta=1e-2)
                bumped[c, v] -= 2 * eps
                down, _ = grpo_objective(bumped, ref, 1.0, cluster_ids, answers,
                                         logp_old, adv, epsilon=0.2, beta=1e-2)
                numeric = (up - down) / (2 * eps)
                rel = abs(grad[c, v] - numeric) / max(1e-8,
                                                      abs(grad[c, v]) + abs(numeric))
                assert rel < 1e-5


class TestSampling:
    def test_near_zero_temperature_is_greedy(self, toy_store):
        tasks = tasks_from_store(toy_store, "train")
        policy = make_policy(2, 4)
        policy.logits[tasks[0].cluster_index] = np.array([0.1, 2.0, 0.3, -1.0])
        _, answers, _ = sample_rollouts(policy, tasks[0], 16, 1e-6, make_rng(0),
                                        meta=toy_store.synth_meta)
        assert np.all(answers == 1)

    def test_uniform_logits_sample_uniformly(self, toy_store):
        tasks = tasks_from_store(toy_store, "train")
        policy = make_policy(2, 4)
        _, answers, _ = sample_rollouts(policy, tasks[0], 10_000, 1.0, make_rng(3),
                                        meta=toy_store.synth_meta)
        freq = np.bincount(answers, minlength=4) / 10_000
        sigma = math.sqrt(0.25 * 0.75 / 10_000)
        assert np.max(np.abs(freq - 0.25)) < 3 * sigma

    def test_same_seed_identical_samples(self, toy_store):
        tasks = tasks_from_store(toy_store, "train")
        policy = make_policy(2, 4)
        a = sample_rollouts(policy, tasks[1], 8, 1.0, make_rng(7),
                            meta=toy_store.synth_meta)
        b = sample_rollouts(policy, tasks[1], 8, 1.0, make_rng(7),
                            meta=toy_store.synth_meta)
        np.testing.assert_array_equal(a[1], b[1])
        for ra, rb in zip(a[0], b[0]):
            np.testing.assert_array_equal(ra.thinking_embedding, rb.thinking_embedding)

    def test_embeddings_encode_sampled_correctness(self, toy_store):
        tasks = tasks_from_store(toy_store, "train")
        task = tasks[0]
        rollouts, answers, _ = sample_rollouts(
            make_policy(2, 4), task, 64, 1.0, make_rng(5), meta=toy_store.synth_meta)
        direction = toy_store.synth_meta.direction
        proj = np.array([r.thinking_embedding @ direction for r in rollouts])
        correct = answers == task.correct_answer
        assert proj[correct].mean() > proj[~correct].mean()

    def test_logp_matches_policy(self, toy_store):
        tasks = tasks_from_store(toy_store, "train")
        policy = make_policy(2, 4)
        policy.logits[...] = make_rng(2).standard_normal((2, 4))
        _, answers, logp = sample_rollouts(policy, tasks[0], 12, 1.0, make_rng(9),
                                           meta=toy_store.synth_meta)
        probs = softmax_rows(policy.logits[tasks[0].cluster_index])
        np.testing.assert_allclose(logp, np.log(probs[answers]), atol=1e-12)


class TestSteps:
    def test_reference_never_mutated(self, toy_store):
        tasks = tasks_from_store(toy_store, "train")
        policy = make_policy(2, 4)
        ref_before = policy.ref_logits.copy()
        cfg = GrpoConfig(steps=3, batch_size=4, seed=0)

        def reward_fn(task, rollouts, answers):
            true = (answers == task.correct_answer).astype(np.int64)
            return true, true

        for step in range(3):
            grpo_step(policy, tasks[:4], reward_fn, cfg,
                      lambda ti: make_rng(1000 + step * 10 + ti))
        np.testing.assert_array_equal(policy.ref_logits, ref_before)
        assert policy.store.step == 3

    def test_zero_advantage_batch_moves_only_kl(self, toy_store):
        tasks = tasks_from_store(toy_store, "train")
        policy = make_policy(2, 4)
        cfg = GrpoConfig(steps=1, batch_size=2, seed=0, beta=0.0)

        def all_one_rewards(task, rollouts, answers):
            ones = np.ones(len(answers), dtype=np.int64)
            return ones, ones

        before = policy.logits.copy()
        grpo_step(policy, tasks[:2], all_one_rewards, cfg, lambda ti: make_rng(ti))
        np.testing.assert_array_equal(policy.logits, before)


class TestRunExperiment:
    def test_oracle_learns_single_cluster_binary_vocab(self):
        store = synth_generate(SynthConfig(
            num_clusters=1, queries_per_cluster=20, rollouts_per_query=8,
            embedding_dim=8, answer_vocab=2, cluster_noise=0.5, seed=3))
        split = split_labels(store, LabelBudget(gt_ratio=1.0, seed=3))
        report = run_experiment("oracle", split, None, None,
                                GrpoConfig(steps=200, batch_size=8, seed=3))
        assert report.final_accuracy >= 0.95

    def test_partial_with_no_labels_leaves_policy_unchanged(self, toy_store):
        unl = rg.split_labels(toy_store, LabelBudget(gt_ratio=0.0, seed=0))
        assert not unl.labeled_train_queries()
        report = run_experiment("partial", unl, None, None,
                                GrpoConfig(steps=10, batch_size=4, seed=1))
        n_test = len(unl.split_queries("test"))
        vocab = unl.synth_meta.config.answer_vocab
        assert report.final_accuracy == pytest.approx(1.0 / vocab)

    def test_mode_validation(self, toy_store):
        with pytest.raises(ValueError, match="mode"):
            run_experiment("bogus", toy_store, None, None, GrpoConfig())
        with pytest.raises(ValueError, match="mixed mode"):
            run_experiment("mixed", toy_store, None, None, GrpoConfig())

    def test_same_seed_reproduces_report(self, toy_store):
        cfg = GrpoConfig(steps=12, batch_size=4, seed=5)
        a = run_experiment("oracle", toy_store, None, None, cfg)
        b = run_experiment("oracle", toy_store, None, None, cfg)
        assert a.to_dict() == b.to_dict()

    def test_curve_csv_shape(self, toy_store):
        report = run_experiment("oracle", toy_store, None, None,
                                GrpoConfig(steps=20, batch_size=4, eval_every=5, seed=2))
        lines = report.to_csv().strip().splitlines()
        assert lines[0] == "step,mean_true_reward,held_out_accuracy"
        assert len(lines) == 1 + 4
