"""Tests for mixed reward acquisition."""

import numpy as np
import pytest

import rewardgraph as rg
from rewardgraph.rewards import (SOURCE_GNN, SOURCE_GROUND_TRUTH, RewardRequest,
                                 acquire_rewards)
from rewardgraph.store import (LabelBudget, QueryRecord, RolloutRecord,
                               SynthConfig, split_labels, synth_generate)


@pytest.fixture(scope="module")
def setup():
    store = synth_generate(SynthConfig(
        num_clusters=2, queries_per_cluster=10, rollouts_per_query=4,
        embedding_dim=8, cluster_noise=0.5, seed=31))
    split = split_labels(store, LabelBudget(gt_ratio=0.5, seed=31))
    graph = rg.build_warmup(split, k=3)
    model = rg.init_model(rg.GnnConfig(input_dim=8, hidden_dim=16, heads=2, seed=31))
    model, _ = rg.train(model, graph, split, rg.TrainConfig(epochs=25, seed=31))
    return split, graph, model


def make_request(query, labeled):
    return RewardRequest(query=query, rollouts=query.rollouts, labeled=labeled)


class TestLabeledPath:
    def test_ground_truth_passthrough(self, setup):
        split, graph, model = setup
        query = split.labeled_train_queries()[0]
        batch = acquire_rewards(make_request(query, True), model, graph)
        np.testing.assert_array_equal(
            batch.rewards, [r.gt_reward for r in query.rollouts])
        assert batch.source == [SOURCE_GROUND_TRUTH] * len(query.rollouts)
        assert batch.raw_scores is None

    def test_output_independent_of_model(self, setup):
        split, graph, _ = setup
        query = split.labeled_train_queries()[1]
        outs = []
        for seed in (101, 202):
            other = rg.init_model(rg.GnnConfig(input_dim=8, hidden_dim=16,
                                               heads=2, seed=seed))
            outs.append(acquire_rewards(make_request(query, True), other, graph))
        np.testing.assert_array_equal(outs[0].rewards, outs[1].rewards)

    def test_missing_reward_is_an_error(self, setup):
        split, graph, model = setup
        query = split.labeled_train_queries()[0]
        broken = [RolloutRecord(r.rollout_id, r.thinking_embedding,
                                r.answer_embedding, gt_reward=None)
                  for r in query.rollouts]
        request = RewardRequest(query=query, rollouts=broken, labeled=True)
        with pytest.raises(ValueError, match="missing"):
            acquire_rewards(request, model, graph)


class TestModelPath:
    def test_rewards_are_binary_and_thresholded(self, setup):
        split, graph, model = setup
        query = split.split_queries("test")[0]
        batch = acquire_rewards(make_request(query, False), model, graph)
        assert set(batch.rewards.tolist()) <= {0, 1}
        assert batch.source == [SOURCE_GNN] * len(query.rollouts)
        np.testing.assert_array_equal(batch.rewards, batch.raw_scores > 0)

    def test_zero_score_maps_to_reward_zero(self):
        from rewardgraph.metrics import predict_reward
        assert predict_reward(np.array([0.0]))[0] == 0

    def test_replay_is_deterministic(self, setup):
        split, graph, model = setup
        query = split.split_queries("test")[1]
        a = acquire_rewards(make_request(query, False), model, graph)
        b = acquire_rewards(make_request(query, False), model, graph)
        np.testing.assert_array_equal(a.rewards, b.rewards)
        np.testing.assert_array_equal(a.raw_scores, b.raw_scores)

    def test_published_qa_scores_threshold_to_pred_column(self):
        sig = np.array([0.676, 0.578, 0.733, 0.771, 0.048, 0.716, 0.019, 0.009])
        raw = np.log(sig / (1 - sig))
        from rewardgraph.metrics import predict_reward
        np.testing.assert_array_equal(predict_reward(raw), [1, 1, 1, 1, 0, 1, 0, 0])

    def test_dim_mismatch_is_an_error(self, setup):
        split, graph, model = setup
        bad_query = QueryRecord(
            query_id="bad", dataset_tag="d", split="test", labeled=False,
            query_embedding=np.ones(5),
            rollouts=[RolloutRecord("bad-r", np.ones(5), np.ones(5))])
        with pytest.raises(ValueError, match="dim"):
            acquire_rewards(make_request(bad_query, False), model, graph)
