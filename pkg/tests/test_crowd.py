import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lloydkit.crowd import (
    CrowdConfig,
    confusion_update,
    fit_crowd_lloyd,
    ls_costs,
    ls_label_update,
    majority_vote,
    v_pi,
)
from lloydkit.metrics import DegenerateUpdateWarning
from lloydkit.samplers import CrowdSpec, one_coin, sample_crowd, sample_truth


def naive_costs(table, pi):
    m, n = table.shape
    k = pi.shape[1]
    cost = np.zeros((n, k))
    for j in range(n):
        for h in range(k):
            for i in range(m):
                if table[i, j] == 0:
                    continue
                for g in range(k):
                    cost[j, h] += (float(table[i, j] == g + 1) - pi[i, h, g]) ** 2
    return cost


def naive_confusion(table, labels, k):
    m, n = table.shape
    pi = np.full((m, k, k), 1.0 / k)
    for i in range(m):
        for g in range(k):
            answers = [table[i, j] for j in range(n) if labels[j] == g and table[i, j] > 0]
            if answers:
                pi[i, g] = [answers.count(h + 1) / len(answers) for h in range(k)]
    return pi


tables = st.integers(2, 4).flatmap(
    lambda k: st.tuples(
        st.just(k),
        st.integers(1, 6).flatmap(
            lambda m: st.integers(1, 8).flatmap(
                lambda n: st.lists(st.lists(st.integers(0, k), min_size=n, max_size=n), min_size=m, max_size=m)
            )
        ),
    )
)


class TestMajorityVote:
    def test_simple(self):
        table = np.array([[1, 2, 2], [1, 2, 1], [2, 2, 1]])
        assert majority_vote(table, 2).tolist() == [0, 1, 0]

    def test_tie_goes_to_first_label(self):
        assert majority_vote(np.array([[2], [1]]), 2).tolist() == [0]

    def test_missing_ignored(self):
        assert majority_vote(np.array([[0], [0], [2]]), 2).tolist() == [1]

    def test_unanswered_item(self):
        with pytest.raises(ValueError, match="no observed"):
            majority_vote(np.array([[1, 0]]), 2)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            majority_vote(np.array([[3]]), 2)


class TestConfusion:
    def test_frequencies(self):
        table = np.array([[1, 2, 1, 0]])
        pi = confusion_update(table, [0, 0, 1, 1], 2)
        np.testing.assert_allclose(pi[0], [[0.5, 0.5], [1.0, 0.0]])

    def test_unobserved_row_uniform_with_warning(self):
        with pytest.warns(DegenerateUpdateWarning):
            pi = confusion_update(np.array([[1, 1]]), [0, 0], 2)
        np.testing.assert_allclose(pi[0, 1], [0.5, 0.5])

    @settings(max_examples=60, deadline=None)
    @given(tables, st.integers(0, 1000))
    def test_matches_loops(self, case, seed):
        k, rows = case
        table = np.array(rows)
        labels = np.random.default_rng(seed).integers(k, size=table.shape[1])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateUpdateWarning)
            pi = confusion_update(table, labels, k)
        np.testing.assert_allclose(pi, naive_confusion(table, labels, k))
        np.testing.assert_allclose(pi.sum(axis=2), 1.0)


class TestLeastSquares:
    @settings(max_examples=60, deadline=None)
    @given(tables, st.integers(0, 1000))
    def test_costs_match_loops(self, case, seed):
        k, rows = case
        table = np.array(rows)
        pi = np.random.default_rng(seed).dirichlet(np.ones(k), size=(table.shape[0], k))
        np.testing.assert_allclose(ls_costs(table, pi), naive_costs(table, pi), atol=1e-12)

    def test_label_step_prefers_matching_profile(self):
        pi = one_coin(3, 2, 0.9)
        table = np.array([[2, 1], [2, 1], [1, 1]])
        assert ls_label_update(table, pi).tolist() == [1, 0]

    def test_unanswered_item(self):
        with pytest.raises(ValueError):
            ls_label_update(np.array([[1, 0]]), one_coin(1, 2, 0.9))


class TestVPi:
    def test_one_coin_closed_form(self):
        pi = one_coin(100, 2, 0.7)
        expected = (math.sqrt(70) - math.sqrt(30)) ** 2 / 100
        assert v_pi(pi) == pytest.approx(expected)

    def test_uninformative_workers(self):
        assert v_pi(one_coin(10, 3, 1 / 3)) == pytest.approx(0.0)

    def test_matches_loop(self):
        pi = np.random.default_rng(0).dirichlet(np.ones(3), size=(7, 3))
        best = math.inf
        for g in range(3):
            for h in range(3):
                if g != h:
                    best = min(best, (math.sqrt(pi[:, g, g].sum()) - math.sqrt(pi[:, g, h].sum())) ** 2 / 7)
        assert v_pi(pi) == pytest.approx(best)


class TestFit:
    def test_perfect_workers(self):
        truth = np.array([0, 1, 1, 0, 2])
        table = np.tile(truth + 1, (4, 1))
        fit = fit_crowd_lloyd(table, 3, truth=truth)
        assert fit.trace.misclustering[-1] == 0
        assert fit.labels.tolist() == truth.tolist()

    def test_improves_on_majority_vote(self):
        spec = CrowdSpec(one_coin(30, 2, 0.6), 400)
        pi = np.asarray(spec.confusion).copy()
        pi[:10] = one_coin(10, 2, 0.95)
        spec = CrowdSpec(pi, 400)
        truth = sample_truth(400, 2, 1)
        table = sample_crowd(spec, truth, 2)
        fit = fit_crowd_lloyd(table, 2, CrowdConfig(max_iter=20), truth=truth)
        assert fit.trace.misclustering[-1] <= fit.trace.misclustering[0]
        assert fit.trace.objective_violations() == []
        assert fit.extras["confusion"].shape == (30, 2, 2)
        assert fit.centers.shape == (2, 60)

    def test_custom_init(self):
        truth = np.array([0, 1, 0, 1])
        table = np.tile(truth + 1, (3, 1))
        fit = fit_crowd_lloyd(table, 2, init=truth, truth=truth)
        assert fit.trace.misclustering[0] == 0
        with pytest.raises(ValueError):
            fit_crowd_lloyd(table, 2, init=np.zeros(3, dtype=int))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CrowdConfig(max_iter=0)
