import warnings

import numpy as np
import pytest

from lloydkit.community import (
    CommuConfig,
    as_adjacency,
    commu_b_update,
    commu_label_update,
    fit_commu_lloyd,
    trim_adjacency,
)
from lloydkit.metrics import DegenerateUpdateWarning, misclustering_rate
from lloydkit.samplers import SbmSpec, sample_sbm


def two_cliques(size=6):
    n = 2 * size
    adj = np.zeros((n, n), dtype=np.int8)
    adj[:size, :size] = 1
    adj[size:, size:] = 1
    np.fill_diagonal(adj, 0)
    return adj, np.repeat([0, 1], size)


def star(n=8):
    adj = np.zeros((n, n), dtype=np.int8)
    adj[0, 1:] = adj[1:, 0] = 1
    return adj


class TestTrimming:
    def test_high_degree_node_removed(self):
        trimmed = trim_adjacency(star(), tau=3)
        assert not trimmed[0].any() and not trimmed[:, 0].any()

    def test_row_only(self):
        trimmed = trim_adjacency(star(), tau=3, row_only=True)
        assert not trimmed[0].any()
        assert trimmed[1:, 0].all()

    def test_threshold_kept_inclusive(self):
        adj = star(4)
        np.testing.assert_array_equal(trim_adjacency(adj, tau=3), adj)

    def test_default_threshold_is_twice_mean_degree(self):
        adj = star(5)
        assert CommuConfig().threshold(adj) == pytest.approx(2 * 8 / 5)
        assert CommuConfig(tau=7).threshold(adj) == 7

    def test_adjacency_validation(self):
        with pytest.raises(ValueError, match="symmetric"):
            as_adjacency(np.triu(np.ones((3, 3)), 1))
        with pytest.raises(ValueError, match="diagonal"):
            as_adjacency(np.eye(2))
        with pytest.raises(ValueError, match="square"):
            as_adjacency(np.zeros((2, 3)))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CommuConfig(tau=-1)
        with pytest.raises(ValueError):
            CommuConfig(tau_multiplier=0)


class TestUpdates:
    def test_b_matches_loop(self):
        rng = np.random.default_rng(0)
        adj, _ = sample_sbm(SbmSpec.from_probabilities(30, 3, 0.5, 0.1), 1)
        labels = rng.permutation(np.arange(30) % 3)
        b = commu_b_update(adj, labels, 3)
        for i in range(30):
            for h in range(3):
                members = labels == h
                assert b[i, h] == pytest.approx(adj[i, members].sum() / members.sum())

    def test_empty_community_frozen_with_warning(self):
        adj, _ = two_cliques(3)
        prev = np.full((6, 3), 0.5)
        with pytest.warns(DegenerateUpdateWarning):
            b = commu_b_update(adj, np.repeat([0, 1], 3), 3, prev=prev)
        np.testing.assert_array_equal(b[:, 2], prev[:, 2])

    def test_empty_community_without_previous(self):
        with pytest.raises(ValueError, match="empty"):
            commu_b_update(np.zeros((2, 2)), [0, 0], 2)

    def test_argmax_tie_to_smallest(self):
        assert commu_label_update(np.array([[0.5, 0.5], [0.1, 0.9]])).tolist() == [0, 1]


class TestFit:
    def test_two_cliques_exact(self):
        adj, truth = two_cliques()
        fit = fit_commu_lloyd(adj, 2, truth=truth)
        assert fit.trace.misclustering[-1] == 0
        assert misclustering_rate(truth, fit.labels)[0] == 0

    def test_connectivity_matrix(self):
        adj, truth = two_cliques(5)
        fit = fit_commu_lloyd(adj, 2, init=truth)
        h = fit.labels[0]
        assert fit.centers[h, h] == pytest.approx(4 / 5)
        assert fit.centers[h, 1 - h] == 0
        assert set(fit.extras) >= {"B", "tau", "init_labels"}

    def test_improves_spectral_start(self):
        spec = SbmSpec.from_probabilities(600, 3, 0.12, 0.04)
        adj, truth = sample_sbm(spec, 3)
        fit = fit_commu_lloyd(adj, 3, truth=truth)
        assert fit.trace.misclustering[-1] <= fit.trace.misclustering[0]
        assert fit.trace.misclustering[-1] < 0.05

    def test_deterministic(self):
        adj, truth = sample_sbm(SbmSpec.from_probabilities(200, 2, 0.2, 0.05), 4)
        a = fit_commu_lloyd(adj, 2, CommuConfig(seed=3), truth=truth)
        b = fit_commu_lloyd(adj, 2, CommuConfig(seed=3), truth=truth)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_invalid_init(self):
        adj, _ = two_cliques()
        with pytest.raises(ValueError):
            fit_commu_lloyd(adj, 2, init=np.zeros(12, dtype=int))
        with pytest.raises(ValueError):
            fit_commu_lloyd(adj, 2, init=np.zeros(5, dtype=int))
        with pytest.raises(ValueError):
            fit_commu_lloyd(adj, 13)

    def test_no_warning_on_healthy_run(self):
        adj, truth = two_cliques()
        with warnings.catch_warnings():
            warnings.simplefilter("error", DegenerateUpdateWarning)
            fit_commu_lloyd(adj, 2, init=truth)
