"""Tests of the self-normalized inner average."""

import numpy as np
import pytest
from scipy.special import logsumexp

from mlmc_boed import ContractViolationError, InnerBatch, inner_ratio


def test_single_sample_identity():
    batch = InnerBatch(log_weights=np.array([-3.7]), scores=np.array([[2.5, -1.0]]))
    res = inner_ratio(batch)
    assert res.log_rho_bar == pytest.approx(-3.7)
    assert np.allclose(res.ratio, [2.5, -1.0])


def test_uniform_weights_reduce_to_plain_mean():
    scores = np.arange(12.0).reshape(4, 3)
    batch = InnerBatch(log_weights=np.full(4, -1.3), scores=scores)
    res = inner_ratio(batch)
    assert np.allclose(res.ratio, scores.mean(axis=0))
    assert res.log_rho_bar == pytest.approx(-1.3)


def test_extreme_weight_saturates_to_argmax_score():
    batch = InnerBatch(
        log_weights=np.array([0.0, -1000.0]),
        scores=np.array([[5.0], [-5.0]]),
    )
    res = inner_ratio(batch)
    assert res.ratio[0] == pytest.approx(5.0, abs=1e-12)


def test_matches_naive_linear_space_computation():
    rng = np.random.default_rng(0)
    log_w = rng.normal(size=16)
    scores = rng.normal(size=(16, 2))
    res = inner_ratio(InnerBatch(log_weights=log_w, scores=scores))
    w = np.exp(log_w)
    assert np.allclose(res.ratio, (w[:, None] * scores).sum(0) / w.sum())
    assert res.log_rho_bar == pytest.approx(logsumexp(log_w) - np.log(16))


def test_no_underflow_for_very_negative_weights():
    rng = np.random.default_rng(1)
    log_w = rng.normal(size=8) - 50_000.0
    scores = rng.normal(size=(8, 1))
    res = inner_ratio(InnerBatch(log_weights=log_w, scores=scores))
    assert np.isfinite(res.ratio).all()
    assert res.log_rho_bar < -49_000


def test_ratio_is_convex_combination_of_scores():
    rng = np.random.default_rng(2)
    scores = rng.normal(size=(32, 1))
    res = inner_ratio(InnerBatch(log_weights=rng.normal(size=32), scores=scores))
    assert scores.min() <= res.ratio[0] <= scores.max()


def test_empty_batch_rejected():
    with pytest.raises(ContractViolationError):
        inner_ratio(InnerBatch(log_weights=np.array([]), scores=np.empty((0, 1))))
