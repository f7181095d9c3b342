"""Style-content fusion and the mean+max pooled distribution."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gradcheck
from styledl.errors import ContractViolation
from styledl.fusion import (FusionHead, fuse_pairs, pooled_distribution,
                            pooled_scores, style_distribution)
from styledl.tensor import Tensor

rng = np.random.default_rng(31)


def _head(n_labels=5, style=4, seed=0):
    return FusionHead(np.random.default_rng(seed), n_labels=n_labels,
                      content_channels=4, deep_channels=8, style_channels=style)


def test_fused_width_is_sum_of_squared_extents():
    head = _head()
    style = Tensor(rng.random((2, 4, 8, 8)))
    content = [Tensor(rng.random((2, 4, 4, 4))) for _ in range(2)]
    deep = [Tensor(rng.random((2, 8, 2, 2))) for _ in range(2)]
    slices = head(style, content, deep)
    assert len(slices) == 2
    assert all(s.shape == (2, 5, 4 * 4 + 2 * 2) for s in slices)


def test_style_free_head():
    head = FusionHead(np.random.default_rng(1), n_labels=3,
                      content_channels=4, deep_channels=8, style_channels=None)
    content = [Tensor(rng.random((1, 4, 4, 4)))]
    deep = [Tensor(rng.random((1, 8, 2, 2)))]
    slices = head(None, content, deep)
    assert slices[0].shape == (1, 3, 20)


def test_style_presence_must_match_build():
    head = _head()
    content = [Tensor(rng.random((1, 4, 4, 4)))]
    deep = [Tensor(rng.random((1, 8, 2, 2)))]
    with pytest.raises(ContractViolation):
        head(None, content, deep)
    with pytest.raises(ContractViolation):
        head(Tensor(rng.random((1, 4, 8, 8))), content, deep + deep)


def test_fuse_pairs_wrapper():
    head = _head(seed=2)
    style = Tensor(rng.random((1, 4, 8, 8)))
    content = [Tensor(rng.random((1, 4, 4, 4)))]
    deep = [Tensor(rng.random((1, 8, 2, 2)))]
    a = head(style, content, deep)
    b = fuse_pairs(style, content, deep, head)
    np.testing.assert_array_equal(a[0].data, b[0].data)


def test_pooled_scores_hand_value():
    # one sample, two labels, two features; lam = 1
    f = Tensor(np.array([[[1.0, 3.0], [2.0, 2.0]]]))
    dist = pooled_scores(f, lam=1.0).data
    # logits: mean+max = [2+3, 2+2] = [5, 4]
    expect = np.exp([5.0, 4.0])
    np.testing.assert_allclose(dist[0], expect / expect.sum(), rtol=1e-12)


def test_pooled_scores_validation():
    with pytest.raises(ContractViolation):
        pooled_scores(Tensor(np.zeros((2, 3))), lam=0.5)
    with pytest.raises(ContractViolation):
        pooled_scores(Tensor(np.zeros((1, 2, 3))), lam=-0.1)
    with pytest.raises(ContractViolation):
        pooled_scores(Tensor(np.zeros((1, 2, 3))), lam=float("nan"))


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([0.0, 0.4, 0.8, 1.3]))
@settings(max_examples=25, deadline=None)
def test_pooled_distribution_rows_are_simplex(seed, lam):
    r = np.random.default_rng(seed)
    slices = [Tensor(r.standard_normal((3, 4, 6))) for _ in range(2)]
    for d in pooled_distribution(slices, lam):
        assert (d.data >= 0).all()
        np.testing.assert_allclose(d.data.sum(axis=1), 1.0, atol=1e-9)


def test_style_distribution_averages_orders():
    a = Tensor(np.array([[0.2, 0.8]]))
    b = Tensor(np.array([[0.6, 0.4]]))
    y = style_distribution([a, b]).data
    np.testing.assert_allclose(y, [[0.4, 0.6]], rtol=1e-12)
    with pytest.raises(ContractViolation):
        style_distribution([])


def test_grad_through_fusion_and_pooling():
    head = FusionHead(np.random.default_rng(3), n_labels=2,
                      content_channels=2, deep_channels=2, style_channels=2)

    def path(style, content, deep):
        slices = head(style, [content], [deep])
        return pooled_scores(slices[0], lam=0.8)

    gradcheck(path,
              rng.standard_normal((1, 2, 4, 4)),
              rng.standard_normal((1, 2, 2, 2)),
              rng.standard_normal((1, 2, 1, 1)))
