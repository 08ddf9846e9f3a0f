import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from plfsma.core.errors import ContractViolation
from plfsma.estimation.kernel import build_smoother, epanechnikov, product_kernel, rot_bandwidth


def test_epanechnikov_values():
    assert np.allclose(epanechnikov([0.0, 0.5, -0.5, 1.0, 1.5]), [0.75, 0.5625, 0.5625, 0.0, 0.0])


def test_three_point_smoother():
    smoother = build_smoother(np.array([[0.25], [0.5], [0.75]]), 0.5)
    assert np.allclose(smoother.entries[1], [0.3, 0.4, 0.3])
    assert np.allclose(smoother.entries[0], [0.75 / 1.3125, 0.5625 / 1.3125, 0.0])
    assert smoother.bandwidth == 0.5


def test_rule_of_thumb_bandwidth():
    assert rot_bandwidth(100, 1) == pytest.approx(0.1)
    assert rot_bandwidth(64, 2) == pytest.approx(0.25)


def test_product_kernel_multiplies_coordinates():
    targets = np.array([[0.5, 0.5]])
    sources = np.array([[0.75, 0.5], [0.5, 0.0]])
    assert np.allclose(product_kernel(targets, sources, 0.5), [[0.5625 * 0.75, 0.0]])


def test_nonpositive_bandwidth():
    with pytest.raises(ContractViolation):
        build_smoother(np.array([[0.2], [0.4]]), 0.0)


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 25), st.integers(1, 3)), elements=st.floats(0.01, 0.99)),
    st.floats(0.01, 2.0),
)
def test_smoother_rows_are_stochastic(scores, h):
    entries = build_smoother(scores, h).entries
    assert np.all(entries >= 0)
    assert np.allclose(entries.sum(axis=1), 1.0)
    assert np.all(np.diag(entries) > 0)


def test_single_point_smoother():
    assert build_smoother(np.array([[0.4]]), 0.1).entries.tolist() == [[1.0]]


def test_disjoint_supports_give_identity():
    assert np.array_equal(build_smoother(np.array([[0.2], [0.6]]), 0.3).entries, np.eye(2))


def test_bandwidth_limits():
    scores = np.array([[0.1, 0.8], [0.35, 0.2], [0.6, 0.55], [0.9, 0.4]])
    assert np.allclose(build_smoother(scores, 1e-6).entries, np.eye(4))
    assert np.allclose(build_smoother(scores, 10.0).entries, 0.25, atol=0.01)


def test_constant_vectors_are_fixed_points():
    entries = build_smoother(np.array([[0.1], [0.2], [0.45], [0.5]]), 0.3).entries
    assert np.allclose(entries @ np.full(4, 3.5), 3.5)


def test_rule_of_thumb_examples():
    assert rot_bandwidth(400, 3) == pytest.approx(400**-0.25)
    assert rot_bandwidth(400, 3) == pytest.approx(0.2236, abs=1e-4)
