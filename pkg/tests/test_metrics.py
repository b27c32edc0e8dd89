import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kersize.metrics import (
    MetricError, MetricSpace, check_metric_axioms, complex_to_real, diameter, dist,
    dist_point_set, hausdorff_point_set, hausdorff_set_set, real_to_complex,
)
from oracles import hausdorff_bruteforce

E = MetricSpace.euclidean()


def R(*xs):
    return [[x] for x in xs]


def test_dist_examples():
    assert dist(E, [0, 0], [0, 1]) == 1.0
    assert dist(E, [3, 4], [3, 4]) == 0.0
    assert dist(MetricSpace.weighted_lp(1, [2, 1]), [0, 0], [1, 1]) == 3.0


def test_diameter_examples():
    assert diameter(E, [[0, 0], [0, 1]]) == 1.0
    assert diameter(E, [[2, 2]]) == 0.0
    assert diameter(E, R(0, 1, 5)) == 5.0


def test_hausdorff_examples():
    assert hausdorff_set_set(E, R(0, 1), R(0, 1)) == 0.0
    assert hausdorff_set_set(E, R(0), R(1, 3)) == 3.0
    assert hausdorff_set_set(E, R(0, 1), R(0, 1, 0.5)) == 0.5


def test_point_set_conventions():
    assert hausdorff_point_set(E, [0], R(1, 3)) == 3.0
    assert dist_point_set(E, [0], R(1, 3)) == 1.0
    assert hausdorff_point_set(E, [2], R(2)) == 0.0
    assert hausdorff_point_set(E, [0, 0], [[0, 1], [1, 0]]) == 1.0
    assert dist_point_set(E, [1], R(0, 1)) == 0.0
    assert dist_point_set(E, [2, 0], [[0, 0]]) == 2.0


def test_weighted_lp_validation():
    m = MetricSpace.weighted_lp(2, [4, 1])
    assert dist(m, [0, 0], [1, 0]) == 2.0
    with pytest.raises(MetricError):
        MetricSpace.weighted_lp(math.inf, [1, 3])
    with pytest.raises(MetricError):
        MetricSpace.weighted_lp(0.5, [1, 1])
    with pytest.raises(MetricError):
        MetricSpace.weighted_lp(2, [1, -1])


def test_dimension_mismatch():
    with pytest.raises(MetricError):
        dist(E, [0, 0], [0, 0, 0])


def test_complex_embedding_is_isometric():
    z = np.array([1 + 2j, -1j])
    w = np.array([0.5 - 1j, 3 + 0j])
    assert np.allclose(real_to_complex(complex_to_real(z)), z)
    assert math.isclose(dist(E, complex_to_real(z), complex_to_real(w)),
                        float(np.linalg.norm(z - w)), rel_tol=1e-15)


def test_table_metric():
    pts = [[0], [1], [2]]
    m = MetricSpace.from_table(pts, [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert dist(m, [0], [2]) == 2.0
    with pytest.raises(MetricError):
        dist(m, [0], [5])


def test_axiom_checker():
    assert check_metric_axioms(E, np.random.default_rng(0).normal(size=(6, 2))).ok
    bad = MetricSpace.unchecked_table([[0], [1], [2]], [[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    v = check_metric_axioms(bad, [[0], [1], [2]])
    assert not v.ok and v.axiom == "triangle" and v.triple == (0, 1, 2)
    zero = MetricSpace.unchecked_table([[0], [1]], [[0, 0], [0, 0]])
    v = check_metric_axioms(zero, [[0], [1]])
    assert not v.ok and v.axiom == "identity"
    with pytest.raises(MetricError):
        MetricSpace.from_table([[0], [1], [2]], [[0, 1, 3], [1, 0, 1], [3, 1, 0]])


sets = st.integers(1, 3).flatmap(
    lambda d: st.lists(
        st.lists(st.lists(st.floats(-5, 5, allow_nan=False), min_size=d, max_size=d),
                 min_size=1, max_size=6),
        min_size=3, max_size=3,
    )
)


@settings(max_examples=150, deadline=None)
@given(sets)
def test_hausdorff_properties(triple):
    A, B, C = triple
    ab = hausdorff_set_set(E, A, B)
    assert ab == hausdorff_set_set(E, B, A)
    assert hausdorff_set_set(E, A, A) == 0.0
    assert ab <= hausdorff_set_set(E, A, C) + hausdorff_set_set(E, C, B) + 1e-9
    assert math.isclose(ab, hausdorff_bruteforce(A, B), rel_tol=1e-12, abs_tol=1e-12)
    a = A[0]
    assert dist_point_set(E, a, B) <= hausdorff_point_set(E, a, B)
    assert math.isclose(diameter(E, A), max(hausdorff_point_set(E, x, A) for x in A),
                        rel_tol=1e-12, abs_tol=0)
