import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from forel.regularizer import (KINDS, RegularizerError, RegularizerSpec, choice_map, conjugate,
                               entropic, euclidean, h_value, max_h, omega, preimage, project_simplex,
                               strong_convexity_constant)
from oracles import euclidean_conjugate_by_faces, simplex_projection_by_faces

mpmath.mp.dps = 40

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
score_vectors = st.integers(2, 6).flatmap(lambda n: arrays(np.float64, n, elements=finite))


def test_entropy_values():
    assert h_value(entropic(2), [0.5, 0.5]) == pytest.approx(-math.log(2), abs=1e-15)
    want = float(mpmath.mpf("0.9") * mpmath.log("0.9") + mpmath.mpf("0.1") * mpmath.log("0.1"))
    assert h_value(entropic(2), [0.9, 0.1]) == pytest.approx(want, abs=1e-15)
    assert want == pytest.approx(-0.325083, abs=1e-6)
    assert h_value(entropic(3), [1, 0, 0]) == 0.0  # 0 log 0 = 0


def test_euclidean_vertex():
    assert h_value(euclidean(3), [1, 0, 0]) == 0.5


def test_h_rejects_off_simplex():
    with pytest.raises(RegularizerError):
        h_value(entropic(2), [0.6, 0.6])
    with pytest.raises(RegularizerError):
        h_value(euclidean(2), [1.2, -0.2])


def test_choice_examples():
    np.testing.assert_allclose(choice_map(entropic(4), np.zeros(4)), 0.25, atol=0)
    np.testing.assert_allclose(choice_map(entropic(2), [math.log(2), 0]), [2 / 3, 1 / 3], atol=1e-15)
    np.testing.assert_array_equal(choice_map(euclidean(2), [2, 0]), [1, 0])


def test_choice_rejects_nonfinite():
    with pytest.raises(RegularizerError):
        choice_map(entropic(2), [np.nan, 0])
    with pytest.raises(RegularizerError):
        choice_map(euclidean(2), [np.inf, 0])


def test_conjugate_examples():
    assert conjugate(entropic(2), [0, 0]) == pytest.approx(math.log(2), abs=1e-15)
    assert conjugate(euclidean(2), [0, 0]) == pytest.approx(-0.25, abs=1e-15)
    want = float(mpmath.log(mpmath.e + mpmath.exp(-1)))
    assert conjugate(entropic(2), [1, -1]) == pytest.approx(want, abs=1e-15)
    assert want == pytest.approx(1.1269280110429725, abs=1e-15)


def test_conjugate_large_scores_stable():
    y = np.array([800.0, 799.0, -1000.0])
    want = float(mpmath.log(sum(mpmath.exp(mpmath.mpf(v)) for v in y)))
    assert conjugate(entropic(3), y) == pytest.approx(want, rel=1e-15)


@pytest.mark.parametrize("kind, n, want", [("entropic", 2, math.log(2)), ("euclidean", 2, 0.25),
                                           ("euclidean", 4, 0.375), ("entropic", 5, math.log(5))])
def test_omega(kind, n, want):
    assert omega(RegularizerSpec(kind, n)) == pytest.approx(want, abs=1e-15)


def test_max_h_at_vertices():
    for kind in KINDS:
        reg = RegularizerSpec(kind, 3)
        assert max_h(reg) == h_value(reg, [0, 1, 0])
        assert omega(reg) == pytest.approx(max_h(reg) - h_value(reg, [1 / 3] * 3), abs=1e-15)


@pytest.mark.parametrize("kind", sorted(KINDS))
def test_strong_convexity_sampled(kind):
    rng = np.random.default_rng(3)
    K, norm = strong_convexity_constant(RegularizerSpec(kind, 4))
    assert K == 1.0
    reg = RegularizerSpec(kind, 4)
    x = rng.dirichlet(np.ones(4), size=10_000)
    xp = rng.dirichlet(np.ones(4), size=10_000)
    t = rng.uniform(0, 1, size=(10_000, 1))
    lhs = h_value(reg, t * x + (1 - t) * xp)
    d = np.abs(x - xp).sum(-1) if norm == "l1" else np.linalg.norm(x - xp, axis=-1)
    rhs = t[:, 0] * h_value(reg, x) + (1 - t[:, 0]) * h_value(reg, xp) \
        - 0.5 * K * t[:, 0] * (1 - t[:, 0]) * d ** 2
    assert np.all(lhs <= rhs + 1e-12)


def test_preimage_round_trip():
    x = np.array([0.2, 0.3, 0.5])
    for kind in KINDS:
        reg = RegularizerSpec(kind, 3)
        np.testing.assert_allclose(choice_map(reg, preimage(reg, x)), x, atol=1e-15)
    with pytest.raises(RegularizerError, match="log of zero"):
        preimage(entropic(3), [0.5, 0.5, 0])


def test_spec_validation():
    with pytest.raises(RegularizerError):
        RegularizerSpec("tsallis", 3)
    with pytest.raises(RegularizerError):
        RegularizerSpec("entropic", 1)


def test_batched_projection():
    rng = np.random.default_rng(4)
    Y = rng.normal(scale=2, size=(50, 5))
    X = project_simplex(Y)
    for y, x in zip(Y, X):
        np.testing.assert_allclose(x, simplex_projection_by_faces(y), atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(score_vectors)
def test_projection_matches_face_oracle(y):
    x = project_simplex(y)
    np.testing.assert_allclose(x, simplex_projection_by_faces(y), atol=1e-10)
    assert np.all(x >= 0) and abs(x.sum() - 1) < 1e-12


@settings(max_examples=300, deadline=None)
@given(score_vectors)
def test_projection_kkt(y):
    # x = max(y - tau, 0) for a single threshold tau
    x = project_simplex(y)
    on = x > 0
    tau = np.mean(y[on] - x[on])
    np.testing.assert_allclose(x[on], y[on] - tau, atol=1e-10)
    assert np.all(y[~on] <= tau + 1e-10)


@settings(max_examples=200, deadline=None)
@given(score_vectors)
def test_euclidean_conjugate_oracle(y):
    reg = euclidean(y.size)
    assert conjugate(reg, y) == pytest.approx(euclidean_conjugate_by_faces(y), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(score_vectors)
def test_entropic_conjugate_and_gradient(y):
    reg = entropic(y.size)
    want = float(mpmath.log(mpmath.fsum(mpmath.exp(mpmath.mpf(float(v))) for v in y)))
    assert conjugate(reg, y) == pytest.approx(want, rel=1e-14, abs=1e-14)
    # choice map is the gradient of the conjugate
    eps = 1e-6
    g = [(conjugate(reg, y + eps * e) - conjugate(reg, y - eps * e)) / (2 * eps) for e in np.eye(y.size)]
    np.testing.assert_allclose(choice_map(reg, y), g, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(score_vectors, st.floats(-100, 100))
def test_choice_shift_invariant(y, c):
    for reg in (entropic(y.size), euclidean(y.size)):
        np.testing.assert_allclose(choice_map(reg, y + c), choice_map(reg, y), atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(score_vectors)
def test_fenchel_young_equality(y):
    # h*(y) = <y, Q(y)> - h(Q(y)) and h*(y) >= <y, x> - h(x) for any x
    rng = np.random.default_rng(0)
    for reg in (entropic(y.size), euclidean(y.size)):
        x = choice_map(reg, y)
        hc = conjugate(reg, y)
        assert hc == pytest.approx(y @ x - h_value(reg, x), abs=1e-9 * max(1, abs(hc)))
        for xp in rng.dirichlet(np.ones(y.size), size=5):
            assert hc >= y @ xp - h_value(reg, xp) - 1e-9
