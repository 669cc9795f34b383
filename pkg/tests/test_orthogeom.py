import itertools
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadlevel import _exact as ex
from quadlevel.forms import IntegralQuadraticForm, dual_form, tau
from quadlevel.orthogeom import (
    canonical_gram,
    complete_to_sl,
    grid_descriptor,
    lll_gram,
    minima_batch,
    ortho_lattice,
    positive_completion,
    shape_descriptor,
    successive_minima,
)

coord = st.integers(-30, 30)


def primitive_vectors(d):
    return st.lists(coord, min_size=d, max_size=d).filter(lambda v: ex.vector_gcd(v) == 1)


def random_primitive(rng, d, bound=40):
    while True:
        v = [rng.randint(-bound, bound) for _ in range(d)]
        if ex.vector_gcd(v) == 1:
            return v


def signed_permutation(rng, v):
    perm = list(range(len(v)))
    rng.shuffle(perm)
    return [rng.choice([-1, 1]) * v[i] for i in perm]


def minima_oracle(gram, box=4):
    # greedy over all vectors of a box sorted by norm
    n = len(gram)
    vecs = sorted((ex.dot(x, ex.matvec(gram, list(x))), x)
                  for x in itertools.product(range(-box, box + 1), repeat=n) if any(x))
    chosen, out = [], []
    for norm, x in vecs:
        if np.linalg.matrix_rank(np.array(chosen + [list(x)])) > len(chosen):
            chosen.append(list(x))
            out.append(norm)
            if len(out) == n:
                break
    return out


def test_ortho_lattice_examples():
    lat = ortho_lattice([0, 0, 0, 1])
    assert lat.covol_sq == 1
    assert all(row[3] == 0 for row in lat.columns())
    assert ortho_lattice([1, 1, 1, 2]).covol_sq == 7
    with pytest.raises(ValueError):
        ortho_lattice([2, 4, 0, 6])


def test_covolume_identity_random():
    rng = random.Random(3)
    for _ in range(1000):
        d = rng.choice([4, 5])
        v = random_primitive(rng, d)
        lat = ortho_lattice(v)
        assert lat.covol_sq == ex.dot(v, v)
        for col in lat.columns():
            assert ex.dot(col, v) == 0


@given(st.one_of(primitive_vectors(4), primitive_vectors(5)))
def test_basis_is_saturated(v):
    lat = ortho_lattice(v)
    b = [list(r) for r in lat.basis]
    assert ex.det(ex.matmul(ex.transpose(b), b)) == ex.dot(v, v)
    # with the completion the basis is unimodular, so it spans all of v^perp
    w = positive_completion(v)
    assert abs(ex.det([row + [wi] for row, wi in zip(b, w)])) == 1


def test_complete_to_sl_examples():
    assert tau(complete_to_sl([0, 0, 0, 1])) == [0, 0, 0, 1]
    g = complete_to_sl([0, 0, 1, 2])
    assert ex.det(g) == 1 and tau(g) == [0, 0, 1, 2]


def test_complete_to_sl_random():
    rng = random.Random(4)
    for _ in range(1000):
        d = rng.choice([4, 5, 6])
        v = random_primitive(rng, d)
        g = complete_to_sl(v)
        assert ex.det(g) == 1 and tau(g) == v
        t = tau(g)
        for i in range(d):
            assert ex.dot(t, [row[i] for row in g]) == int(i == d - 1)


def test_positive_completion():
    assert positive_completion([0, 0, 0, 1]) == [0, 0, 0, 1]
    assert positive_completion([2, 3, 0, 0]) == [-1, 1, 0, 0]
    assert positive_completion([-1, 0, 0, 0]) == [-1, 0, 0, 0]


@given(primitive_vectors(4))
def test_dual_orthogonality(v):
    q = IntegralQuadraticForm.from_matrix([[-2, 1, 0, 1], [1, -2, 0, 0], [0, 0, -1, 0], [1, 0, 0, 3]])
    g = complete_to_sl(v)
    mt = ex.matvec(q.matrix, tau(g))
    dual = dual_form(q).matrix
    for i in range(4):
        col = [row[i] for row in g]
        assert ex.dot(col, ex.matvec(dual, mt)) == int(i == 3)


def test_lll_is_unimodular_and_reduces():
    rng = random.Random(7)
    for _ in range(50):
        v = random_primitive(rng, 5, bound=200)
        gram = ortho_lattice(v).gram
        h = lll_gram(gram)
        assert abs(ex.det(h)) == 1
        red = ex.matmul(ex.transpose(h), ex.matmul([list(r) for r in gram], h))
        assert ex.det(red) == ex.dot(v, v)
        # first vector within the LLL factor of the minimum
        assert red[0][0] <= 2 ** (len(red) - 1) * successive_minima(gram)[0]


def test_successive_minima_against_oracle():
    rng = random.Random(8)
    for _ in range(40):
        v = random_primitive(rng, 4, bound=6)
        red, _ = canonical_gram(ortho_lattice(v).gram)
        assert successive_minima(red) == minima_oracle(red)


def test_successive_minima_not_just_diagonal():
    # D4-type gram: the shortest basis is longer than the minima would suggest
    g = [[2, 0, 0, 1], [0, 2, 0, 1], [0, 0, 2, 1], [1, 1, 1, 2]]
    assert successive_minima(g) == minima_oracle(g, box=2)


def test_minima_batch_matches_exact():
    rng = random.Random(9)
    vs = np.array([random_primitive(rng, 4, bound=60) for _ in range(200)], dtype=np.int64)
    got = minima_batch(vs)
    for row, m in zip(vs.tolist(), got.tolist()):
        assert m == successive_minima(ortho_lattice(row).gram)


def test_minima_batch_frozen():
    vs = np.array([[0, 0, 0, 40, 1], [1, 1, 1, 1, 20]], dtype=np.int64)
    assert minima_batch(vs).tolist() == [[1, 1, 1, 1601], [2, 2, 2, 101]]


def test_shape_examples():
    s = shape_descriptor([0, 0, 0, 1])
    assert s.reduced_gram == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert np.allclose(s.features[:2], 1.0)
    s = shape_descriptor([1, 1, 1, 2])
    assert ex.det([list(r) for r in s.reduced_gram]) == 7
    assert s.reduced_gram == ((2, -1, -1), (-1, 2, 0), (-1, 0, 3))
    assert s.minima == (2, 2, 3)
    assert len(s.names) == len(s.features)


def test_shape_invariant_under_signed_permutations():
    rng = random.Random(10)
    for _ in range(100):
        v = random_primitive(rng, 4, bound=30)
        a = shape_descriptor(v)
        b = shape_descriptor(signed_permutation(rng, v))
        assert a.reduced_gram == b.reduced_gram
        assert np.allclose(a.features, b.features, atol=1e-9, rtol=0)


@given(st.integers(0, 10**6))
def test_canonical_gram_is_a_class_invariant(seed):
    rng = random.Random(seed)
    v = random_primitive(rng, 4, bound=25)
    gram = [list(r) for r in ortho_lattice(v).gram]
    u = ex.identity(3)
    for _ in range(6):
        i, j = rng.sample(range(3), 2)
        c = rng.randint(-3, 3)
        for row in u:
            row[j] += c * row[i]
    other = ex.matmul(ex.transpose(u), ex.matmul(gram, u))
    red, h = canonical_gram(gram)
    assert canonical_gram(other)[0] == red
    assert abs(ex.det(h)) == 1


def test_grid_examples():
    g = grid_descriptor([0, 0, 0, 1])
    assert g.distance == 0.0
    g = grid_descriptor([1, 1, 1, 2])
    assert g.w == (0, 0, 1, 0)
    assert g.frac_coords == pytest.approx((1 / 7, 4 / 7, 5 / 7), abs=1e-15)
    assert g.distance == pytest.approx(0.66938647297872, abs=1e-12)
    with pytest.raises(ValueError):
        grid_descriptor([1, 1, 1, 2], [0, 0, 0, 1])


def test_grid_depends_only_on_coset():
    rng = random.Random(12)
    for _ in range(60):
        v = random_primitive(rng, 4, bound=20)
        base = grid_descriptor(v)
        cols = ortho_lattice(v).columns()
        shift = [rng.randint(-4, 4) for _ in cols]
        w = [wi + sum(c * col[i] for c, col in zip(shift, cols)) for i, wi in enumerate(base.w)]
        other = grid_descriptor(v, w)
        assert other.distance == pytest.approx(base.distance, abs=1e-12)
        wrap = np.mod(np.subtract(other.frac_coords, base.frac_coords) + 0.5, 1) - 0.5
        assert np.allclose(wrap, 0, atol=1e-12)


def test_grid_distance_signed_permutation_invariant():
    rng = random.Random(13)
    for _ in range(60):
        v = random_primitive(rng, 4, bound=20)
        a = grid_descriptor(v).distance
        b = grid_descriptor(signed_permutation(rng, v)).distance
        assert a == pytest.approx(b, abs=1e-12)
