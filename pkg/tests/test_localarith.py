import itertools
import json
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from quadlevel import _exact as ex
from quadlevel.forms import IntegralQuadraticForm, Q4, RationalForm, diagonal_form, evaluate
from quadlevel.localarith import (
    BudgetExceeded,
    ResidueTable,
    check_witness,
    coisotropic,
    enumerate_residue_levelset,
    hilbert_symbol,
    is_isotropic_local,
    lift_orthogonal_step,
    random_orthogonal_mod,
    reflection_mod,
    transitivity_witness,
    verify_certificate,
)
from quadlevel.oracles import hilbert_symbol_search, residue_levelset_naive, square_classes

I4 = diagonal_form(1, 1, 1, 1)


def rf(*diag):
    n = len(diag)
    return RationalForm(tuple(tuple(Fraction(diag[i]) if i == j else Fraction(0) for j in range(n))
                              for i in range(n)))


def mat_mod(a, m):
    return [[x % m for x in row] for row in a]


def test_hilbert_trivial():
    for p in (2, 3, 5, 7, "inf"):
        for b in (-7, -1, 2, 3, 10, Fraction(5, 3)):
            assert hilbert_symbol(1, b, p) == 1
    assert hilbert_symbol(-1, -1, "inf") == -1
    assert hilbert_symbol(-1, -1, 2) == -1
    assert hilbert_symbol(-1, -1, 3) == 1


@pytest.mark.parametrize("p", [3, 5, 7])
def test_hilbert_matches_search_oracle(p):
    classes = square_classes(p)
    for a, b in itertools.product(classes + [-c for c in classes], classes):
        assert hilbert_symbol(a, b, p) == hilbert_symbol_search(a, b, p), (a, b)


def test_hilbert_rejects_bad_place():
    with pytest.raises(ValueError):
        hilbert_symbol(2, 3, 9)


nonzero = st.integers(-60, 60).filter(bool)
rationals = st.builds(Fraction, nonzero, st.integers(1, 30))


@given(rationals, rationals, rationals, st.sampled_from([2, 3, 5, 7, 11, "inf"]))
def test_hilbert_bilinear(a, b, c, p):
    assert hilbert_symbol(a, b, p) * hilbert_symbol(a, c, p) == hilbert_symbol(a, b * c, p)
    assert hilbert_symbol(a, -a, p) == 1
    assert hilbert_symbol(a, b, p) == hilbert_symbol(b, a, p)


def test_product_formula():
    rng = random.Random(5)
    for _ in range(500):
        a = Fraction(rng.choice([-1, 1]) * rng.randint(1, 200), rng.randint(1, 50))
        b = Fraction(rng.choice([-1, 1]) * rng.randint(1, 200), rng.randint(1, 50))
        primes = {2, 3, 5, 7}
        for x in (a.numerator, a.denominator, b.numerator, b.denominator):
            primes |= set(ex.factorize(abs(x)))
        prod = hilbert_symbol(a, b, "inf")
        for p in primes:
            prod *= hilbert_symbol(a, b, p)
        assert prod == 1, (a, b)


def test_isotropy_examples():
    assert is_isotropic_local(rf(1, 1, 1), 3)
    assert not is_isotropic_local(rf(1, 1), 3)
    assert is_isotropic_local(rf(1, -1), 3)
    assert not is_isotropic_local(rf(1, 1, 1, 1), "inf")
    assert is_isotropic_local(rf(1, 1, 1, 1, 1), 7)
    assert is_isotropic_local(rf(1, 1, 1, -1, 3), "inf")
    # the quaternion norm form is anisotropic exactly at 2 and infinity
    assert not is_isotropic_local(rf(1, 1, 1, 1), 2)
    assert is_isotropic_local(rf(1, 1, 1, 1), 3)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_isotropy_ternary_against_search(p):
    # <a, b, -1> is isotropic iff (a, b)_p = 1
    for a, b in itertools.product(square_classes(p), repeat=2):
        assert is_isotropic_local(rf(a, b, -1), p) == (hilbert_symbol_search(a, b, p) == 1)


def test_coisotropic_q4_p5():
    rng = random.Random(0)
    seen = 0
    while seen < 30:
        v = [rng.randint(-9, 9) for _ in range(4)]
        if ex.vector_gcd(v) != 1 or evaluate(Q4(), v) <= 0:
            continue
        flag, cert = coisotropic(Q4(), v, 5)
        assert flag and verify_certificate(Q4(), v, cert)
        seen += 1


def test_coisotropic_sum_of_squares():
    flag, cert = coisotropic(I4, [0, 0, 0, 1], 3)
    assert flag
    u = cert.witness
    assert u[3] == 0
    assert evaluate(I4, u) % 3**cert.precision == 0
    assert verify_certificate(I4, [0, 0, 0, 1], cert)


def test_coisotropic_anisotropic_case():
    # v^perp of e_4 for x^2+y^2+3z^2+w^2 is x^2+y^2+3z^2, anisotropic at 3
    q = diagonal_form(1, 1, 3, 1)
    flag, cert = coisotropic(q, [0, 0, 0, 1], 3)
    assert not flag and cert.witness is None
    assert not verify_certificate(q, [0, 0, 0, 1], cert)


def test_coisotropic_dim6():
    q = diagonal_form(-1, -1, -1, -1, -1, 1)
    rng = random.Random(2)
    for p in (3, 5, 7, 11):
        for _ in range(3):
            v = [rng.randint(-5, 5) for _ in range(6)]
            if ex.vector_gcd(v) != 1 or evaluate(q, v) == 0:
                continue
            assert coisotropic(q, v, p)[0]


def test_coisotropic_rejects():
    with pytest.raises(ValueError):
        coisotropic(Q4(), [1, 0, 0, 1], 5)
    with pytest.raises(ValueError):
        coisotropic(Q4(), [0, 0, 0, 1], 2)


def test_coisotropic_reflection_invariance():
    # v and its image under an integral isometry share the verdict
    q = diagonal_form(1, 1, 3, 1)
    swap = [[0, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 0]]
    for v in ([0, 0, 0, 1], [1, 1, 1, 2], [2, 0, 1, 3]):
        w = ex.matvec(swap, v)
        for p in (3, 5):
            assert coisotropic(q, v, p)[0] == coisotropic(q, w, p)[0]


def test_reflection_examples():
    r = reflection_mod(I4, [1, 0, 0, 0], 5)
    assert r == [[4, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    v = [0, 0, 0, 1]
    r = reflection_mod(Q4(), v, 3)
    for x in itertools.product(range(3), repeat=4):
        y = ex.matvec(r, list(x))
        assert (evaluate(Q4(), y) - evaluate(Q4(), x)) % 3 == 0


@given(st.lists(st.integers(0, 14), min_size=4, max_size=4), st.sampled_from([3, 5, 15]))
def test_reflection_properties(v, q):
    form = IntegralQuadraticForm.from_matrix([[-2, 1, 0, 0], [1, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, 1]])
    if math.gcd(evaluate(form, v), q) != 1:
        with pytest.raises(ValueError):
            reflection_mod(form, v, q)
        return
    r = reflection_mod(form, v, q)
    assert mat_mod(ex.matmul(r, r), q) == mat_mod(ex.identity(4), q)
    assert ex.det(r) % q == q - 1
    assert mat_mod(ex.matmul(ex.transpose(r), ex.matmul(form.matrix, r)), q) == mat_mod(form.matrix, q)
    assert [x % q for x in ex.matvec(r, v)] == [(-x) % q for x in v]


def test_transitivity_examples():
    q = Q4()
    g = transitivity_witness(q, 5, [0, 0, 0, 1], [0, 0, 0, 1])
    assert check_witness(q, 5, g, [0, 0, 0, 1], [0, 0, 0, 1])
    # Q(v1+v2) = 25 = 0 and Q(v1-v2) = 9 is a unit: the first branch
    g = transitivity_witness(q, 5, [0, 0, 0, 1], [0, 0, 0, 4])
    assert check_witness(q, 5, g, [0, 0, 0, 1], [0, 0, 0, 4])


def test_transitivity_random_pairs():
    q = Q4()
    rng = random.Random(11)
    mod = 15
    by_level = {}
    for x in itertools.product(range(mod), repeat=4):
        a = evaluate(q, x) % mod
        if a % 3 and a % 5:
            by_level.setdefault(a, []).append(x)
    levels = sorted(by_level)
    for _ in range(100):
        a = rng.choice(levels)
        v1, v2 = rng.choice(by_level[a]), rng.choice(by_level[a])
        g = transitivity_witness(q, mod, v1, v2)
        # checked here, not trusted
        assert mat_mod(ex.matmul(ex.transpose(g), ex.matmul(q.matrix, g)), mod) == mat_mod(q.matrix, mod)
        assert ex.det(g) % mod == 1
        assert [x % mod for x in ex.matvec(g, list(v1))] == list(v2)


def test_transitivity_rejects():
    with pytest.raises(ValueError):
        transitivity_witness(Q4(), 5, [1, 0, 0, 1], [0, 0, 0, 0])  # level 0
    with pytest.raises(ValueError):
        transitivity_witness(Q4(), 5, [0, 0, 0, 1], [0, 0, 1, 0])  # different levels
    with pytest.raises(ValueError):
        transitivity_witness(diagonal_form(3, 1, 1, 1), 3, [0, 0, 0, 1], [0, 0, 1, 0])
    with pytest.raises(ValueError):
        transitivity_witness(Q4(), 4, [0, 0, 0, 1], [0, 0, 0, 1])


def test_lift_fixed_point():
    f = [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]
    assert lift_orthogonal_step(Q4(), 3, 1, f) == f


@pytest.mark.parametrize("q,p", [(I4, 3), (Q4(), 5), (diagonal_form(-1, -2, -1, 3), 5)])
def test_lift_doubles_precision(q, p):
    rng = random.Random(p)
    m = q.matrix
    for _ in range(5):
        f = random_orthogonal_mod(q, p, rng)
        k = 1
        for _ in range(2):
            f2 = lift_orthogonal_step(q, p, k, f)
            k *= 2
            mk = p**k
            assert mat_mod(ex.matmul(ex.transpose(f2), ex.matmul(m, f2)), mk) == mat_mod(m, mk)
            assert mat_mod(f2, p ** (k // 2)) == mat_mod(f, p ** (k // 2))
            f = f2
        assert k == 4


def test_lift_rejects():
    with pytest.raises(ValueError):
        lift_orthogonal_step(I4, 3, 1, [[3, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    with pytest.raises(ValueError):
        lift_orthogonal_step(I4, 3, 1, [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def test_residue_table_examples():
    t = enumerate_residue_levelset(I4, 3, 0)
    assert (0, 0, 0, 0) in t.elements
    t = enumerate_residue_levelset(Q4(), 5, 1)
    assert t.size == 120
    assert list(t.elements) == sorted(residue_levelset_naive(Q4(), 5, 1))


@pytest.mark.parametrize("a", [0, 1, 2, 7])
def test_residue_crt(a):
    q = Q4()
    n15 = enumerate_residue_levelset(q, 15, a).size
    assert n15 == enumerate_residue_levelset(q, 3, a).size * enumerate_residue_levelset(q, 5, a).size


def test_residue_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_residue_levelset(Q4(), 61, 1)
    with pytest.raises(ValueError):
        enumerate_residue_levelset(Q4(), 4, 1)


def test_residue_table_counts_and_json():
    t = enumerate_residue_levelset(Q4(), 3, 1)
    c = t.with_counts([(0, 0, 0, 1), (0, 0, 0, 2), (0, 0, 0, 4)])
    assert c.counts[(0, 0, 0, 1)] == 2
    doc = json.loads(c.to_json(include_elements=True))
    assert doc["q"] == 3 and doc["a"] == 1 and doc["count"] == t.size
    assert doc["histogram"]["0,0,0,1"] == 2 and sum(doc["histogram"].values()) == 3
    assert len(doc["elements"]) == t.size
    with pytest.raises(ValueError):
        t.with_counts([(0, 0, 0, 0)])


def test_residue_table_index():
    t = ResidueTable(3, 1, ((0, 0, 0, 1),))
    assert t.index() == {(0, 0, 0, 1): 0}
