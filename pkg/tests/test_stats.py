import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import special

from quadlevel.enumerate import enum_hyperbolic_sliced
from quadlevel.forms import Q4, diagonal_form
from quadlevel.localarith import ResidueTable, enumerate_residue_levelset
from quadlevel.stats import (
    EmpiricalDistribution,
    LerayIntegrator,
    cap_fraction,
    chi_square_residues,
    gegenbauer_coefficients,
    joint_contingency,
    ks_two_sample,
    window_ratio_test,
    zonal_sum_test,
)


def uniform_sphere(n, d, seed):
    x = np.random.default_rng(seed).standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1)[:, None]


def zonal_brute(x, kmax):
    g = np.clip(x @ x.T, -1, 1)
    out = []
    for k in range(1, kmax + 1):
        c = [float(a) for a in gegenbauer_coefficients(k, x.shape[1])]
        out.append(np.polynomial.polynomial.polyval(g, c).mean())
    return np.array(out)


@pytest.mark.parametrize("dim", [3, 4, 5])
def test_gegenbauer_against_scipy(dim):
    t = np.linspace(-1, 1, 41)
    lam = (dim - 2) / 2
    for k in range(0, 7):
        c = [float(a) for a in gegenbauer_coefficients(k, dim)]
        ours = np.polynomial.polynomial.polyval(t, c)
        ref = special.eval_gegenbauer(k, lam, t) / special.eval_gegenbauer(k, lam, 1.0)
        assert np.allclose(ours, ref, atol=1e-12)


def test_zonal_frame_and_point_mass():
    frame = np.vstack([np.eye(4), -np.eye(4)])
    w = zonal_sum_test(frame)
    assert abs(w[0]) <= 1e-15 and abs(w[2]) <= 1e-15
    same = np.tile([[0.6, 0.0, 0.8, 0.0]], (50, 1))
    assert np.allclose(zonal_sum_test(same), 1.0, atol=1e-12)


def test_zonal_uniform_sample():
    n = 10**4
    w = zonal_sum_test(uniform_sphere(n, 4, 31))
    assert np.all(w <= 10 / n)


def test_zonal_moment_sums_match_double_sum():
    x = uniform_sphere(300, 5, 4)
    assert np.allclose(zonal_sum_test(x, 5), zonal_brute(x, 5), atol=1e-12)


@given(arrays(float, (12, 4), elements=st.floats(-1, 1)))
def test_zonal_nonnegative(raw):
    norms = np.linalg.norm(raw, axis=1)
    x = raw[norms > 1e-3]
    if len(x) == 0:
        return
    x = x / np.linalg.norm(x, axis=1)[:, None]
    assert np.all(zonal_sum_test(x) >= -1e-12)


def test_zonal_rejects():
    with pytest.raises(ValueError):
        zonal_sum_test(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        zonal_sum_test(np.ones((3, 4)))


def test_cap_fraction_closed_forms():
    assert cap_fraction(4, 0.0) == pytest.approx(0.5)
    # S^2: area above height c is (1 - c)/2
    for c in (-0.7, -0.2, 0.3, 0.9):
        assert cap_fraction(3, c) == pytest.approx((1 - c) / 2, rel=1e-12)


@pytest.mark.parametrize("c", [-0.5, 0.0, 0.3])
def test_leray_sphere_caps(c):
    integ = LerayIntegrator(diagonal_form(1, 1, 1, 1), seed=5)
    mass = integ.cell_masses(lambda x: (x[:, 3] >= c).astype(int), 2, 10**6)[1]
    exact = cap_fraction(4, c)
    assert abs(mass - exact) <= 0.005 * exact


def test_leray_weighted_sphere_form():
    # an anisotropic definite form has a different density but the same total
    # structure: masses of the two half-spaces x_1 >< 0 are equal by symmetry
    integ = LerayIntegrator(diagonal_form(1, 2, 3, 4), seed=6)
    m = integ.cell_masses(lambda x: (x[:, 0] > 0).astype(int), 2, 2 * 10**5)
    assert m == pytest.approx([0.5, 0.5], abs=0.01)


def test_leray_seed_determinism():
    a = LerayIntegrator(Q4(), seed=7, radius=3.0).sample(1000)
    b = LerayIntegrator(Q4(), seed=7, radius=3.0).sample(1000)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_leray_samples_on_level_one():
    for q in (Q4(), diagonal_form(-2, -1, -1, 3)):
        integ = LerayIntegrator(q, seed=8, radius=2.0)
        x, w = integ.sample(5000)
        qx = np.einsum("ij,jk,ik->i", x, q.array(), x)
        assert np.allclose(qx, 1.0, atol=1e-9)
        assert np.all(np.linalg.norm(integ.z_coordinates(x), axis=1) <= 2.0 + 1e-9)


def test_ring_masses_are_equal():
    integ = LerayIntegrator(Q4(), seed=9, radius=3.0)
    m = integ.cell_masses(integ.ring_cells(6), 6, 10**6)
    assert np.allclose(m, 1 / 6, rtol=0.02)


def test_window_single_cell():
    integ = LerayIntegrator(Q4(), seed=10, radius=3.0)
    pts = enum_hyperbolic_sliced(Q4(), 9, 9).points / 3.0
    res = window_ratio_test(integ, pts, lambda x: np.zeros(len(x), dtype=int), 1, 10**4)
    assert res.statistic == 0.0 and res.dof == 0


def test_window_mirror_cells():
    integ = LerayIntegrator(Q4(), seed=11, radius=3.0)
    pts = enum_hyperbolic_sliced(Q4(), 9, 9).points / 3.0

    def halves(x):
        return (x[:, 0] > 0).astype(int) - (x[:, 0] == 0).astype(int)

    res = window_ratio_test(integ, pts, halves, 2, 10**5)
    assert res.observed[0] == res.observed[1]
    assert res.statistic < 1.0


def _leray_draw(integ, n, seed):
    # rejection on the importance weights gives an exact Leray sample
    x, w = integ.sample(4 * n)
    keep = np.random.default_rng(seed).random(len(w)) < w / w.max()
    return x[keep][:n]


def test_window_synthetic_leray_sample():
    ok = 0
    trials = 10
    for t in range(trials):
        src = LerayIntegrator(Q4(), seed=100 + t, radius=3.0)
        pts = _leray_draw(src, 4000, 200 + t)
        ref = LerayIntegrator(Q4(), seed=7, radius=3.0)
        res = window_ratio_test(ref, pts, ref.ring_cells(10), 10, 4 * 10**5)
        ok += res.statistic / res.dof <= 1.5
    assert ok >= 8


def test_window_rejects():
    integ = LerayIntegrator(Q4(), seed=1, radius=3.0)
    with pytest.raises(ValueError):
        window_ratio_test(integ, np.array([[1.0, 0, 0, 2.0]]), integ.ring_cells(2), 2)
    with pytest.raises(ValueError):
        LerayIntegrator(Q4(), seed=1)
    with pytest.raises(ValueError):
        LerayIntegrator(diagonal_form(-1, -1, -1, -1), seed=1)


def test_chi_square_residue_closed_forms():
    table = enumerate_residue_levelset(Q4(), 5, 1)
    h = table.size
    elems = np.array(table.elements)
    assert chi_square_residues(elems, table) == (0.0, h - 1)
    assert chi_square_residues(np.tile(elems, (7, 1)), table)[0] == 0.0
    n = 600
    stat, _ = chi_square_residues(np.tile(elems[:1], (n, 1)), table)
    expect = n / h
    assert stat == pytest.approx((n - expect) ** 2 / expect + (h - 1) * expect, rel=1e-12)


def test_chi_square_residue_negative_and_offtable():
    table = enumerate_residue_levelset(Q4(), 5, 1)
    elems = np.array(table.elements)
    assert chi_square_residues(elems - 5, table)[0] == 0.0
    with pytest.raises(ValueError, match="not on the level set"):
        chi_square_residues(np.array([[0, 0, 0, 0]]), table)
    with pytest.raises(ValueError):
        chi_square_residues(np.zeros((0, 4), dtype=int), table)


def test_chi_square_permutation_invariant():
    table = ResidueTable(3, 1, ((0, 0, 0, 1), (0, 0, 0, 2), (0, 0, 1, 0)))
    sample = np.array([[0, 0, 0, 1], [0, 0, 0, 1], [0, 0, 1, 0], [0, 0, 0, 2], [0, 0, 0, 1]])
    a = chi_square_residues(sample, table)
    b = chi_square_residues(sample[::-1], table)
    assert a == b


def test_ks():
    a = np.random.default_rng(1).normal(size=200)
    assert ks_two_sample(a, a) == 0.0
    assert ks_two_sample(a, a + 100) == 1.0
    two = np.column_stack([a, -a])
    assert ks_two_sample(two, two[::-1], index=1) == 0.0
    # weights equal to multiplicities reproduce the expanded sample
    vals = np.array([1.0, 2.0, 3.0])
    w = np.array([3, 1, 2])
    other = np.array([1.5, 2.5, 2.5, 3.5])
    assert ks_two_sample(vals, other, wa=w) == pytest.approx(ks_two_sample(np.repeat(vals, w), other))
    with pytest.raises(ValueError):
        ks_two_sample(np.array([]), a)


def test_contingency_product_and_correlated():
    a, b = [], []
    for i, j in itertools.product(range(3), range(4)):
        cnt = 10 * (i + 1) * (j + 2)
        a += [i] * cnt
        b += [j] * cnt
    res = joint_contingency([a, b])
    assert res.statistic == pytest.approx(0.0, abs=1e-12) and res.dof == 6
    n = 40
    x = [0] * (n // 2) + [1] * (n // 2)
    res = joint_contingency([x, x])
    assert res.statistic == pytest.approx(n) and res.dof == 1


def test_contingency_three_factors_dof():
    rng = np.random.default_rng(2)
    f = [rng.integers(0, 4, 5000), rng.integers(0, 5, 5000), rng.integers(0, 3, 5000)]
    res = joint_contingency(f)
    assert res.dof == 4 * 5 * 3 - 1 - (3 + 4 + 2)
    assert res.ratio < 2


def test_contingency_merges_sparse_levels():
    rng = np.random.default_rng(3)
    a = np.concatenate([rng.integers(0, 3, 300), [3, 3]])
    b = rng.integers(0, 2, 302)
    res = joint_contingency([a, b])
    assert len(res.levels[0]) == 3
    assert res.expected.min() >= 5
    assert sorted(sum(res.levels[0], ())) == [0, 1, 2, 3]


def test_contingency_degenerate():
    with pytest.raises(ValueError):
        joint_contingency([[0, 0, 0], [0, 1, 0]])
    with pytest.raises(ValueError):
        joint_contingency([[0, 1, 0, 1], [0, 1, 0, 1]], min_expected=5)
    with pytest.raises(ValueError):
        joint_contingency([[0, 1]])


def test_empirical_distribution():
    d = EmpiricalDistribution(np.array([[2.0, 1.0], [1.0, 5.0]]), np.array([1.0, 3.0]))
    assert d.features.tolist() == [[1.0, 5.0], [2.0, 1.0]]
    assert d.probabilities.tolist() == [0.75, 0.25]
    assert d.column(1).tolist() == [5.0, 1.0]
    with pytest.raises(ValueError):
        EmpiricalDistribution(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        EmpiricalDistribution(np.ones((2, 2)), np.array([-1.0, 2.0]))


@given(
    arrays(float, (4, 2), elements=st.floats(-5, 5)),
    arrays(float, (3, 2), elements=st.floats(-5, 5)),
    arrays(float, (2, 2), elements=st.floats(-5, 5)),
)
def test_merge_associative_and_commutative(x, y, z):
    a, b, c = EmpiricalDistribution(x), EmpiricalDistribution(y), EmpiricalDistribution(z)
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    assert np.array_equal(left.features, right.features)
    assert np.array_equal(left.weights, right.weights)
    swapped = b.merge(a)
    assert np.array_equal(a.merge(b).features, swapped.features)
