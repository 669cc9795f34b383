"""The fifteen acceptance criteria as callable checks.

Each ``criterion_<n>(cfg)`` returns a :class:`CriterionResult`; all
parameters, thresholds and seeds come from the configuration. Statistical
thresholds are calibrated constants and the reports say so.
"""

from __future__ import annotations

import functools
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _exact as ex
from . import oracles
from .config import Config, load_config
from .enumerate import (
    definite_orbit_reps,
    ball_orbit_reps,
    enum_definite,
    enum_hyperbolic_sliced,
    expand_orbits,
    hyperbolic_orbit_reps,
    orbit_index,
)
from .forms import (
    Q4,
    diagonal_form,
    dual_restriction,
    evaluate,
    make_aT,
    random_sl,
    random_standing_form,
    tau,
)
from .localarith import (
    INF,
    check_witness,
    coisotropic,
    enumerate_residue_levelset,
    hilbert_symbol,
    lift_orthogonal_step,
    random_orthogonal_mod,
    transitivity_witness,
    verify_certificate,
)
from .orthogeom import complete_to_sl, minima_batch, ortho_lattice
from .scalingmaps import residual_decay, unipotent_comparator
from .stats import LerayIntegrator, chi_square_residues, joint_contingency, ks_two_sample, zonal_sum_test

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all"]


@dataclass
class CriterionResult:
    number: int
    name: str
    params: dict
    statistic: object
    threshold: object
    passed: bool
    elapsed: float = 0.0
    calibrated: bool = False
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        kind = " [calibrated threshold]" if self.calibrated else ""
        return (f"C{self.number:02d} {tag} {self.name}: statistic={self.statistic} "
                f"threshold={self.threshold} ({self.elapsed:.1f}s){kind}")

    def to_json(self) -> dict:
        def clean(x):
            if isinstance(x, dict):
                return {str(k): clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, (np.integer,)):
                return int(x)
            if isinstance(x, (np.floating,)):
                return float(x)
            if isinstance(x, np.ndarray):
                return clean(x.tolist())
            if isinstance(x, Fraction):
                return str(x)
            return x

        return clean({
            "test": f"C{self.number:02d} {self.name}",
            "parameters": self.params,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "pass": bool(self.passed),
            "calibrated": self.calibrated,
            "elapsed_s": round(self.elapsed, 3),
            "detail": self.detail,
        })


def _rng(cfg: Config, n: int) -> random.Random:
    return random.Random(cfg.int("seed") * 100 + n)


def _random_primitive(rng: random.Random, d: int, bound: int) -> list[int]:
    while True:
        v = [rng.randint(-bound, bound) for _ in range(d)]
        if any(v) and ex.vector_gcd(v) == 1:
            return v


# -- exact identities -----------------------------------------------------------


def criterion_1(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 1)
    n, bound, limit = cfg.int("c1_samples"), cfg.int("c1_entry_bound"), cfg.float("c1_time_limit")
    t0 = time.perf_counter()
    bad = 0
    for i in range(n):
        d = 4 + i % 2
        v = _random_primitive(rng, d, bound)
        lat = ortho_lattice(v)
        if ex.det(lat.gram) != sum(x * x for x in v) or any(ex.dot(v, c) for c in ex.transpose(lat.basis)):
            bad += 1
    el = time.perf_counter() - t0
    return CriterionResult(1, "covolume identity det(B^tB) = |v|^2", {"samples": n, "entries": bound, "d": [4, 5]},
                           {"mismatches": bad, "seconds": round(el, 3)}, {"mismatches": 0, "seconds": limit},
                           bad == 0 and el < limit, el)


def criterion_2(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 2)
    n, limit = cfg.int("c2_samples"), cfg.float("c2_time_limit")
    bound = cfg.int("c1_entry_bound")
    t0 = time.perf_counter()
    bad = 0
    for i in range(n):
        d = 4 + i % 2
        v = _random_primitive(rng, d, bound)
        g = complete_to_sl(v)
        ok = ex.det(g) == 1 and tau(g) == v
        cols = ex.transpose(g)
        ok = ok and all(ex.dot(v, cols[j]) == (1 if j == d - 1 else 0) for j in range(d))
        bad += not ok
    el = time.perf_counter() - t0
    return CriterionResult(2, "completion and tau contract", {"samples": n, "entries": bound},
                           {"failures": bad, "seconds": round(el, 3)}, {"failures": 0, "seconds": limit},
                           bad == 0 and el < limit, el)


def criterion_3(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 3)
    n = cfg.int("c3_samples")
    forms = [Q4(), random_standing_form(4, rng)]
    t0 = time.perf_counter()
    bad = 0
    for i in range(n):
        q = forms[i % 2]
        g = random_sl(4, rng)
        t = tau(g)
        mt = ex.matvec(q.gram, t)
        minv = ex.inverse(q.gram)
        cols = ex.transpose(g)
        ok = all(ex.dot(cols[j], ex.matvec(minv, mt)) == (1 if j == 3 else 0) for j in range(4))
        ok = ok and dual_restriction(q, g).det() * q.disc == evaluate(q, t)
        bad += not ok
    el = time.perf_counter() - t0
    return CriterionResult(3, "dual-form identities", {"samples": n, "forms": [f.gram for f in forms]},
                           bad, 0, bad == 0, el)


def _random_symmetric(rng: random.Random, d: int, det_bound: int) -> list[list[int]]:
    # an occasional scalar factor makes the gcd nontrivial
    while True:
        c = rng.choice((1, 1, 1, 2))
        a = [[0] * d for _ in range(d)]
        for i in range(d):
            for j in range(i, d):
                a[i][j] = a[j][i] = c * rng.randint(-3, 3)
        dt = ex.det(a)
        if dt != 0 and abs(dt) <= det_bound:
            return a


def criterion_4(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 4)
    n, det_bound = cfg.int("c4_samples"), cfg.int("c4_det_bound")
    t0 = time.perf_counter()
    worst = Fraction(0)
    bad = 0
    for _ in range(n):
        a = _random_symmetric(rng, 4, det_bound)
        g = random_sl(4, rng)
        ghat = ex.columns(g, range(3))
        r = ex.matmul(ex.transpose(ghat), ex.matmul(a, ghat))
        gg = ex.vector_gcd([x for row in r for x in row])
        da = abs(ex.det(a))
        worst = max(worst, Fraction(gg, da))
        bad += gg > da
    el = time.perf_counter() - t0
    return CriterionResult(4, "gcd of restricted form at most |det A|", {"samples": n, "det_bound": det_bound},
                           {"violations": bad, "max_gcd_over_det": float(worst)}, {"violations": 0},
                           bad == 0, el)


def criterion_5(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 5)
    levels = cfg.floats("c5_levels")
    rtol, dtol = cfg.float("c5_tau_rtol"), cfg.float("c5_det_tol")
    forms = [diagonal_form(1, 1, 1, 1), Q4(), random_standing_form(4, rng)]
    t0 = time.perf_counter()
    worst_tau = worst_det = 0.0
    for q in forms:
        for t in levels:
            a = make_aT(q, t)
            tv = tau(a)
            e = np.zeros(4)
            e[-1] = math.sqrt(t)
            worst_tau = max(worst_tau, float(np.linalg.norm(tv - e)) / math.sqrt(t))
            worst_det = max(worst_det, abs(float(np.linalg.det(a)) - 1))
    el = time.perf_counter() - t0
    return CriterionResult(5, "a_T: tau(a_T) = sqrt(T) e_d and det 1",
                           {"forms": [f.gram for f in forms], "T": levels},
                           {"tau_rel": worst_tau, "det": worst_det}, {"tau_rel": rtol, "det": dtol},
                           worst_tau <= rtol and worst_det <= dtol, el)


def criterion_6(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 6)
    q = Q4()
    nv = cfg.int("c6_vectors")
    rtol = cfg.float("c6_defect_rtol")
    target, tol = cfg.float("c6_slope"), cfg.float("c6_slope_tol")
    ts = np.logspace(2, 8, 13)
    vs = []
    while len(vs) < nv:
        v = _random_primitive(rng, 4, 20)
        if evaluate(q, v) != 0 and any(v[:3]) and v[3] != 0:
            vs.append(v)
    t0 = time.perf_counter()
    worst_def = 0.0
    slopes = []
    for v in vs:
        for t in ts:
            b = unipotent_comparator(q, v, t)
            err = np.linalg.norm(b.defect - b.predicted_defect) / np.linalg.norm(b.predicted_defect)
            worst_def = max(worst_def, float(err))
        slopes.append(residual_decay(q, v, ts)[1])
    dev = max(abs(s - target) for s in slopes)
    el = time.perf_counter() - t0
    return CriterionResult(6, "unipotent comparison: defect identity and decay slope",
                           {"vectors": vs, "T": [float(x) for x in ts]},
                           {"defect_rel": worst_def, "max_slope_dev": dev}, {"defect_rel": rtol, "slope_tol": tol},
                           worst_def <= rtol and dev <= tol, el, detail={"slopes": slopes})


def criterion_7(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 7)
    q = Q4()
    moduli, pairs, limit = cfg.ints("c7_moduli"), cfg.int("c7_pairs"), cfg.float("c7_time_limit")
    t0 = time.perf_counter()
    bad = 0
    for mod in moduli:
        units = [a for a in range(mod) if math.gcd(a, mod) == 1]
        tables = {a: enumerate_residue_levelset(q, mod, a).elements for a in units}
        for _ in range(pairs):
            a = rng.choice(units)
            v1, v2 = rng.choice(tables[a]), rng.choice(tables[a])
            gamma = transitivity_witness(q, mod, v1, v2)
            bad += not check_witness(q, mod, gamma, v1, v2)
    el = time.perf_counter() - t0
    return CriterionResult(7, "mod-q transitivity witnesses", {"moduli": moduli, "pairs": pairs},
                           {"failures": bad, "seconds": round(el, 3)}, {"failures": 0, "seconds": limit},
                           bad == 0 and el < limit, el)


def criterion_8(cfg: Config) -> CriterionResult:
    q = Q4()
    primes, ks, seeds = cfg.ints("c8_primes"), cfg.ints("c8_precisions"), cfg.int("c8_seeds")
    base = cfg.int("seed")
    t0 = time.perf_counter()
    bad = 0
    m = q.matrix
    for p in primes:
        for k in ks:
            for s in range(seeds):
                f = random_orthogonal_mod(q, p**k, random.Random(base + 1000 * p + 100 * k + s))
                f2 = lift_orthogonal_step(q, p, k, f)
                mod = p ** (2 * k)
                lhs = ex.mat_mod(ex.matmul(ex.transpose(f2), ex.matmul(m, f2)), mod)
                bad += lhs != ex.mat_mod(m, mod)
    el = time.perf_counter() - t0
    return CriterionResult(8, "orthogonal lifting step mod p^{2k}", {"primes": primes, "k": ks, "seeds": seeds},
                           bad, 0, bad == 0, el)


def criterion_9(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 9)
    q = Q4()
    npts, nmax, pmax = cfg.int("c9_points"), cfg.int("c9_level_max"), cfg.int("c9_prime_max")
    t0 = time.perf_counter()
    pool = []
    for n in range(1, nmax + 1):
        h = math.isqrt(n - 1) + 1 + 2
        pool.extend(tuple(int(x) for x in v) for v in enum_hyperbolic_sliced(q, n, h).points)
    pts = rng.sample(pool, npts)
    bad4 = 0
    for v in pts:
        flag, cert = coisotropic(q, v, 5)
        bad4 += not (flag and verify_certificate(q, v, cert))
    q6 = random_standing_form(6, rng)
    primes = [p for p in range(3, pmax + 1, 2) if ex.is_prime(p)]
    vs6 = [[0] * 5 + [1]]
    while len(vs6) < 5:
        v = _random_primitive(rng, 6, 5)
        if evaluate(q6, v) != 0:
            vs6.append(v)
    bad6 = 0
    for v in vs6:
        for p in primes:
            flag, cert = coisotropic(q6, v, p)
            bad6 += not (flag and verify_certificate(q6, v, cert))
    el = time.perf_counter() - t0
    return CriterionResult(9, "co-isotropy with verified witnesses",
                           {"Q4_points": npts, "levels": [1, nmax], "d6_form": q6.gram, "d6_vectors": vs6,
                            "primes": primes},
                           {"Q4_failures": bad4, "d6_failures": bad6}, 0, bad4 == 0 and bad6 == 0, el)


def criterion_10(cfg: Config) -> CriterionResult:
    rng = _rng(cfg, 10)
    primes, k, ns = cfg.ints("c10_primes"), cfg.int("c10_precision"), cfg.int("c10_product_samples")
    t0 = time.perf_counter()
    mism = 0
    pairs = 0
    for p in primes:
        for a in oracles.square_classes(p):
            for b in oracles.square_classes(p):
                pairs += 1
                mism += hilbert_symbol(a, b, p) != oracles.hilbert_symbol_search(a, b, p, k)
    prod_bad = 0
    for _ in range(ns):
        a, b = (Fraction(rng.choice([-1, 1]) * rng.randint(1, 2000), rng.randint(1, 2000)) for _ in range(2))
        places = {2}
        for x in (a.numerator, a.denominator, b.numerator, b.denominator):
            places |= set(ex.factorize(abs(x)))
        prod = hilbert_symbol(a, b, INF)
        for p in places:
            prod *= hilbert_symbol(a, b, p)
        prod_bad += prod != 1
    el = time.perf_counter() - t0
    return CriterionResult(10, "Hilbert symbol vs local solvability search; product formula",
                           {"primes": primes, "precision": k, "pairs": pairs, "product_samples": ns},
                           {"mismatches": mism, "product_failures": prod_bad}, 0, mism == 0 and prod_bad == 0, el)


def criterion_11(cfg: Config) -> CriterionResult:
    dmax, hmax_n, hmax = cfg.int("c11_definite_max"), cfg.int("c11_hyperbolic_max"), cfg.int("c11_height_max")
    t0 = time.perf_counter()
    i4 = diagonal_form(1, 1, 1, 1)
    levels = list(range(1, dmax + 1))
    ref = oracles.box_levelsets(i4, levels, math.isqrt(dmax))
    bad_def = sum(set(map(tuple, enum_definite(i4, n).points.tolist())) != ref[n] for n in levels)
    q = Q4()
    pts = oracles._box(4, hmax)
    vals = np.einsum("ij,jk,ik->i", pts, q.array(), pts)
    prim = np.gcd.reduce(np.abs(pts), axis=1) == 1
    bad_hyp = cases = 0
    for n in range(1, hmax_n + 1):
        for h in range(math.isqrt(n - 1) + 1, hmax + 1):
            cases += 1
            keep = (vals == n) & prim & (np.abs(pts[:, 3]) <= h)
            want = set(map(tuple, pts[keep].tolist()))
            got = set(map(tuple, enum_hyperbolic_sliced(q, n, h).points.tolist()))
            bad_hyp += got != want
    el = time.perf_counter() - t0
    return CriterionResult(11, "enumeration equals box brute force",
                           {"definite_levels": dmax, "hyperbolic_levels": hmax_n, "height_max": hmax,
                            "hyperbolic_cases": cases},
                           {"definite_mismatch": bad_def, "hyperbolic_mismatch": bad_hyp}, 0,
                           bad_def == 0 and bad_hyp == 0, el)


# -- statistical criteria -------------------------------------------------------


def _strictly_decreasing_or_null(seq, null_tol=1e-12) -> bool:
    if all(abs(x) <= null_tol for x in seq):
        return True
    return all(b < a for a, b in zip(seq, seq[1:]))


def criterion_12(cfg: Config) -> CriterionResult:
    levels, kmax, scale = cfg.ints("c12_levels"), cfg.int("c12_kmax"), cfg.float("c12_scale")
    limit = cfg.float("c12_time_limit")
    i4 = diagonal_form(1, 1, 1, 1)
    t0 = time.perf_counter()
    ws, ns = [], []
    for n in levels:
        pts = enum_definite(i4, n).points
        ws.append(zonal_sum_test(pts / math.sqrt(n), kmax))
        ns.append(len(pts))
    ws = np.array(ws)
    mono = [_strictly_decreasing_or_null(list(ws[:, k])) for k in range(kmax)]
    bound = scale / ns[-1]
    el = time.perf_counter() - t0
    passed = all(mono) and bool(np.all(ws[-1] <= bound)) and el < limit
    return CriterionResult(12, "zonal statistics on S^3 for Q=I_4",
                           {"levels": levels, "kmax": kmax, "points": ns},
                           {"W": ws.tolist(), "monotone_per_k": mono, "W_last_times_n": (ws[-1] * ns[-1]).tolist()},
                           {"W_last": bound, "monotone": True, "seconds": limit}, passed, el, calibrated=True)


@functools.lru_cache(maxsize=4)
def _q4_window(level: int, height: int):
    q = Q4()
    orb = hyperbolic_orbit_reps(q, level, height)
    pts = expand_orbits(orb.reps, orb.groups)
    return orb, pts


def criterion_13(cfg: Config) -> CriterionResult:
    levels, heights = cfg.ints("c13_levels"), cfg.ints("c13_heights")
    mod, rmax = cfg.int("c13_modulus"), cfg.float("c13_ratio_max")
    q = Q4()
    t0 = time.perf_counter()
    ratios, sizes = [], []
    for n, h in zip(levels, heights):
        if n % mod != 1:
            raise ValueError("levels must be 1 modulo the modulus")
        table = enumerate_residue_levelset(q, mod, n % mod)
        _, pts = _q4_window(n, h)
        stat, dof = chi_square_residues(pts, table)
        ratios.append(stat / dof)
        sizes.append(len(pts))
    dec = all(b < a for a, b in zip(ratios, ratios[1:]))
    el = time.perf_counter() - t0
    return CriterionResult(13, "residues mod 5 uniform on H_1(Z/5)",
                           {"levels": levels, "heights": heights, "modulus": mod, "points": sizes,
                            "table_size": table.size},
                           {"chi2_per_dof": ratios, "decreasing": dec}, {"last": rmax, "decreasing": True},
                           dec and ratios[-1] <= rmax, el, calibrated=True)


def criterion_14(cfg: Config) -> CriterionResult:
    levels, radius, kmax = cfg.ints("c14_levels"), cfg.int("c14_radius"), cfg.float("c14_ks_max")
    t0 = time.perf_counter()
    ball = ball_orbit_reps(5, radius)
    mb = minima_batch(ball.reps)
    rb = mb[:, 1] / mb[:, 0]
    i5 = diagonal_form(1, 1, 1, 1, 1)
    dists, sizes = [], []
    for n in levels:
        orb = definite_orbit_reps(i5, n)
        m = minima_batch(orb.reps)
        dists.append(ks_two_sample(m[:, 1] / m[:, 0], rb, wa=orb.weights, wb=ball.weights))
        sizes.append(orb.total)
    dec = all(b < a for a, b in zip(dists, dists[1:]))
    el = time.perf_counter() - t0
    return CriterionResult(14, "shape feature lambda2/lambda1 vs primitive-ball baseline",
                           {"levels": levels, "radius": radius, "points": sizes, "baseline_points": ball.total},
                           {"ks": dists, "decreasing": dec}, {"last": kmax, "decreasing": True},
                           dec and dists[-1] <= kmax, el, calibrated=True)


def criterion_15(cfg: Config) -> CriterionResult:
    levels, heights = cfg.ints("c13_levels"), cfg.ints("c13_heights")
    mod, rmax = cfg.int("c15_modulus"), cfg.float("c15_ratio_max")
    min_exp = cfg.float("c15_min_expected")
    n, h = levels[-1], heights[-1]
    q = Q4()
    t0 = time.perf_counter()
    orb, pts = _q4_window(n, h)
    mins = minima_batch(orb.reps)
    ratio = (mins[:, 1] / mins[:, 0])[orbit_index(pts, orb)]
    qs = np.quantile(ratio, [0.25, 0.5, 0.75])
    shape_bin = np.searchsorted(qs, ratio, side="right")
    code = (pts % mod) @ (mod ** np.arange(q.dim, dtype=np.int64))
    _, residue = np.unique(code, return_inverse=True)
    radius = math.sqrt(h * h * q.q_ed / n - 1)
    integ = LerayIntegrator(q, seed=cfg.int("seed"), radius=radius)
    direction = integ.ring_cells(4)(pts / math.sqrt(n))
    if np.any(direction < 0):
        raise AssertionError("window points fall outside the chart window")
    res = joint_contingency([shape_bin, residue, direction], min_expected=min_exp)
    pair = {}
    for name, fs in (("shape_residue", [shape_bin, residue]), ("shape_direction", [shape_bin, direction]),
                     ("residue_direction", [residue, direction])):
        r = joint_contingency(fs, min_expected=min_exp)
        pair[name] = r.ratio
    # both factors are constant on symmetry orbits; one count per orbit
    rep_ratio = mins[:, 1] / mins[:, 0]
    rep_dir = integ.ring_cells(4)(orb.reps / math.sqrt(n))
    orbit_level = joint_contingency([np.searchsorted(qs, rep_ratio, side="right"), rep_dir],
                                    min_expected=min_exp).ratio
    el = time.perf_counter() - t0
    return CriterionResult(15, "joint independence shape x residue x direction",
                           {"level": n, "height": h, "modulus": mod, "points": len(pts),
                            "factors": "lambda2/lambda1 quartiles x residues x 4 equal-mass height rings"},
                           {"chi2_per_dof": res.ratio, "dof": res.dof}, rmax, res.ratio <= rmax, el,
                           calibrated=True, detail={"pairwise_chi2_per_dof": pair,
                                                   "orbit_level_shape_direction": orbit_level,
                                                   "mean_orbit_size": float(orb.weights.mean())})


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 16)}


def run_criterion(n: int, cfg: Config | None = None) -> CriterionResult:
    cfg = cfg or load_config()
    t0 = time.perf_counter()
    res = CRITERIA[n](cfg)
    res.elapsed = time.perf_counter() - t0
    return res


def run_all(cfg: Config | None = None, only=None) -> list[CriterionResult]:
    cfg = cfg or load_config()
    return [run_criterion(n, cfg) for n in (only or sorted(CRITERIA))]
