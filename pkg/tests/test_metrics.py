import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog
from scipy.stats import wasserstein_distance

from weightflow import metrics as mt
from weightflow.measures import AtomicMeasure, GridMeasure, grid_from_density


def lp_oracle(mu, nu, a=1.0, b=1.0):
    d = (mu - nu).canonical()
    if d.size == 0:
        return 0.0
    order = np.argsort(d.x)
    x, c = d.x[order], d.weights[order]
    scale = np.abs(c).max()
    c = c / scale  # the solver treats tiny costs as zero
    n = len(c)
    rows, rhs = [], []
    for i in range(n - 1):
        r = np.zeros(n)
        r[i + 1], r[i] = 1.0, -1.0
        rows += [r, -r]
        rhs += [b * (x[i + 1] - x[i])] * 2
    res = linprog(-c, A_ub=np.array(rows) if rows else None, b_ub=rhs or None,
                  bounds=[(-a, a)] * n, method="highs")
    # the solver's feasibility tolerance lets f leave the box slightly
    return float(np.dot(c, np.clip(res.x, -a, a))) * scale


def wp_oracle(x1, w1, x2, w2, p):
    """Transport LP over all couplings."""
    n, m = len(x1), len(x2)
    cost = (np.abs(x1[:, None] - x2[None, :]) ** p).ravel()
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1
    for j in range(m):
        A[n + j, j::m] = 1
    res = linprog(cost, A_eq=A, b_eq=np.r_[w1, w2], bounds=(0, None), method="highs")
    return res.fun ** (1 / p)


@st.composite
def probability(draw, max_atoms=8, R=1.0):
    n = draw(st.integers(1, max_atoms))
    x = draw(st.lists(st.floats(-R, R, allow_nan=False), min_size=n, max_size=n))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)))
    return AtomicMeasure(np.array(x), w / w.sum())


@st.composite
def signed(draw, max_atoms=8):
    n = draw(st.integers(0, max_atoms))
    x = draw(st.lists(st.floats(-4, 4, allow_nan=False), min_size=n, max_size=n))
    w = draw(st.lists(st.floats(-2, 2, allow_nan=False), min_size=n, max_size=n))
    return AtomicMeasure(np.array(x, dtype=float).reshape(-1, 1), np.array(w, dtype=float))


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 3.0, 10.0])
def test_dirac_pairs(c):
    d0, dc = AtomicMeasure.dirac(0.0), AtomicMeasure.dirac(c)
    assert mt.bl_distance(d0, dc) == pytest.approx(min(c, 2.0), abs=1e-9)
    for p in (1, 2, 3):
        assert mt.wasserstein_p_1d(d0, dc, p) == pytest.approx(c, abs=1e-12)


def test_two_atom_example():
    mu = AtomicMeasure([0.0, 1.0], [0.5, 0.5])
    nu = AtomicMeasure([0.0, 2.0], [0.5, 0.5])
    assert mt.wasserstein_p_1d(mu, nu, 1) == pytest.approx(0.5)
    assert mt.wasserstein_p_1d(mu, nu, 2) == pytest.approx(1 / np.sqrt(2))


def test_self_distance_zero(rng):
    mu = AtomicMeasure(rng.random(10), np.full(10, 0.1))
    assert mt.wasserstein_p_1d(mu, mu, 2) == 0.0
    assert mt.bl_distance(mu, mu) == 0.0


def test_wasserstein_input_checks():
    with pytest.raises(ValueError):
        mt.wasserstein_p_1d(AtomicMeasure([0.0], [2.0]), AtomicMeasure([0.0], [1.0]))
    with pytest.raises(ValueError):
        mt.wasserstein_p_1d(AtomicMeasure([0.0, 1.0], [1.5, -0.5]), AtomicMeasure([0.0], [1.0]))
    two_d = AtomicMeasure([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        mt.wasserstein_p_1d(two_d, two_d)
    with pytest.raises(ValueError):
        mt.bounded_lipschitz(two_d, two_d)


@given(probability(), probability())
def test_w1_matches_scipy(mu, nu):
    ref = wasserstein_distance(mu.x, nu.x, mu.weights, nu.weights)
    assert mt.wasserstein_p_1d(mu, nu, 1) == pytest.approx(ref, abs=1e-12)


@given(probability(max_atoms=5), probability(max_atoms=5), st.sampled_from([2, 3]))
def test_wp_matches_transport_lp(mu, nu, p):
    ref = wp_oracle(mu.x, mu.weights, nu.x, nu.weights, p)
    assert mt.wasserstein_p_1d(mu, nu, p) == pytest.approx(ref, abs=1e-7)


@given(signed(), signed(), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_flat_distance_matches_lp(mu, nu, a, b):
    rep = mt.bounded_lipschitz(mu, nu, a, b)
    # oracle accuracy is limited by the solver tolerances; the certificate is exact
    assert rep.value == pytest.approx(lp_oracle(mu, nu, a, b), abs=1e-6)
    if rep.certificate["x"]:
        assert rep.check_certificate(rep.certificate["c"], a, b)


@given(signed(), signed())
def test_flat_bound_by_total_variation(mu, nu):
    assert mt.bl_distance(mu, nu) <= mu.total_variation + nu.total_variation + 1e-12


@given(probability(), probability(), probability())
def test_symmetry_and_triangle(a, b, c):
    for d in (mt.bl_distance, lambda x, y: mt.wasserstein_p_1d(x, y, 1)):
        assert d(a, b) == pytest.approx(d(b, a), abs=1e-10)
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-10


@given(signed(), signed(), signed())
def test_common_part_cancels(mu, nu, sigma):
    assert mt.bl_distance(mu + sigma, nu + sigma) == pytest.approx(mt.bl_distance(mu, nu), abs=1e-10)


@given(signed(), signed(), signed(), signed())
def test_subadditive(m1, m2, n1, n2):
    lhs = mt.bl_distance(m1 + n1, m2 + n2)
    assert lhs <= mt.bl_distance(m1, m2) + mt.bl_distance(n1, n2) + 1e-10


@given(probability(R=0.9), probability(R=0.9))
def test_dual_without_box_is_w1(mu, nu):
    # supports have diameter < 2, so the box |f| <= 1 cannot bind
    assert mt.bl_distance(mu, nu) == pytest.approx(mt.wasserstein_p_1d(mu, nu, 1), abs=1e-10)


def test_grid_distances():
    g = GridMeasure(0.0, 1.0, [0.5, 0.5])
    a = AtomicMeasure([0.25, 0.75], [0.5, 0.5])
    for which in ("W1", "Wp", "BL"):
        assert mt.distance_between_grid(g, a, which) == 0.0
    with pytest.raises(ValueError):
        mt.distance_between_grid(g, a, "TV")


@pytest.mark.parametrize("G", [10, 40, 160])
def test_grid_refinement_distance(G):
    f = lambda x: 1 + np.sin(3 * x) ** 2
    a = grid_from_density(f, None, (0.0, 1.0), G)
    b = grid_from_density(f, None, (0.0, 1.0), 2 * G)
    assert mt.distance_between_grid(a, b, "W1") <= 1 / (2 * G)


def test_inequality_report(tmp_path):
    samples = ((s, *mt.random_pair(s, 1.0)) for s in range(100))
    rep = mt.check_metric_inequalities(samples, 1.0)
    assert rep.pairs == 100 and rep.passed
    rep.write(tmp_path / "r.json")
    import json
    assert set(json.loads((tmp_path / "r.json").read_text())) == {"pairs", "max_violation", "worst_pair_seed"}


def test_inequalities_far_apart():
    v = mt.pair_violations(AtomicMeasure.dirac(0.0), AtomicMeasure.dirac(3.0), 3.0)
    assert max(v.values()) == 0.0
    with pytest.raises(ValueError):
        mt.pair_violations(AtomicMeasure.dirac(0.0), AtomicMeasure.dirac(3.0), 1.0)
