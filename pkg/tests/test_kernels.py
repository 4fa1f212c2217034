import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weightflow import kernels as K

unit = st.floats(-1.0, 1.0, allow_nan=False)


def test_sin2_closed_form(phi):
    assert phi(np.array([0.1]))[0] == pytest.approx(1.0, abs=1e-15)
    assert phi(np.array([-0.1]))[0] == pytest.approx(-1.0, abs=1e-15)
    assert phi(np.array([0.0]))[0] == 0.0
    assert phi(np.array([0.25]))[0] == 0.0


def test_sin2_rejects_bad_radius():
    with pytest.raises(ValueError):
        K.kernel_sin2(0.0)


@given(st.floats(-1, 1, allow_nan=False))
def test_sin2_odd(d):
    phi = K.kernel_sin2(0.2)
    assert phi(np.array([d]))[0] == -phi(np.array([-d]))[0]


def test_sin2_lipschitz_bound(phi, rng):
    u = rng.uniform(-0.5, 0.5, (20000, 1))
    v = u + rng.normal(scale=0.02, size=u.shape)
    q = np.abs(phi(u) - phi(v))[:, 0] / np.abs(u - v)[:, 0]
    assert q.max() <= phi.lipschitz
    assert phi.params["sampled_lipschitz"] <= 1.05 * phi.lipschitz


def test_sin2_lipschitz_in_two_dimensions(rng):
    phi = K.kernel_sin2(0.3)
    u = rng.uniform(-0.4, 0.4, (20000, 2))
    v = u + rng.normal(scale=0.02, size=u.shape)
    q = np.linalg.norm(phi(u) - phi(v), axis=1) / np.linalg.norm(u - v, axis=1)
    assert q.max() <= phi.lipschitz


def test_direction_smoother():
    d = K.direction(np.array([[0.0], [2.0], [-1.0]]))[:, 0]
    assert d[0] == 0.0
    assert d[1] == pytest.approx(np.arctan(2.0))
    assert d[2] == pytest.approx(-np.pi / 4)


def test_m1_skew_exact(m1, rng):
    x, y, z = (rng.uniform(-1, 1, (1000, 1)) for _ in range(3))
    assert np.max(np.abs(m1(x, y, z) + m1(y, x, z))) <= 1e-15


@given(unit, unit)
def test_m1_diagonal_vanishes(x, z):
    S = K.source_m1(K.kernel_sin2(0.2), 100.0)
    assert S(np.array([x]), np.array([x]), np.array([z])) == 0.0


def test_m1_beta_zero(phi, rng):
    S = K.source_m1(phi, 0.0)
    args = [rng.uniform(-1, 1, (50, 1)) for _ in range(3)]
    assert np.all(S(*args) == 0.0)


def test_m1_lipschitz_on_ball(m1, rng):
    L = m1.lipschitz_on(2.0)
    a = [rng.uniform(-2, 2, (20000, 1)) for _ in range(3)]
    b = [v + rng.normal(scale=0.01, size=v.shape) for v in a]
    num = np.abs(m1(*a) - m1(*b))
    den = np.sqrt(sum(np.sum((u - v) ** 2, axis=1) for u, v in zip(a, b)))
    assert np.max(num / den) <= L


def test_m1_bound_contains_samples(m1, rng):
    S_bar = m1.bound(0.5, center=[0.5])
    vals = m1(*(rng.uniform(0, 1, (5000, 1)) for _ in range(3)))
    assert np.max(np.abs(vals)) <= S_bar
    assert S_bar <= 100 * np.pi / 2


def test_linear_source():
    S = K.source_linear_appendixB()
    assert S(np.array([1.0]), np.array([-1.0])) == 2.0
    assert S(np.array([0.3]), np.array([0.3])) == 0.0
    with pytest.raises(TypeError):
        S(np.array([1.0]))


@pytest.mark.parametrize("source", [K.source_m1(K.kernel_sin2(0.2), 100.0), K.source_linear_appendixB()])
def test_validate_skew_passes(source):
    rep = K.validate_skew(source, samples=1000, seed=3)
    assert rep.passed and rep.max_defect <= 1e-12


def test_validate_skew_catches_symmetric_kernel():
    bad = K.SourceKernel(arity=1, func=lambda x, y: (x + y)[..., 0], name="sum")
    rep = K.validate_skew(bad, samples=200)
    assert not rep.passed and rep.max_defect > 0


def test_validate_skew_needs_samples(m1):
    with pytest.raises(ValueError):
        K.validate_skew(m1, samples=0)


def test_two_atom_field():
    v = K.two_atom_field()
    x = np.array([[-2.0], [-0.5], [0.5], [1.0], [3.0]])
    assert np.allclose(v.pair(x, np.zeros_like(x))[:, 0], [-1.0, -0.5, 0.5, 1.0, 1.0])


def test_presets():
    assert K.from_preset("sin2(0.2)").fast_sin2 == 0.2
    s = K.from_preset("m1(100, 0.2)")
    assert s.arity == 2 and s.params["beta"] == 100.0
    assert K.from_preset("appendixB_linear").arity == 1
    with pytest.raises(ValueError):
        K.from_preset("gauss(1)")
