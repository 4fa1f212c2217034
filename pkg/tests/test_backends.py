"""The compiled kernels and the numpy fallback must agree."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weightflow._core import BACKENDS, get_backend

compiled = pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")
PY = BACKENDS["python"]


def _case(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 1.5, n)
    x[: n // 4] = x[0]  # coincident points exercise the zero-displacement branch
    w = rng.normal(size=n)
    w[::5] = 0.0
    return x, w, rng.normal(size=n)


@compiled
@given(st.integers(0, 10**6), st.integers(1, 60))
def test_velocity_agrees(seed, n):
    x, w, _ = _case(seed, n)
    C = BACKENDS["compiled"]
    assert np.allclose(C.sin2_self_velocity(x, w, 0.2), PY.sin2_self_velocity(x, w, 0.2), rtol=0, atol=1e-13)
    t = x[::-1] + 0.01
    assert np.allclose(C.sin2_velocity(t, x, w, 0.3), PY.sin2_velocity(t, x, w, 0.3), rtol=0, atol=1e-13)


@compiled
@given(st.integers(0, 10**6), st.integers(1, 60))
def test_growth_agrees(seed, n):
    x, w, a = _case(seed, n)
    C = BACKENDS["compiled"]
    assert np.allclose(C.m1_growth(x, w, a, 100.0), PY.m1_growth(x, w, a, 100.0), rtol=0, atol=1e-11)


@compiled
@given(st.integers(0, 10**6), st.integers(1, 40), st.integers(1, 30))
def test_deposit_agrees(seed, n, cells):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.0, 1.0, n)
    p[0] = 0.0
    m = rng.random(n)
    C = BACKENDS["compiled"]
    a, ia = C.cic_deposit(p, m, 0.0, 1.0 / cells, cells)
    b, ib = PY.cic_deposit(p, m, 0.0, 1.0 / cells, cells)
    assert ia == ib == -1
    assert np.allclose(a, b, rtol=0, atol=1e-14)
    assert a.sum() == pytest.approx(m.sum(), abs=1e-13)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_deposit_reports_exit(name):
    k = get_backend(name)
    _, bad = k.cic_deposit(np.array([0.5, 1.2]), np.array([1.0, 1.0]), 0.0, 0.25, 4)
    assert bad == 1
    _, bad = k.cic_deposit(np.array([0.5, 1.2]), np.array([1.0, 0.0]), 0.0, 0.25, 4)
    assert bad == -1


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_deposit_at_centres_is_identity(name):
    k = get_backend(name)
    centres = (np.arange(8) + 0.5) / 8
    m = np.arange(8, dtype=float)
    out, _ = k.cic_deposit(centres, m, 0.0, 1 / 8, 8)
    assert np.array_equal(out, m)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_single_cell_grid(name):
    out, bad = get_backend(name).cic_deposit(np.array([0.5]), np.array([2.0]), 0.0, 1.0, 1)
    assert bad == -1 and out.tolist() == [2.0]


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_pure_flag_selects_fallback():
    import subprocess
    import sys

    code = "from weightflow._core import BACKEND; print(BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"WEIGHTFLOW_PURE": "1", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
