import os
import subprocess
import sys

import numpy as np
import pytest

from stackdec import kernels
from stackdec._pykernels import _compositions

ENGINES = kernels.available_backends()
needs_both = pytest.mark.skipif(len(ENGINES) < 2, reason="compiled extension not built")


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.get_backend() is kernels.get_backend(kernels.BACKEND)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_forces_fallback():
    code = "from stackdec import kernels; print(kernels.BACKEND)"
    env = {**os.environ, "STACKDEC_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_compositions_count_and_order():
    comps = _compositions(4, 3)
    assert comps.shape == (15, 3)
    assert np.all(comps.sum(axis=1) == 4)
    assert [tuple(r) for r in comps] == sorted(tuple(r) for r in comps)
    assert not comps.flags.writeable


def _tableau(seed):
    rng = np.random.default_rng(seed)
    m, n = 4, 6
    A = rng.uniform(0.1, 2, (m, n))
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = rng.uniform(1, 5, m)
    T[m, :n] = -rng.uniform(0, 3, n)
    return T, np.arange(n, n + m, dtype=np.int64)


@needs_both
@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("rule", [kernels.RULE_BLAND, kernels.RULE_DANTZIG])
def test_simplex_backends_agree(seed, rule):
    results = []
    for engine in (ENGINES["cython"], ENGINES["python"]):
        T, basis = _tableau(seed)
        status, its = engine.run_simplex(T, basis, T.shape[1] - 1, 1000, 1e-9, rule)
        results.append((status, its, T, basis))
    (s1, i1, T1, b1), (s2, i2, T2, b2) = results
    assert (s1, i1) == (s2, i2)
    np.testing.assert_array_equal(b1, b2)
    np.testing.assert_allclose(T1, T2, atol=1e-12)


@needs_both
@pytest.mark.parametrize("seed", range(10))
def test_grid_backends_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    r_d, r_a = rng.uniform(-10, 10, (n, n)), rng.uniform(-10, 10, (n, n))
    rows = np.arange(n, dtype=np.int64)
    cols = np.arange(n, dtype=np.int64)
    a = ENGINES["cython"].grid_search(r_d, r_a, rows, cols, 40, 1e-9)
    b = ENGINES["python"].grid_search(r_d, r_a, rows, cols, 40, 1e-9)
    np.testing.assert_array_equal(np.asarray(a[0]), np.asarray(b[0]))
    assert a[1] == pytest.approx(b[1], abs=1e-12)
    assert a[2:] == b[2:]


def test_grid_point_count(backend):
    engine = kernels.get_backend(backend)
    r = np.zeros((3, 3))
    idx = np.arange(3, dtype=np.int64)
    *_, n_points = engine.grid_search(r, r, idx, idx, 10, 1e-9)
    assert n_points == 66
