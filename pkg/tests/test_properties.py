"""Cross-module property tests."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torpot.config import RunConfig, Tolerances, resolve_threads
from torpot.convexfn import check_convexity, discrete_conjugate
from torpot.oracle import brute_legendre

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_2d_conjugate_matches_brute(seed):
    rng = np.random.default_rng(seed)
    ax = np.linspace(-3, 3, 25)
    X = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1)
    A = rng.normal(size=(2, 2))
    f = 0.5 * np.sum((X @ A) ** 2, axis=-1) + np.abs(X[..., 0] - rng.uniform(-1, 1))
    s = [np.linspace(-1, 1, 9), np.linspace(-0.5, 1.5, 7)]
    S = np.stack(np.meshgrid(*s, indexing="ij"), -1).reshape(-1, 2)
    fast = discrete_conjugate([ax, ax], f, s).reshape(-1)
    brute = brute_legendre(X.reshape(-1, 2), f.reshape(-1), S)
    assert np.allclose(fast, brute, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_random_convex_samples_pass_check(seed):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(-5, 5, 60))
    A, b = rng.normal(size=6), rng.normal(size=6)
    f = np.max(np.outer(x, A) + b, axis=1) + rng.uniform(0, 1) * x ** 2
    assert check_convexity(([x], f))[0]


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 58))
def test_bump_is_detected(seed, i):
    rng = np.random.default_rng(seed)
    x = np.linspace(-5, 5, 60)
    f = 0.1 * x ** 2
    f[i] += 0.5 + rng.uniform(0, 1)
    ok, where = check_convexity(([x], f))
    assert not ok and where["indices"][1] == i


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_conjugate_is_convex(seed):
    rng = np.random.default_rng(seed)
    x = np.linspace(-4, 4, 81)
    f = rng.uniform(-1, 1, size=81) + 2 * x ** 2
    s = np.linspace(-3, 3, 61)
    G = discrete_conjugate([x], f, [s])
    assert check_convexity(([s], G), tol=1e-9)[0]


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(grid_resolution=8)
    with pytest.raises(ValueError):
        RunConfig(radii=(16, 8))
    with pytest.raises(ValueError):
        RunConfig(format="xml")
    assert RunConfig().resolution(1) == 512 and RunConfig().resolution(2) == 256
    assert RunConfig(radii=[1, 2]).radii == (1.0, 2.0)
    with pytest.raises(ValueError):
        Tolerances().override(nope=1)
    assert Tolerances().override(div=0.1).div == 0.1


def test_thread_resolution(monkeypatch):
    monkeypatch.setenv("TORPOT_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(2) == 2
    with pytest.raises(ValueError):
        resolve_threads(0)
