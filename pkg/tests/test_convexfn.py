import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torpot.config import RunConfig
from torpot.convexfn import (ConvexFunctionRep, NonConvexError, biconjugate, check_convexity,
                             discrete_conjugate, gradient_range, legendre_transform,
                             subgradient)
from torpot.oracle import brute_legendre
from torpot.polytope import DelzantPolytope
from torpot.potentials import fubini_study, fubini_study_dual


def _cf(fn, grad=None, kinks=()):
    return ConvexFunctionRep.closed_form(
        1, lambda x: fn(np.asarray(x, dtype=float)[..., 0]),
        None if grad is None else (lambda x: grad(np.asarray(x, dtype=float))),
        kinks=kinks)


QUAD = _cf(lambda x: 0.5 * x * x, lambda x: x)
RELU = _cf(lambda x: np.maximum(x, 0.0), kinks=(0.0,))


def test_quadratic_is_self_dual():
    P = DelzantPolytope.interval(-2, 2)
    G = legendre_transform(QUAD, P, RunConfig(grid_resolution=2048), radii=(4, 8))
    inside = G.inside()
    assert G.finite_mask[inside].all()
    s = G.points()[inside][:, 0]
    assert np.max(np.abs(G.values[inside] - s * s / 2)) <= 1e-3


def test_exponential_transform():
    P = DelzantPolytope.interval(-1, 1)
    G = legendre_transform(_cf(np.exp, np.exp), P, RunConfig(grid_resolution=512),
                           radii=(8, 16, 32))
    s = G.points()[:, 0]
    assert G.values[np.argmin(np.abs(s))] == pytest.approx(0.0, abs=1e-6)
    assert not G.finite_mask[s < -1e-9].any()
    pos = G.finite_mask & (s > 1e-3)
    ref = s[pos] * np.log(s[pos]) - s[pos]
    assert np.max(np.abs(G.values[pos] - ref)) <= 1e-3


def test_fubini_study_transform():
    P = DelzantPolytope.interval()
    G = legendre_transform(fubini_study(1), P, RunConfig(grid_resolution=2048))
    sel = G.finite_mask & (P.signed_distance(G.points()) >= 0.05)
    ref = fubini_study_dual(G.points()[sel])
    assert np.max(np.abs(G.values[sel] - ref)) <= 1e-3
    outside = P.signed_distance(G.points()) < -1e-9
    assert not G.finite_mask[outside].any()


def test_transform_matches_brute_force():
    P = DelzantPolytope.interval()
    G = legendre_transform(fubini_study(1), P, RunConfig(grid_resolution=64), radii=(8, 16))
    xs = np.linspace(-16, 16, 20001)
    f = np.asarray(fubini_study(1)(xs[:, None]))
    pts = G.points()[G.finite_mask]
    ref = brute_legendre(xs, f, pts)
    assert np.max(np.abs(G.values[G.finite_mask] - ref)) <= 1e-3


def _core_error(F, P, config, radii):
    Fss = biconjugate(F, P, config, radii=radii)
    return float(np.max(np.abs(Fss.values - F.sample(Fss.axes))))


def test_biconjugate_abs():
    F = _cf(np.abs, kinks=(0.0,))
    assert _core_error(F, DelzantPolytope.interval(-1, 1), RunConfig(grid_resolution=512),
                       (5, 10)) <= 1e-9


def test_biconjugate_relu_exact():
    assert _core_error(RELU, DelzantPolytope.interval(), RunConfig(grid_resolution=512),
                       (5, 10)) <= 1e-6


def test_biconjugate_fubini_study():
    assert _core_error(fubini_study(1), DelzantPolytope.interval(),
                       RunConfig(grid_resolution=2048), (6, 12)) <= 1e-3


def test_gridded_nonconvex_input_rejected():
    x = np.linspace(0, 2 * np.pi, 101)
    F = ConvexFunctionRep.gridded([x - np.pi], np.sin(x))
    with pytest.raises(NonConvexError):
        legendre_transform(F, DelzantPolytope.interval(-1, 1))


def test_subgradients():
    assert subgradient(QUAD, [3.0]).vector[0] == pytest.approx(3.0)
    lo, hi = subgradient(RELU, [0.0]).interval
    assert lo == pytest.approx(0.0, abs=1e-6) and hi == pytest.approx(1.0, abs=1e-6)
    assert subgradient(fubini_study(1), [0.0]).vector[0] == pytest.approx(0.5)


def test_gradient_ranges():
    gr = gradient_range(RELU, 10)
    assert gr.lo[0] >= -1e-9 and gr.hi[0] <= 1 + 1e-9
    gr = gradient_range(_cf(lambda x: 2 * x), 10)
    assert np.allclose(gr.samples, 2.0)
    small, big = gradient_range(fubini_study(2), 4), gradient_range(fubini_study(2), 16)
    assert np.all(small.samples > 0) and np.all(small.samples.sum(axis=1) < 1)
    assert np.all(big.lo <= small.lo) and np.all(big.hi >= small.hi)
    assert np.allclose(big.lo, 0, atol=1e-6) and np.allclose(big.hi, 1, atol=1e-6)


def test_check_convexity():
    x = np.linspace(-2, 2, 201)
    assert check_convexity(([x], x ** 4))[0]
    assert check_convexity(([x], np.maximum(x, 0)))[0]
    t = np.linspace(0, 2 * np.pi, 201)
    ok, where = check_convexity(([t], np.sin(t)))
    assert not ok and len(where["indices"]) == 3


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-1.0, 1.0), st.floats(-2.0, 2.0))
def test_young_inequality(a, b, c):
    """``F(x) + G(s) >= x s`` up to the O(h^2) deficit of the discrete transform."""
    F = _cf(lambda x: a * (x - b) ** 2 + c, lambda x: 2 * a * (x - b))
    P = DelzantPolytope.interval(-1, 1)
    G = legendre_transform(F, P, RunConfig(grid_resolution=128), radii=(8, 16))
    s = G.points()[G.finite_mask][:, 0]
    xs = np.linspace(-4, 4, 41)
    fx = a * (xs - b) ** 2 + c
    gap = fx[:, None] + G.values[G.finite_mask][None, :] - xs[:, None] * s[None, :]
    assert gap.min() >= -1e-3


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=6),
       st.lists(st.floats(-1, 1), min_size=3, max_size=6))
def test_order_reversal(slopes, offsets):
    """``F1 <= F2`` implies ``G1 >= G2``."""
    k = min(len(slopes), len(offsets))
    A, b = np.array(slopes[:k]), np.array(offsets[:k])
    x = np.linspace(-10, 10, 401)
    F1 = np.max(np.outer(x, A) + b, axis=1)
    F2 = F1 + 0.5 + 0.01 * x * x
    s = np.linspace(-1, 1, 33)
    G1 = discrete_conjugate([x], F1, [s])
    G2 = discrete_conjugate([x], F2, [s])
    assert np.all(G1 >= G2 - 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 2))
def test_conjugate_matches_brute(shift, scale):
    x = np.linspace(-6, 6, 121)
    f = scale * np.logaddexp(0, x - shift)
    s = np.linspace(0.05, 0.95, 11) * scale
    assert np.allclose(discrete_conjugate([x], f, [s]), brute_legendre(x, f, s), atol=1e-12)
