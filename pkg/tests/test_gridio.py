import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torpot.classify import classify
from torpot.gridio import (GridFileError, format_grid, parse_grid, potential_from_file,
                           read_grid, write_dual, write_grid)
from torpot.polytope import DelzantPolytope
from torpot.potentials import gallery

S2 = DelzantPolytope.simplex(2)


def test_dual_round_trip(tmp_path, cfg):
    T = gallery("pn_fs", {"n": 1})
    G = T.dual(cfg)
    path = tmp_path / "g.grid"
    write_dual(path, G)
    gf = read_grid(path)
    assert gf.kind == "dual"
    back = potential_from_file(path).dual(cfg)
    assert np.array_equal(back.finite_mask, G.finite_mask)
    assert np.array_equal(back.values[G.finite_mask], G.values[G.finite_mask])


@pytest.mark.parametrize("name,params,P", [("pn_fs", {"n": 1}, None), ("ex46", {}, None),
                                           ("guillemin", {}, S2)])
def test_dual_file_reproduces_classification(tmp_path, cfg, name, params, P):
    T = gallery(name, params, P)
    path = tmp_path / "g.grid"
    write_dual(path, T.dual(cfg))
    a = classify(T, cfg)
    b = classify(potential_from_file(path), cfg)
    assert (a.in_E_tor, a.Ep, a.bounded) == (b.in_E_tor, b.Ep, b.bounded)
    assert b.sup_norm == pytest.approx(a.sup_norm, abs=1e-9)
    assert b.lelong == pytest.approx(a.lelong, abs=1e-9)
    # the fit sees interpolated values instead of the closed form
    assert b.loglip_C == pytest.approx(a.loglip_C, rel=2e-2)


def test_primal_file_round_trip(tmp_path, cfg):
    x = np.linspace(-20, 20, 4001)
    F = 0.5 * np.logaddexp(0, 2 * x)
    path = tmp_path / "f.grid"
    write_grid(path, [x], F, "primal", DelzantPolytope.interval())
    T = potential_from_file(path)
    rep = classify(T, cfg)
    assert rep.is_toric_psh and rep.in_E_tor
    assert rep.C == pytest.approx(0.5 * np.log(2), abs=1e-6)


@pytest.mark.parametrize("text", [
    "",
    "n=1; kind=other\naxis 0: 0,1,2\n0\n1\n",
    "n=1; kind=primal\naxis 0: 0,1,3\n0\n1\n",
    "n=1; kind=primal\naxis 0: 0,1,2\n0\ninf\n",
    "n=1; kind=dual\naxis 0: 0,1,2\n0\nnan\n",
    "n=2; kind=dual\naxis 0: 0,1,2\n0\n1\n",
])
def test_malformed_files(text):
    with pytest.raises(GridFileError):
        parse_grid(text)


def test_file_dimension_must_match_polytope(tmp_path):
    path = tmp_path / "g.grid"
    path.write_text("n=1; kind=dual\naxis 0: 0,1,2\n0\n1\n")
    with pytest.raises(GridFileError):
        potential_from_file(path, S2)


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=2, max_size=30), st.floats(-5, 5), st.floats(0.1, 5))
def test_text_round_trip_is_exact(values, lo, width):
    axis = np.linspace(lo, lo + width, len(values))
    text = format_grid([axis], np.array(values), "primal")
    gf = parse_grid(text)
    assert np.array_equal(gf.values, np.array(values))
    assert np.array_equal(gf.axes[0], axis)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.one_of(finite, st.just(float("inf"))), min_size=4, max_size=4))
def test_dual_text_allows_infinity(values):
    axes = [np.array([0.0, 1.0]), np.array([0.0, 1.0])]
    text = format_grid(axes, np.array(values).reshape(2, 2), "dual", S2)
    gf = parse_grid(text)
    assert np.array_equal(gf.values, np.array(values).reshape(2, 2))
