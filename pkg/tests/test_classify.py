import math

import numpy as np
import pytest

from torpot.classify import (GrowthError, classify, classify_chi, classify_energy,
                             classify_psh, growth_certificate, lelong_numbers, loglip_fit,
                             solve_loglog)
from torpot.convexfn import ConvexFunctionRep
from torpot.polytope import DelzantPolytope
from torpot.potentials import from_dual, gallery, xlogx

S2 = DelzantPolytope.simplex(2)
UNIT = DelzantPolytope.interval()


def _support():
    return gallery("zero").Fphi


def test_psh_support_function(cfg):
    r = classify_psh(_support(), UNIT, cfg)
    assert r.flag and r.C == pytest.approx(0.0, abs=1e-12)


def test_psh_rejects_steep_profile(cfg):
    F = ConvexFunctionRep.closed_form(1, lambda x: 2 * np.maximum(np.asarray(x)[..., 0], 0))
    r = classify_psh(F, UNIT, cfg)
    assert not r.flag and not r.gradient_in_P


def test_psh_fubini_study_constant(cfg):
    r = classify_psh(gallery("pn_fs", {"n": 1}).Fphi, UNIT, cfg)
    assert r.flag and r.C == pytest.approx(0.5 * math.log(2), abs=1e-6)


def test_energy_classes(cfg):
    g = classify_energy(gallery("guillemin", {}, S2), (1, 2, 4), cfg)
    assert g.in_E_tor and all(g.Ep.values())
    assert not classify_energy(gallery("phi1", {"n": 2}), (1,), cfg).in_E_tor
    e = classify_energy(gallery("ex311iii"), (1, 2), cfg)
    assert e.in_E_tor and e.Ep["1"] and not e.Ep["2"]


def test_chi_classes(cfg):
    assert classify_chi(gallery("ex46"), "chi:linear", cfg)
    T = from_dual(UNIT, lambda s: xlogx(np.asarray(s)[..., 0]))
    assert classify_chi(T, "chi:linear", cfg)
    assert classify_chi(T, "chi:pow?p=0.5", cfg)


def test_lelong_numbers(cfg):
    assert all(v == 0 for v in lelong_numbers(gallery("guillemin", {}, S2), cfg).values())
    lel = lelong_numbers(gallery("phi2", {"n": 2}), cfg)
    assert [lel[f"vertex_{k}"] for k in range(3)] == pytest.approx([1, 0, 0], abs=1e-2)
    lel = lelong_numbers(gallery("phi1", {"n": 1}), cfg)
    assert lel["_slope_check"] == pytest.approx({"vertex_0": 1.0, "vertex_1": 0.0})


def test_growth_certificates(cfg):
    assert growth_certificate(_support(), UNIT, 0.5, cfg) == pytest.approx(0.0, abs=1e-9)
    fs = gallery("pn_fs", {"n": 1})
    assert growth_certificate(fs.Fphi, UNIT, 0.5, cfg) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(GrowthError):
        growth_certificate(gallery("phi1", {"n": 1}).Fphi, UNIT, 0.5, cfg)


def test_solve_loglog():
    assert solve_loglog(0.0, 0.1) == 0.0
    m, d = 0.3, 0.01
    C = float(solve_loglog(m, d))
    assert C >= d
    assert C * math.log(C / d) == pytest.approx(m, rel=1e-9)


def test_loglip_of_affine_dual_is_zero(cfg):
    assert loglip_fit(gallery("zero").dual(cfg), cfg)[0] == 0.0


# frozen regression values from the default configuration
FROZEN = {
    ("pn_fs", 1): dict(C=0.34657359027997264, sup_norm=0.34657359027997264,
                       loglip_C=0.887612170238951, eps_star=1.5),
    ("pn_fs", 2): dict(C=0.5493061443340548, loglip_C=1.0170082274021912, eps_star=1.0),
    ("f1", None): dict(C=0.8958797346140275, loglip_C=1.3563177425356086, eps_star=1.0),
    ("ex310", None): dict(sup_norm=0.5, eps_star=1.5),
    ("ex46", None): dict(C=1.0, sup_norm=1.0, loglip_C=1.9226740691528985, eps_star=0.25),
}


@pytest.mark.parametrize("key", sorted(FROZEN, key=str))
def test_frozen_reports(cfg, key):
    name, n = key
    rep = classify(gallery(name, {"n": n} if n else {}), cfg)
    assert rep.is_toric_psh and rep.in_E_tor and rep.bounded
    for field, value in FROZEN[key].items():
        assert getattr(rep, field) == pytest.approx(value, rel=1e-6, abs=1e-9), field


def test_report_for_unbounded_potential(cfg):
    rep = classify(gallery("ex311iii"), cfg)
    assert rep.in_E_tor and rep.Ep == {"1": True, "2": False}
    assert rep.bounded is False and rep.loglip_C is None
    assert rep.growth["0.5"] == pytest.approx(1.47264034427229, rel=1e-6)


def test_report_for_cusp(cfg):
    rep = classify(gallery("sqrt_cusp"), cfg)
    assert rep.bounded and rep.loglip_C is None and rep.eps_star is None


def test_report_outside_energy_class(cfg):
    rep = classify(gallery("phi1", {"n": 2}), cfg)
    assert rep.is_toric_psh and not rep.in_E_tor
    assert rep.lelong["vertex_0"] == pytest.approx(1.0)
    assert rep.growth == {"0.5": None, "0.25": None}
    d = rep.to_dict()
    assert set(d) >= {"is_toric_psh", "in_E_tor", "lelong", "eps_star", "notes"}
