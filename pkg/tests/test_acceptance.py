"""Acceptance suite: one test per criterion, each records a PASS/FAIL line."""
import contextlib
import io
import json
import math

import numpy as np

from conftest import record
from torpot import cli
from torpot.classify import (GROWTH_EPS, GrowthError, classify_energy, growth_certificate,
                             lelong_numbers, lemma28_bound, prop43_check, regularity,
                             sup_bound_check)
from torpot.config import RunConfig
from torpot.convexfn import ConvexFunctionRep, biconjugate, legendre_transform
from torpot.metric import ex310_regime
from torpot.monge_ampere import (dual_power_integral, energy_functional, lemma42_I, moment,
                                 primal_moment_windows, total_mass)
from torpot.oracle import CellSet, alexandrov_mass, quadrature_1d, random_piecewise_linear
from torpot.polytope import DelzantPolytope
from torpot.potentials import from_dual, gallery

S2 = DelzantPolytope.simplex(2)

# name, params, polytope
GALLERY = [
    ("pn_fs", {"n": 1}, None), ("pn_fs", {"n": 2}, None), ("f1", {}, None),
    ("ex310", {}, None), ("ex46", {}, None), ("ex311iii", {}, None),
    ("phi1", {"n": 1}, None), ("phi1", {"n": 2}, None), ("phi2", {"n": 2}, None),
    ("guillemin", {}, None), ("guillemin", {}, S2), ("sqrt_cusp", {}, None),
    ("zero", {}, None),
]
IN_E = {"phi1", "phi2"}


def _label(name, params, P):
    extra = ",".join(f"{k}={v}" for k, v in params.items())
    return f"{name}({extra})" + ("@simplex2" if P is not None else "")


def _far_nodes(G, dist=0.05):
    pts = G.points()
    d = G.polytope.signed_distance(pts)
    return (d >= dist) & G.finite_mask


def _max_err(G, exact, dist=0.05):
    sel = _far_nodes(G, dist)
    pts = G.points()[sel]
    return float(np.max(np.abs(G.values[sel] - np.asarray(exact(pts)))))


# ---------------------------------------------------------------------------


def test_c01_legendre_golden_pairs():
    errs = {}
    T = gallery("pn_fs", {"n": 1})
    errs["P1"] = _max_err(T.dual0(RunConfig(grid_resolution=2048, radii=(8, 16, 32))),
                          T.G0_exact)
    T = gallery("pn_fs", {"n": 2})
    errs["P2"] = _max_err(T.dual0(RunConfig(grid_resolution=256, radii=(4, 8, 16))),
                          T.G0_exact)
    T = gallery("f1", {"a": 1, "b": 1})
    errs["F1"] = _max_err(T.dual0(RunConfig()), T.G0_exact)
    for name in ("ex46", "ex310"):
        T = gallery(name)
        G = legendre_transform(T.Fphi, T.polytope, RunConfig(), radii=T.schedule(RunConfig()),
                               grid=T.grid(RunConfig()))
        errs[name] = _max_err(G, T.Gphi_exact)
    ok = all(e <= 1e-3 for e in errs.values())
    record(1, ok, "max err " + ", ".join(f"{k}={v:.1e}" for k, v in errs.items()))
    assert ok, errs


BICONJ = [
    ("pn_fs", {"n": 1}, "Fphi"), ("pn_fs", {"n": 2}, "Fphi"), ("f1", {}, "F0"),
    ("ex310", {}, "Fphi"), ("ex46", {}, "Fphi"), ("ex311iii", {}, "Fphi"),
    ("phi1", {"n": 2}, "Fphi"), ("phi2", {"n": 2}, "Fphi"), ("guillemin", {}, "Fphi"),
    ("sqrt_cusp", {}, "Fphi"),
]


def test_c02_biconjugation():
    errs = {}
    for name, params, which in BICONJ:
        T = gallery(name, params)
        F = getattr(T, which)
        config = RunConfig(grid_resolution=8192 if T.n == 1 else 1024)
        Fss = biconjugate(F, T.polytope, config, radii=(8, 16, 32),
                          breakpoints=T.breakpoints)
        exact = F.sample(Fss.axes)
        errs[_label(name, params, None)] = float(np.max(np.abs(Fss.values - exact)))
    ok = all(e <= 1e-3 for e in errs.values())
    worst = max(errs, key=errs.get)
    record(2, ok, f"10 functions, worst {worst} {errs[worst]:.1e}")
    assert ok, errs


def _nested_pair(rng, n):
    F2 = random_piecewise_linear(rng, n)
    keep = rng.choice(len(F2.offsets), size=max(1, len(F2.offsets) // 2), replace=False)
    A = F2.slopes - 0.5
    fn = [ConvexFunctionRep.closed_form(
        n, lambda x, A=A[idx], b=F2.offsets[idx]: np.max(np.asarray(x) @ A.T + b, axis=-1),
        kinks=()) for idx in (keep, np.arange(len(F2.offsets)))]
    return fn


def test_c03_masses_and_monotonicity():
    config = RunConfig()
    expected = {("pn_fs", 1): 1.0, ("pn_fs", 2): 1.0, ("f1", None): 3.0, ("ex310", None): 1.0,
                ("ex46", None): 1.0, ("ex311iii", None): 1.0}
    bad = []
    for (name, n), target in expected.items():
        res, full = total_mass(gallery(name, {"n": n} if n else {}), config)
        if abs(res.value - target) > 0.01 * target or not full:
            bad.append((name, res.value))
    for name, n in (("phi1", 1), ("phi1", 2), ("phi2", 2)):
        res, full = total_mass(gallery(name, {"n": n}), config)
        if res.value >= 0.05 or full:
            bad.append((name, res.value))
    rng = np.random.default_rng(3)
    violations = 0
    for i in range(20):
        n = 1 + i % 2
        P = DelzantPolytope.box([-1.0] * n, [1.0] * n)
        c = RunConfig(grid_resolution=1024 if n == 1 else 256)
        F1, F2 = _nested_pair(rng, n)
        m1, _ = total_mass(legendre_transform(F1, P, c, radii=(10, 20, 40)), c)
        m2, _ = total_mass(legendre_transform(F2, P, c, radii=(10, 20, 40)), c)
        if m1.value > m2.value * (1 + c.tol.mass):
            violations += 1
    ok = not bad and violations == 0
    record(3, ok, f"gallery mismatches {bad or 'none'}, monotonicity violations {violations}/20")
    assert ok


def test_c04_oracle_alexandrov():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(50):
        n = 1 + i % 2
        F = random_piecewise_linear(rng, n)
        rep = ConvexFunctionRep.closed_form(
            n, F, F.gradient, kinks=tuple(F.vertices()[:, 0]) if n == 1 else ())
        P = DelzantPolytope.box([0.0] * n, [1.0] * n)
        c = RunConfig(grid_resolution=4096 if n == 1 else 1024)
        mass, _ = total_mass(legendre_transform(rep, P, c, radii=(10, 20, 40)), c)
        ref = alexandrov_mass(F, CellSet.box([-5.0] * n, [5.0] * n, 1))
        worst = max(worst, abs(mass.value - ref) / ref)
    ok = worst <= 0.02
    record(4, ok, f"50 instances, worst relative gap {worst:.2%}")
    assert ok


def test_c05_three_way_agreement():
    config = RunConfig()
    disagree = []
    for name, params, P in GALLERY:
        T = gallery(name, params, P)
        G = T.dual(config)
        finite = bool(np.all(G.finite_mask[G.interior(config.margin_cells)]))
        lel = lelong_numbers(T, config)
        lel.pop("_slope_check", None)
        lelong_zero = all(v <= 1e-2 for v in lel.values())
        growth = True
        for eps in GROWTH_EPS:
            try:
                growth_certificate(T.Fphi, T.polytope, eps, config, T.schedule(config))
            except GrowthError:
                growth = False
        if not finite == lelong_zero == growth or finite == (name in IN_E):
            disagree.append(_label(name, params, P))
    l1 = lelong_numbers(gallery("phi1", {"n": 1}), config)
    l2 = lelong_numbers(gallery("phi2", {"n": 2}), config)
    vals_ok = (np.allclose([l1["vertex_0"], l1["vertex_1"]], [1, 0], atol=1e-2)
               and np.allclose([l2[f"vertex_{k}"] for k in range(3)], [1, 0, 0], atol=1e-2))
    ok = not disagree and vals_ok
    record(5, ok, f"13 potentials, disagreements {disagree or 'none'}; "
                  f"phi1 {l1['vertex_0']:.3f},{l1['vertex_1']:.3f}")
    assert ok


def _random_dual(rng, n):
    A = rng.normal(size=(3, n))
    b = rng.normal(size=3)
    q = rng.uniform(0.0, 2.0)
    ctr = rng.uniform(0.0, 1.0 / (n + 1), size=n)

    def G(s):
        s = np.asarray(s, dtype=float)
        return np.max(s @ A.T + b, axis=-1) + q * np.sum((s - ctr) ** 2, axis=-1)
    return G


def test_c06_sup_bounds():
    config = RunConfig()
    fails = []
    for name, params, P in GALLERY:
        if name in IN_E:
            continue
        lhs, rhs = sup_bound_check(gallery(name, params, P), config)
        if lhs > rhs:
            fails.append(_label(name, params, P))
    rng = np.random.default_rng(7)
    small = RunConfig(grid_resolution=128)
    random_fail = lemma_fail = 0
    for i in range(100):
        n = 1 + i % 2
        T = from_dual(DelzantPolytope.simplex(n), _random_dual(rng, n))
        lhs, rhs = sup_bound_check(T, small)
        random_fail += lhs > rhs
        gmin, bound = lemma28_bound(T.dual(small), small)
        lemma_fail += gmin > bound
    ok = not fails and random_fail == 0 and lemma_fail == 0
    record(6, ok, f"gallery fails {fails or 'none'}, random {random_fail}/100, "
                  f"inf-bound {lemma_fail}/100")
    assert ok


def test_c07_a_priori_estimate():
    config = RunConfig()
    worst, implication = 0.0, []
    for name, params, P in GALLERY:
        if name in IN_E:
            continue
        T = gallery(name, params, P)
        for chi in ("chi:linear", "chi:pow?p=0.5"):
            ef = energy_functional(T, chi, config)
            if ef["rhs"] > 0:
                worst = max(worst, ef["lhs"] / ef["rhs"])
            elif ef["lhs"] > 0:
                worst = math.inf
        Ep = classify_energy(T, (1, 2), config).Ep
        G = T.dual(config)
        for p in (1, 2):
            if T.n == 1 and T.Gphi_exact is not None:
                lo, hi = T.polytope.bbox[0]
                r = quadrature_1d(lambda s: abs(float(T.Gphi_exact(np.array([[s]]))[0])) ** p,
                                  lo, hi)
                in_Lp = not r.divergent
            else:
                # 1-D primal profiles: windows of |x F' - F|^p dF' see the tail
                primal = T.Fphi if T.n == 1 and not T.dual_defined else None
                r = dual_power_integral(G, p, config, primal=primal)
                in_Lp = not r.divergent and math.isfinite(r.value)
            if in_Lp and not Ep[str(p)]:
                implication.append((_label(name, params, P), p))
    ok = worst <= 1.01 and not implication
    record(7, ok, f"max lhs/rhs {worst:.3f}; L^p without E^p flag: {implication or 'none'}")
    assert ok


def test_c08_moment_bounds_and_divergence():
    config = RunConfig()
    worst = 0.0
    for name in ("pn_fs", "ex310", "ex46", "ex311iii", "guillemin", "sqrt_cusp"):
        T = gallery(name, {"n": 1} if name == "pn_fs" else {})
        G = T.dual(config)
        fin = G.finite_mask & G.inside()
        shift = max(0.0, -float(np.min(G.values[fin])))
        if shift > 0:
            T = T.shifted(-shift)
        g1 = dual_power_integral(T.dual(config), 1, config).value
        for q in (0.1, 0.25, 0.4):
            bound = 2 * (1 - q) / (1 - 2 * q) * g1 ** q
            worst = max(worst, moment(T, q, config).value / bound)
    # divergence of the 1/2-moment of ex311iii on windows e^1.5 ... e^12
    F = gallery("ex311iii").Fphi
    logs = (1.5, 3.0, 6.0, 12.0)
    _, vals = primal_moment_windows(F, 0.5, [math.exp(t) for t in logs])
    growth = [b / a - 1 for a, b in zip(vals, vals[1:])]
    # tail beyond e^3 against (1/18) int dx / (x ln x) = (1/18) ln(ln R / 3)
    tails = [v - vals[1] for v in vals[2:]]
    lower = [math.log(t / 3.0) / 18 for t in logs[2:]]
    tail_ok = all(t >= 0.95 * lo for t, lo in zip(tails, lower))
    ok = worst <= 1.0 and min(growth) >= 0.03 and tail_ok
    record(8, ok, f"moment/bound max {worst:.3f}; window growth min {min(growth):.1%}; "
                  f"tail/lower min {min(t / lo for t, lo in zip(tails, lower)):.2f}")
    assert ok


def test_c09_lemma42():
    worst = 0.0
    xs = np.linspace(1e-4, 1 / math.e, 50)
    for n in (1, 2, 3):
        for x in xs:
            worst = max(worst, x * lemma42_I((n + 3) * x * math.log(1 / x), n))
    closed_err = 0.0
    for lam in (0.01, 0.3, 1.0, 7.0, 250.0):
        inv = 1 / lam
        ref = quadrature_1d(lambda t: (1 + inv) * math.log1p(inv), 0.0, 1.0).value
        closed_err = max(closed_err, abs(lemma42_I(lam, 1) - ref))
    ok = worst < 1 and closed_err <= 1e-8
    record(9, ok, f"max x*I {worst:.3f}; n=1 closed form error {closed_err:.1e}")
    assert ok


def test_c10_log_lipschitz_chain():
    config = RunConfig()
    present = {}
    for label, T in (("guillemin", gallery("guillemin")), ("guillemin@simplex2",
                     gallery("guillemin", {}, S2)), ("ex46", gallery("ex46")),
                     ("sqrt_cusp", gallery("sqrt_cusp"))):
        reg = regularity(T, config=config)
        present[label] = (reg.loglip_C is not None, reg.gradlog_C is not None,
                          reg.eps_star is not None)
    chain_ok = all(all(v) for k, v in present.items() if k != "sqrt_cusp") \
        and not any(present["sqrt_cusp"])
    ratios = []
    for T in (gallery("guillemin"), gallery("guillemin", {}, S2)):
        r = prop43_check(T.dual(config), 1.0, pairs=1000, config=config)
        ratios.append(r["worst_ratio"] if r["ok"] else math.inf)
    ok = chain_ok and all(r <= 1 for r in ratios)
    record(10, ok, f"chain {'ok' if chain_ok else present}; modulus bound worst ratios "
                   + ", ".join(f"{r:.3g}" for r in ratios))
    assert ok


def test_c11_sup_norm_identity():
    config = RunConfig()
    gaps = {}
    for name, params, P in GALLERY:
        if name in IN_E:
            continue
        reg = regularity(gallery(name, params, P), config=config)
        if reg.bounded:
            gaps[_label(name, params, P)] = abs(reg.sup_norm - reg.primal_sup_norm)
    worst = max(gaps.values())
    ok = worst <= 1e-3
    record(11, ok, f"{len(gaps)} bounded potentials, max gap {worst:.1e}")
    assert ok


def test_c12_ex310_modes():
    flags = {"1/j,j": (True, False, True), "1/j,j^2": (True, False, False),
             "1/j^2,j": (True, True, True)}
    bad = []
    for name, want in flags.items():
        rep = ex310_regime(name)
        for e, C, l1, linf, e1 in zip(rep.eps, rep.C, rep.l1_proxy, rep.linf_proxy,
                                      rep.e1_proxy):
            if not (math.isclose(l1, e, rel_tol=1e-12) and math.isclose(linf, e * C, rel_tol=1e-12)
                    and math.isclose(e1, e * e * C / 2, rel_tol=1e-12)):
                bad.append((name, e, C))
        got = (rep.modes.l1, rep.modes.linf, rep.modes.e1)
        if got != want:
            bad.append((name, got))
    ok = not bad
    record(12, ok, f"3 regimes, mismatches {bad or 'none'}")
    assert ok


def _cli_json(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(argv)
    assert code == 0, argv
    return buf.getvalue()


SUITE = ["gallery:pn_fs?n=1", "gallery:pn_fs?n=2", "gallery:f1", "gallery:ex310",
         "gallery:ex46", "gallery:ex311iii", "gallery:phi1?n=1", "gallery:phi1?n=2",
         "gallery:phi2?n=2", "gallery:guillemin", "gallery:sqrt_cusp", "gallery:zero"]


def _suite(threads):
    out = []
    for spec in SUITE:
        out.append(_cli_json(["classify", spec, "--threads", str(threads)]))
        out.append(_cli_json(["mass", spec, "--threads", str(threads)]))
    out.append(_cli_json(["classify", "gallery:guillemin", "--polytope", json.dumps(S2.to_dict()),
                          "--threads", str(threads)]))
    return out


def test_c13_determinism():
    runs = [_suite(1), _suite(4), _suite(4)]
    same = runs[0] == runs[1] == runs[2]
    parsed = all(isinstance(json.loads(t), dict) for t in runs[0])
    ok = same and parsed
    record(13, ok, f"{len(runs[0])} outputs x 3 runs (threads 1, 4, 4) "
                   f"{'bit-identical' if same else 'differ'}")
    assert ok
