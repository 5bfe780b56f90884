"""End-to-end acceptance runs, one test per headline property.

Each test drives the public runners at the documented scales, prints the
measured numbers, and asserts the stated tolerance. Distances are L2
norms in meters; slopes come from log-log least squares restricted to
mesh-converged sweep points.
"""

import math
import time

import numpy as np
import pytest

from oracles import cell_effective, isotropic_c4
from elascloak.analysis import (ALUMINIUM, ALUMINIUM_DENSITY, DESK_H, STEEL,
                                STEEL_DENSITY, radial_traction,
                                run_contrast_sweep, run_convergence_study,
                                run_defect_size_sweep, run_layered_comparison,
                                run_nearcloak_sweep)
from elascloak.fem import (CoefficientField, boundary_pairing,
                           solve_dirichlet, solve_hard_limit, solve_neumann,
                           solve_soft_limit)
from elascloak.layered import LaminateSpec, backus_effective, invert_backus
from elascloak.materials import IsotropicMaterial, isotropic_tensor
from elascloak.mesh import Disk, GeometrySpec, build_mesh
from elascloak.transform import (KohnMap, cosserat_cloak_polar,
                                 kohn_radial_inverse, polar_to_cartesian,
                                 pushforward_cosserat, pushforward_willis,
                                 willis_cloak_polar)


def rel_err(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def report(name, verdict, detail):
    print(f"[acceptance] {name}: {detail} -> {verdict}")


def test_soft_contrast_slope_and_reference_value():
    t0 = time.perf_counter()
    res = run_contrast_sweep(direction="soft", h=DESK_H, workers=2)
    elapsed = time.perf_counter() - t0
    value = res.distance_at(1e-2)
    report("soft contrast", "checking",
           f"slope={res.slope:.4f} value(1e-2)={value:.5f} "
           f"tris={res.mesh_info['triangles']} t={elapsed:.0f}s")
    assert elapsed < 600.0
    assert 20000 <= res.mesh_info["triangles"] <= 60000
    assert "refined" in res.mesh_info
    assert all(res.converged)
    assert res.slope == pytest.approx(1.0, abs=0.1)
    assert value == pytest.approx(0.13656, rel=0.20)


def test_hard_contrast_slope_and_reference_value():
    t0 = time.perf_counter()
    res = run_contrast_sweep(direction="hard", h=DESK_H, workers=2)
    elapsed = time.perf_counter() - t0
    value = res.distance_at(1e2)
    report("hard contrast", "checking",
           f"slope={res.slope:.4f} value(1e2)={value:.5f} t={elapsed:.0f}s")
    assert elapsed < 900.0
    assert all(res.converged)
    assert res.slope == pytest.approx(-1.0, abs=0.1)
    assert value == pytest.approx(0.1402, rel=0.20)


def test_defect_size_slope_and_reference_value():
    t0 = time.perf_counter()
    res = run_defect_size_sweep(h=DESK_H, workers=2)
    elapsed = time.perf_counter() - t0
    value = res.distance_at(0.1)
    report("defect size", "checking",
           f"slope={res.slope:.4f} value(0.1)={value:.5f} t={elapsed:.0f}s")
    assert elapsed < 600.0
    assert res.slope == pytest.approx(1.0, abs=0.15)
    assert value == pytest.approx(1.1534, rel=0.20)


def test_eccentricity_prefactor_growth():
    t0 = time.perf_counter()
    prefactors = {}
    for shape, sides in (
            ("ellipse", (1.0, 2.0, 4.0)),
            ("rectangle", tuple(math.sqrt(math.pi * q)
                                for q in (1.0, 2.0, 4.0)))):
        vals = []
        for a in sides:
            res = run_contrast_sweep(direction="soft", shape=shape, a=a,
                                     h=0.3, refine_check=False, workers=2)
            vals.append(res.prefactor)
        prefactors[shape] = vals
    elapsed = time.perf_counter() - t0
    report("eccentricity", "checking",
           " ".join(f"{s}={['%.4f' % v for v in vs]}"
                    for s, vs in prefactors.items()) + f" t={elapsed:.0f}s")
    for shape, vals in prefactors.items():
        assert all(x < y for x, y in zip(vals, vals[1:])), (shape, vals)


def test_cosserat_nearcloak_decay_and_suppression():
    t0 = time.perf_counter()
    res = run_nearcloak_sweep(family="cosserat", h=0.25, workers=2)
    elapsed = time.perf_counter() - t0
    bare = res.extras["bare_distance"]
    at_02 = res.distance_at(0.2)
    report("nearcloak", "checking",
           f"pairs={[(p, round(d, 6)) for p, d in res.pairs]} "
           f"bare={bare:.5f} t={elapsed:.0f}s")
    assert elapsed < 1200.0
    assert res.extras["monotone"] is True
    assert at_02 * 10.0 <= bare


def test_sandwich_and_traction_energy_ordering():
    t0 = time.perf_counter()
    traction = radial_traction(1.0e9)
    bc = ("neumann", traction)

    def pair(u):
        return boundary_pairing(u, "outer", traction)

    mesh = build_mesh(GeometrySpec(outer_radius=10.0, inclusion=Disk(0.5),
                                   h=0.5))
    cf0 = CoefficientField({"background": isotropic_tensor(STEEL)})
    soft = pair(solve_soft_limit(mesh, cf0, bc))
    hard = pair(solve_hard_limit(mesh, cf0, bc)[0])
    slack = 1e-8 * abs(soft)
    worst = hard - soft
    for eta in (1e-2, 1.0, 1e2):
        cf = CoefficientField({
            "background": isotropic_tensor(STEEL),
            "inclusion": isotropic_tensor(ALUMINIUM.scaled(eta))})
        mid = pair(solve_neumann(mesh, cf, traction))
        worst = max(worst, mid - soft, hard - mid)
        assert mid <= soft + slack
        assert mid >= hard - slack
    assert hard <= soft + slack

    # stiffer medium (both mu and lam + mu grow) pulls the energy down
    plain = build_mesh(GeometrySpec(outer_radius=10.0, h=0.8))
    rng = np.random.default_rng(41)
    for _ in range(20):
        mu1 = 10.0 ** rng.uniform(9, 11)
        kap1 = mu1 * 10.0 ** rng.uniform(0.0, 1.0)
        mu2 = mu1 * (1.0 + rng.uniform(0.1, 3.0))
        kap2 = kap1 * (1.0 + rng.uniform(0.1, 3.0))
        energies = []
        for kap, mu in ((kap1, mu1), (kap2, mu2)):
            c = isotropic_tensor(IsotropicMaterial(kap - mu, mu))
            u = solve_neumann(plain, CoefficientField({"background": c}),
                              traction)
            energies.append(pair(u))
        assert energies[1] <= energies[0] + 1e-8 * abs(energies[0])
    elapsed = time.perf_counter() - t0
    report("sandwich/ordering", "checking",
           f"worst_violation={worst / abs(soft):.2e} rel t={elapsed:.0f}s")
    assert elapsed < 300.0


def test_transform_routes_agree_and_break_minor_symmetry():
    t0 = time.perf_counter()
    eps = 0.2
    C = isotropic_tensor(STEEL)
    m = KohnMap(eps)
    rng = np.random.default_rng(97)
    rps = rng.uniform(1.0 + 1e-6, 2.0 - 1e-6, size=1000)
    ths = rng.uniform(0.0, 2.0 * np.pi, size=1000)
    worst_c = worst_w = 0.0
    for rp, th in zip(rps, ths):
        r = kohn_radial_inverse(eps, float(rp))
        x = np.array([r * np.cos(th), r * np.sin(th)])
        J = m.jacobian(x)
        got = pushforward_cosserat(C, J, float(np.linalg.det(J)))
        want = polar_to_cartesian(cosserat_cloak_polar(eps, float(rp),
                                                       STEEL), th)
        worst_c = max(worst_c, rel_err(got.c, want.c))
        _, J, H, detJ = m.with_derivatives(x)
        w = pushforward_willis(C, J, H, detJ)
        prof = willis_cloak_polar(eps, float(rp), STEEL)
        worst_w = max(
            worst_w,
            rel_err(w.c4.c, polar_to_cartesian(prof.c4_array(), th)),
            rel_err(w.d3, polar_to_cartesian(prof.d3_array(), th)),
            rel_err(w.s3, polar_to_cartesian(prof.s3_array(), th)),
            rel_err(w.b2, polar_to_cartesian(prof.b2_array(), th)))
    rim = cosserat_cloak_polar(eps, 1.0, STEEL)
    gap = abs(rim.rthrth - rim.rththr) / STEEL.mu
    elapsed = time.perf_counter() - t0
    report("transform cross-check", "checking",
           f"worst_cosserat={worst_c:.2e} worst_willis={worst_w:.2e} "
           f"minor_gap={gap:.3f} t={elapsed:.0f}s")
    assert elapsed < 60.0
    assert worst_c < 1e-10
    assert worst_w < 1e-10
    assert gap >= 0.3
    assert gap == pytest.approx(8.0 / 9.0, rel=1e-12)


def test_homogenization_closed_form_and_inversion():
    t0 = time.perf_counter()
    rng = np.random.default_rng(53)
    e = np.array([1.0, 0.0])
    worst_eff = worst_rt = 0.0
    for _ in range(100):
        pairs = []
        while len(pairs) < 2:
            lam = rng.uniform(-0.5, 3.0)
            mu = rng.uniform(0.1, 3.0)
            if lam + mu > 0.05:
                pairs.append((lam, mu))
        (l1, m1), (l2, m2) = pairs
        spec = LaminateSpec(l1, m1, l2, m2)
        eff = backus_effective(spec)
        C_eff = cell_effective(isotropic_c4(l1, m1), isotropic_c4(l2, m2), e)
        worst_eff = max(worst_eff, rel_err(eff.as_array(), C_eff))
        back = backus_effective(invert_backus(eff))
        worst_rt = max(worst_rt, rel_err(
            [back.rrrr, back.rthrth, back.rrthth, back.thththth],
            [eff.rrrr, eff.rthrth, eff.rrthth, eff.thththth]))
    elapsed = time.perf_counter() - t0
    report("homogenization", "checking",
           f"worst_vs_cell={worst_eff:.2e} worst_round_trip={worst_rt:.2e} "
           f"t={elapsed:.0f}s")
    assert elapsed < 60.0
    assert worst_eff < 1e-10
    assert worst_rt < 1e-8


def test_layered_approach_to_symmetrized_cloak():
    t0 = time.perf_counter()
    res = run_layered_comparison(h=0.25, assert_monotone=False)
    elapsed = time.perf_counter() - t0
    report("layered vs symmetrized", "checking",
           f"pairs={[(int(p), round(d, 6)) for p, d in res.pairs]} "
           f"t={elapsed:.0f}s")
    assert elapsed < 1200.0
    assert res.extras["monotone"] is True


def test_low_frequency_sweep_matches_static():
    t0 = time.perf_counter()
    densities = {"background": STEEL_DENSITY, "inclusion": ALUMINIUM_DENSITY}
    static = run_contrast_sweep(direction="soft", h=0.35,
                                refine_check=False, workers=2)
    dynamic = run_contrast_sweep(direction="soft", h=0.35, omega=0.1,
                                 densities=densities, refine_check=False,
                                 workers=2)
    elapsed = time.perf_counter() - t0
    shifts = {}
    for (eta, ds), (eta2, dd) in zip(static.pairs, dynamic.pairs):
        assert eta == eta2
        shifts[eta] = abs(dd - ds) / ds
    report("dynamic proximity", "checking",
           f"max_rel_shift={max(shifts.values()):.2e} t={elapsed:.0f}s")
    assert elapsed < 600.0
    for eta, shift in shifts.items():
        assert eta <= 1e-2
        assert shift < 0.01


def test_fem_convergence_orders_and_patch_exactness():
    t0 = time.perf_counter()
    study = run_convergence_study()
    mesh = build_mesh(GeometrySpec(outer_radius=10.0, h=0.7))
    B = np.array([[0.3, 1.1], [-0.4, 0.8]])
    shift = np.array([0.2, -0.5])

    def datum(pts):
        return np.asarray(pts, float) @ B.T + shift

    cf = CoefficientField({"background": isotropic_tensor(STEEL)})
    patch_err = 0.0
    for order in (1, 2):
        u = solve_dirichlet(mesh, cf, datum, order=order)
        exact = datum(u.space.nodes)
        patch_err = max(patch_err, np.max(np.abs(u.nodal() - exact))
                        / np.max(np.abs(exact)))
    elapsed = time.perf_counter() - t0
    report("fem self-check", "checking",
           f"rates l2={study[1]['l2_rate']:.2f}/{study[2]['l2_rate']:.2f} "
           f"h1={study[1]['h1_rate']:.2f}/{study[2]['h1_rate']:.2f} "
           f"patch={patch_err:.2e} t={elapsed:.0f}s")
    assert elapsed < 300.0
    assert study[1]["l2_rate"] >= 1.8
    assert study[1]["h1_rate"] >= 0.8
    assert study[2]["l2_rate"] >= 2.8
    assert study[2]["h1_rate"] >= 1.8
    assert patch_err < 1e-10
