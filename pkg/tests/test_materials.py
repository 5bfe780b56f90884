import numpy as np
import pytest

from elascloak.materials import (ConvexityError, IsotropicMaterial, Tensor4,
                                 derived_moduli, form_bounds, is_ordered,
                                 isotropic_tensor, quadratic_form)

STEEL = IsotropicMaterial(1.5e11, 7.5e10)
ALU = IsotropicMaterial(5.1e10, 2.6e10)


def rand_sym(rng):
    A = rng.standard_normal((2, 2))
    return 0.5 * (A + A.T)


def test_isotropic_components_pure_shear():
    C = isotropic_tensor(IsotropicMaterial(0.0, 1.0))
    assert C.c[0, 0, 0, 0] == 2.0
    assert C.c[0, 0, 1, 1] == 0.0
    assert C.c[0, 1, 0, 1] == 1.0


def test_isotropic_components_steel():
    C = isotropic_tensor(STEEL)
    assert C.c[0, 0, 0, 0] == pytest.approx(3.0e11)
    assert C.c[0, 0, 1, 1] == pytest.approx(1.5e11)
    assert C.c[0, 1, 0, 1] == pytest.approx(7.5e10)


def test_convexity_rejections():
    with pytest.raises(ConvexityError):
        IsotropicMaterial(1.0, 0.0)
    with pytest.raises(ConvexityError):
        IsotropicMaterial(-1.5, 1.0)  # 2*(-1.5) + 2 = -1 < 0
    # boundary-legal negative lambda
    m = IsotropicMaterial(-0.4, 1.0)
    assert m.lam == -0.4


def test_isotropic_action_on_symmetric():
    rng = np.random.default_rng(7)
    C = isotropic_tensor(STEEL)
    for _ in range(20):
        A = rand_sym(rng)
        got = C.apply(A)
        want = STEEL.lam * np.trace(A) * np.eye(2) + 2.0 * STEEL.mu * A
        assert np.allclose(got, want, rtol=1e-14)


def test_major_symmetry_exact():
    for mat in (STEEL, ALU, IsotropicMaterial(-0.4, 1.0)):
        C = isotropic_tensor(mat)
        assert np.array_equal(C.c, C.c.transpose(2, 3, 0, 1))
        assert C.has_minor_symmetries()


def test_derived_moduli_values():
    dm = derived_moduli(IsotropicMaterial(1.0, 1.0, d=3), d=3)
    assert dm.nu == pytest.approx(0.25)
    dm = derived_moduli(IsotropicMaterial(0.0, 1.0), d=2)
    assert dm.nu == 0.0
    assert dm.kappa == pytest.approx(1.0)
    assert dm.E == pytest.approx(2.0)
    dm = derived_moduli(STEEL, d=2)
    assert dm.kappa == pytest.approx(2.25e11)


def test_quadratic_form_examples():
    C = isotropic_tensor(IsotropicMaterial(0.0, 1.0))
    assert quadratic_form(C, np.eye(2)) == pytest.approx(4.0)
    assert quadratic_form(C, np.zeros((2, 2))) == 0.0
    C = isotropic_tensor(IsotropicMaterial(1.0, 1.0))
    assert quadratic_form(C, np.eye(2)) == pytest.approx(8.0)


def test_quadratic_form_expansion_identity():
    # (C:A):A = (1/d)(d lam + 2 mu) (tr A)^2 + 4 mu sum_{i<j} A_ij^2
    #           + (2 mu / d) sum_{i<j} (A_ii - A_jj)^2  for symmetric A
    rng = np.random.default_rng(11)
    for _ in range(200):
        lam = rng.uniform(-0.5, 3.0)
        mu = rng.uniform(0.1, 3.0)
        if 2 * lam + 2 * mu <= 0.05:
            continue
        mat = IsotropicMaterial(lam, mu)
        C = isotropic_tensor(mat)
        A = rand_sym(rng)
        want = ((2 * lam + 2 * mu) / 2.0 * np.trace(A) ** 2
                + 4.0 * mu * A[0, 1] ** 2
                + mu * (A[0, 0] - A[1, 1]) ** 2)
        got = quadratic_form(C, A)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_is_ordered_examples():
    assert is_ordered(IsotropicMaterial(1, 1), IsotropicMaterial(2, 2))
    assert is_ordered(STEEL, STEEL)
    assert not is_ordered(IsotropicMaterial(10, 1), IsotropicMaterial(1, 2))


def test_is_ordered_implies_form_ordering():
    rng = np.random.default_rng(23)
    count = 0
    while count < 50:
        l1, l2 = rng.uniform(-0.5, 2.0, 2)
        m1, m2 = rng.uniform(0.1, 2.0, 2)
        try:
            a = IsotropicMaterial(l1, m1)
            b = IsotropicMaterial(l2, m2)
        except ConvexityError:
            continue
        if not is_ordered(a, b):
            continue
        count += 1
        Ca, Cb = isotropic_tensor(a), isotropic_tensor(b)
        for _ in range(200):
            A = rand_sym(rng)
            gap = quadratic_form(Cb, A) - quadratic_form(Ca, A)
            assert gap >= -1e-12 * np.sum(A * A)


def test_form_bounds_examples():
    assert form_bounds(IsotropicMaterial(0.0, 1.0)) == (2.0, 2.0)
    assert form_bounds(STEEL) == (1.5e11, 4.5e11)
    lo, hi = form_bounds(IsotropicMaterial(-0.4, 1.0))
    assert lo == pytest.approx(1.2)
    assert hi == pytest.approx(2.0)


def test_form_bounds_hold_on_random_symmetric():
    rng = np.random.default_rng(31)
    for mat in (STEEL, ALU, IsotropicMaterial(-0.4, 1.0),
                IsotropicMaterial(0.0, 2.0)):
        C = isotropic_tensor(mat)
        lo, hi = form_bounds(mat)
        for _ in range(2500):
            A = rand_sym(rng)
            nrm = np.sum(A * A)
            q = quadratic_form(C, A)
            assert q >= lo * nrm * (1 - 1e-12) - 1e-300
            assert q <= hi * nrm * (1 + 1e-12) + 1e-300


def test_tensor4_shape_guard():
    with pytest.raises(ValueError):
        Tensor4(np.zeros((2, 2)))


def test_scaled_material():
    m = STEEL.scaled(1e-2)
    assert m.lam == pytest.approx(1.5e9)
    assert m.mu == pytest.approx(7.5e8)
