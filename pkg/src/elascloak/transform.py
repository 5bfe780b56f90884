"""Kohn's regularized radial map and the elastic push-forward constructions.

The map blows the ball of radius eps up to the unit ball, maps the annulus
eps < r < 2 onto 1 < r' < 2, and is the identity outside radius 2 (geometry
normalized to cloak radii 1 and 2). Two transformed-material families are
built from it:

* Cosserat: rank-4 tensor with major symmetry only, from the one-Jacobian
  push-forward. Slot convention is derivative-first (see materials module):
  [F*C][i,j,k,l] = (1/detJ) sum_pq J_ip J_kq C[p,j,q,l].
* Willis: fully minor-symmetric rank-4 part plus rank-3 couplings and a
  rank-2 zeroth-order part, built from the Jacobian and the second
  derivatives of the map.

Closed-form polar profiles for both families are provided as an independent
route; push-forward and profile are cross-checked against each other in the
test suite at random annulus points.
"""

from dataclasses import dataclass

import numpy as np

from .materials import IsotropicMaterial, Tensor4, isotropic_tensor

_I2 = np.eye(2)


def _check_epsilon(epsilon):
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1], got %g" % epsilon)


def kohn_radial(epsilon: float, r: float) -> float:
    """Radial profile r' of the regularized map.

    r' = r for r >= 2; linear stretch (2-2eps)/(2-eps) + r/(2-eps) on the
    annulus; r/eps inside the small ball.
    """
    _check_epsilon(epsilon)
    if r < 0.0:
        raise ValueError("negative radius")
    if r >= 2.0:
        return float(r)
    if r <= epsilon:
        return float(r / epsilon)
    return float((2.0 - 2.0 * epsilon + r) / (2.0 - epsilon))


def kohn_radial_inverse(epsilon: float, rprime: float) -> float:
    """Inverse radial profile: physical radius r for a transformed radius."""
    _check_epsilon(epsilon)
    if rprime >= 2.0:
        return float(rprime)
    if rprime <= 1.0:
        return float(epsilon * rprime)
    return float((2.0 - epsilon) * rprime + 2.0 * (epsilon - 1.0))


@dataclass(frozen=True)
class KohnMap:
    """The regularized radial transform with analytic derivatives."""

    epsilon: float

    def __post_init__(self):
        _check_epsilon(self.epsilon)

    def radial(self, r):
        return kohn_radial(self.epsilon, r)

    def radial_inverse(self, rprime):
        return kohn_radial_inverse(self.epsilon, rprime)

    def point(self, x):
        x = np.asarray(x, dtype=float)
        r = float(np.hypot(x[0], x[1]))
        if r == 0.0:
            return x / self.epsilon
        return self.radial(r) / r * x

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        r = float(np.hypot(x[0], x[1]))
        eps = self.epsilon
        if r >= 2.0:
            return _I2.copy()
        if r < eps:
            # includes the origin, where the polar form is singular
            return _I2 / eps
        alpha = 1.0 / (2.0 - eps)
        c = (2.0 - 2.0 * eps) / (2.0 - eps)
        rhat = x / r
        # radial stretch alpha, tangential stretch r'/r = alpha + c/r
        return alpha * _I2 + (c / r) * (_I2 - np.outer(rhat, rhat))

    def hessian(self, x):
        """Second derivatives H[i, p, q] = d^2 F_i / dx_p dx_q."""
        x = np.asarray(x, dtype=float)
        r = float(np.hypot(x[0], x[1]))
        eps = self.epsilon
        H = np.zeros((2, 2, 2))
        if r >= 2.0 or r < eps:
            return H
        c = (2.0 - 2.0 * eps) / (2.0 - eps)
        n = x / r
        s = c / r ** 2
        # fill p <= q and mirror so the p,q symmetry holds bitwise
        for i in range(2):
            for p in range(2):
                for q in range(p, 2):
                    val = s * (3.0 * n[i] * n[p] * n[q]
                               - _I2[i, p] * n[q]
                               - _I2[i, q] * n[p]
                               - _I2[p, q] * n[i])
                    H[i, p, q] = val
                    H[i, q, p] = val
        return H

    def with_derivatives(self, x):
        """(y, J, H, detJ) at a point; one-stop for coefficient evaluation."""
        J = self.jacobian(x)
        return self.point(x), J, self.hessian(x), float(np.linalg.det(J))


def kohn_map(epsilon: float, x):
    """(y, J, detJ) of the regularized map at a point."""
    m = KohnMap(epsilon)
    J = m.jacobian(x)
    return m.point(x), J, float(np.linalg.det(J))


# ---------------------------------------------------------------------------
# push-forwards
# ---------------------------------------------------------------------------

def pushforward_cosserat(C: Tensor4, J, detJ: float) -> Tensor4:
    """One-Jacobian push-forward; keeps major symmetry, breaks minor.

    [F*C][i,j,k,l] = (1/detJ) J_ip J_kq C[p,j,q,l] in the derivative-first
    slot convention.
    """
    if detJ <= 0.0:
        raise ValueError("push-forward needs detJ > 0, got %g" % detJ)
    J = np.asarray(J, dtype=float)
    out = np.einsum("ip,kq,pjql->ijkl", J, J, C.c) / detJ
    return Tensor4(out)


@dataclass(frozen=True)
class WillisPointTensors:
    """Pointwise transformed Willis coefficients.

    c4 acts on gradients like any Tensor4. d3[i,j,k] couples the displacement
    component k against the test-gradient slot (i,j); s3[i,k,l] couples the
    trial-gradient slot (k,l) against the test component i; b2 is the
    zeroth-order rank-2 part. The first pair of d3 and the last pair of s3
    are symmetric, so their internal pair order is immaterial.
    """

    c4: Tensor4
    d3: np.ndarray
    s3: np.ndarray
    b2: np.ndarray


def pushforward_willis(C: Tensor4, J, H, detJ: float) -> WillisPointTensors:
    """Four-part Willis push-forward from Jacobian and second derivatives."""
    if detJ <= 0.0:
        raise ValueError("push-forward needs detJ > 0, got %g" % detJ)
    J = np.asarray(J, dtype=float)
    H = np.asarray(H, dtype=float)
    c4 = np.einsum("ip,jq,kr,ls,pqrs->ijkl", J, J, J, J, C.c) / detJ
    # M[k] = C : H_k, symmetric 2x2 for each displacement slot k
    M = np.einsum("pqrs,krs->kpq", C.c, H)
    d3 = np.einsum("ip,kpq,jq->ijk", J, M, J) / detJ
    s3 = np.einsum("jp,ipq,kq->ijk", J, M, J) / detJ
    b2 = np.einsum("ipq,jpq->ij", H, M) / detJ
    return WillisPointTensors(Tensor4(c4), d3, s3, b2)


# ---------------------------------------------------------------------------
# closed-form polar profiles
# ---------------------------------------------------------------------------

def a_factor(epsilon: float, rprime: float) -> float:
    """The radial-to-tangential stretch ratio a(eps, r') on the annulus."""
    _check_epsilon(epsilon)
    if not (1.0 <= rprime <= 2.0):
        raise ValueError("r' must lie in [1, 2], got %g" % rprime)
    return ((epsilon - 2.0) * rprime - 2.0 * (epsilon - 1.0)) \
        / ((epsilon - 2.0) * rprime)


_POLAR_SLOTS = ("rrrr", "thththth", "rrthth", "ththrr",
                "rththr", "thrrth", "rthrth", "thrthr")


@dataclass(frozen=True)
class PolarTensorProfile:
    """Nonzero cylindrical components of a polar orthotropic rank-4 tensor.

    Slot names follow the derivative-first convention: 'rthrth' is the
    (r, theta, r, theta) component, coupling the radial derivative of the
    azimuthal displacement with itself.
    """

    rrrr: float
    thththth: float
    rrthth: float
    ththrr: float
    rththr: float
    thrrth: float
    rthrth: float
    thrthr: float

    def as_array(self):
        """Dense (2,2,2,2) array in the polar frame, r -> 0, theta -> 1."""
        c = np.zeros((2, 2, 2, 2))
        c[0, 0, 0, 0] = self.rrrr
        c[1, 1, 1, 1] = self.thththth
        c[0, 0, 1, 1] = self.rrthth
        c[1, 1, 0, 0] = self.ththrr
        c[0, 1, 1, 0] = self.rththr
        c[1, 0, 0, 1] = self.thrrth
        c[0, 1, 0, 1] = self.rthrth
        c[1, 0, 1, 0] = self.thrthr
        return c


def cosserat_cloak_polar(epsilon: float, rprime: float,
                         mat0: IsotropicMaterial) -> PolarTensorProfile:
    """Closed-form cylindrical components of the Cosserat cloak tensor."""
    a = a_factor(epsilon, rprime)
    lam, mu = mat0.lam, mat0.mu
    p = lam + 2.0 * mu
    return PolarTensorProfile(
        rrrr=a * p,
        thththth=p / a,
        rrthth=lam,
        ththrr=lam,
        rththr=mu,
        thrrth=mu,
        rthrth=a * mu,
        thrthr=mu / a,
    )


@dataclass(frozen=True)
class WillisPolarProfile:
    """Closed-form cylindrical components of the Willis cloak coefficients.

    c4: the four distinct rank-4 values (full minor symmetry makes all four
    shear slots equal). d3/s3: nonzero rank-3 components keyed by slot name.
    b2: diagonal rank-2 components. All in the polar frame.
    """

    c4_rrrr: float
    c4_thththth: float
    c4_rrthth: float
    c4_shear: float
    d3: dict
    s3: dict
    b2_rr: float
    b2_thth: float

    def c4_array(self):
        c = np.zeros((2, 2, 2, 2))
        c[0, 0, 0, 0] = self.c4_rrrr
        c[1, 1, 1, 1] = self.c4_thththth
        c[0, 0, 1, 1] = c[1, 1, 0, 0] = self.c4_rrthth
        for idx in ((0, 1, 0, 1), (0, 1, 1, 0), (1, 0, 0, 1), (1, 0, 1, 0)):
            c[idx] = self.c4_shear
        return c

    def d3_array(self):
        d = np.zeros((2, 2, 2))
        for name, val in self.d3.items():
            d[_slot_index(name)] = val
        return _sym_first_pair(d)

    def s3_array(self):
        s = np.zeros((2, 2, 2))
        for name, val in self.s3.items():
            s[_slot_index(name)] = val
        return _sym_last_pair(s)

    def b2_array(self):
        return np.diag([self.b2_rr, self.b2_thth])


def _slot_index(name):
    comp = []
    i = 0
    while i < len(name):
        if name[i] == "r":
            comp.append(0)
            i += 1
        elif name[i:i + 2] == "th":
            comp.append(1)
            i += 2
        else:
            raise ValueError("bad slot name %r" % name)
    return tuple(comp)


def _sym_first_pair(d):
    out = d.copy()
    for i in range(2):
        for j in range(2):
            for k in range(2):
                if out[i, j, k] == 0.0 and out[j, i, k] != 0.0:
                    out[i, j, k] = out[j, i, k]
    return out


def _sym_last_pair(s):
    out = s.copy()
    for i in range(2):
        for j in range(2):
            for k in range(2):
                if out[i, j, k] == 0.0 and out[i, k, j] != 0.0:
                    out[i, j, k] = out[i, k, j]
    return out


def willis_cloak_polar(epsilon: float, rprime: float,
                       mat0: IsotropicMaterial) -> WillisPolarProfile:
    """Closed-form Willis cloak coefficients on the annulus.

    Derived by evaluating the four push-forward formulas on the radial map:
    with alpha the radial stretch, gamma = r'/r the tangential stretch,
    c the affine offset of the middle branch and s = c/r^2,

        C_rrrr = (alpha^3/gamma) (lam+2mu)      C_thth = (gamma^3/alpha)(...)
        C_rrthth = alpha gamma lam              shear slots = alpha gamma mu
        D_rrr = -a lam s                        D_ththr = -(1/a)(lam+2mu) s
        D_rthth = D_thrth = -2 mu s             S_ijk = D_jki
        B_rr = (lam+2mu) c^2/(alpha gamma r^4)  B_thth = 4 mu c^2/(...)

    The rank-3 and rank-2 parts vanish identically outside the annulus
    because the map is affine there.
    """
    _check_epsilon(epsilon)
    if not (1.0 <= rprime <= 2.0):
        raise ValueError("r' must lie in [1, 2], got %g" % rprime)
    lam, mu = mat0.lam, mat0.mu
    p = lam + 2.0 * mu
    eps = epsilon
    alpha = 1.0 / (2.0 - eps)
    c = (2.0 - 2.0 * eps) / (2.0 - eps)
    r = kohn_radial_inverse(eps, rprime)
    gamma = rprime / r
    a = alpha / gamma
    s = c / r ** 2
    d3 = {
        "rrr": -a * lam * s,
        "ththr": -(1.0 / a) * p * s,
        "rthth": -2.0 * mu * s,
        "thrth": -2.0 * mu * s,
    }
    s3 = {
        "rrr": -a * lam * s,
        "rthth": -(1.0 / a) * p * s,
        "ththr": -2.0 * mu * s,
        "thrth": -2.0 * mu * s,
    }
    return WillisPolarProfile(
        c4_rrrr=(alpha ** 3 / gamma) * p,
        c4_thththth=(gamma ** 3 / alpha) * p,
        c4_rrthth=alpha * gamma * lam,
        c4_shear=alpha * gamma * mu,
        d3=d3,
        s3=s3,
        b2_rr=p * c ** 2 / (alpha * gamma * r ** 4),
        b2_thth=4.0 * mu * c ** 2 / (alpha * gamma * r ** 4),
    )


# ---------------------------------------------------------------------------
# frame rotation
# ---------------------------------------------------------------------------

def rotation_matrix(theta: float):
    """Columns are the radial and azimuthal unit vectors at angle theta."""
    ct, st = np.cos(theta), np.sin(theta)
    return np.array([[ct, -st], [st, ct]])


def polar_to_cartesian(values, theta: float):
    """Rotate polar-frame tensor components into the Cartesian frame.

    Accepts a PolarTensorProfile, a Tensor4, or a plain ndarray of rank 2-4;
    applies the rotation to every slot.
    """
    if isinstance(values, PolarTensorProfile):
        arr = values.as_array()
    elif isinstance(values, Tensor4):
        arr = values.c
    else:
        arr = np.asarray(values, dtype=float)
    R = rotation_matrix(theta)
    if arr.ndim == 2:
        out = np.einsum("ia,jb,ab->ij", R, R, arr)
    elif arr.ndim == 3:
        out = np.einsum("ia,jb,kc,abc->ijk", R, R, R, arr)
    elif arr.ndim == 4:
        out = np.einsum("ia,jb,kc,ld,abcd->ijkl", R, R, R, R, arr)
    else:
        raise ValueError("rank %d not supported" % arr.ndim)
    if isinstance(values, (PolarTensorProfile, Tensor4)) and arr.ndim == 4:
        return Tensor4(out)
    return out


# ---------------------------------------------------------------------------
# pointwise cloak coefficient evaluators (Cartesian)
# ---------------------------------------------------------------------------

def cosserat_tensor_at(epsilon: float, mat0: IsotropicMaterial, y) -> Tensor4:
    """Cosserat cloak tensor at a Cartesian point of the annulus.

    Outside [1, 2] returns the isotropic background.
    """
    y = np.asarray(y, dtype=float)
    rp = float(np.hypot(y[0], y[1]))
    if rp <= 1.0 or rp >= 2.0:
        return isotropic_tensor(mat0)
    prof = cosserat_cloak_polar(epsilon, rp, mat0)
    theta = float(np.arctan2(y[1], y[0]))
    return polar_to_cartesian(prof, theta)


def willis_tensors_at(epsilon: float, mat0: IsotropicMaterial,
                      y) -> WillisPointTensors:
    """Willis cloak coefficients at a Cartesian point of the annulus.

    Outside [1, 2] the rank-4 part is the isotropic background and the
    coupling parts vanish.
    """
    y = np.asarray(y, dtype=float)
    rp = float(np.hypot(y[0], y[1]))
    if rp <= 1.0 or rp >= 2.0:
        return WillisPointTensors(isotropic_tensor(mat0),
                                  np.zeros((2, 2, 2)),
                                  np.zeros((2, 2, 2)),
                                  np.zeros((2, 2)))
    prof = willis_cloak_polar(epsilon, rp, mat0)
    theta = float(np.arctan2(y[1], y[0]))
    c4 = Tensor4(polar_to_cartesian(prof.c4_array(), theta))
    d3 = polar_to_cartesian(prof.d3_array(), theta)
    s3 = polar_to_cartesian(prof.s3_array(), theta)
    b2 = polar_to_cartesian(prof.b2_array(), theta)
    return WillisPointTensors(c4, d3, s3, b2)


def cloak_gauge_constraints(epsilon: float, outer_tag: str = "cloak_outer",
                            inner_tag: str = "cloak_inner",
                            slave_region: str = "cloak"):
    """Interface jump maps for the coupled-cloak displacement field.

    The change of variables behind the coupled construction rescales the
    displacement by the inverse transposed Jacobian, which is
    discontinuous at both rims of the annulus: tangentially continuous,
    radially stretched by 2 - epsilon at the outer rim and by
    (2 - epsilon) / epsilon at the inner rim (annulus side relative to
    the neighbouring region in both cases).  The result plugs straight
    into the gauged solve path of the finite element layer.
    """
    _check_epsilon(epsilon)

    def radial_stretch(factor):
        def matrices(pts):
            pts = np.asarray(pts, dtype=float)
            n = pts / np.hypot(pts[:, 0], pts[:, 1])[:, None]
            nn = n[:, :, None] * n[:, None, :]
            return np.eye(2) + (factor - 1.0) * nn
        return matrices

    return [(outer_tag, slave_region, radial_stretch(2.0 - epsilon)),
            (inner_tag, slave_region, radial_stretch((2.0 - epsilon) / epsilon))]
