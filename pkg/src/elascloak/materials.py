"""Constitutive tensor algebra for 2D linear elasticity.

Isotropic materials are Lame pairs (lam, mu) in N/m^2 subject to strong
convexity. Rank-4 tensors are stored with all 16 components in 2D, acting on
full (unsymmetrized) displacement gradients with the derivative-first slot
pairing: the energy density couples gradients as

    (d w_j / d x_i) * C[i, j, k, l] * (d u_l / d x_k)

so slots 1 and 3 are derivative directions and slots 2 and 4 displacement
components; the traction on a surface with normal n is
t_j = n_i C[i,j,k,l] d u_l / d x_k. For tensors with both minor symmetries
(every isotropic tensor here) this coincides with the familiar
sigma_ij = C_ijkl e_kl reading; for the transformed cloak tensors, which
lose minor symmetry, the pairing above is the defining one. Minor symmetry
is a checkable property, never a storage assumption.
"""

from dataclasses import dataclass

import numpy as np

_I2 = np.eye(2)


class ConvexityError(ValueError):
    """Raised when a Lame pair violates strong convexity."""


@dataclass(frozen=True)
class IsotropicMaterial:
    """Isotropic elastic material: first Lame parameter and shear modulus.

    Strong convexity requires mu > 0 and d*lam + 2*mu > 0 in dimension d.
    """

    lam: float
    mu: float
    d: int = 2

    def __post_init__(self):
        if not np.isfinite(self.lam) or not np.isfinite(self.mu):
            raise ConvexityError("non-finite Lame parameters")
        if self.mu <= 0.0:
            raise ConvexityError("shear modulus must be positive, got %g"
                                 % self.mu)
        if self.d * self.lam + 2.0 * self.mu <= 0.0:
            raise ConvexityError(
                "d*lam + 2*mu must be positive, got %g"
                % (self.d * self.lam + 2.0 * self.mu))

    def scaled(self, eta):
        """Material with both moduli scaled by eta > 0."""
        return IsotropicMaterial(eta * self.lam, eta * self.mu, self.d)


@dataclass(frozen=True)
class DerivedModuli:
    nu: float      # Poisson ratio, dimensionless
    kappa: float   # bulk modulus, N/m^2
    E: float       # Young's modulus, N/m^2


@dataclass(frozen=True)
class Tensor4:
    """Rank-4 elasticity tensor in 2D acting on full gradients."""

    c: np.ndarray  # shape (2, 2, 2, 2)

    def __post_init__(self):
        arr = np.asarray(self.c, dtype=float)
        if arr.shape != (2, 2, 2, 2):
            raise ValueError("Tensor4 expects shape (2,2,2,2)")
        object.__setattr__(self, "c", arr)

    def as_matrix(self):
        """4x4 gradient-form matrix: row (i,j), column (k,l), C order."""
        return self.c.reshape(4, 4)

    def apply(self, G):
        """sigma = C : G for a 2x2 gradient G (full, unsymmetrized)."""
        return np.einsum("ijkl,kl->ij", self.c, np.asarray(G, float))

    def has_major_symmetry(self, tol=0.0):
        return np.max(np.abs(self.c - self.c.transpose(2, 3, 0, 1))) <= tol

    def has_minor_symmetries(self, tol=0.0):
        left = np.max(np.abs(self.c - self.c.transpose(1, 0, 2, 3)))
        right = np.max(np.abs(self.c - self.c.transpose(0, 1, 3, 2)))
        return max(left, right) <= tol

    def __add__(self, other):
        return Tensor4(self.c + other.c)

    def __sub__(self, other):
        return Tensor4(self.c - other.c)

    def __mul__(self, s):
        return Tensor4(self.c * float(s))

    __rmul__ = __mul__


def isotropic_tensor(mat: IsotropicMaterial, d: int = 2) -> Tensor4:
    """C_ijkl = lam d_ij d_kl + mu (d_ik d_jl + d_il d_jk), materialized in 2D.

    d enters only through the material's convexity check; tensor storage is
    two dimensional.
    """
    if d != 2:
        raise ValueError("tensor materialization is 2D only")
    lam, mu = mat.lam, mat.mu
    c = (lam * np.einsum("ij,kl->ijkl", _I2, _I2)
         + mu * (np.einsum("ik,jl->ijkl", _I2, _I2)
                 + np.einsum("il,jk->ijkl", _I2, _I2)))
    return Tensor4(c)


def derived_moduli(mat: IsotropicMaterial, d: int = 2) -> DerivedModuli:
    """Poisson ratio, bulk modulus and Young's modulus in dimension d."""
    lam, mu = mat.lam, mat.mu
    denom = (d - 1) * lam + 2.0 * mu
    nu = lam / denom
    kappa = (d * lam + 2.0 * mu) / d
    E = 2.0 * mu * (d * lam + 2.0 * mu) / denom
    return DerivedModuli(nu=nu, kappa=kappa, E=E)


def quadratic_form(C: Tensor4, A) -> float:
    """(C : A) : A, the energy quadratic form on gradients."""
    A = np.asarray(A, dtype=float)
    return float(np.einsum("ijkl,ij,kl->", C.c, A, A))


def is_ordered(m1: IsotropicMaterial, m2: IsotropicMaterial,
               d: int = 2) -> bool:
    """True iff C1 <= C2 as quadratic forms on symmetric matrices.

    For isotropic pairs this is equivalent to d*lam1 + 2*mu1 <= d*lam2 + 2*mu2
    together with mu1 <= mu2.
    """
    return (d * m1.lam + 2.0 * m1.mu <= d * m2.lam + 2.0 * m2.mu
            and m1.mu <= m2.mu)


def form_bounds(mat: IsotropicMaterial, d: int = 2):
    """Sharp constants (c_lo, c_hi) with
    c_lo |A|^2 <= (C:A):A <= c_hi |A|^2 for symmetric A."""
    a = d * mat.lam + 2.0 * mat.mu
    b = 2.0 * mat.mu
    return (min(a, b), max(a, b))
