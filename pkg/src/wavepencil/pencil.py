"""The quartic matrix pencil in the axial propagation constant.

With K the weighted L2 operator, A1/A2 the weighted gradient operators
and S the interface coupling, the pencil is

    L(g) = g^4 K + g^2 (A1 - (eps1 + eps2) K) + g (eps1 - eps2) S
           + eps1 eps2 (K - A2),

a self-adjoint pencil (L(g)^H = L(conj g)) whose spectrum is symmetric
under g -> -g through the field-parity similarity.  The real interval
where eigenvalue isolation is not guaranteed, and the degeneration
points +-sqrt(eps_i) inside it, are exposed alongside.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy import linalg

from .assembly import PencilMatrices


class PencilError(ValueError):
    pass


@dataclass(frozen=True)
class ExclusionInterval:
    """Real-axis band containing the degeneration points.

    ``lower <= |g| <= upper`` (g real) is the band; ``p`` is the
    root-mean permittivity used as the characteristic eigenvalue scale.
    """

    eps1: float
    eps2: float
    delta: float
    lower: float
    upper: float
    p: float

    def contains(self, gamma_abs):
        return self.lower <= gamma_abs <= self.upper

    def dilated(self, margin):
        return (self.lower - margin, self.upper + margin)


def exclusion_interval(eps1, eps2):
    """Band endpoints from the permittivity pair.

    The lower endpoint uses the smaller permittivity and the upper the
    larger one, so both degeneration points +-sqrt(eps_i) always lie
    inside regardless of the argument order.
    """
    if eps1 < 1.0 or eps2 < 1.0:
        raise PencilError("permittivities must be >= 1")
    delta = 0.5 * (eps2 - eps1)
    lo = min(eps1, eps2)
    hi = max(eps1, eps2)
    lower = 0.5 * (math.sqrt(delta * delta + 4.0 * lo) - abs(delta))
    upper = 0.5 * (math.sqrt(delta * delta + 4.0 * hi) + abs(delta))
    p = math.sqrt(0.5 * (eps1 + eps2))
    return ExclusionInterval(eps1=float(eps1), eps2=float(eps2), delta=delta,
                             lower=lower, upper=upper, p=p)


def degeneration_points(eps1, eps2):
    """Sorted distinct values +-sqrt(eps_i)."""
    roots = {math.sqrt(eps1), math.sqrt(eps2)}
    return sorted({s * r for r in roots for s in (1.0, -1.0)})


@dataclass(frozen=True)
class Pencil:
    """Coefficient matrices of the quartic pencil (cubic term is zero)."""

    eps1: float
    eps2: float
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c4: np.ndarray
    matrices: PencilMatrices | None = None

    @property
    def n(self):
        return self.c4.shape[0]

    @property
    def c3(self):
        return np.zeros_like(self.c4)

    @cached_property
    def coefficient_norms(self):
        """Frobenius norms of (C0, C1, C2, C4), cached for residuals."""
        return tuple(np.linalg.norm(c, "fro") for c in
                     (self.c0, self.c1, self.c2, self.c4))

    @property
    def exclusion(self):
        return exclusion_interval(self.eps1, self.eps2)


def make_pencil(matrices):
    """Form the pencil coefficients from assembled operator matrices."""
    k, a1, a2, s = matrices.k, matrices.a1, matrices.a2, matrices.s
    e1, e2 = matrices.eps1, matrices.eps2
    shapes = {m.shape for m in (k, a1, a2, s)}
    if len(shapes) != 1 or k.shape[0] != k.shape[1]:
        raise PencilError("operator matrices must share one square shape")
    return Pencil(
        eps1=e1,
        eps2=e2,
        c0=e1 * e2 * (k - a2),
        c1=(e1 - e2) * s,
        c2=a1 - (e1 + e2) * k,
        c4=k,
        matrices=matrices,
    )


def evaluate(pencil, gamma):
    """L(gamma); real output for real gamma, complex otherwise."""
    g = complex(gamma)
    if g.imag == 0.0:
        g = g.real
    g2 = g * g
    return (g2 * g2) * pencil.c4 + g2 * pencil.c2 + g * pencil.c1 + pencil.c0


def apply(pencil, gamma, v):
    """L(gamma) v without forming the matrix."""
    g = complex(gamma)
    g2 = g * g
    return ((g2 * g2) * (pencil.c4 @ v) + g2 * (pencil.c2 @ v)
            + g * (pencil.c1 @ v) + pencil.c0 @ v)


def residual(pencil, gamma, v):
    """Scale-free backward-error surrogate for an eigenpair candidate.

    ||L(g) v|| / (||v|| (|g|^4 ||C4||_F + |g|^2 ||C2||_F + |g| ||C1||_F
    + ||C0||_F)); invariant under scaling of v.
    """
    v = np.asarray(v)
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        raise PencilError("residual of the zero vector is undefined")
    n0, n1, n2, n4 = pencil.coefficient_norms
    a = abs(gamma)
    denom = vnorm * (a ** 4 * n4 + a * a * n2 + a * n1 + n0)
    return float(np.linalg.norm(apply(pencil, gamma, v)) / denom)


def linearize(pencil, scale=1.0):
    """Monic block-companion matrix of the (scaled) pencil.

    With ``scale`` s the returned 4n matrix has eigenvalues g / s for the
    pencil eigenvalues g (s = 1 gives them directly).  The leading
    coefficient is factored by Cholesky, which doubles as the positivity
    check on the L2 operator: factorization failure signals broken
    assembly.
    """
    n = pencil.n
    try:
        cho = linalg.cho_factor(pencil.c4, lower=True)
    except linalg.LinAlgError as exc:
        raise PencilError(
            "leading coefficient is not positive definite; assembly is broken"
        ) from exc
    s = float(scale)
    b0 = linalg.cho_solve(cho, pencil.c0) / s ** 4
    b1 = linalg.cho_solve(cho, pencil.c1) / s ** 3
    b2 = linalg.cho_solve(cho, pencil.c2) / s ** 2

    comp = np.zeros((4 * n, 4 * n))
    eye = np.eye(n)
    comp[0 * n:1 * n, 1 * n:2 * n] = eye
    comp[1 * n:2 * n, 2 * n:3 * n] = eye
    comp[2 * n:3 * n, 3 * n:4 * n] = eye
    comp[3 * n:, 0 * n:1 * n] = -b0
    comp[3 * n:, 1 * n:2 * n] = -b1
    comp[3 * n:, 2 * n:3 * n] = -b2
    return comp
