"""Analytic ground truth for rectangular cross-sections.

Two oracles, independent of the finite-element path:

* separation of variables for a homogeneously filled rectangle
  (Dirichlet modes for the electric longitudinal field, nonzero Neumann
  modes for the magnetic one), giving gamma^2 = eps - lambda exactly;
* transverse resonance across a full-height dielectric slab terminated
  by the conducting walls, as one transcendental dispersion equation per
  (family, transverse index).

The slab determinants are stated with tangents; root finding uses the
equivalent product form with the tangents cleared, which is entire in
gamma^2 (no poles on the search axes) and therefore safe to bracket.
Both families reduce to k_x a = m pi when the permittivities coincide,
which is the validation identity for the determinants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize


class OracleFamily(str, Enum):
    DIRICHLET_DERIVED = "dirichlet_derived"
    NEUMANN_DERIVED = "neumann_derived"
    LSE = "lse"
    LSM = "lsm"


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleRoot:
    """One analytic eigenvalue candidate.

    ``residual`` is the absolute value of the defining equation at the
    root: zero for the closed-form rectangle families, the normalized
    cleared determinant for the slab families.  ``bracket`` records the
    gamma^2 interval the root was isolated in (None for closed forms).
    """

    gamma: complex
    family: OracleFamily
    m: int
    n: int
    residual: float
    bracket: tuple | None = None


def _gamma_from_usq(u):
    """gamma = sqrt(u) on the real axis, i*sqrt(-u) on the imaginary one."""
    if u >= 0.0:
        return complex(math.sqrt(u), 0.0)
    return complex(0.0, math.sqrt(-u))


def homogeneous_rect_spectrum(a, b, eps, max_lambda):
    """All separated eigenvalues with transverse eigenvalue <= max_lambda.

    Dirichlet modes need both half-wave counts >= 1; Neumann modes exclude
    only the constant, which the zero-mean space removes.  Each transverse
    eigenvalue contributes gamma = +-sqrt(eps - lambda), listed once when
    gamma = 0.
    """
    if a <= 0.0 or b <= 0.0:
        raise OracleError("rectangle sides must be positive")
    if eps < 1.0:
        raise OracleError("permittivity must be >= 1")
    roots = []
    m_max = int(math.ceil(a * math.sqrt(max_lambda) / math.pi)) + 1
    n_max = int(math.ceil(b * math.sqrt(max_lambda) / math.pi)) + 1
    for family, m_lo, n_lo in ((OracleFamily.DIRICHLET_DERIVED, 1, 1),
                               (OracleFamily.NEUMANN_DERIVED, 0, 0)):
        for m in range(m_lo, m_max + 1):
            for n in range(n_lo, n_max + 1):
                if family is OracleFamily.NEUMANN_DERIVED and m == 0 and n == 0:
                    continue
                lam = (m * math.pi / a) ** 2 + (n * math.pi / b) ** 2
                if lam > max_lambda:
                    continue
                gamma = _gamma_from_usq(eps - lam)
                roots.append(OracleRoot(gamma=gamma, family=family, m=m, n=n,
                                        residual=0.0))
                if gamma != 0:
                    roots.append(OracleRoot(gamma=-gamma, family=family,
                                            m=m, n=n, residual=0.0))
    return roots


def _sin_over_k(ksq, x):
    """sin(kx)/k as an entire function of k^2 (sinh branch for k^2 < 0)."""
    if ksq > 0.0:
        k = math.sqrt(ksq)
        return math.sin(k * x) / k
    if ksq < 0.0:
        k = math.sqrt(-ksq)
        return math.sinh(k * x) / k
    return x


def _cos_k(ksq, x):
    if ksq > 0.0:
        return math.cos(math.sqrt(ksq) * x)
    if ksq < 0.0:
        return math.cosh(math.sqrt(-ksq) * x)
    return 1.0


def _kxsq(u, eps, n, b):
    return eps - u - (n * math.pi / b) ** 2


def cleared_determinant(family, u, a, b, d, eps1, eps2, n):
    """Slab determinant with tangents cleared, as a function of u = gamma^2.

    LSE:  sin(k2 d)/k2 * cos(k1 (a-d)) + sin(k1 (a-d))/k1 * cos(k2 d)
    LSM:  (k2/eps2) sin(k2 d) cos(k1 (a-d)) + (k1/eps1) sin(k1 (a-d)) cos(k2 d)

    with k_j^2 = eps_j - u - (n pi / b)^2 and region 2 on [0, d].  Both are
    entire in u and vanish exactly at the eigenvalues of the corresponding
    transverse-resonance problem, including points where the tangent form
    degenerates into a pole-root coincidence.
    """
    k1sq = _kxsq(u, eps1, n, b)
    k2sq = _kxsq(u, eps2, n, b)
    t_left = _sin_over_k(k2sq, d)
    t_right = _sin_over_k(k1sq, a - d)
    c_left = _cos_k(k2sq, d)
    c_right = _cos_k(k1sq, a - d)
    if family is OracleFamily.LSE:
        return t_left * c_right + t_right * c_left
    if family is OracleFamily.LSM:
        return (k2sq / eps2) * t_left * c_right + (k1sq / eps1) * t_right * c_left
    raise OracleError(f"not a slab family: {family}")


def normalized_determinant(family, u, a, b, d, eps1, eps2, n):
    """Cleared determinant scaled by its term magnitudes.

    Same sign and root set as the cleared form, but with values O(1), so
    a polished root reaches residuals near machine precision even where
    the hyperbolic branches make the raw terms large.
    """
    k1sq = _kxsq(u, eps1, n, b)
    k2sq = _kxsq(u, eps2, n, b)
    t_left = _sin_over_k(k2sq, d) * _cos_k(k1sq, a - d)
    t_right = _sin_over_k(k1sq, a - d) * _cos_k(k2sq, d)
    if family is OracleFamily.LSM:
        t_left *= k2sq / eps2
        t_right *= k1sq / eps1
    return (t_left + t_right) / (1.0 + abs(t_left) + abs(t_right))


def dispersion_determinant(family, gamma, a, b, d, eps1, eps2, n):
    """Literal tangent-form determinant (complex-valued off its poles).

    LSE:  k1 tan(k2 d) + k2 tan(k1 (a-d))
    LSM:  (k2/eps2) tan(k2 d) + (k1/eps1) tan(k1 (a-d))

    Exposed for validation; the root finder uses the cleared form.
    """
    u = complex(gamma) ** 2
    k1 = np.sqrt(complex(eps1 - u - (n * math.pi / b) ** 2))
    k2 = np.sqrt(complex(eps2 - u - (n * math.pi / b) ** 2))
    if family is OracleFamily.LSE:
        return k1 * np.tan(k2 * d) + k2 * np.tan(k1 * (a - d))
    if family is OracleFamily.LSM:
        return (k2 / eps2) * np.tan(k2 * d) + (k1 / eps1) * np.tan(k1 * (a - d))
    raise OracleError(f"not a slab family: {family}")


def _polish(f, u, fu, lo, hi):
    """A few Newton steps with a numeric derivative, kept inside [lo, hi]."""
    h0 = 1e-7 * (1.0 + abs(u))
    for _ in range(8):
        if abs(fu) <= 1e-14:
            break
        df = (f(u + h0) - f(u - h0)) / (2.0 * h0)
        if df == 0.0:
            break
        step = fu / df
        u_new = min(max(u - step, lo), hi)
        fu_new = f(u_new)
        if abs(fu_new) >= abs(fu):
            break
        u, fu = u_new, fu_new
    return u, fu


def slab_dispersion_roots(a, b, d, eps1, eps2, n=0, family=OracleFamily.LSE,
                          gamma_max=4.0, samples_per_segment=2000):
    """Real- and imaginary-axis slab eigenvalues by bracketing in gamma^2.

    The search runs on a uniform u = gamma^2 grid over the two axis
    segments [-gamma_max^2, 0] (imaginary gamma) and [0, gamma_max^2]
    (real gamma).  Sign changes of the normalized cleared determinant are
    isolated by Brent bracketing and Newton-polished; the cleared form has
    no tangent poles, so a sign change is always a root.  Roots come back
    as +- pairs ordered from the most propagating downwards.
    """
    family = OracleFamily(family)
    if family not in (OracleFamily.LSE, OracleFamily.LSM):
        raise OracleError("slab families are LSE and LSM")
    if not 0.0 < d < a:
        raise OracleError("slab boundary must satisfy 0 < d < a")
    if eps1 < 1.0 or eps2 < 1.0:
        raise OracleError("permittivities must be >= 1")
    if n < 0:
        raise OracleError("transverse index must be >= 0")

    def f(u):
        return normalized_determinant(family, u, a, b, d, eps1, eps2, n)

    u_roots = []
    umax = gamma_max * gamma_max
    for lo, hi in ((-umax, 0.0), (0.0, umax)):
        us = np.linspace(lo, hi, samples_per_segment + 1)
        fs = np.array([f(u) for u in us])
        exact = np.where(fs == 0.0)[0]
        for i in exact:
            u_roots.append((float(us[i]), 0.0, (float(us[i]), float(us[i]))))
        flips = np.where(fs[:-1] * fs[1:] < 0.0)[0]
        for i in flips:
            u0, u1 = float(us[i]), float(us[i + 1])
            u_star = optimize.brentq(f, u0, u1, xtol=1e-13, maxiter=200)
            u_star, f_star = _polish(f, u_star, f(u_star), u0, u1)
            u_roots.append((u_star, abs(f_star), (u0, u1)))

    u_roots.sort(key=lambda r: -r[0])
    deduped = []
    for u, res, br in u_roots:
        if deduped and abs(u - deduped[-1][0]) <= 1e-10 * (1.0 + abs(u)):
            continue
        if family is OracleFamily.LSM:
            # Both transverse wavenumbers vanishing together (possible only
            # for equal permittivities) zeroes the cleared form with a
            # trivial eigenfunction; not an eigenvalue.
            tol = 1e-9 * (1.0 + abs(u))
            if abs(_kxsq(u, eps1, n, b)) < tol and abs(_kxsq(u, eps2, n, b)) < tol:
                continue
        deduped.append((u, res, br))

    roots = []
    for m, (u, res, br) in enumerate(deduped, start=1):
        gamma = _gamma_from_usq(u)
        roots.append(OracleRoot(gamma=gamma, family=family, m=m, n=n,
                                residual=res, bracket=br))
        if gamma != 0:
            roots.append(OracleRoot(gamma=-gamma, family=family, m=m, n=n,
                                    residual=res, bracket=br))
    return roots


def match_roots(roots, eigenvalues, rel_tol):
    """Nearest finite-element eigenvalue for each oracle root.

    Returns (matches, mismatch_count); matches are tuples
    (root, nearest eigenvalue, relative gap).  The gap is relative to
    |gamma_oracle| with a tiny floor so a root at the origin compares
    absolutely.
    """
    vals = np.asarray(eigenvalues, dtype=complex)
    matches = []
    mismatches = 0
    for root in roots:
        gaps = np.abs(vals - root.gamma)
        j = int(np.argmin(gaps))
        rel = float(gaps[j] / max(abs(root.gamma), 1e-12))
        matches.append((root, complex(vals[j]), rel))
        if rel > rel_tol:
            mismatches += 1
    return matches, mismatches


def write_roots_csv(roots, stream):
    """CSV dump: family, m, n, Re gamma, Im gamma, residual."""
    stream.write("family,m,n,re_gamma,im_gamma,residual\n")
    for r in roots:
        stream.write(f"{r.family.value},{r.m},{r.n},"
                     f"{r.gamma.real:.17g},{r.gamma.imag:.17g},"
                     f"{r.residual:.17g}\n")
