import math

import numpy as np
import pytest

from wavepencil.oracle import (OracleError, OracleFamily,
                               cleared_determinant, dispersion_determinant,
                               homogeneous_rect_spectrum, match_roots,
                               slab_dispersion_roots, write_roots_csv)

PI = math.pi


def gammas_of(roots, family=None):
    return sorted((r.gamma for r in roots
                   if family is None or r.family is family),
                  key=lambda g: (g.real, g.imag))


def test_homogeneous_square_examples():
    roots = homogeneous_rect_spectrum(PI, PI, 2.0, max_lambda=5.5)
    neumann_unit = [r for r in roots if r.family is OracleFamily.NEUMANN_DERIVED
                    and abs(abs(r.gamma) - 1.0) < 1e-14]
    # modes (1,0) and (0,1), both signs: multiplicity 2 at +1 and at -1
    assert sum(1 for r in neumann_unit if r.gamma.real > 0) == 2
    assert sum(1 for r in neumann_unit if r.gamma.real < 0) == 2
    zero = [r for r in roots if r.gamma == 0
            and r.family is OracleFamily.DIRICHLET_DERIVED]
    assert [(r.m, r.n) for r in zero] == [(1, 1)]
    sqrt3 = [r for r in roots if r.family is OracleFamily.DIRICHLET_DERIVED
             and abs(r.gamma - 1j * math.sqrt(3)) < 1e-14]
    assert sorted((r.m, r.n) for r in sqrt3) == [(1, 2), (2, 1)]
    assert all(r.residual <= 1e-12 for r in roots)


def test_homogeneous_rejects_bad_arguments():
    with pytest.raises(OracleError):
        homogeneous_rect_spectrum(-1.0, PI, 2.0, 5.0)
    with pytest.raises(OracleError):
        homogeneous_rect_spectrum(PI, PI, 0.5, 5.0)


def test_slab_lse_homogeneous_limit():
    # eps1 = eps2 = 2: k_x a = m pi, so gamma^2 = 2 - m^2
    roots = slab_dispersion_roots(PI, PI, PI / 2, 2.0, 2.0, n=0,
                                  family=OracleFamily.LSE, gamma_max=4.0)
    us = sorted({round((r.gamma ** 2).real, 9) for r in roots})
    assert us == [-14.0, -7.0, -2.0, 1.0]
    assert all(r.residual <= 1e-12 for r in roots)


def test_slab_lsm_homogeneous_limit_weights_cancel():
    roots = slab_dispersion_roots(PI, PI, PI / 2, 1.0, 1.0, n=0,
                                  family=OracleFamily.LSM, gamma_max=4.0)
    us = sorted({round((r.gamma ** 2).real, 9) for r in roots})
    assert us == [-15.0, -8.0, -3.0, 0.0]


def test_slab_homogeneous_with_asymmetric_slab_position():
    # d != a/2 keeps the reduction k_x a = m pi intact
    roots = slab_dispersion_roots(PI, PI, 1.0, 2.0, 2.0, n=0,
                                  family=OracleFamily.LSE, gamma_max=3.9)
    us = sorted({round((r.gamma ** 2).real, 9) for r in roots})
    assert us == [-14.0, -7.0, -2.0, 1.0]


def test_slab_roots_on_axes_only():
    for fam in (OracleFamily.LSE, OracleFamily.LSM):
        roots = slab_dispersion_roots(PI, PI, PI / 2, 1.0, 4.0, n=0,
                                      family=fam, gamma_max=4.0)
        for r in roots:
            assert r.gamma.real == 0.0 or r.gamma.imag == 0.0
            assert abs(r.gamma) <= 4.0 + 1e-9


def test_slab_root_count_nonincreasing_in_transverse_index():
    counts = []
    for n in range(3):
        roots = slab_dispersion_roots(PI, PI, PI / 2, 1.0, 4.0, n=n,
                                      family=OracleFamily.LSE, gamma_max=4.0)
        counts.append(len(roots))
    assert counts[0] >= counts[1] >= counts[2]


def test_cleared_form_matches_tan_form_off_poles():
    # identity: tan-form * cos(k2 d) cos(k1 (a-d)) == k1 k2 * cleared (LSE)
    rng = np.random.default_rng(0)
    for _ in range(50):
        u = rng.uniform(-16.0, 4.0)
        k1sq = 1.0 - u
        k2sq = 4.0 - u
        k1 = np.sqrt(complex(k1sq))
        k2 = np.sqrt(complex(k2sq))
        c1 = np.cos(k1 * (PI - PI / 2))
        c2 = np.cos(k2 * (PI / 2))
        if min(abs(c1), abs(c2)) < 1e-2:
            continue
        tan_form = dispersion_determinant(
            OracleFamily.LSE, np.sqrt(complex(u)), PI, PI, PI / 2,
            1.0, 4.0, 0)
        cleared = cleared_determinant(OracleFamily.LSE, u, PI, PI, PI / 2,
                                      1.0, 4.0, 0)
        lhs = tan_form * c1 * c2
        rhs = k1 * k2 * cleared
        assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))


def test_tan_form_vanishes_at_reported_roots():
    roots = slab_dispersion_roots(PI, PI, PI / 2, 1.0, 4.0, n=0,
                                  family=OracleFamily.LSM, gamma_max=4.0)
    for r in roots:
        u = (r.gamma ** 2).real
        k1 = np.sqrt(complex(1.0 - u))
        k2 = np.sqrt(complex(4.0 - u))
        c1 = abs(np.cos(k1 * (PI / 2)))
        c2 = abs(np.cos(k2 * (PI / 2)))
        if min(c1, c2) < 1e-1:
            continue  # tangent pole adjacent; covered by the cleared form
        val = dispersion_determinant(OracleFamily.LSM, r.gamma, PI, PI,
                                     PI / 2, 1.0, 4.0, 0)
        assert abs(val) <= 1e-8


def test_slab_argument_validation():
    with pytest.raises(OracleError):
        slab_dispersion_roots(PI, PI, 0.0, 1.0, 4.0)
    with pytest.raises(OracleError):
        slab_dispersion_roots(PI, PI, PI, 1.0, 4.0)
    with pytest.raises(OracleError):
        slab_dispersion_roots(PI, PI, PI / 2, 0.5, 4.0)
    with pytest.raises(OracleError):
        slab_dispersion_roots(PI, PI, PI / 2, 1.0, 4.0, n=-1)
    with pytest.raises(OracleError):
        slab_dispersion_roots(PI, PI, PI / 2, 1.0, 4.0,
                              family=OracleFamily.DIRICHLET_DERIVED)


def test_match_roots_accounting():
    roots = homogeneous_rect_spectrum(PI, PI, 2.0, max_lambda=2.5)
    vals = np.array([1.001, -1.001, 0.02j, -0.02j, 5.0], dtype=complex)
    matches, mismatches = match_roots(roots, vals, rel_tol=0.05)
    assert len(matches) == len(roots)
    by_gamma = {complex(r.gamma): rel for r, _, rel in matches}
    assert by_gamma[complex(1.0)] <= 0.05
    # the gamma = 0 root compares absolutely against the tiny floor
    assert mismatches >= 1


def test_csv_output_format(tmp_path):
    roots = slab_dispersion_roots(PI, PI, PI / 2, 1.0, 4.0, n=0,
                                  family=OracleFamily.LSE, gamma_max=3.0)
    path = tmp_path / "roots.csv"
    with open(path, "w", encoding="utf-8") as fh:
        write_roots_csv(roots, fh)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "family,m,n,re_gamma,im_gamma,residual"
    assert len(lines) == len(roots) + 1
    fields = lines[1].split(",")
    assert fields[0] == "lse"
    complex(float(fields[3]), float(fields[4]))
