from fractions import Fraction

import numpy as np
import pytest

from padicfield.lattice import BilinearForm, Lattice, haar_integral, random_gridfn
from padicfield.operators import (
    EllipticPolynomial,
    NotCertified,
    PolynomialSyntaxError,
    alt_klein_gordon_symbol,
    apply_multiplier,
    apply_symbol,
    bessel_symbol,
    certify_elliptic,
    constant_symbol,
    decay_fit,
    green_series,
    green_series_lattice,
    green_spectral,
    invert_symbol,
    klein_gordon_solve,
    klein_gordon_symbol,
    poly_abs_on_lattice,
    shell_term,
    z_alpha,
)
from padicfield.padic import PVector
from oracles import green_radial_sum_of_squares, radial_kg_origin, radial_solution_n1, z_alpha_enumeration

# frozen from oracles.radial_solution_n1 / radial_kg_origin / z_alpha_enumeration
U0_P2 = 0.6322498901737673
U0_P3 = 0.602708844853908
G0_N1_ALPHA2 = 1.1252807760276444
ZALPHA_SQ_P3 = 0.8888888888888888


def test_frozen_values_reproduced_by_oracles():
    assert radial_solution_n1(2, 1.0, 1.0, 0) == pytest.approx(U0_P2, abs=1e-11)
    assert radial_solution_n1(3, 1.0, 1.0, 0) == pytest.approx(U0_P3, abs=1e-11)
    assert z_alpha_enumeration(lambda z: z[0] ** 2 + z[1] ** 2, 3, 2, 3, 1.0) == pytest.approx(ZALPHA_SQ_P3)


# -- polynomials ---------------------------------------------------------------

def test_parse_and_literal():
    l = EllipticPolynomial.parse("x1^2 + 2*x1*x2 - 3*x2^2 + x1^2", 5)
    assert l.N == 2 and l.degree == 2
    assert l.literal() == "2*x1^2+2*x1*x2-3*x2^2"
    assert EllipticPolynomial.parse(l.literal(), 5).terms == l.terms
    assert l([1, 1]) == 1
    assert l([Fraction(1, 5), 0]) == Fraction(2, 25)


@pytest.mark.parametrize("text", ["x1 +", "2*y1", "x1^-2", "", "x0^2"])
def test_parse_errors(text):
    with pytest.raises(PolynomialSyntaxError):
        EllipticPolynomial.parse(text, 3)


def test_inhomogeneous_rejected():
    with pytest.raises(ValueError, match="homogeneous"):
        EllipticPolynomial.parse("x1^2 + x2", 3)


def test_abs_p_is_homogeneous():
    l = EllipticPolynomial.parse("x1^2+x2^2", 3)
    xi = PVector.of([Fraction(1, 3), 2], 3)
    assert l.abs_p(xi) == 9
    assert l.abs_p(PVector.of([3, 6], 3)) == Fraction(1, 9)


# -- certification ---------------------------------------------------------------

def test_sum_of_squares_accepted_at_p3():
    cert = certify_elliptic(EllipticPolynomial.parse("x1^2+x2^2", 3))
    assert cert.gamma == 1.0 and cert.c0 == 1 and cert.c1 == 1
    assert cert.rechecked
    assert cert.reps == 9**2 - 3**2


def test_sum_of_squares_rejected_at_p5():
    with pytest.raises(NotCertified) as exc:
        certify_elliptic(EllipticPolynomial.parse("x1^2+x2^2", 5))
    w = exc.value.witness
    assert (w[0] ** 2 + w[1] ** 2) % 25 == 0
    assert exc.value.witness_mod_p == (1, 2)


def test_quaternary_forms():
    # x1^2 - s x2^2 - p x3^2 + s x4^2 at s = -1 is isotropic: (0, 1, 0, 1) is a zero
    with pytest.raises(NotCertified) as exc:
        certify_elliptic(EllipticPolynomial.parse("x1^2+x2^2-3*x3^2-x4^2", 3))
    assert exc.value.witness_mod_p == (0, 1, 0, 1)
    # the norm form <1, -s, -p, s p> is anisotropic
    cert = certify_elliptic(EllipticPolynomial.parse("x1^2+x2^2-3*x3^2-3*x4^2", 3))
    assert cert.c0 == Fraction(1, 3) and cert.c1 == 1


def test_linear_form_n1():
    cert = certify_elliptic(EllipticPolynomial.parse("x1", 7), L=1)
    assert cert.gamma == 1.0 and cert.reps == 6


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_z_alpha_against_enumeration(alpha):
    poly = EllipticPolynomial.parse("x1^2+x2^2-3*x3^2-3*x4^2", 3)
    cert = certify_elliptic(poly, L=2)
    ref = z_alpha_enumeration(lambda z: z[0] ** 2 + z[1] ** 2 - 3 * z[2] ** 2 - 3 * z[3] ** 2, 3, 4, 2, alpha)
    assert z_alpha(poly, alpha, cert) == pytest.approx(ref, rel=1e-13)


def test_poly_abs_on_lattice_matches_exact(backend):
    lat = Lattice(3, 2, 2, 2)
    poly = EllipticPolynomial.parse("x1^2+x2^2", 3)
    cert = certify_elliptic(poly)
    got = poly_abs_on_lattice(lat, cert)
    for i in range(0, lat.npoints, 7):
        assert got[i] == pytest.approx(float(poly.abs_p(lat.point(i))))


# -- symbols and solves ----------------------------------------------------------

def test_constant_symbol_round_trip(rng):
    lat = Lattice(2, 2, 2, 2)
    B = BilinearForm.standard(2, 2)
    f = random_gridfn(lat, rng)
    a = constant_symbol(3.0)
    assert np.allclose(apply_symbol(f, a, B).values, 3 * f.values, atol=1e-12)
    with pytest.raises(ValueError):
        constant_symbol(0.0)


def test_invert_symbol_inverts(rng):
    lat = Lattice(3, 1, 3, 3)
    B = BilinearForm.standard(3, 1)
    f = random_gridfn(lat, rng)
    a = bessel_symbol(1.5)
    back = invert_symbol(apply_symbol(f, a, B), a, B)
    assert np.max(np.abs(back.values - f.values)) < 1e-12


def test_multiplier_for_squared_norm():
    # |xi|^2 applied to 1_{p^-1 Z_p}: the transform is p 1_{p Z_p}, so the result is
    # F^-1(p |xi|^2 1_{pZ_p}) = sum over shells e <= -1
    lat = Lattice(2, 1, 3, 3)
    B = BilinearForm.standard(2, 1)
    fh_norms = lat.dual().norms()
    out = apply_multiplier(lat.ball(1), fh_norms**2, B)
    # shells e = -1, -2 are resolved; the origin cell (radius 2^-3) carries |0|^2 = 0
    ref = 2 * sum(0.5 * 2.0**e * 2.0 ** (2 * e) for e in range(-2, 0))
    assert out.at([0]).real == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("p,u0", [(2, U0_P2), (3, U0_P3)])
def test_klein_gordon_solve_example(p, u0, backend):
    lat = Lattice(p, 1, 4, 4)
    B = BilinearForm.standard(p, 1)
    poly = EllipticPolynomial.parse("x1", p)
    u = klein_gordon_solve(lat.omega(), poly, 1.0, 1.0, B)
    assert u.at([0]).real == pytest.approx(u0, abs=1e-11)
    ref = np.array([radial_solution_n1(p, 1.0, 1.0, int(a)) for a in lat.norm_exponents()])
    assert np.max(np.abs(u.values - ref)) < 1e-12


def test_solve_satisfies_equation(rng):
    lat = Lattice(3, 2, 2, 2)
    B = BilinearForm.standard(3, 2)
    poly = EllipticPolynomial.parse("x1^2+x2^2", 3)
    cert = certify_elliptic(poly)
    g = random_gridfn(lat, rng)
    u = klein_gordon_solve(g, poly, 0.7, 1.3, B, cert)
    a = klein_gordon_symbol(poly, 0.7, 1.3, cert)
    assert np.max(np.abs(apply_symbol(u, a, B).values - g.values)) < 1e-11


def test_symbol_growth_bounds():
    poly = EllipticPolynomial.parse("x1^2+x2^2-3*x3^2-3*x4^2", 3)
    cert = certify_elliptic(poly)
    lat = Lattice(3, 4, 1, 1)
    a = alt_klein_gordon_symbol(poly, 1.0, 0.5, cert)
    vals = a.on(lat)
    n = lat.norms()
    far = n >= 1
    assert np.all(vals[far] >= a.c0g * n[far] ** a.alpha - 1e-12)
    assert np.all(vals[far] <= a.c1g * n[far] ** a.alpha + 1e-12)
    assert np.all(vals >= a.lower - 1e-12)


def test_non_positive_symbol_rejected(rng):
    from padicfield.operators import SmoothSymbol
    s = SmoothSymbol(lambda fr: fr.norms(), 0.0, name="norm")
    with pytest.raises(ValueError):
        apply_symbol(random_gridfn(Lattice(2, 1, 1, 1), rng), s, BilinearForm.standard(2, 1))


# -- Green functions ---------------------------------------------------------------

def test_green_spectral_against_radial_oracle():
    lat = Lattice(3, 2, 3, 3)
    poly = EllipticPolynomial.parse("x1^2+x2^2", 3)
    G = green_spectral(lat, poly, 1.0, 1.0, BilinearForm.standard(3, 2))
    ref = np.array([green_radial_sum_of_squares(3, 1.0, 1.0, int(e)) for e in lat.norm_exponents()[1:]])
    assert np.max(np.abs(G.off_origin() - ref)) < 1e-13
    assert G.max_imag() < 1e-12


def test_green_origin_cell_average():
    lat = Lattice(2, 1, 6, 6)
    poly = EllipticPolynomial.parse("x1", 2)
    G = green_spectral(lat, poly, 2.0, 1.0, BilinearForm.standard(2, 1))
    assert G.real[0] == pytest.approx(G0_N1_ALPHA2, abs=1e-11)
    # the origin entry is the mean of G over B_-6, which equals the resolvent integrated over B_6
    assert G.real[0] == pytest.approx(radial_kg_origin(2, 2.0, 1.0, emax=6, emin=-200), abs=1e-13)
    # G is continuous at 0 when alpha d > N, so the cell mean is within O(2^-6) of G(0)
    assert G.real[0] == pytest.approx(radial_kg_origin(2, 2.0, 1.0, emax=80, emin=-80), rel=2e-2)


def test_series_matches_spectral_within_tail():
    lat = Lattice(3, 2, 2, 2)
    B = BilinearForm.standard(3, 2)
    poly = EllipticPolynomial.parse("x1^2+x2^2", 3)
    cert = certify_elliptic(poly)
    G = green_spectral(lat, poly, 1.0, 1.0, B, cert)
    vals, tails = green_series_lattice(lat, poly, 1.0, 1.0, B, cert, tol=1e-10)
    assert np.isnan(vals[0])
    assert np.all(np.abs(vals[1:] - G.off_origin()) <= tails[1:] + 1e-13)
    x = lat.point(5)
    sv = green_series(x, poly, 1.0, 1.0, B, cert, tol=1e-10)
    assert sv.value == pytest.approx(vals[5], abs=1e-13)
    assert sv.tail_bound <= 1e-10


def test_shells_above_top_vanish():
    B = BilinearForm.standard(3, 2)
    poly = EllipticPolynomial.parse("x1^2+x2^2", 3)
    cert = certify_elliptic(poly)
    x = PVector.of([Fraction(1, 3), 3], 3)
    sv = green_series(x, poly, 1.0, 1.0, B, cert)
    for shell in (sv.top_shell + 1, sv.top_shell + 2):
        assert abs(shell_term(x, shell, poly, 1.0, 1.0, B, cert)) < 1e-13
    # the enumerated shells reproduce the truncated series
    brute = sum(shell_term(x, s, poly, 1.0, 1.0, B, cert)
                for s in range(sv.top_shell, sv.top_shell - sv.shells, -1))
    assert brute == pytest.approx(sv.value, abs=1e-13)


def test_green_positive_off_origin():
    lat = Lattice(2, 1, 6, 6)
    poly = EllipticPolynomial.parse("x1", 2)
    G = green_spectral(lat, poly, 1.0, 1.0, BilinearForm.standard(2, 1))
    assert np.min(G.off_origin()) > 0


def test_decay_at_infinity():
    # the correction to |x|^-2 is relative O(|x|^-1 / m^2), so a heavier mass fits sooner
    lat = Lattice(2, 1, 10, 4)
    poly = EllipticPolynomial.parse("x1", 2)
    G = green_spectral(lat, poly, 1.0, 3.0, BilinearForm.standard(2, 1))
    fit = decay_fit(G, "infinity")
    assert fit.expected == -2.0
    assert fit.rel_error < 0.05
    with pytest.raises(ValueError):
        decay_fit(G, "sideways")


def test_green_integral_is_inverse_mass():
    # int G dx is the origin frequency cell: the resolvent averaged over B_-8, close to 1/m^2
    lat = Lattice(2, 1, 8, 4)
    poly = EllipticPolynomial.parse("x1", 2)
    G = green_spectral(lat, poly, 1.0, 2.0, BilinearForm.standard(2, 1))
    cell_mean = 2.0**8 * radial_kg_origin(2, 1.0, 2.0, emax=-8, emin=-200)
    assert haar_integral(G.as_gridfn()).real == pytest.approx(cell_mean, rel=1e-12)
    assert cell_mean == pytest.approx(0.25, rel=1e-3)
