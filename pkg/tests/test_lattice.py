from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padicfield.lattice import (
    BilinearForm,
    GridFn,
    Lattice,
    LatticeMismatch,
    SobolevParams,
    character_integral,
    convolve,
    fourier_forward,
    fourier_inverse,
    frequency_integral,
    haar_integral,
    random_gridfn,
    read_csv,
    sobolev_inner,
    sobolev_metric,
    sobolev_norm,
    write_csv,
)
from padicfield.padic import PVector
from oracles import dft_direct


def test_lattice_geometry():
    lat = Lattice(3, 2, 1, 2)
    assert lat.side == 27 and lat.npoints == 729
    assert lat.cell_volume == pytest.approx(3.0**-4)
    assert lat.dual(1) == Lattice(3, 2, 3, 0)
    x = lat.point(lat.flat_index([4, 9]))
    assert x == PVector.of([Fraction(4, 3), 3], 3)
    assert lat.index_of(x) == lat.flat_index([4, 9])
    with pytest.raises(LatticeMismatch):
        lat.index_of(PVector.of([Fraction(1, 27), 0], 3))
    with pytest.raises(LatticeMismatch):
        lat.index_of(PVector.of([Fraction(1, 9), 0], 3))


def test_haar_examples():
    assert haar_integral(Lattice(2, 1, 1, 1).omega()) == pytest.approx(1.0)
    lat = Lattice(3, 2, 2, 1)
    assert haar_integral(lat.constant()) == pytest.approx(3.0**4)
    assert haar_integral(Lattice(5, 1, 2, 2).sphere(0)) == pytest.approx(1 - 1 / 5)


def test_balls_and_spheres():
    lat = Lattice(2, 2, 2, 2)
    for e in range(-2, 3):
        assert haar_integral(lat.ball(e)).real == pytest.approx(2.0 ** (2 * e))
    with pytest.raises(LatticeMismatch):
        lat.ball(-3)
    with pytest.raises(LatticeMismatch):
        lat.sphere(-2)
    shifted = lat.ball(-1, center=[4, 0])  # 1 + 2Z_2 in the first coordinate
    assert haar_integral(shifted).real == pytest.approx(0.5 * 0.5)
    assert shifted.at([4, 0]) == 1 and shifted.at([0, 0]) == 0


def test_omega_is_self_dual():
    for p, N in [(2, 1), (3, 2), (5, 1)]:
        lat = Lattice(p, N, 2, 2)
        B = BilinearForm.standard(p, N)
        assert np.allclose(fourier_forward(lat.omega(), B).values, lat.omega().values, atol=1e-12)
        back = fourier_inverse(GridFn(lat, lat.omega().values, "frequency"), B)
        assert np.allclose(back.values, lat.omega().values, atol=1e-12)


def test_delta_transforms_to_constant():
    lat = Lattice(3, 2, 1, 2)
    B = BilinearForm.diagonal(3, [1, 2])
    fh = fourier_forward(lat.delta(), B)
    assert np.allclose(fh.values, B.cq, atol=1e-12)
    one = GridFn(lat.dual(B.beta), np.ones(lat.npoints), "frequency")
    back = fourier_inverse(one, B)
    expect = lat.delta().values / B.cq
    assert np.allclose(back.values, expect, atol=1e-9)


# frozen from the brute-force character table in oracles.dft_direct
COSET_1_MOD_4 = [
    0.25, 0.25j, -0.25, -0.25j, 0.25, 0.25j, -0.25, -0.25j,
    0.25, 0.25j, -0.25, -0.25j, 0.25, 0.25j, -0.25, -0.25j,
]


def test_coset_transform_matches_character_table():
    lat = Lattice(2, 1, 2, 2)
    B = BilinearForm.standard(2, 1)
    f = np.array([1.0 if (m - 4) % 16 == 0 else 0.0 for m in range(16)])
    # index m = 4 is the point x = 1; the coset 1 + 4Z_2 is resolved as one cell at k = 2
    oracle = dft_direct(f, 2, 1, 2, 2, [[Fraction(1)]])
    assert np.allclose(oracle, COSET_1_MOD_4, atol=1e-12)
    for method in ("fft", "direct"):
        got = fourier_forward(GridFn(lat, f), B, method=method).values
        assert np.allclose(got, COSET_1_MOD_4, atol=1e-12)


@pytest.mark.parametrize("matrix,p,j,k", [
    ([[1, 0], [0, 1]], 3, 1, 1),
    ([[2, 1], [1, 1]], 3, 1, 1),
    ([[Fraction(1, 3), 0], [0, Fraction(2, 3)]], 3, 1, 2),
    ([[4, 0], [0, 12]], 2, 2, 1),
])
def test_transform_matches_direct_oracle(matrix, p, j, k, rng):
    B = BilinearForm(matrix, p)
    lat = Lattice(p, 2, j, k)
    f = random_gridfn(lat, rng)
    fm = [[Fraction(v) for v in row] for row in matrix]
    oracle = dft_direct(list(f.values), p, 2, j, k, fm)
    assert np.allclose(fourier_forward(f, B).values, oracle, atol=1e-11)
    assert np.allclose(fourier_forward(f, B, method="direct").values, oracle, atol=1e-11)


def test_fft_and_direct_agree(backend, rng):
    lat = Lattice(3, 2, 2, 1)
    B = BilinearForm([[1, 1], [1, 2]], 3)
    f = random_gridfn(lat, rng)
    a = fourier_forward(f, B, "fft").values
    b = fourier_forward(f, B, "direct").values
    assert np.max(np.abs(a - b)) < 1e-12


def test_involution_and_roundtrip(rng):
    lat = Lattice(3, 2, 2, 2)
    B = BilinearForm.standard(3, 2)
    for _ in range(5):
        f = random_gridfn(lat, rng)
        fh = fourier_forward(f, B)
        ff = fourier_forward(GridFn(lat, fh.values), B)
        assert np.max(np.abs(ff.values - f.reflect().values)) < 1e-12
        assert np.max(np.abs(fourier_inverse(fh, B).values - f.values)) < 1e-12


def test_plancherel_with_scaled_form(rng):
    B = BilinearForm([[9, 0], [0, 18]], 3)
    lat = Lattice(3, 2, 2, 1)
    f = random_gridfn(lat, rng)
    fh = fourier_forward(f, B)
    lhs = haar_integral(GridFn(lat, np.abs(f.values) ** 2)).real
    rhs = frequency_integral(GridFn(fh.lattice, np.abs(fh.values) ** 2, "frequency")).real
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_incompatible_form_refuses_transform():
    B = BilinearForm([[1, 0], [0, 3]], 3)
    assert not B.lattice_compatible
    with pytest.raises(LatticeMismatch):
        fourier_forward(Lattice(3, 2, 1, 1).omega(), B)


def test_bilinear_invariants():
    B = BilinearForm([[2, 1], [1, 4]], 5)
    x = PVector.of([Fraction(1, 5), 3], 5)
    y = PVector.of([2, Fraction(-4, 25)], 5)
    assert B(x, y) * 2 == B.q(x + y) - B.q(x) - B.q(y)
    assert B(x, y) == B(y, x)
    with pytest.raises(ValueError):
        BilinearForm([[1, 2], [0, 1]], 5)
    with pytest.raises(ValueError):
        BilinearForm([[1, 1], [1, 1]], 5)
    assert BilinearForm([[Fraction(1, 25), 0], [0, Fraction(2, 5)]], 5).beta == -2


@pytest.mark.parametrize("N", [1, 2])
@pytest.mark.parametrize("p", [2, 3, 5])
def test_character_integral_dichotomy(p, N):
    lat = Lattice(p, N, 0, 3)
    for u in ([1] * N, [p - 1] + [p] * (N - 1), [p] * (N - 1) + [1]):
        for e in range(-3, 4):
            assert character_integral(lat, e, u) == (1 if e <= 0 else 0)
    with pytest.raises(LatticeMismatch):
        character_integral(lat, 4, [1] * N)


def test_convolution_with_delta_and_omega():
    lat = Lattice(2, 2, 1, 2)
    g = random_gridfn(lat, np.random.default_rng(3))
    assert np.allclose(convolve(g, lat.delta()).values, g.values, atol=1e-12)
    om = convolve(lat.omega(), lat.omega())
    assert np.allclose(om.values, lat.omega().values, atol=1e-12)


def test_sobolev_examples(rng):
    B = BilinearForm.standard(2, 1)
    lat = Lattice(2, 1, 3, 3)
    om = lat.omega()
    assert sobolev_inner(om, om, SobolevParams(1.0, 1), B).real == pytest.approx(1.0)
    f = random_gridfn(lat, rng)
    l2 = haar_integral(GridFn(lat, np.abs(f.values) ** 2)).real
    assert sobolev_norm(f, SobolevParams(1.0, 0), B) ** 2 == pytest.approx(l2, rel=1e-12)
    norms = [sobolev_norm(f, SobolevParams(0.7, lvl), B) for lvl in range(4)]
    assert all(a <= b + 1e-12 for a, b in zip(norms, norms[1:]))


def test_sobolev_inner_against_enumeration():
    # f = 1_{p^-1 Z_p} - Omega, p = 2: its transform is p 1_{pZ_p} - 1_{Z_p},
    # so with weight 1 inside Z_p the norm^2 is  int_{Z_p} |2 1_{2Z_2} - 1|^2 = 1/2 * 1 + 1/2 * 1 = 1
    lat = Lattice(2, 1, 2, 2)
    f = lat.ball(1) - lat.omega()
    B = BilinearForm.standard(2, 1)
    assert sobolev_inner(f, f, SobolevParams(1.0, 1), B).real == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lmax=st.integers(0, 4))
def test_sobolev_metric_properties(seed, lmax):
    lat = Lattice(3, 1, 2, 2)
    B = BilinearForm.standard(3, 1)
    r = np.random.default_rng(seed)
    f, g = random_gridfn(lat, r), random_gridfn(lat, r)
    assert sobolev_metric(f, f, 1.0, lmax, B) == 0
    d = sobolev_metric(f, g, 1.0, lmax, B)
    assert d == sobolev_metric(g, f, 1.0, lmax, B)
    assert 0 < d <= 1


def test_csv_roundtrip(tmp_path, rng):
    lat = Lattice(5, 2, 1, 1)
    f = random_gridfn(lat, rng)
    path = tmp_path / "f.csv"
    write_csv(f, path, {"m": 1.5, "poly": "x1^2 + x2^2"})
    g, extra = read_csv(path)
    assert g.lattice == lat and g.tag == f.tag
    assert np.array_equal(g.values, f.values)
    assert extra == {"m": "1.5", "poly": "x1^2+x2^2"}
    first = path.read_text().splitlines()[0]
    assert first == "# p=5 N=2 j=1 k=1 tag=position"
