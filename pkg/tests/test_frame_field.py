import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densepoly.frame_field import (
    FrameCoeffs,
    FrameField,
    alignment_energy,
    canonical_angle,
    coeffs_from_directions,
    directions_from_coeffs,
    eval_field_poly,
    field_from_directions,
    frame_directions,
    sample_bilinear,
    spatial_gradient,
)

angles = st.floats(0.0, math.pi, exclude_max=True, allow_nan=False)
CROSS = FrameCoeffs(-1 + 0j, 0j)


def unsigned_gap(a, b):
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


def test_eval_field_poly_examples():
    assert eval_field_poly(1, CROSS) == 0
    assert abs(eval_field_poly(cmath.exp(1j * math.pi / 2), CROSS)) < 1e-15
    assert abs(eval_field_poly(cmath.exp(1j * math.pi / 4), CROSS) - (-2)) < 1e-15


def test_eval_field_poly_rejects_non_unit():
    with pytest.raises(ValueError):
        eval_field_poly(1.001, CROSS)


@given(angles, angles, angles)
def test_eval_even_in_z(ti, tj, t):
    c = coeffs_from_directions(ti, tj)
    z = cmath.exp(1j * t)
    assert abs(eval_field_poly(-z, c) - eval_field_poly(z, c)) < 1e-12


def test_coeffs_examples():
    c = coeffs_from_directions(0.0, math.pi / 2)
    assert abs(c.k0 + 1) < 1e-15 and abs(c.k1) < 1e-15
    c = coeffs_from_directions(0.0, 0.0)
    assert c.k0 == 1 and c.k1 == -2
    c = coeffs_from_directions(math.pi / 4, 3 * math.pi / 4)
    assert abs(c.k0 - 1) < 1e-15 and abs(c.k1) < 1e-15


@given(angles, angles)
def test_coeffs_unit_modulus(ti, tj):
    c = coeffs_from_directions(ti, tj)
    assert abs(abs(c.k0) - 1) < 1e-12
    assert abs(c.k1) <= 2 + 1e-12


def test_frame_coeffs_must_be_finite():
    with pytest.raises(ValueError):
        FrameCoeffs(complex(math.nan, 0), 0j)


def test_directions_examples():
    (a, b), deg = directions_from_coeffs(CROSS)
    assert not deg
    assert abs(a) < 1e-12 and abs(b - math.pi / 2) < 1e-12
    _, deg = directions_from_coeffs(FrameCoeffs(1 + 0j, -2 + 0j))
    assert deg


def test_directions_round_trip_1000():
    rng = np.random.default_rng(7)
    worst = 0.0
    n = 0
    while n < 1000:
        ti, tj = rng.uniform(0, math.pi, 2)
        if unsigned_gap(ti, tj) <= 0.1:
            continue
        n += 1
        (a, b), deg = directions_from_coeffs(coeffs_from_directions(ti, tj))
        assert not deg
        err = min(max(unsigned_gap(a, ti), unsigned_gap(b, tj)), max(unsigned_gap(a, tj), unsigned_gap(b, ti)))
        worst = max(worst, err)
    assert worst < 1e-9


def test_frame_directions_matches_scalar():
    rng = np.random.default_rng(0)
    k0 = rng.normal(size=200) + 1j * rng.normal(size=200)
    k1 = rng.normal(size=200) + 1j * rng.normal(size=200)
    a, b, deg = frame_directions(k0, k1)
    for i in range(200):
        (x, y), d = directions_from_coeffs(FrameCoeffs(k0[i], k1[i]))
        assert (x, y, d) == (a[i], b[i], deg[i])


def test_alignment_energy_examples():
    assert alignment_energy(0.0, CROSS) == pytest.approx(0.0, abs=1e-24)
    assert alignment_energy(math.pi / 4, CROSS) == pytest.approx(4.0, abs=1e-12)
    # |e^{i pi/2} - 1|^2 by hand
    assert alignment_energy(math.pi / 8, CROSS) == pytest.approx(abs(1j - 1) ** 2, abs=1e-12)


@given(angles, angles, angles)
def test_alignment_energy_properties(ti, tj, t):
    c = coeffs_from_directions(ti, tj)
    e = alignment_energy(t, c)
    assert e >= 0
    assert abs(alignment_energy(t + math.pi, c) - e) < 1e-9
    assert alignment_energy(ti, c) < 1e-20
    assert alignment_energy(tj, c) < 1e-20


def test_canonical_angle():
    assert canonical_angle(-1e-18) == 0.0
    assert canonical_angle(math.pi) == 0.0
    assert canonical_angle(-math.pi / 4) == pytest.approx(3 * math.pi / 4)
    out = canonical_angle(np.array([-0.5, 4.0]))
    assert np.all((out >= 0) & (out < math.pi))


def test_spatial_gradient_examples():
    assert not spatial_gradient(np.full((5, 6), 3.0)).any()
    x = np.tile(np.arange(6.0), (5, 1))
    gx, gy = spatial_gradient(x)
    assert np.all(gx[1:-1, 1:-1] == 1) and np.all(gy == 0)
    with pytest.raises(ValueError):
        spatial_gradient(np.zeros((1, 5)))


def test_spatial_gradient_bilinear_oracle():
    # on r = a + b x + c y + d x y the central difference is exact
    rng = np.random.default_rng(3)
    a, b, c, d = rng.normal(size=4)
    y, x = np.mgrid[0:8, 0:8].astype(float)
    r = a + b * x + c * y + d * x * y
    gx, gy = spatial_gradient(r)
    assert np.allclose(gx[1:-1, 1:-1], (b + d * y)[1:-1, 1:-1], atol=1e-6)
    assert np.allclose(gy[1:-1, 1:-1], (c + d * x)[1:-1, 1:-1], atol=1e-6)


def test_spatial_gradient_one_sided_border():
    r = np.array([[0.0, 1.0, 4.0], [0.0, 1.0, 4.0]])
    gx, _ = spatial_gradient(r)
    assert gx[0, 0] == 1.0 and gx[0, 2] == 3.0 and gx[0, 1] == 2.0


def test_frame_field_shape_checks():
    with pytest.raises(ValueError):
        FrameField(np.zeros((2, 3), complex), np.zeros((3, 2), complex))
    with pytest.raises(ValueError):
        FrameField(np.full((2, 2), np.inf + 0j), np.zeros((2, 2), complex))


def test_field_transpose_swaps_directions():
    ff = field_from_directions(np.full((2, 3), 0.3), np.full((2, 3), 1.0))
    t = ff.transpose()
    assert t.shape == (3, 2)
    (a, b), _ = directions_from_coeffs(t.at(0, 0))
    # transposition reflects angles about the diagonal: theta -> pi/2 - theta
    want = sorted(canonical_angle(math.pi / 2 - v) for v in (0.3, 1.0))
    assert a == pytest.approx(want[0]) and b == pytest.approx(want[1])


def test_sample_bilinear_pixel_centres_and_derivative():
    plane = np.arange(12.0).reshape(3, 4)
    v, dx, dy = sample_bilinear(plane, np.array([0.5, 2.5, 1.0]), np.array([0.5, 1.5, 2.0]))
    assert v[0] == 0.0 and v[1] == 6.0
    assert v[2] == pytest.approx(0.5 + 1.5 * 4)
    assert dx[2] == pytest.approx(1.0) and dy[2] == pytest.approx(4.0)


@settings(max_examples=30)
@given(st.floats(0.6, 3.4), st.floats(0.6, 2.4))
def test_sample_bilinear_linear_exact(x, y):
    yy, xx = np.mgrid[0:3, 0:4].astype(float)
    plane = 2.0 * (xx + 0.5) - 3.0 * (yy + 0.5) + 1.0
    v, dx, dy = sample_bilinear(plane, np.array([x]), np.array([y]))
    assert v[0] == pytest.approx(2 * x - 3 * y + 1)
    assert dx[0] == pytest.approx(2.0) and dy[0] == pytest.approx(-3.0)
