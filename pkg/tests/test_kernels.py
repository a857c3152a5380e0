from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelverify.kernels import (
    EVEN_WARNING,
    KernelConstructionError,
    KernelFamily,
    ParamKernel,
    all_families,
    box_blur_param,
    even_param,
    make_kernel,
    motion_blur_param,
    sharpen_param,
)
from kernelverify.tensor import identity_kernel

third = F(1, 3)

# Target kernels at z = 1 for s = 3.
BOX3 = [[F(1, 9)] * 3] * 3
SHARPEN3 = [[0, F(-1, 4), 0], [F(-1, 4), 2, F(-1, 4)], [0, F(-1, 4), 0]]
MOTION45_3 = [[0, 0, third], [0, third, 0], [third, 0, 0]]
# Worked 45-degree example: coefficient and bias matrices.
MOTION45_A = [[0, 0, third], [0, F(-2, 3), 0], [third, 0, 0]]
MOTION45_B = [[0, 0, 0], [0, 1, 0], [0, 0, 0]]

# Even-size (s = 4) targets at z = 1.
E = F(1, 8)
MOTION0_4 = [[0, E, E, 0]] * 4
MOTION45_4 = [[0, 0, 0, F(1, 4)], [0, 0, F(1, 4), 0], [0, F(1, 4), 0, 0], [F(1, 4), 0, 0, 0]]
BOX4 = [[F(1, 16)] * 4] * 4
SHARPEN4 = [[0, -E, -E, 0], [-E, F(1, 2), F(1, 2), -E], [-E, F(1, 2), F(1, 2), -E], [0, -E, -E, 0]]
QUARTER_BOX4 = [[0, 0, 0, 0], [0, F(1, 4), F(1, 4), 0], [0, F(1, 4), F(1, 4), 0], [0, 0, 0, 0]]


def assert_matches_rationals(actual, expected):
    """Dyadic rationals must be exact; the rest within 1e-15."""
    for a, e in zip(np.asarray(actual).ravel(), np.asarray(expected, dtype=object).ravel()):
        e = F(e)
        if (e.denominator & (e.denominator - 1)) == 0:
            assert a == float(e), (a, e)
        else:
            assert abs(a - float(e)) <= 1e-15, (a, e)


def test_worked_motion_blur_example():
    pk = motion_blur_param(3, 45)
    assert_matches_rationals(pk.coeffs[0], MOTION45_A)
    assert_matches_rationals(pk.bias, MOTION45_B)
    assert np.array_equal(pk.evaluate(0.0), identity_kernel(3))
    assert_matches_rationals(pk.evaluate(1.0), MOTION45_3)


@pytest.mark.parametrize(
    "pk, target",
    [(box_blur_param(3), BOX3), (sharpen_param(3), SHARPEN3), (motion_blur_param(3, 45), MOTION45_3)],
)
def test_basic_kernels_at_full_strength(pk, target):
    assert_matches_rationals(pk.evaluate(1.0), target)


def test_box_blur_half_strength():
    k = box_blur_param(3).evaluate(0.5)
    assert k[1, 1] == pytest.approx(5 / 9, abs=1e-15)
    mask = np.ones((3, 3), bool)
    mask[1, 1] = False
    np.testing.assert_allclose(k[mask], 1 / 18, atol=1e-15)


def test_box_blur_coefficients():
    a3 = box_blur_param(3).coeffs[0]
    assert a3[1, 1] == pytest.approx(-8 / 9, abs=1e-15)
    a5 = box_blur_param(5).coeffs[0]
    assert a5[2, 2] == pytest.approx(-24 / 25, abs=1e-15)
    assert np.sum(np.isclose(a5, 1 / 25, atol=1e-15)) == 24


def test_motion_blur_90_size5():
    a = motion_blur_param(5, 90).coeffs[0]
    assert a[2, 2] == pytest.approx(-4 / 5, abs=1e-15)
    assert np.allclose(a[2, [0, 1, 3, 4]], 1 / 5)
    rest = np.ones((5, 5), bool)
    rest[2] = False
    assert np.all(a[rest] == 0)


def test_motion_blur_trails():
    # 0 deg: centre column, 90 deg: centre row, 45: antidiagonal, 135: diagonal.
    assert np.count_nonzero(motion_blur_param(5, 0).coeffs[0][:, 2]) == 5
    assert np.count_nonzero(motion_blur_param(5, 90).coeffs[0][2, :]) == 5
    a45 = motion_blur_param(5, 45).coeffs[0]
    assert all(a45[i, 4 - i] != 0 for i in range(5))
    a135 = motion_blur_param(5, 135).coeffs[0]
    assert all(a135[i, i] != 0 for i in range(5))


def test_sharpen_negative_counts():
    k5 = sharpen_param(5).evaluate(1.0)
    neg = k5 < 0
    assert neg.sum() == 12
    np.testing.assert_allclose(k5[neg], -1 / 12, atol=1e-16)
    expected_pattern = np.array(
        [[0, 0, 1, 0, 0], [0, 1, 1, 1, 0], [1, 1, 0, 1, 1], [0, 1, 1, 1, 0], [0, 0, 1, 0, 0]], bool
    )
    assert np.array_equal(neg, expected_pattern)
    assert (sharpen_param(3).evaluate(1.0) < 0).sum() == 4
    assert np.array_equal(sharpen_param(5).evaluate(0.0), identity_kernel(5))


@pytest.mark.parametrize(
    "family, target",
    [
        (KernelFamily("motion-blur", 0), MOTION0_4),
        (KernelFamily("motion-blur", 45), MOTION45_4),
        (KernelFamily("box-blur"), BOX4),
        (KernelFamily("sharpen"), SHARPEN4),
    ],
)
def test_even_size_four(family, target):
    pk = even_param(family, 4, allow_even=True)
    assert pk.parity == "even-approx"
    assert EVEN_WARNING in pk.warnings
    assert_matches_rationals(pk.evaluate(1.0), target)
    assert_matches_rationals(pk.evaluate(0.0), QUARTER_BOX4)


def test_even_sharpen_counts():
    pk = even_param(KernelFamily("sharpen"), 4, allow_even=True)
    assert (pk.evaluate(1.0) < 0).sum() == 8
    # 6x6: 12 zero entries, hence 36 - 12 - 4 = 20 negative ones.
    k6 = even_param(KernelFamily("sharpen"), 6, allow_even=True).evaluate(1.0)
    assert (k6 < 0).sum() == 20 and (k6 == 0).sum() == 12


def test_even_sizes_need_opt_in():
    with pytest.raises(KernelConstructionError):
        make_kernel("box-blur", 4)
    with pytest.raises(KernelConstructionError):
        box_blur_param(4)
    assert make_kernel("box-blur", 4, allow_even=True).parity == "even-approx"


@pytest.mark.parametrize("bad", [("motion-blur", 30), ("motion-blur", None), ("sharpen", 45), ("gauss", None)])
def test_family_validation(bad):
    with pytest.raises(KernelConstructionError):
        KernelFamily(*bad)


def test_evaluate_dimension_check():
    with pytest.raises(ValueError):
        box_blur_param(3).evaluate([0.1, 0.2])


def test_unnormalised_kernel_rejected():
    with pytest.raises(KernelConstructionError):
        ParamKernel(3, np.ones((1, 3, 3)), identity_kernel(3))


ALL = [(f, s) for f in all_families() for s in (2, 3, 4, 5, 6, 7, 8, 9) if (f.tag, s) != ("sharpen", 2)]


@pytest.mark.parametrize("family, size", ALL, ids=[f"{f.label}-{s}" for f, s in ALL])
def test_normalisation_dense_grid(family, size):
    pk = make_kernel(family, size, allow_even=True)
    sums = np.array([pk.evaluate(z).sum() for z in np.linspace(0.0, 1.0, 1001)])
    assert np.max(np.abs(sums - 1.0)) <= 1e-12


@pytest.mark.parametrize("family, size", ALL, ids=[f"{f.label}-{s}" for f, s in ALL])
def test_affine_midpoint(family, size):
    pk = make_kernel(family, size, allow_even=True)
    r = np.random.default_rng(size)
    for za, zb in r.random((20, 2)):
        mid = pk.evaluate((za + zb) / 2)
        np.testing.assert_allclose(mid, (pk.evaluate(za) + pk.evaluate(zb)) / 2, atol=1e-12)


def test_sharpen_two_has_no_negative_entries():
    with pytest.raises(KernelConstructionError):
        make_kernel("sharpen", 2, allow_even=True)


@pytest.mark.parametrize("size", [2, 3, 4, 5, 7, 9])
def test_symmetries(size):
    for tag in ("box-blur", "sharpen") if size > 2 else ("box-blur",):
        k = make_kernel(tag, size, allow_even=True).evaluate(0.7)
        np.testing.assert_array_equal(np.rot90(k), k)
    m = {a: make_kernel(KernelFamily("motion-blur", a), size, allow_even=True).evaluate(0.7) for a in (0, 45, 90, 135)}
    np.testing.assert_array_equal(m[0].T, m[90])
    # Transposition maps the antidiagonal to itself; the 45/135 pair is a mirror.
    np.testing.assert_array_equal(np.fliplr(m[45]), m[135])


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([3, 5, 7, 9]), st.floats(0, 1))
def test_odd_kernels_start_at_identity(size, z):
    for family in all_families():
        pk = make_kernel(family, size)
        assert np.array_equal(pk.evaluate(0.0), identity_kernel(size))
        assert np.array_equal(pk.bias, identity_kernel(size))
        assert abs(pk.evaluate(z).sum() - 1.0) <= 1e-12


def test_to_json_fields():
    d = motion_blur_param(3, 45).to_json()
    assert d["family"] == "motion-blur" and d["angle"] == 45 and d["m"] == 1
    assert len(d["coeffs"]) == 1 and len(d["coeffs"][0]) == 3
