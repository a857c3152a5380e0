import numpy as np
import pytest

from kernelverify.baseline import attainability_kernel, kernel_value_at, neighborhood_bounds
from kernelverify.encode import separate_convolution
from kernelverify.kernels import make_kernel

GRID = np.arange(1.0, 10.0).reshape(3, 3)


def _brute_force(plane, k):
    h, w = plane.shape
    r = k // 2
    lo, hi = np.empty_like(plane), np.empty_like(plane)
    for i in range(h):
        for j in range(w):
            win = [plane[a, b] for a in range(i - r, i + r + 1) for b in range(j - r, j + r + 1)
                   if 0 <= a < h and 0 <= b < w]
            lo[i, j], hi[i, j] = min(win), max(win)
    return lo, hi


def test_hand_example():
    box = neighborhood_bounds(GRID, 3)
    assert (box.lower[1, 1], box.upper[1, 1]) == (1.0, 9.0)
    assert (box.lower[0, 0], box.upper[0, 0]) == (1.0, 5.0)


def test_constant_image():
    img = np.full((2, 4, 4), 0.25)
    box = neighborhood_bounds(img, 5)
    assert np.array_equal(box.lower, img) and np.array_equal(box.upper, img)


def test_saturation(rng):
    img = rng.random((4, 4))
    box = neighborhood_bounds(img, 7)
    assert np.all(box.lower == img.min()) and np.all(box.upper == img.max())


@pytest.mark.parametrize("k", [2, 4, 1])
def test_bad_k(k):
    with pytest.raises(ValueError):
        neighborhood_bounds(GRID, k)


@pytest.mark.parametrize("k", [3, 5])
def test_matches_brute_force_per_channel(k, rng):
    img = (rng.random((3, 6, 7)) > 0.5).astype(float)
    box = neighborhood_bounds(img, k)
    for c in range(3):
        lo, hi = _brute_force(img[c], k)
        assert np.array_equal(box.lower[c], lo) and np.array_equal(box.upper[c], hi)


def test_attainability_hand_oracle():
    kern = attainability_kernel(GRID, 3, (0, 0), "min")
    expected = np.zeros((3, 3))
    expected[1, 1] = 1.0  # offset (0, 0) addresses pixel (0, 0), value 1
    assert np.array_equal(kern, expected)
    kern = attainability_kernel(GRID, 3, (0, 0), "max")
    assert kern[2, 2] == 1.0 and kern.sum() == 1.0


def test_attainability_constant_image():
    img = np.full((3, 3), 0.7)
    for which in ("min", "max"):
        kern = attainability_kernel(img, 3, (1, 1), which)
        assert kernel_value_at(img, kern, (1, 1)) == 0.7


@pytest.mark.parametrize("k", [3, 5])
def test_attainability_everywhere(k, rng):
    img = rng.random((2, 5, 5))
    box = neighborhood_bounds(img, k)
    for c in range(2):
        for i in range(5):
            for j in range(5):
                lo = kernel_value_at(img, attainability_kernel(img, k, (c, i, j), "min"), (c, i, j))
                hi = kernel_value_at(img, attainability_kernel(img, k, (c, i, j), "max"), (c, i, j))
                assert lo == box.lower[c, i, j] and hi == box.upper[c, i, j]


@pytest.mark.parametrize("label", ["box-blur", "motion-blur-0", "motion-blur-45", "motion-blur-90", "motion-blur-135"])
@pytest.mark.parametrize("size, k", [(3, 3), (3, 5), (5, 5)])
def test_blur_contained_at_interior(label, size, k, rng):
    img = rng.random((1, 9, 9))
    box = neighborhood_bounds(img, k)
    ep = separate_convolution(img, make_kernel(label, size))
    r = k // 2
    interior = np.zeros((1, 9, 9), dtype=bool)
    interior[:, r:9 - r, r:9 - r] = True
    for z in np.linspace(0, 1, 21):
        px = ep.perturbed(z).reshape(img.shape)
        assert np.all(px[interior] >= box.lower[interior] - 1e-12)
        assert np.all(px[interior] <= box.upper[interior] + 1e-12)
