import numpy as np
import pytest
from helpers import edt_scalar, random_mask

from probfuse import BinaryMask, EmptyMaskError, edt, edt_bruteforce


def test_center_pixel_3x3():
    mask = BinaryMask(np.array([[0, 0, 0], [0, 1, 0], [0, 0, 0]], np.uint8))
    field = edt(mask)
    np.testing.assert_array_equal(field.squared, [[2, 1, 2], [1, 0, 1], [2, 1, 2]])
    np.testing.assert_allclose(field.values[0], [np.sqrt(2), 1, np.sqrt(2)])


def test_single_cell_2x2():
    mask = BinaryMask(np.array([[1, 0], [0, 0]], np.uint8))
    np.testing.assert_array_equal(edt(mask).squared, [[0, 1], [1, 2]])


def test_row_and_column_rasters():
    row = BinaryMask(np.array([[0, 1, 0, 0]], np.uint8))
    np.testing.assert_array_equal(edt(row).squared, [[1, 0, 1, 4]])
    col = BinaryMask(np.array([[0], [0], [1]], np.uint8))
    np.testing.assert_array_equal(edt(col).squared, [[4], [1], [0]])


def test_empty_mask_raises():
    with pytest.raises(EmptyMaskError):
        edt(BinaryMask(np.zeros((3, 3), np.uint8)))
    with pytest.raises(EmptyMaskError):
        edt_bruteforce(BinaryMask(np.zeros((3, 3), np.uint8)))


def test_bruteforce_matches_scalar_oracle(rng):
    # Validates the vectorized brute force itself against the most literal
    # possible implementation before it is trusted as an oracle elsewhere.
    for _ in range(10):
        mask = random_mask(rng, int(rng.integers(1, 9)), int(rng.integers(1, 9)), 0.3)
        np.testing.assert_array_equal(
            edt_bruteforce(mask).squared, edt_scalar(mask.data)
        )


def test_edt_equals_bruteforce_random(rng):
    for _ in range(60):
        h, w = int(rng.integers(1, 33)), int(rng.integers(1, 33))
        mask = random_mask(rng, h, w, float(rng.uniform(0.02, 0.9)))
        np.testing.assert_array_equal(edt(mask).squared, edt_bruteforce(mask).squared)


def test_edt_dtype_and_values_shape(rng):
    mask = random_mask(rng, 5, 7, 0.2)
    field = edt(mask)
    assert field.squared.dtype == np.int64
    assert field.values.dtype == np.float64
    assert field.squared.shape == (5, 7)
    assert (field.squared[mask.data == 1] == 0).all()
