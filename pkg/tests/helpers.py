"""Shared builders for the test-suite."""
import numpy as np

from polsarinfo.raster import CovarianceImage, estimate_covariance


def random_image(rng, shape=(6, 5), looks=4):
    """A valid random covariance image: each pixel is a ``looks``-sample estimate."""
    rows, cols = shape
    m = np.empty((rows, cols, 3, 3), dtype=np.complex128)
    for y in range(rows):
        for x in range(cols):
            s = rng.standard_normal((looks, 3)) + 1j * rng.standard_normal((looks, 3))
            m[y, x] = estimate_covariance(s * rng.uniform(0.2, 2.0, size=3))
    return CovarianceImage.from_matrices(m, looks=looks)


def constant_image(C, shape=(7, 7), looks=4):
    m = np.broadcast_to(np.asarray(C, dtype=np.complex128), shape + (3, 3))
    return CovarianceImage.from_matrices(m, looks=looks)


def box_mean_oracle(a, w):
    """Direct clipped-window mean of a 2-D array, one pixel at a time."""
    h = w // 2
    rows, cols = a.shape
    out = np.empty_like(a)
    for y in range(rows):
        for x in range(cols):
            out[y, x] = a[max(0, y - h):y + h + 1, max(0, x - h):x + h + 1].mean()
    return out
