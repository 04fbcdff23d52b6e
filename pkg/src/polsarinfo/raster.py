"""Covariance rasters, label maps, training/testing regions and feature channels.

A :class:`CovarianceImage` stores the three real diagonal entries and the
three complex upper-triangle entries of every pixel's 3x3 covariance matrix,
so Hermitian symmetry holds by construction. Channel order of the feature
representation is fixed::

    Z11, Z22, Z33, Re Z12, Im Z12, Re Z13, Im Z13, Re Z23, Im Z23
"""
from dataclasses import dataclass, field

import numpy as np

N_FEATURES = 9
CHANNEL_NAMES = (
    "Z11", "Z22", "Z33",
    "Re Z12", "Im Z12", "Re Z13", "Im Z13", "Re Z23", "Im Z23",
)
# (row, col) of the upper-triangle entries, in storage order
UPPER = ((0, 1), (0, 2), (1, 2))
PSD_RTOL = 1e-9


class RegionError(ValueError):
    """Invalid or inconsistent training/testing regions."""


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def matrix_from_parts(diag, off):
    """Assemble full (..., 3, 3) Hermitian matrices from stored parts."""
    diag = np.asarray(diag)
    off = np.asarray(off)
    m = np.zeros(diag.shape[:-1] + (3, 3), dtype=np.complex128)
    for k in range(3):
        m[..., k, k] = diag[..., k]
    for k, (p, q) in enumerate(UPPER):
        m[..., p, q] = off[..., k]
        m[..., q, p] = np.conj(off[..., k])
    return m


def parts_from_matrix(m):
    """Split (..., 3, 3) matrices into real diagonal and upper triangle.

    The lower triangle is ignored, so non-Hermitian input is not detected here;
    use :func:`check_covariance` for validation.
    """
    m = np.asarray(m)
    diag = np.stack([m[..., k, k].real for k in range(3)], axis=-1)
    off = np.stack([m[..., p, q] for p, q in UPPER], axis=-1).astype(np.complex128)
    return diag, off


def check_covariance(m, rtol=PSD_RTOL):
    """Raise ValueError unless ``m`` is a valid covariance matrix (or stack).

    Valid means finite, exactly Hermitian, with a real non-negative diagonal
    and minimum eigenvalue >= -rtol * trace.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3) matrices, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("covariance matrix has non-finite entries")
    if not np.array_equal(m, np.conj(np.swapaxes(m, -1, -2))):
        raise ValueError("covariance matrix is not Hermitian")
    d = np.real(np.diagonal(m, axis1=-2, axis2=-1))
    if np.any(d < 0):
        raise ValueError("covariance matrix has a negative diagonal entry")
    trace = d.sum(axis=-1)
    lam = np.linalg.eigvalsh(m)[..., 0]
    if np.any(lam < -rtol * trace):
        raise ValueError(f"covariance matrix is not PSD (min eigenvalue {lam.min():.3g})")


def estimate_covariance(samples):
    """Sample covariance ``(1/n) sum s_i s_i^H`` of scattering vectors.

    ``samples`` is an (n, 3) complex array of (S_hh, S_hv, S_vv) rows.
    """
    s = np.asarray(samples, dtype=np.complex128)
    if s.ndim == 1:
        s = s[None, :]
    if s.ndim != 2 or s.shape[1] != 3:
        raise ValueError(f"samples must have shape (n, 3), got {s.shape}")
    if s.shape[0] == 0:
        raise ValueError("cannot estimate a covariance from zero samples")
    if not np.all(np.isfinite(s)):
        raise ValueError("scattering vectors must be finite")
    n = s.shape[0]
    diag = (s.real ** 2 + s.imag ** 2).sum(axis=0) / n
    off = np.array([(s[:, p] * np.conj(s[:, q])).sum() / n for p, q in UPPER])
    return matrix_from_parts(diag, off)


@dataclass(frozen=True, eq=False)
class CovarianceImage:
    """Per-pixel 3x3 Hermitian covariance raster with a nominal look count.

    ``diag`` is (rows, cols, 3) float64 holding Z11, Z22, Z33; ``off`` is
    (rows, cols, 3) complex128 holding Z12, Z13, Z23. Arrays are read-only.
    """

    diag: np.ndarray
    off: np.ndarray
    looks: float = 1.0

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=np.float64)
        off = np.asarray(self.off, dtype=np.complex128)
        if diag.ndim != 3 or diag.shape[2] != 3:
            raise ValueError(f"diag must be (rows, cols, 3), got {diag.shape}")
        if off.shape != diag.shape:
            raise ValueError(f"off shape {off.shape} does not match diag {diag.shape}")
        if not (np.isfinite(self.looks) and self.looks > 0):
            raise ValueError(f"looks must be positive, got {self.looks}")
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off))):
            raise ValueError("covariance image has non-finite entries")
        object.__setattr__(self, "diag", _frozen(diag))
        object.__setattr__(self, "off", _frozen(off))
        object.__setattr__(self, "looks", float(self.looks))

    @property
    def shape(self):
        return self.diag.shape[:2]

    @property
    def height(self):
        return self.diag.shape[0]

    @property
    def width(self):
        return self.diag.shape[1]

    @property
    def span(self):
        return self.diag.sum(axis=2)

    def matrices(self):
        """Full (rows, cols, 3, 3) complex matrices."""
        return matrix_from_parts(self.diag, self.off)

    @classmethod
    def from_matrices(cls, m, looks=1.0):
        diag, off = parts_from_matrix(m)
        return cls(diag, off, looks)

    def validate(self, rtol=PSD_RTOL):
        check_covariance(self.matrices(), rtol=rtol)

    def __eq__(self, other):
        if not isinstance(other, CovarianceImage):
            return NotImplemented
        return (
            self.looks == other.looks
            and np.array_equal(self.diag, other.diag)
            and np.array_equal(self.off, other.off)
        )

    __hash__ = None


def to_features(img):
    """(rows, cols, 9) float64 feature channels of a covariance image."""
    f = np.empty(img.shape + (N_FEATURES,))
    f[..., 0:3] = img.diag
    f[..., 3::2] = img.off.real
    f[..., 4::2] = img.off.imag
    return f


def from_features(features, looks=1.0):
    """Inverse of :func:`to_features`."""
    f = np.asarray(features, dtype=np.float64)
    if f.shape[-1] != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} channels, got {f.shape[-1]}")
    off = np.empty(f.shape[:-1] + (3,), dtype=np.complex128)
    off.real = f[..., 3::2]
    off.imag = f[..., 4::2]
    return CovarianceImage(f[..., 0:3], off, looks)


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Per-pixel class ids; 0 marks unlabeled pixels."""

    labels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.labels)
        if a.ndim != 2:
            raise ValueError(f"label map must be 2-D, got shape {a.shape}")
        if not np.issubdtype(a.dtype, np.integer):
            raise ValueError("label map must hold integers")
        if a.size and (a.min() < 0 or a.max() > 255):
            raise ValueError("class ids must lie in 0..255")
        object.__setattr__(self, "labels", _frozen(a.astype(np.int64)))

    @property
    def shape(self):
        return self.labels.shape

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    __hash__ = None


@dataclass(frozen=True)
class Region:
    role: str
    class_id: int
    class_name: str
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def n_pixels(self):
        return (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)

    def slices(self):
        return slice(self.y0, self.y1 + 1), slice(self.x0, self.x1 + 1)


@dataclass(frozen=True)
class RegionSet:
    """Axis-aligned training and testing rectangles on a raster.

    Coordinates are inclusive pixel indices with x the column and y the row,
    origin at the top-left.
    """

    shape: tuple
    regions: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "regions", tuple(self.regions))
        self._validate()

    def _validate(self):
        rows, cols = self.shape
        names = {}
        for r in self.regions:
            if r.role not in ("train", "test"):
                raise RegionError(f"unknown role {r.role!r}; expected 'train' or 'test'")
            if not 1 <= r.class_id <= 255:
                raise RegionError(f"class id {r.class_id} outside 1..255")
            if names.setdefault(r.class_id, r.class_name) != r.class_name:
                raise RegionError(
                    f"class {r.class_id} named both {names[r.class_id]!r} and {r.class_name!r}"
                )
            if not (0 <= r.x0 <= r.x1 < cols and 0 <= r.y0 <= r.y1 < rows):
                raise RegionError(f"rectangle {r} lies outside the {rows}x{cols} raster")
        overlaps = []
        for role in ("train", "test"):
            owner = np.zeros(self.shape, dtype=np.int64)
            for r in self.regions:
                if r.role != role:
                    continue
                block = owner[r.slices()]
                clash = np.unique(block[(block != 0) & (block != r.class_id)])
                overlaps.extend(f"{role} class {c} / {role} class {r.class_id}" for c in clash)
                block[...] = r.class_id
        train = self.mask("train")
        test = self.mask("test")
        both = (train > 0) & (test > 0)
        if both.any():
            ys, xs = np.nonzero(both)
            pairs = sorted({(int(train[y, x]), int(test[y, x])) for y, x in zip(ys, xs)})
            overlaps.extend(f"train class {a} / test class {b}" for a, b in pairs)
            overlaps.append(f"{both.sum()} shared pixels, first at x={xs[0]} y={ys[0]}")
        if overlaps:
            raise RegionError("overlapping regions: " + "; ".join(overlaps))

    def mask(self, role):
        """Label raster of the pixels with the given role (0 elsewhere)."""
        out = np.zeros(self.shape, dtype=np.int64)
        for r in self.regions:
            if r.role == role:
                out[r.slices()] = r.class_id
        return out

    @property
    def class_ids(self):
        return tuple(sorted({r.class_id for r in self.regions}))

    @property
    def class_names(self):
        names = {r.class_id: r.class_name for r in self.regions}
        return tuple(names[c] for c in self.class_ids)

    def n_pixels(self, role):
        return int((self.mask(role) > 0).sum())

    def samples(self, features, role="train"):
        """Feature rows and class ids of every pixel with the given role."""
        m = self.mask(role)
        if features.shape[:2] != m.shape:
            raise RegionError(f"features {features.shape[:2]} do not match regions {m.shape}")
        ys, xs = np.nonzero(m)
        return features[ys, xs], m[ys, xs]

    def __len__(self):
        return len(self.regions)
