"""Seeded synthetic PolSAR scenes with known class covariances and labels.

Each pixel of class k holds the n-look sample covariance of n independent
zero-mean circular complex Gaussian scattering vectors with covariance C_k.
The draws for pixel (y, x) come from a counter-based stream keyed by
(seed, y, x), so a scene is bit-identical for a given spec regardless of how
the pixel loop is scheduled.
"""
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .fileio import (
    FormatError,
    read_config,
    read_covariance_dir,
    read_label_raw,
    write_covariance_dir,
    write_label_raw,
    write_regions,
)
from .raster import CovarianceImage, LabelMap, Region, RegionSet, from_features, to_features


class SceneSpecError(ValueError):
    """Invalid scene specification."""


class NotPositiveDefiniteError(SceneSpecError):
    """A class covariance cannot be Cholesky-factorised."""


@dataclass(frozen=True)
class ClassSpec:
    class_id: int
    name: str
    covariance: np.ndarray
    rects: tuple = ()

    def __post_init__(self):
        c = np.array(self.covariance, dtype=np.complex128)
        c.setflags(write=False)
        object.__setattr__(self, "covariance", c)
        object.__setattr__(self, "rects", tuple(tuple(int(v) for v in r) for r in self.rects))

    def __eq__(self, other):
        if not isinstance(other, ClassSpec):
            return NotImplemented
        return (
            (self.class_id, self.name, self.rects) == (other.class_id, other.name, other.rects)
            and np.array_equal(self.covariance, other.covariance)
        )

    __hash__ = None


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    looks: int
    classes: tuple = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))

    def validate(self):
        if self.width <= 0 or self.height <= 0:
            raise SceneSpecError(f"invalid raster size {self.width}x{self.height}")
        if int(self.looks) != self.looks or self.looks < 1:
            raise SceneSpecError(f"looks must be a positive integer, got {self.looks}")
        ids = [c.class_id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise SceneSpecError("duplicate class ids")
        owner = np.zeros((self.height, self.width), dtype=np.int64)
        for c in self.classes:
            if not 1 <= c.class_id <= 255:
                raise SceneSpecError(f"class id {c.class_id} outside 1..255")
            if not c.name or any(ch.isspace() for ch in c.name):
                raise SceneSpecError(f"class name {c.name!r} must be a single token")
            cholesky_factor(c.covariance)
            for x0, y0, x1, y1 in c.rects:
                if not (0 <= x0 <= x1 < self.width and 0 <= y0 <= y1 < self.height):
                    raise SceneSpecError(f"class {c.class_id} rect {(x0, y0, x1, y1)} out of bounds")
                block = owner[y0:y1 + 1, x0:x1 + 1]
                other = np.unique(block[(block != 0) & (block != c.class_id)])
                if other.size:
                    raise SceneSpecError(
                        f"class {c.class_id} rect {(x0, y0, x1, y1)} overlaps class {int(other[0])}"
                    )
                block[...] = c.class_id
        return self

    def label_raster(self):
        labels = np.zeros((self.height, self.width), dtype=np.int64)
        for c in self.classes:
            for x0, y0, x1, y1 in c.rects:
                labels[y0:y1 + 1, x0:x1 + 1] = c.class_id
        return labels


def cholesky_factor(C):
    """Lower-triangular L with L L^H = C; C must be Hermitian positive definite."""
    C = np.asarray(C, dtype=np.complex128)
    if C.shape != (3, 3):
        raise NotPositiveDefiniteError(f"covariance must be 3x3, got {C.shape}")
    if not np.array_equal(C, C.conj().T):
        raise NotPositiveDefiniteError("covariance is not Hermitian")
    lam = np.linalg.eigvalsh(C)
    if not lam[0] > 0:
        raise NotPositiveDefiniteError(f"covariance is not positive definite (min eigenvalue {lam[0]:.3g})")
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None


def sample_scattering(C, rng, size=None):
    """Draw scattering vectors s = L g with g i.i.d. standard circular Gaussian.

    Returns shape (3,) when ``size`` is None, else (size, 3).
    """
    L = cholesky_factor(C)
    n = 1 if size is None else int(size)
    g = (rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))) / np.sqrt(2.0)
    s = g @ L.T
    return s[0] if size is None else s


def generate_scene(spec):
    """Simulate a scene; returns ``(CovarianceImage, LabelMap)``.

    Pixels outside every class rectangle get label 0 and a zero matrix.
    """
    spec.validate()
    labels = spec.label_raster()
    index = np.full(labels.shape, -1, dtype=np.int64)
    chol = np.zeros((max(1, len(spec.classes)), 3, 3), dtype=np.complex128)
    for k, c in enumerate(spec.classes):
        chol[k] = cholesky_factor(c.covariance)
        index[labels == c.class_id] = k
    diag, off = kernels.scene_draws(int(spec.seed), chol, index, int(spec.looks))
    return CovarianceImage(diag, off, float(spec.looks)), LabelMap(labels)


def covariance_from_features(values):
    """3x3 Hermitian matrix from nine numbers in feature-channel order."""
    f = np.asarray(values, dtype=np.float64).reshape(1, 1, 9)
    return from_features(f).matrices()[0, 0]


def features_from_covariance(C):
    m = np.asarray(C, dtype=np.complex128).reshape(1, 1, 3, 3)
    return to_features(CovarianceImage.from_matrices(m))[0, 0]


def _fmt(x):
    return repr(float(x))


def format_scene_spec(spec):
    lines = [
        f"width {spec.width}",
        f"height {spec.height}",
        f"looks {spec.looks}",
        f"seed {spec.seed}",
    ]
    for c in spec.classes:
        lines.append(f"class {c.class_id} {c.name}")
        lines.append("C " + " ".join(_fmt(v) for v in features_from_covariance(c.covariance)))
        for r in c.rects:
            lines.append("rect " + " ".join(str(v) for v in r))
    return "\n".join(lines) + "\n"


def parse_scene_spec(text, source="<scene spec>"):
    header = {}
    classes = []
    current = None

    def close():
        if current is None:
            return
        if current["C"] is None:
            raise FormatError(f"class {current['id']} has no 'C' line", source)
        classes.append(ClassSpec(current["id"], current["name"], current["C"], current["rects"]))

    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key in ("width", "height", "looks", "seed") and current is None:
                if len(rest) != 1:
                    raise ValueError(f"'{key}' takes one value")
                header[key] = int(rest[0])
            elif key == "class":
                close()
                if len(rest) != 2:
                    raise ValueError("expected 'class <id> <name>'")
                current = {"id": int(rest[0]), "name": rest[1], "C": None, "rects": []}
            elif key == "C" and current is not None:
                if len(rest) != 9:
                    raise ValueError("'C' takes 9 numbers")
                current["C"] = covariance_from_features([float(v) for v in rest])
            elif key == "rect" and current is not None:
                if len(rest) != 4:
                    raise ValueError("'rect' takes x0 y0 x1 y1")
                current["rects"].append(tuple(int(v) for v in rest))
            else:
                raise ValueError(f"unexpected key {key!r}")
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}", source) from None
    close()
    missing = {"width", "height", "looks"} - header.keys()
    if missing:
        raise FormatError(f"missing keys: {', '.join(sorted(missing))}", source)
    return SceneSpec(
        width=header["width"],
        height=header["height"],
        looks=header["looks"],
        classes=tuple(classes),
        seed=header.get("seed", 0),
    )


def read_scene_spec(path):
    path = Path(path)
    return parse_scene_spec(path.read_text(), source=path)


def write_scene_spec(spec, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(format_scene_spec(spec))


def _covariance(d1, d2, d3, rho12=0.0, rho13=0.0, rho23=0.0):
    d = np.sqrt([d1, d2, d3])
    C = np.diag([d1, d2, d3]).astype(np.complex128)
    for (p, q), rho in zip(((0, 1), (0, 2), (1, 2)), (rho12, rho13, rho23)):
        C[p, q] = rho * d[p] * d[q]
        C[q, p] = np.conj(C[p, q])
    return C


# Five land-cover classes loosely modelled on an L-band urban/coastal scene.
_CLASS_SHAPES = (
    (1, "Grass", _covariance(0.30, 0.060, 0.26, rho13=0.45)),
    (2, "Sea", _covariance(0.25, 0.030, 0.20, rho13=0.75)),
    (3, "Urban", _covariance(0.40, 0.070, 0.30, rho13=-0.35 + 0.2j)),
    (4, "Vegetation", _covariance(0.34, 0.085, 0.30, rho13=0.25)),
    (5, "Water", _covariance(0.21, 0.022, 0.18, rho13=0.65)),
)
# Each class is pulled toward the class average so that, at four looks, a
# 3x3 window leaves visible confusion (overall accuracy near 0.9).
SEPARATION = 0.8


def _pull_together(classes, t):
    avg = sum(c for _, _, c in classes) / len(classes)
    return tuple((cid, name, avg + t * (c - avg)) for cid, name, c in classes)


DEFAULT_CLASSES = _pull_together(_CLASS_SHAPES, SEPARATION)


def default_scene_spec(seed=0, width=128, height=128, looks=4):
    """The default desk-scale scene: five classes in rectangular blocks.

    The top half is split into three blocks, the bottom half into two.
    """
    top = height // 2
    cuts = [0, width // 3, 2 * width // 3, width]
    rects = [
        (cuts[0], 0, cuts[1] - 1, top - 1),
        (cuts[1], 0, cuts[2] - 1, top - 1),
        (cuts[2], 0, cuts[3] - 1, top - 1),
        (0, top, width // 2 - 1, height - 1),
        (width // 2, top, width - 1, height - 1),
    ]
    classes = tuple(
        ClassSpec(cid, name, C, (rect,)) for (cid, name, C), rect in zip(DEFAULT_CLASSES, rects)
    )
    return SceneSpec(width=width, height=height, looks=looks, classes=classes, seed=seed)


def derive_regions(spec, margin=4, gap=4, train_rows=12, train_cols=24):
    """Disjoint training and testing rectangles inside each class's first block.

    Training takes the top ``train_rows`` rows (at most ``train_cols`` wide,
    centred) of the block inset by ``margin``; testing takes the rows below a
    ``gap``. Classes whose block is too small for both are skipped.
    """
    regions = []
    for c in spec.classes:
        if not c.rects:
            continue
        x0, y0, x1, y1 = c.rects[0]
        m = min(margin, (x1 - x0) // 4, (y1 - y0) // 4)
        ix0, iy0, ix1, iy1 = x0 + m, y0 + m, x1 - m, y1 - m
        rows = iy1 - iy0 + 1
        t = min(train_rows, max(1, (rows - 1) // 2))
        g = min(gap, max(0, rows - 2 * t))
        if rows - t - g < 1:
            continue
        cols = ix1 - ix0 + 1
        tw = min(train_cols, cols)
        tx0 = ix0 + (cols - tw) // 2
        regions.append(Region("train", c.class_id, c.name, tx0, iy0, tx0 + tw - 1, iy0 + t - 1))
        regions.append(Region("test", c.class_id, c.name, ix0, iy0 + t + g, ix1, iy1))
    return RegionSet((spec.height, spec.width), regions)


def write_scene(path, spec, img, labels):
    """Write a scene directory: covariance planes, labels.bin, scene.txt, regions.txt."""
    path = Path(path)
    write_covariance_dir(img, path)
    write_label_raw(labels, path / "labels.bin")
    write_scene_spec(spec, path / "scene.txt")
    write_regions(derive_regions(spec), path / "regions.txt")


def read_scene(path):
    """Read back ``(CovarianceImage, LabelMap)`` from a scene directory."""
    path = Path(path)
    img = read_covariance_dir(path)
    rows, cols, _ = read_config(path)
    return img, read_label_raw(path / "labels.bin", (rows, cols))


def with_seed(spec, seed):
    return replace(spec, seed=seed)
