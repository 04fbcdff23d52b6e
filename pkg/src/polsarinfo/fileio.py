"""On-disk formats: covariance directories, region files and label rasters.

Covariance directory
    ``config.txt`` with ``Nrow <int>``, ``Ncol <int>`` and ``Looks <float>``
    lines, plus nine planes ``C11.bin C12_real.bin C12_imag.bin C13_real.bin
    C13_imag.bin C22.bin C23_real.bin C23_imag.bin C33.bin``, each a
    row-major little-endian float32 array of Nrow * Ncol values.

Region file
    One region per line, ``<role> <class_id> <class_name> <x0> <y0> <x1> <y1>``
    with inclusive coordinates. Blank lines and ``#`` comments are skipped.

Label files
    Binary PGM (P5, maxval 255), one byte per pixel. Scene directories also
    carry a raw ``labels.bin`` (uint8, dimensions from ``config.txt``).
"""
from pathlib import Path

import numpy as np

from .raster import CovarianceImage, LabelMap, Region, RegionSet

PLANES = (
    "C11", "C12_real", "C12_imag", "C13_real", "C13_imag",
    "C22", "C23_real", "C23_imag", "C33",
)
_F32 = np.dtype("<f4")


class FormatError(ValueError):
    """A file does not follow its format; carries the path and byte offset."""

    def __init__(self, message, path=None, offset=None):
        self.path = None if path is None else str(path)
        self.offset = offset
        where = ""
        if path is not None:
            where = f"{path}"
            if offset is not None:
                where += f" (byte offset {offset})"
            where += ": "
        super().__init__(where + message)


def _plane_arrays(img):
    d, o = img.diag, img.off
    return {
        "C11": d[..., 0],
        "C12_real": o[..., 0].real,
        "C12_imag": o[..., 0].imag,
        "C13_real": o[..., 1].real,
        "C13_imag": o[..., 1].imag,
        "C22": d[..., 1],
        "C23_real": o[..., 2].real,
        "C23_imag": o[..., 2].imag,
        "C33": d[..., 2],
    }


def write_covariance_dir(img, path):
    """Write a covariance image as a config.txt plus nine float32 planes.

    Values are stored in single precision; a later read returns exactly the
    float32-rounded image.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    rows, cols = img.shape
    with open(path / "config.txt", "w", newline="\n") as fh:
        fh.write(f"Nrow {rows}\nNcol {cols}\nLooks {img.looks!r}\n")
    for name, plane in _plane_arrays(img).items():
        with open(path / f"{name}.bin", "wb") as fh:
            fh.write(np.ascontiguousarray(plane, dtype=_F32).tobytes())


def read_config(path):
    path = Path(path)
    cfg_path = path / "config.txt"
    if not cfg_path.is_file():
        raise FormatError("missing header file", cfg_path)
    values = {}
    for lineno, line in enumerate(cfg_path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected '<key> <value>', got {line!r}", cfg_path)
        values[parts[0]] = parts[1]
    try:
        rows = int(values["Nrow"])
        cols = int(values["Ncol"])
        looks = float(values.get("Looks", "1"))
    except KeyError as exc:
        raise FormatError(f"missing key {exc.args[0]}", cfg_path) from None
    except ValueError as exc:
        raise FormatError(str(exc), cfg_path) from None
    if rows <= 0 or cols <= 0:
        raise FormatError(f"invalid dimensions {rows}x{cols}", cfg_path)
    if not (np.isfinite(looks) and looks > 0):
        raise FormatError(f"invalid look count {looks}", cfg_path)
    return rows, cols, looks


def _read_plane(file, rows, cols):
    if not file.is_file():
        raise FormatError("missing plane file", file)
    raw = file.read_bytes()
    expected = rows * cols * _F32.itemsize
    if len(raw) != expected:
        raise FormatError(
            f"size mismatch: header gives {rows}x{cols} = {rows * cols} floats "
            f"({expected} bytes), file has {len(raw)} bytes",
            file,
            offset=min(len(raw), expected),
        )
    a = np.frombuffer(raw, dtype=_F32)
    bad = np.flatnonzero(~np.isfinite(a))
    if bad.size:
        raise FormatError(f"non-finite value {a[bad[0]]}", file, offset=int(bad[0]) * _F32.itemsize)
    return a.reshape(rows, cols).astype(np.float64)


def read_covariance_dir(path):
    """Read a covariance directory written by :func:`write_covariance_dir`."""
    path = Path(path)
    rows, cols, looks = read_config(path)
    p = {name: _read_plane(path / f"{name}.bin", rows, cols) for name in PLANES}
    diag = np.stack([p["C11"], p["C22"], p["C33"]], axis=-1)
    off = np.empty((rows, cols, 3), dtype=np.complex128)
    for k, pq in enumerate(("12", "13", "23")):
        off[..., k].real = p[f"C{pq}_real"]
        off[..., k].imag = p[f"C{pq}_imag"]
    return CovarianceImage(diag, off, looks)


def parse_regions(text, shape, source="<regions>"):
    regions = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 7:
            raise FormatError(
                f"line {lineno}: expected '<role> <class_id> <class_name> <x0> <y0> <x1> <y1>'",
                source,
            )
        role, cid, name, *coords = parts
        try:
            cid = int(cid)
            x0, y0, x1, y1 = (int(c) for c in coords)
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer id or coordinate", source) from None
        regions.append(Region(role, cid, name, x0, y0, x1, y1))
    return RegionSet(shape, regions)


def read_regions(path, shape):
    """Parse a region file against a raster of the given (rows, cols)."""
    path = Path(path)
    return parse_regions(path.read_text(), shape, source=path)


def format_regions(regions):
    return "".join(
        f"{r.role} {r.class_id} {r.class_name} {r.x0} {r.y0} {r.x1} {r.y1}\n"
        for r in regions.regions
    )


def write_regions(regions, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(format_regions(regions))


def write_label_pgm(labels, path):
    a = np.asarray(labels.labels, dtype=np.uint8)
    rows, cols = a.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(a.tobytes())


def read_label_pgm(path):
    path = Path(path)
    raw = path.read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos)
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header", path, offset=pos)
        tokens.append(raw[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise FormatError(f"not a binary PGM (magic {tokens[0]!r})", path, offset=0)
    cols, rows, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}", path)
    body = raw[pos:]
    if len(body) != rows * cols:
        raise FormatError(
            f"size mismatch: {rows}x{cols} header, {len(body)} data bytes", path, offset=pos
        )
    return LabelMap(np.frombuffer(body, dtype=np.uint8).reshape(rows, cols))


def write_label_raw(labels, path):
    with open(path, "wb") as fh:
        fh.write(np.asarray(labels.labels, dtype=np.uint8).tobytes())


def read_label_raw(path, shape):
    path = Path(path)
    raw = path.read_bytes()
    rows, cols = shape
    if len(raw) != rows * cols:
        raise FormatError(
            f"size mismatch: expected {rows * cols} bytes, file has {len(raw)}",
            path,
            offset=min(len(raw), rows * cols),
        )
    return LabelMap(np.frombuffer(raw, dtype=np.uint8).reshape(rows, cols))


def read_labels(path):
    """Read a label PGM, or the ``labels.bin`` of a scene directory."""
    path = Path(path)
    if path.is_dir():
        rows, cols, _ = read_config(path)
        return read_label_raw(path / "labels.bin", (rows, cols))
    return read_label_pgm(path)



def to_storage_precision(img):
    """The image exactly as a write/read round-trip through a covariance directory returns it."""
    diag = img.diag.astype(_F32).astype(np.float64)
    off = np.empty(img.off.shape, dtype=np.complex128)
    off.real = img.off.real.astype(_F32)
    off.imag = img.off.imag.astype(_F32)
    return CovarianceImage(diag, off, img.looks)
