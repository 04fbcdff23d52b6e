"""Filter-then-classify methods, window sweeps and thematic maps.

A method pairs a speckle filter with a classifier:

    1  refined Lee (3x3) + local mean (w x w), Gaussian ML
    2  MBPolSAR (w x w), Gaussian ML
    3  refined Lee (3x3) + local mean (w x w), SVM
    4  MBPolSAR (w x w), SVM

Each filter stage is rounded to the float32 storage precision of a
covariance directory, so chaining the ``filter``/``train``/``classify``
commands through files gives exactly the same labels as an in-memory run.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .classifiers import fit_classifier, predict
from .evaluation import confusion, metrics, metrics_csv
from .filters import WINDOWS, boxcar_filter, check_window, mbpolsar_filter, refined_lee
from .fileio import to_storage_precision
from .raster import LabelMap, to_features

log = logging.getLogger(__name__)

LEE_PREPASS_WINDOW = 3


class ExperimentError(RuntimeError):
    """A pipeline stage failed; the message names the method and window."""


class Method(IntEnum):
    LM_ML = 1
    MBPOLSAR_ML = 2
    LM_SVM = 3
    MBPOLSAR_SVM = 4

    @property
    def filter(self):
        return "lee" if self in (Method.LM_ML, Method.LM_SVM) else "mbpolsar"

    @property
    def classifier(self):
        return "ml" if self in (Method.LM_ML, Method.MBPOLSAR_ML) else "svm"

    @property
    def label(self):
        return {1: "LM+ML", 2: "MBPolSAR+ML", 3: "LM+SVM", 4: "MBPolSAR+SVM"}[int(self)]


def parse_methods(text):
    """``"1,2,4"`` -> (Method(1), Method(2), Method(4)), order kept, duplicates dropped."""
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        try:
            m = Method(int(tok))
        except ValueError:
            raise ValueError(f"method must be one of 1,2,3,4, got {tok!r}") from None
        if m not in out:
            out.append(m)
    if not out:
        raise ValueError("no methods given")
    return tuple(out)


def parse_windows(text):
    """``"3:19:2"`` (start:stop:step, stop inclusive) or ``"3,5,9"``."""
    text = str(text).strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(2)
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"window range must be start:stop[:step], got {text!r}")
        values = range(parts[0], parts[1] + 1, parts[2])
    else:
        values = [int(p) for p in text.split(",") if p.strip()]
    windows = tuple(dict.fromkeys(check_window(w) for w in values))
    if not windows:
        raise ValueError(f"empty window list {text!r}")
    return windows


# --------------------------------------------------------------------------
# palettes and maps

DEFAULT_COLORS = (
    (255, 255, 0),    # 1 yellow
    (0, 0, 255),      # 2 blue
    (255, 0, 0),      # 3 red
    (0, 255, 0),      # 4 green
    (0, 255, 255),    # 5 cyan
    (255, 0, 255),    # 6 magenta
    (255, 128, 0),    # 7 orange
    (128, 0, 255),    # 8 violet
    (255, 255, 255),  # 9 white
    (128, 128, 128),  # 10 grey
)
BLACK = (0, 0, 0)


class PaletteError(ValueError):
    pass


@dataclass(frozen=True)
class Palette:
    """Class id -> (r, g, b). Class 0 is always black."""

    colors: tuple

    def __post_init__(self):
        colors = dict(self.colors)
        if colors.get(0, BLACK) != BLACK:
            raise PaletteError("class 0 must be black")
        colors[0] = BLACK
        for cid, rgb in colors.items():
            if not 0 <= int(cid) <= 255:
                raise PaletteError(f"class id {cid} outside 0..255")
            if len(rgb) != 3 or any(not 0 <= int(v) <= 255 for v in rgb):
                raise PaletteError(f"class {cid}: color {rgb!r} is not an 8-bit RGB triple")
        seen = {}
        for cid in sorted(colors):
            rgb = tuple(int(v) for v in colors[cid])
            if rgb in seen:
                raise PaletteError(f"classes {seen[rgb]} and {cid} share the color {rgb}")
            seen[rgb] = cid
        object.__setattr__(self, "colors", tuple(sorted((int(c), tuple(int(v) for v in rgb))
                                                        for c, rgb in colors.items())))

    @classmethod
    def default(cls):
        return cls(tuple((k, rgb) for k, rgb in enumerate(DEFAULT_COLORS, 1)))

    def lut(self):
        table = np.zeros((256, 3), dtype=np.uint8)
        known = np.zeros(256, dtype=bool)
        for cid, rgb in self.colors:
            table[cid] = rgb
            known[cid] = True
        return table, known


def map_bytes(labels, palette=None):
    """Binary PPM (P6, maxval 255) with one pixel per label."""
    palette = Palette.default() if palette is None else palette
    a = labels.labels if isinstance(labels, LabelMap) else LabelMap(np.asarray(labels)).labels
    table, known = palette.lut()
    missing = np.unique(a[~known[a]])
    if missing.size:
        raise PaletteError(f"palette has no color for classes {missing.tolist()}")
    rows, cols = a.shape
    return f"P6\n{cols} {rows}\n255\n".encode("ascii") + table[a].tobytes()


def render_map(labels, path, palette=None):
    data = map_bytes(labels, palette)
    with open(path, "wb") as fh:
        fh.write(data)


# --------------------------------------------------------------------------
# pipeline


class FeatureCache:
    """Filtered feature images keyed by (filter, w), built once per input.

    The refined Lee pre-pass is computed once and shared by every local-mean
    window.
    """

    def __init__(self, img):
        self.img = img
        self._lee = None
        self._features = {}
        self._lock = threading.Lock()

    def lee_prepass(self):
        with self._lock:
            if self._lee is None:
                self._lee = to_storage_precision(refined_lee(self.img, LEE_PREPASS_WINDOW))
            return self._lee

    def filtered(self, name, w):
        w = check_window(w)
        key = (name, w)
        with self._lock:
            hit = self._features.get(key)
        if hit is not None:
            return hit
        if name == "lee":
            img = boxcar_filter(self.lee_prepass(), w)
        elif name == "mbpolsar":
            img = mbpolsar_filter(self.img, w)
        else:
            raise ValueError(f"unknown filter chain {name!r}")
        feats = to_features(to_storage_precision(img))
        feats.setflags(write=False)
        with self._lock:
            return self._features.setdefault(key, feats)

    def build(self, keys):
        for name, w in keys:
            self.filtered(name, w)


def filter_chain(img, method, w):
    """The filtered covariance image that ``method`` classifies at window ``w``."""
    method = Method(method)
    if method.filter == "lee":
        lee = to_storage_precision(refined_lee(img, LEE_PREPASS_WINDOW))
        return to_storage_precision(boxcar_filter(lee, w))
    return to_storage_precision(mbpolsar_filter(img, w))


@dataclass(frozen=True, eq=False)
class MethodResult:
    method: Method
    window: int
    labels: LabelMap
    confusion: object
    metrics: object
    model: object


def run_method(img, regions, method, w, cache=None):
    """Filter, train on the training regions, predict every pixel, score on the test regions."""
    method = Method(method)
    try:
        w = check_window(w)
        if w not in WINDOWS:
            raise ValueError(f"window {w} outside {WINDOWS[0]}..{WINDOWS[-1]}")
        cache = FeatureCache(img) if cache is None else cache
        feats = cache.filtered(method.filter, w)
        model = fit_classifier(method.classifier, feats, regions)
        labels = LabelMap(predict(model, feats))
        cm = confusion(labels, regions)
        m = metrics(cm, method=int(method), window=w)
    except Exception as exc:
        raise ExperimentError(f"method {int(method)} ({method.label}), window {w}: {exc}") from exc
    log.info("method %d w=%d: F=%.4f kappa=%.4f", method, w, m.F, m.kappa)
    return MethodResult(method, w, labels, cm, m, model)


def map_name(method, w):
    return f"map_m{int(method)}_w{int(w)}.ppm"


def sweep(img, regions, methods=tuple(Method), windows=WINDOWS, out_dir=None, workers=1,
          palette=None):
    """Run every (method, window) cell; optionally write metrics.csv and one map per cell.

    Cells may run on ``workers`` threads; the filtered features are built
    first and only read afterwards, and results are collected in
    (method, window) order so the outputs do not depend on scheduling.
    """
    methods = tuple(Method(m) for m in methods)
    windows = tuple(check_window(w) for w in windows)
    cache = FeatureCache(img)
    cache.build(dict.fromkeys((m.filter, w) for m in methods for w in windows))
    cells = [(m, w) for m in methods for w in windows]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: run_method(img, regions, c[0], c[1], cache), cells))
    else:
        results = [run_method(img, regions, m, w, cache) for m, w in cells]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.csv", "w", newline="\n") as fh:
            fh.write(metrics_csv(r.metrics for r in results))
        for r in results:
            render_map(r.labels, out / map_name(r.method, r.window), palette)
    return results


def curve(results, method, key="F"):
    """{window: value} of one method from a sweep."""
    return {r.window: getattr(r.metrics, key) for r in results if r.method == Method(method)}
