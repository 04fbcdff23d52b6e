import numpy as np
import pytest

from polsarinfo.evaluation import DegenerateKappaWarning, read_metrics_csv
from polsarinfo.experiment import (
    DEFAULT_COLORS,
    ExperimentError,
    FeatureCache,
    Method,
    Palette,
    PaletteError,
    filter_chain,
    map_bytes,
    parse_methods,
    parse_windows,
    render_map,
    run_method,
    sweep,
)
from polsarinfo.filters import boxcar_filter, mbpolsar_filter, refined_lee
from polsarinfo.fileio import to_storage_precision
from polsarinfo.raster import LabelMap, Region, RegionSet, to_features
from polsarinfo.synth import default_scene_spec, derive_regions, generate_scene

from helpers import constant_image


@pytest.fixture(scope="module")
def small_scene():
    spec = default_scene_spec(seed=5, width=64, height=64)
    img, _ = generate_scene(spec)
    return img, derive_regions(spec)


class TestMethod:
    def test_table(self):
        assert [(m.filter, m.classifier) for m in Method] == [
            ("lee", "ml"), ("mbpolsar", "ml"), ("lee", "svm"), ("mbpolsar", "svm")]
        assert Method(3).label == "LM+SVM"

    def test_parse_methods(self):
        assert parse_methods("1,2,3,4") == tuple(Method)
        assert parse_methods("4, 2,4") == (Method(4), Method(2))
        with pytest.raises(ValueError):
            parse_methods("5")

    def test_parse_windows(self):
        assert parse_windows("3:19:2") == (3, 5, 7, 9, 11, 13, 15, 17, 19)
        assert parse_windows("3:9") == (3, 5, 7, 9)
        assert parse_windows("7,3") == (7, 3)
        with pytest.raises(ValueError):
            parse_windows("4")
        with pytest.raises(ValueError):
            parse_windows("3:9:0")


class TestRenderMap:
    def test_one_pixel_red(self):
        pal = Palette(((1, (255, 0, 0)),))
        assert map_bytes(LabelMap(np.array([[1]])), pal) == b"P6\n1 1\n255\n\xff\x00\x00"

    def test_class_zero_black(self):
        assert map_bytes(LabelMap(np.array([[0, 2]]))).endswith(b"\x00\x00\x00\x00\x00\xff")

    def test_default_palette(self):
        lut, _ = Palette.default().lut()
        assert [tuple(lut[k]) for k in range(1, 6)] == [
            (255, 255, 0), (0, 0, 255), (255, 0, 0), (0, 255, 0), (0, 255, 255)]
        assert len(set(DEFAULT_COLORS)) == len(DEFAULT_COLORS)

    def test_duplicate_colors(self):
        with pytest.raises(PaletteError, match="share"):
            Palette(((1, (1, 2, 3)), (2, (1, 2, 3))))
        with pytest.raises(PaletteError, match="share"):
            Palette(((1, (0, 0, 0)),))

    def test_class_zero_must_be_black(self):
        with pytest.raises(PaletteError):
            Palette(((0, (1, 1, 1)),))

    def test_missing_color(self):
        with pytest.raises(PaletteError, match="200"):
            map_bytes(LabelMap(np.array([[200]])))

    def test_file(self, tmp_path):
        labels = LabelMap(np.array([[1, 2, 3], [4, 5, 0]]))
        render_map(labels, tmp_path / "m.ppm")
        data = (tmp_path / "m.ppm").read_bytes()
        assert data == b"P6\n3 2\n255\n" + bytes(
            [255, 255, 0, 0, 0, 255, 255, 0, 0, 0, 255, 0, 0, 255, 255, 0, 0, 0])


class TestRunMethod:
    def test_constant_single_class_scene(self):
        C = np.array([[1.0, 0.2j, 0.3], [-0.2j, 0.4, 0], [0.3, 0, 0.9]])
        img = constant_image(C, shape=(20, 20))
        rs = RegionSet((20, 20), [Region("train", 1, "only", 0, 0, 19, 4), Region("test", 1, "only", 0, 10, 19, 19)])
        with pytest.warns(DegenerateKappaWarning):
            res = run_method(img, rs, 1, 3)
        assert res.metrics.kappa == 0.0
        assert np.all(res.labels.labels == 1)
        assert res.metrics.F == 1.0

    def test_shared_filter_column(self, small_scene):
        img, rs = small_scene
        cache = FeatureCache(img)
        a = run_method(img, rs, 2, 5, cache)
        b = run_method(img, rs, 4, 5, cache)
        assert cache.filtered("mbpolsar", 5) is cache.filtered("mbpolsar", 5)
        np.testing.assert_array_equal(to_features(filter_chain(img, 2, 5)), to_features(filter_chain(img, 4, 5)))
        np.testing.assert_array_equal(to_features(filter_chain(img, 1, 7)), to_features(filter_chain(img, 3, 7)))
        assert a.model.kind == "ml" and b.model.kind == "svm"

    def test_chain_definition(self, small_scene):
        img, _ = small_scene
        lee = to_storage_precision(refined_lee(img, 3))
        np.testing.assert_array_equal(
            to_features(filter_chain(img, 1, 9)), to_features(to_storage_precision(boxcar_filter(lee, 9))))
        np.testing.assert_array_equal(
            to_features(filter_chain(img, 4, 9)), to_features(to_storage_precision(mbpolsar_filter(img, 9))))
        cache = FeatureCache(img)
        np.testing.assert_array_equal(cache.filtered("lee", 9), to_features(filter_chain(img, 1, 9)))

    def test_error_context(self, small_scene):
        img, rs = small_scene
        with pytest.raises(ExperimentError, match=r"method 3 \(LM\+SVM\), window 4"):
            run_method(img, rs, 3, 4)
        with pytest.raises(ExperimentError, match="window 21"):
            run_method(img, rs, 1, 21)
        empty = RegionSet(rs.shape, [])
        with pytest.raises(ExperimentError, match="method 1"):
            run_method(img, empty, 1, 3)

    def test_filtering_helps(self, small_scene):
        img, rs = small_scene
        assert run_method(img, rs, 2, 7).metrics.F > run_method(img, rs, 2, 3).metrics.F


class TestSweep:
    def test_cardinality_and_files(self, small_scene, tmp_path):
        img, rs = small_scene
        results = sweep(img, rs, out_dir=tmp_path)
        assert len(results) == 36
        rows = read_metrics_csv(tmp_path / "metrics.csv")
        assert len(rows) == 36
        assert [(r["method"], r["window"]) for r in rows[:2]] == [("1", "3"), ("1", "5")]
        assert list(rows[0])[:6] == ["method", "window", "F", "kappa", "CA_Grass", "CA_Sea"]
        assert len(list(tmp_path.glob("map_m*_w*.ppm"))) == 36
        assert (tmp_path / "map_m4_w19.ppm").read_bytes().startswith(b"P6\n64 64\n255\n")

    def test_deterministic_across_runs_and_workers(self, small_scene, tmp_path):
        img, rs = small_scene
        kw = dict(methods=(1, 4), windows=(3, 7))
        sweep(img, rs, out_dir=tmp_path / "a", workers=1, **kw)
        sweep(img, rs, out_dir=tmp_path / "b", workers=1, **kw)
        sweep(img, rs, out_dir=tmp_path / "c", workers=4, **kw)
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert len(names) == 5
        for name in names:
            ref = (tmp_path / "a" / name).read_bytes()
            assert (tmp_path / "b" / name).read_bytes() == ref
            assert (tmp_path / "c" / name).read_bytes() == ref
