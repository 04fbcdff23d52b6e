import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_image
from polsarinfo.fileio import (
    PLANES,
    FormatError,
    parse_regions,
    read_covariance_dir,
    read_label_pgm,
    read_labels,
    read_regions,
    to_storage_precision,
    write_covariance_dir,
    write_label_pgm,
    write_label_raw,
    write_regions,
)
from polsarinfo.raster import CovarianceImage, LabelMap, RegionError


def f32_image(rng, shape=(2, 2)):
    return to_storage_precision(random_image(rng, shape))


class TestCovarianceDir:
    def test_round_trip_2x2(self, tmp_path, rng):
        img = f32_image(rng)
        write_covariance_dir(img, tmp_path / "c")
        assert read_covariance_dir(tmp_path / "c") == img

    def test_diag_1x1_plane_bytes(self, tmp_path):
        img = CovarianceImage(np.array([[[1.0, 2.0, 3.0]]]), np.zeros((1, 1, 3), complex))
        write_covariance_dir(img, tmp_path)
        assert (tmp_path / "C11.bin").read_bytes() == struct.pack("<f", 1.0)
        assert (tmp_path / "C22.bin").read_bytes() == struct.pack("<f", 2.0)
        assert (tmp_path / "C33.bin").read_bytes() == struct.pack("<f", 3.0)
        assert sorted(p.name for p in tmp_path.iterdir()) == sorted(
            [f"{n}.bin" for n in PLANES] + ["config.txt"]
        )

    def test_config_text(self, tmp_path, rng):
        write_covariance_dir(f32_image(rng, (3, 5)), tmp_path)
        assert (tmp_path / "config.txt").read_text() == "Nrow 3\nNcol 5\nLooks 4.0\n"

    def test_size_mismatch(self, tmp_path):
        img = CovarianceImage(np.ones((4, 4, 3)), np.zeros((4, 4, 3), complex))
        write_covariance_dir(img, tmp_path)
        (tmp_path / "C11.bin").write_bytes(np.ones(12, "<f4").tobytes())
        with pytest.raises(FormatError, match="size mismatch") as err:
            read_covariance_dir(tmp_path)
        assert err.value.path.endswith("C11.bin")
        assert err.value.offset == 48

    def test_missing_plane(self, tmp_path, rng):
        write_covariance_dir(f32_image(rng), tmp_path)
        (tmp_path / "C23_imag.bin").unlink()
        with pytest.raises(FormatError, match="missing plane") as err:
            read_covariance_dir(tmp_path)
        assert err.value.path.endswith("C23_imag.bin")

    def test_missing_header(self, tmp_path):
        with pytest.raises(FormatError, match="missing header"):
            read_covariance_dir(tmp_path)

    def test_non_finite_value_reports_offset(self, tmp_path, rng):
        write_covariance_dir(f32_image(rng), tmp_path)
        data = np.frombuffer((tmp_path / "C13_real.bin").read_bytes(), "<f4").copy()
        data[3] = np.nan
        (tmp_path / "C13_real.bin").write_bytes(data.tobytes())
        with pytest.raises(FormatError, match="non-finite") as err:
            read_covariance_dir(tmp_path)
        assert err.value.offset == 12

    def test_bad_header_value(self, tmp_path, rng):
        write_covariance_dir(f32_image(rng), tmp_path)
        (tmp_path / "config.txt").write_text("Nrow 2\nNcol two\n")
        with pytest.raises(FormatError):
            read_covariance_dir(tmp_path)

    def test_storage_precision_matches_disk(self, tmp_path, rng):
        img = random_image(rng, (3, 4))
        write_covariance_dir(img, tmp_path)
        assert read_covariance_dir(tmp_path) == to_storage_precision(img)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 5))
def test_covariance_dir_round_trip_property(tmp_path_factory, seed, rows, cols):
    rng = np.random.default_rng(seed)
    img = f32_image(rng, (rows, cols))
    d = tmp_path_factory.mktemp("cov")
    write_covariance_dir(img, d)
    back = read_covariance_dir(d)
    assert back == img
    for name in PLANES:
        assert (d / f"{name}.bin").stat().st_size == rows * cols * 4


class TestRegions:
    def test_one_rect(self, tmp_path):
        (tmp_path / "r.txt").write_text("train 1 grass 0 0 1 1\n")
        rs = read_regions(tmp_path / "r.txt", (4, 4))
        assert rs.n_pixels("train") == 4

    def test_overlap_error(self):
        with pytest.raises(RegionError, match="overlapping"):
            parse_regions("train 1 a 0 0 1 1\ntest 1 a 1 1 2 2\n", (4, 4))

    def test_empty_file(self, tmp_path):
        (tmp_path / "r.txt").write_text("")
        rs = read_regions(tmp_path / "r.txt", (4, 4))
        assert len(rs) == 0 and rs.class_ids == ()

    def test_comments_and_blank_lines(self):
        rs = parse_regions("# header\n\ntest 2 sea 0 0 0 0  # one pixel\n", (2, 2))
        assert rs.n_pixels("test") == 1

    def test_malformed_line(self):
        with pytest.raises(FormatError, match="line 2"):
            parse_regions("train 1 a 0 0 1 1\ntrain 1 a 0 0\n", (4, 4))
        with pytest.raises(FormatError, match="non-integer"):
            parse_regions("train x a 0 0 1 1\n", (4, 4))

    def test_write_read(self, tmp_path):
        rs = parse_regions("train 1 a 0 0 1 1\ntest 2 b 2 2 3 3\n", (4, 4))
        write_regions(rs, tmp_path / "r.txt")
        assert read_regions(tmp_path / "r.txt", (4, 4)) == rs


class TestLabels:
    def test_pgm_round_trip(self, tmp_path, rng):
        lab = LabelMap(rng.integers(0, 6, size=(5, 7)))
        write_label_pgm(lab, tmp_path / "l.pgm")
        raw = (tmp_path / "l.pgm").read_bytes()
        assert raw.startswith(b"P5\n7 5\n255\n") and len(raw) == 11 + 35
        assert read_label_pgm(tmp_path / "l.pgm") == lab
        assert read_labels(tmp_path / "l.pgm") == lab

    def test_pgm_with_comment(self, tmp_path):
        (tmp_path / "l.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n\x01\x02")
        np.testing.assert_array_equal(read_label_pgm(tmp_path / "l.pgm").labels, [[1, 2]])

    def test_pgm_truncated(self, tmp_path):
        (tmp_path / "l.pgm").write_bytes(b"P5\n2 2\n255\n\x01")
        with pytest.raises(FormatError, match="size mismatch"):
            read_label_pgm(tmp_path / "l.pgm")

    def test_not_pgm(self, tmp_path):
        (tmp_path / "l.pgm").write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(FormatError, match="not a binary PGM"):
            read_label_pgm(tmp_path / "l.pgm")

    def test_scene_directory_labels(self, tmp_path, rng):
        img = f32_image(rng, (2, 3))
        write_covariance_dir(img, tmp_path)
        lab = LabelMap(np.array([[0, 1, 2], [3, 4, 5]]))
        write_label_raw(lab, tmp_path / "labels.bin")
        assert (tmp_path / "labels.bin").read_bytes() == bytes(range(6))
        assert read_labels(tmp_path) == lab
