import numpy as np
import pytest

from polsarinfo.fileio import FormatError, read_regions
from polsarinfo.synth import (
    ClassSpec,
    NotPositiveDefiniteError,
    SceneSpec,
    SceneSpecError,
    cholesky_factor,
    default_scene_spec,
    derive_regions,
    format_scene_spec,
    generate_scene,
    parse_scene_spec,
    read_scene,
    sample_scattering,
    write_scene,
)

EYE = np.eye(3, dtype=complex)


def one_class(C, looks=1, width=1, height=1, seed=0):
    return SceneSpec(width, height, looks, (ClassSpec(1, "a", C, ((0, 0, width - 1, height - 1),)),), seed)


class TestSampleScattering:
    def test_zero_rejected(self, rng):
        with pytest.raises(NotPositiveDefiniteError):
            sample_scattering(0.0 * EYE, rng)

    def test_non_hermitian_rejected(self, rng):
        C = EYE.copy()
        C[0, 2] = 0.1
        with pytest.raises(NotPositiveDefiniteError, match="Hermitian"):
            sample_scattering(C, rng)

    def test_identity_moments(self, rng):
        s = sample_scattering(EYE, rng, size=100_000)
        np.testing.assert_allclose((np.abs(s) ** 2).mean(axis=0), 1.0, rtol=0.03)
        cross = (s[:, :, None] * s[:, None, :].conj()).mean(axis=0)
        assert np.abs(cross - np.diag(np.diag(cross))).max() < 0.02

    def test_diag_4_1_1(self, rng):
        s = sample_scattering(np.diag([4, 1, 1]).astype(complex), rng, size=100_000)
        assert abs((np.abs(s[:, 0]) ** 2).mean() / 4 - 1) < 0.03

    def test_single_vector_shape(self, rng):
        assert sample_scattering(EYE, rng).shape == (3,)

    def test_cholesky(self):
        C = np.array([[2, 0.5j, 0], [-0.5j, 1, 0.2], [0, 0.2, 1]])
        L = cholesky_factor(C)
        np.testing.assert_allclose(L @ L.conj().T, C, atol=1e-15)
        assert np.allclose(np.triu(L, 1), 0)


class TestGenerateScene:
    def test_law_of_large_numbers(self):
        img, _ = generate_scene(one_class(EYE, looks=1_000_000))
        assert np.abs(img.matrices()[0, 0] - EYE).max() < 0.01

    def test_deterministic(self):
        spec = default_scene_spec(seed=7, width=32, height=32)
        a, la = generate_scene(spec)
        b, lb = generate_scene(spec)
        assert a == b and la == lb

    def test_seed_changes_output(self):
        a, _ = generate_scene(default_scene_spec(seed=1, width=16, height=16))
        b, _ = generate_scene(default_scene_spec(seed=2, width=16, height=16))
        assert not a == b

    def test_labels_inside_rectangles(self):
        spec = SceneSpec(8, 6, 2, (
            ClassSpec(1, "a", EYE, ((0, 0, 3, 5),)),
            ClassSpec(2, "b", 2 * EYE, ((4, 0, 6, 2), (4, 4, 6, 5))),
        ))
        img, labels = generate_scene(spec)
        assert labels.labels[1, 5] == 2 and labels.labels[5, 6] == 2 and labels.labels[0, 0] == 1
        assert labels.labels[3, 5] == 0 and labels.labels[0, 7] == 0
        uncovered = labels.labels == 0
        assert np.all(img.diag[uncovered] == 0) and np.all(img.off[uncovered] == 0)

    def test_pixels_are_valid_covariances(self):
        img, _ = generate_scene(default_scene_spec(seed=3, width=24, height=24))
        img.validate()

    def test_pixel_equals_sample_covariance_of_its_own_stream(self):
        # The one-look estimate of a class with C = I must be a rank-one outer product.
        img, _ = generate_scene(one_class(EYE, looks=1, width=4, height=3))
        lam = np.linalg.eigvalsh(img.matrices())
        np.testing.assert_allclose(lam[..., :2], 0, atol=1e-12)

    def test_zero_mean_noise(self):
        C = np.array([[1, 0.3 + 0.2j, 0.5], [0.3 - 0.2j, 0.5, 0], [0.5, 0, 0.8]])
        img, _ = generate_scene(one_class(C, looks=2, width=100, height=100, seed=11))
        m = img.matrices().reshape(-1, 3, 3)
        n = m.shape[0]
        for p in range(3):
            for q in range(3):
                z = m[:, p, q]
                se = np.sqrt(z.real.var() / n) + np.sqrt(z.imag.var() / n) + 1e-15
                assert abs(z.mean() - C[p, q]) < 5 * se

    def test_lag_one_autocorrelation(self):
        img, _ = generate_scene(one_class(EYE, looks=1, width=100, height=100, seed=5))
        z = img.diag[..., 0]
        z = z - z.mean()
        r = (z[:, 1:] * z[:, :-1]).mean() / (z * z).mean()
        n = z[:, 1:].size
        assert abs(r) < 3 / np.sqrt(n)

    @pytest.mark.parametrize("looks", [1, 4, 16])
    def test_diagonal_variance_scales_with_looks(self, looks):
        C = np.diag([2.0, 1.0, 0.5]).astype(complex)
        img, _ = generate_scene(one_class(C, looks=looks, width=150, height=150, seed=looks))
        for k, c in enumerate((2.0, 1.0, 0.5)):
            v = img.diag[..., k].var()
            assert abs(v / (c * c / looks) - 1) < 0.10


class TestSceneSpec:
    def test_validation(self):
        with pytest.raises(SceneSpecError, match="overlaps"):
            SceneSpec(4, 4, 1, (ClassSpec(1, "a", EYE, ((0, 0, 2, 2),)),
                                ClassSpec(2, "b", EYE, ((2, 2, 3, 3),)))).validate()
        with pytest.raises(SceneSpecError, match="out of bounds"):
            SceneSpec(2, 2, 1, (ClassSpec(1, "a", EYE, ((0, 0, 2, 0),)),)).validate()
        with pytest.raises(SceneSpecError, match="looks"):
            one_class(EYE, looks=0).validate()
        with pytest.raises(NotPositiveDefiniteError):
            one_class(np.diag([1, 1, 0]).astype(complex)).validate()
        with pytest.raises(SceneSpecError, match="duplicate"):
            SceneSpec(2, 2, 1, (ClassSpec(1, "a", EYE), ClassSpec(1, "b", EYE))).validate()

    def test_text_round_trip(self):
        spec = default_scene_spec(seed=2**63 + 5)
        assert parse_scene_spec(format_scene_spec(spec)) == spec

    def test_parse_example(self):
        text = """width 4
height 2
looks 3
seed 9
class 1 grass
C 1 2 3 0.1 0.2 0 0 0 -0.3
rect 0 0 1 1
class 2 sea
C 1 1 1 0 0 0 0 0 0
rect 2 0 3 1
"""
        spec = parse_scene_spec(text)
        assert (spec.width, spec.height, spec.looks, spec.seed) == (4, 2, 3, 9)
        C = spec.classes[0].covariance
        assert C[0, 1] == 0.1 + 0.2j and C[1, 0] == 0.1 - 0.2j and C[1, 2] == -0.3j
        assert spec.classes[1].rects == ((2, 0, 3, 1),)

    def test_parse_errors(self):
        with pytest.raises(FormatError, match="missing keys"):
            parse_scene_spec("width 2\n")
        with pytest.raises(FormatError, match="line 5: 'C' takes 9 numbers"):
            parse_scene_spec("width 2\nheight 2\nlooks 1\nclass 1 a\nC 1 1 1\n")
        with pytest.raises(FormatError, match="no 'C' line"):
            parse_scene_spec("width 2\nheight 2\nlooks 1\nclass 1 a\nrect 0 0 1 1\n")


class TestDefaultScene:
    def test_shape(self):
        spec = default_scene_spec()
        assert (spec.width, spec.height, spec.looks, len(spec.classes)) == (128, 128, 4, 5)
        assert [c.name for c in spec.classes] == ["Grass", "Sea", "Urban", "Vegetation", "Water"]
        assert np.all(spec.label_raster() > 0)

    def test_regions_lie_in_their_class(self):
        spec = default_scene_spec()
        labels = spec.label_raster()
        rs = derive_regions(spec)
        assert rs.class_ids == (1, 2, 3, 4, 5)
        for r in rs.regions:
            assert np.all(labels[r.slices()] == r.class_id)
        for role in ("train", "test"):
            m = rs.mask(role)
            assert all((m == c).sum() >= 100 for c in rs.class_ids)

    def test_write_read_scene(self, tmp_path):
        spec = default_scene_spec(seed=4, width=32, height=32)
        img, labels = generate_scene(spec)
        write_scene(tmp_path / "s", spec, img, labels)
        back, back_labels = read_scene(tmp_path / "s")
        assert back_labels == labels
        np.testing.assert_allclose(back.diag, img.diag, rtol=1e-7)
        assert read_regions(tmp_path / "s" / "regions.txt", (32, 32)) == derive_regions(spec)
        assert parse_scene_spec((tmp_path / "s" / "scene.txt").read_text()) == spec
