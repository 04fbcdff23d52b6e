import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polsarinfo.classifiers import fit_gaussian, fit_svm, predict
from polsarinfo.fileio import FormatError
from polsarinfo.modelio import format_model, load_model, parse_model, save_model
from polsarinfo.raster import Region, RegionSet


def blob_problem(seed, k=3, size=12):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((size, size, 9)) * 0.3
    regions = []
    width = size // k
    for c in range(k):
        f[:, c * width:(c + 1) * width] += rng.standard_normal(9)
        regions.append(Region("train", c + 1, f"c{c + 1}", c * width, 0, (c + 1) * width - 1, size // 2 - 1))
        regions.append(Region("test", c + 1, f"c{c + 1}", c * width, size // 2, (c + 1) * width - 1, size - 1))
    return f, RegionSet((size, size), regions)


def assert_models_identical(a, b):
    assert type(a) is type(b)
    assert a.class_ids == b.class_ids and a.class_names == b.class_names
    if a.kind == "ml":
        for name in ("means", "covariances", "priors", "ridges"):
            assert np.array_equal(getattr(a, name), getattr(b, name))
    else:
        assert np.array_equal(a.mean, b.mean) and np.array_equal(a.scale, b.scale)
        assert len(a.pairs) == len(b.pairs)
        for (pa, ma), (pb, mb) in zip(a.pairs, b.pairs):
            assert pa == pb
            assert ma.bias == mb.bias and ma.gamma == mb.gamma and ma.C == mb.C
            assert np.array_equal(ma.coef, mb.coef)
            assert np.array_equal(ma.support_vectors, mb.support_vectors)


@pytest.mark.parametrize("fit", [fit_gaussian, fit_svm])
def test_save_load_bit_exact(tmp_path, fit):
    f, regions = blob_problem(0)
    model = fit(f, regions)
    save_model(model, tmp_path / "m.txt")
    back = load_model(tmp_path / "m.txt")
    assert_models_identical(model, back)
    np.testing.assert_array_equal(predict(model, f), predict(back, f))
    assert format_model(back) == format_model(model)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["ml", "svm"]), st.integers(2, 4))
def test_round_trip_property(seed, kind, k):
    f, regions = blob_problem(seed, k=k)
    model = fit_gaussian(f, regions) if kind == "ml" else fit_svm(f, regions)
    assert_models_identical(model, parse_model(format_model(model)))


def test_header_required():
    with pytest.raises(FormatError, match="header"):
        parse_model("classifier ml\n")


def test_unknown_classifier():
    with pytest.raises(FormatError, match="unknown classifier"):
        parse_model("polsarinfo-model 1\nclassifier knn\nclass 1 a\n")


def test_truncated_file():
    f, regions = blob_problem(1)
    text = format_model(fit_gaussian(f, regions))
    with pytest.raises(FormatError):
        parse_model("\n".join(text.splitlines()[:-1]))


def test_trailing_content():
    f, regions = blob_problem(1)
    text = format_model(fit_gaussian(f, regions))
    with pytest.raises(FormatError, match="trailing"):
        parse_model(text + "prior 0.5\n")


def test_wrong_vector_length():
    f, regions = blob_problem(2)
    lines = format_model(fit_gaussian(f, regions)).splitlines()
    i = next(k for k, ln in enumerate(lines) if ln.startswith("mean "))
    lines[i] = lines[i].rsplit(" ", 1)[0]
    with pytest.raises(FormatError, match="needs 9 values"):
        parse_model("\n".join(lines))
