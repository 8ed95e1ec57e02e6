import json

import numpy as np
import pytest

from gmmotda.data import (
    Dataset,
    StandardizationParams,
    apply_standardization,
    invert_standardization,
    load_csv,
    make_shifted_blobs,
    save_csv,
    standardize,
)
from gmmotda.errors import CsvFormatError, ValidationError


def test_dataset_basic_shape_and_properties():
    ds = Dataset(np.arange(6.0).reshape(3, 2))
    assert ds.n == 3 and ds.d == 2
    assert ds.labels is None and ds.n_classes is None


def test_dataset_infers_n_classes_from_labels():
    ds = Dataset(np.zeros((4, 2)), labels=[0, 2, 1, 2])
    assert ds.n_classes == 3
    assert ds.labels.dtype == np.int64


def test_dataset_one_hot():
    ds = Dataset(np.zeros((3, 1)), labels=[1, 0, 1])
    onehot = ds.one_hot_labels()
    assert onehot.shape == (3, 2)
    np.testing.assert_array_equal(onehot, [[0, 1], [1, 0], [0, 1]])
    with pytest.raises(ValidationError):
        Dataset(np.zeros((3, 1))).one_hot_labels()


def test_dataset_is_immutable():
    ds = Dataset(np.zeros((2, 2)), labels=[0, 1])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0
    with pytest.raises(ValueError):
        ds.labels[0] = 1


@pytest.mark.parametrize(
    "features,labels,n_classes",
    [
        (np.zeros(3), None, None),                 # 1-D features
        (np.zeros((0, 2)), None, None),            # empty
        (np.array([[np.nan, 0.0]]), None, None),   # non-finite
        (np.zeros((2, 2)), [0], None),             # label length mismatch
        (np.zeros((2, 2)), [0, -1], None),         # negative label
        (np.zeros((2, 2)), [0, 3], 2),             # label out of range
        (np.zeros((2, 2)), [0.5, 0.0], None),      # non-integer labels
        (np.zeros((2, 2)), [0, 1], 0),             # bad n_classes
    ],
)
def test_dataset_validation_errors(features, labels, n_classes):
    with pytest.raises(ValidationError):
        Dataset(features, labels, n_classes)


def test_standardize_example():
    train = Dataset(np.array([[1.0], [3.0]]))
    params, transformed = standardize(train, [train])
    assert params.mean[0] == 2.0 and params.scale[0] == 1.0
    np.testing.assert_allclose(transformed[0].features, [[-1.0], [1.0]])


def test_standardize_constant_column_clamped():
    train = Dataset(np.array([[4.0, 1.0], [4.0, 2.0], [4.0, 3.0]]))
    params, [out] = standardize(train, [train])
    assert params.scale[0] == 1e-12
    np.testing.assert_array_equal(out.features[:, 0], 0.0)


def test_standardize_empty_others():
    train = Dataset(np.random.default_rng(0).random((5, 3)))
    params, transformed = standardize(train, [])
    assert transformed == []
    assert params.mean.shape == (3,)


def test_standardize_roundtrip():
    rng = np.random.default_rng(3)
    ds = Dataset(rng.normal(5.0, 2.0, size=(40, 4)), labels=rng.integers(0, 3, 40))
    params, [out] = standardize(ds, [ds])
    back = invert_standardization(params, out)
    np.testing.assert_allclose(back.features, ds.features, atol=1e-10)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_standardize_dimension_mismatch():
    with pytest.raises(ValidationError):
        standardize(Dataset(np.zeros((2, 2))), [Dataset(np.zeros((2, 3)))])
    params = StandardizationParams(np.zeros(2), np.ones(2))
    with pytest.raises(ValidationError):
        apply_standardization(params, Dataset(np.zeros((2, 3))))


def test_standardization_params_scale_floor():
    with pytest.raises(ValidationError):
        StandardizationParams(np.zeros(2), np.array([1.0, 0.0]))


def test_load_csv_label_remap(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("a,b,y\n1,2,5\n3,4,5\n5,6,9\n")
    ds = load_csv(path, label_column="y")
    assert ds.n == 3 and ds.d == 2 and ds.n_classes == 2
    np.testing.assert_array_equal(ds.labels, [0, 0, 1])


def test_load_csv_without_labels(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    ds = load_csv(path)
    assert ds.labels is None
    np.testing.assert_array_equal(ds.features, [[1.0, 2.0], [3.0, 4.0]])


def test_load_csv_nan_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,NaN\n")
    with pytest.raises(ValidationError):
        load_csv(path)


def test_load_csv_parse_error_reports_location(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n3,oops\n")
    with pytest.raises(CsvFormatError) as exc:
        load_csv(path)
    assert exc.value.row == 3 and exc.value.column == "b"
    assert "row 3" in str(exc.value)


def test_load_csv_ragged_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2,3\n")
    with pytest.raises(CsvFormatError):
        load_csv(path)


def test_load_csv_empty_and_header_only(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValidationError):
        load_csv(empty)
    header_only = tmp_path / "h.csv"
    header_only.write_text("a,b\n")
    with pytest.raises(ValidationError):
        load_csv(header_only)


def test_load_csv_missing_label_column(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValidationError):
        load_csv(path, label_column="y")


def test_save_load_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(11)
    ds = Dataset(rng.normal(size=(25, 3)) * 1e3, labels=rng.integers(0, 4, 25))
    path = tmp_path / "out.csv"
    save_csv(ds, path)
    back = load_csv(path, label_column="label")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
    assert meta == {"n": 25, "d": 3, "n_classes": 4}


def test_make_shifted_blobs_deterministic():
    a_src, a_tgt = make_shifted_blobs(20, 3, 2, [1.0, 0.0], 0.3, seed=5)
    b_src, b_tgt = make_shifted_blobs(20, 3, 2, [1.0, 0.0], 0.3, seed=5)
    np.testing.assert_array_equal(a_src.features, b_src.features)
    np.testing.assert_array_equal(a_tgt.features, b_tgt.features)
    np.testing.assert_array_equal(a_src.labels, b_src.labels)


def test_make_shifted_blobs_zero_shift_means_close():
    spread = 0.5
    n_per = 200
    src, tgt = make_shifted_blobs(n_per, 3, 2, [0.0, 0.0], 0.0,
                                  spread=spread, seed=2)
    for c in range(3):
        mu_s = src.features[src.labels == c].mean(axis=0)
        mu_t = tgt.features[tgt.labels == c].mean(axis=0)
        # fresh draws from the same model: means differ by O(spread/sqrt(n))
        assert np.linalg.norm(mu_s - mu_t) < 6 * spread / np.sqrt(n_per)


def test_make_shifted_blobs_pi_rotation_antipodal():
    src, tgt = make_shifted_blobs(400, 2, 2, [0.0, 0.0], np.pi,
                                  spread=0.1, seed=4)
    for c in range(2):
        mu_s = src.features[src.labels == c].mean(axis=0)
        mu_t = tgt.features[tgt.labels == c].mean(axis=0)
        assert np.linalg.norm(mu_s + mu_t) < 0.1


def test_make_shifted_blobs_validation():
    with pytest.raises(ValidationError):
        make_shifted_blobs(0, 3, 2, [0.0, 0.0], 0.0)
    with pytest.raises(ValidationError):
        make_shifted_blobs(10, 3, 1, [0.0], 0.0)
    with pytest.raises(ValidationError):
        make_shifted_blobs(10, 3, 2, [0.0, 0.0], 0.0, spread=0.0)
    with pytest.raises(ValidationError):
        make_shifted_blobs(10, 3, 2, [0.0, 0.0, 0.0], 0.0)
