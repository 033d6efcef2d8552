"""Dataset container and file-format round trips."""

import numpy as np
import pytest

from cag.dataset import (
    ClusteredDataset,
    LabeledDataset,
    canonicalize_labels,
    is_duplicate,
    load_dataset,
    save_dataset,
)
from cag.errors import (
    DimensionMismatch,
    DuplicateInput,
    InvalidParameter,
    IoError,
    ParseError,
)


def make_ds(inputs, outputs=None):
    inputs = np.asarray(inputs, dtype=float)
    if outputs is None:
        outputs = np.vstack([inputs, inputs**2])
    return LabeledDataset(inputs, np.asarray(outputs, dtype=float))


def test_sorts_samples_by_input():
    ds = make_ds([3.0, 1.0, 2.0])
    assert np.array_equal(ds.inputs, [1.0, 2.0, 3.0])
    # columns must ride along with their inputs
    assert np.array_equal(ds.outputs[0], [1.0, 2.0, 3.0])
    assert np.array_equal(ds.outputs[1], [1.0, 4.0, 9.0])


def test_shape_properties():
    ds = make_ds([0.0, 1.0])
    assert ds.m == 2
    assert ds.n == 2


def test_rejects_mismatched_columns():
    with pytest.raises(DimensionMismatch):
        LabeledDataset(np.array([0.0, 1.0]), np.zeros((3, 3)))


def test_rejects_non_finite():
    with pytest.raises(InvalidParameter):
        make_ds([0.0, np.nan])
    with pytest.raises(InvalidParameter):
        LabeledDataset(np.array([0.0, 1.0]), np.array([[1.0, np.inf]]))


def test_rejects_one_dimensional_outputs():
    with pytest.raises(DimensionMismatch):
        LabeledDataset(np.array([0.0, 1.0]), np.array([1.0, 2.0]))


def test_duplicate_inputs_refused():
    with pytest.raises(DuplicateInput):
        make_ds([1.0, 1.0, 2.0])


def test_duplicate_tolerance_is_relative():
    assert is_duplicate(1e6, 1e6 * (1 + 1e-13))
    assert not is_duplicate(1e6, 1e6 * (1 + 1e-11))
    # near zero the comparison degenerates to absolute
    assert is_duplicate(0.0, 0.0)
    assert not is_duplicate(0.0, 1e-6)
    with pytest.raises(DuplicateInput):
        make_ds([1.0, 1.0 + 1e-14])


def test_equality_is_by_value():
    a = make_ds([2.0, 1.0])
    b = make_ds([1.0, 2.0])
    assert a == b
    assert a != make_ds([1.0, 3.0])


def test_merged_appends_and_resorts():
    ds = make_ds([1.0, 3.0])
    extra = np.array([2.0])
    merged = ds.merged(extra, np.vstack([extra, extra**2]))
    assert np.array_equal(merged.inputs, [1.0, 2.0, 3.0])
    assert np.array_equal(merged.outputs[1], [1.0, 4.0, 9.0])
    # the original is untouched
    assert ds.m == 2


def test_merged_rejects_duplicates_and_bad_width():
    ds = make_ds([1.0, 3.0])
    with pytest.raises(DuplicateInput):
        ds.merged(np.array([1.0]), np.array([[1.0], [1.0]]))
    with pytest.raises(DimensionMismatch):
        ds.merged(np.array([2.0]), np.zeros((5, 1)))


def test_merged_into_empty_adopts_field_length():
    empty = LabeledDataset(np.zeros(0), np.zeros((0, 0)))
    grown = empty.merged(np.array([1.0]), np.array([[2.0], [3.0]]))
    assert grown.n == 2
    # but a known width must not silently change
    sized = LabeledDataset(np.zeros(0), np.zeros((4, 0)))
    with pytest.raises(DimensionMismatch):
        sized.merged(np.array([1.0]), np.array([[2.0]]))


def test_clustered_requires_valid_labels():
    inputs = np.array([0.0, 1.0, 2.0])
    outputs = np.zeros((2, 3))
    ClusteredDataset(inputs, outputs, labels=np.array([1, 1, 2]), k=2)
    with pytest.raises(InvalidParameter):
        ClusteredDataset(inputs, outputs, labels=np.array([0, 1, 2]), k=2)
    with pytest.raises(InvalidParameter):
        # cluster 2 owns no samples: empty clusters are not allowed
        ClusteredDataset(inputs, outputs, labels=np.array([1, 1, 3]), k=3)
    with pytest.raises(DimensionMismatch):
        ClusteredDataset(inputs, outputs, labels=np.array([1, 2]), k=2)


def test_cluster_labels_canonicalized_in_input_order():
    # labels arrive tied to unsorted inputs; after sorting, first occurrence
    # along ascending chi must be cluster 1
    ds = ClusteredDataset(
        np.array([2.0, 0.0, 1.0]),
        np.zeros((1, 3)),
        labels=np.array([1, 2, 2]),
        k=2,
    )
    assert np.array_equal(ds.inputs, [0.0, 1.0, 2.0])
    assert np.array_equal(ds.labels, [1, 1, 2])


def test_canonicalize_labels_helper():
    out = canonicalize_labels(np.array([3, 3, 1, 2, 1]), 3)
    assert np.array_equal(out, [1, 1, 2, 3, 2])


def test_cluster_index_and_size_queries():
    ds = ClusteredDataset(
        np.array([0.0, 1.0, 2.0, 3.0]),
        np.zeros((1, 4)),
        labels=np.array([1, 1, 2, 1]),
        k=2,
    )
    assert np.array_equal(ds.cluster_indices(1), [0, 1, 3])
    assert np.array_equal(ds.cluster_indices(2), [2])
    assert np.array_equal(ds.cluster_sizes(), [3, 1])
    ranges = ds.cluster_ranges()
    assert ranges[1] == [(0.0, 1.0), (3.0, 3.0)]
    assert ranges[2] == [(2.0, 2.0)]
    with pytest.raises(InvalidParameter):
        ds.cluster_indices(3)


def test_csv_round_trip(tmp_path):
    ds = make_ds([0.5, -1.25, 3.0])
    path = tmp_path / "data.csv"
    save_dataset(ds, path)
    text = path.read_text()
    assert text.splitlines()[0] == "chi,f0,f1"
    back = load_dataset(path)
    assert back == ds
    assert np.array_equal(back.inputs, ds.inputs)
    assert np.array_equal(back.outputs, ds.outputs)


def test_csv_preserves_float_precision(tmp_path):
    vals = np.array([1 / 3, np.pi, 1e-17])
    ds = LabeledDataset(np.array([0.0, 1.0, 2.0]), vals[None, :])
    path = tmp_path / "data.csv"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert np.array_equal(back.outputs, ds.outputs)


def test_csv_comments_and_blank_lines(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("# a comment\nchi,f0\n\n1.0,2.0\n# more\n2.0,3.0\n")
    ds = load_dataset(path)
    assert ds.m == 2 and ds.n == 1


def test_empty_dataset_round_trips_header_only(tmp_path):
    ds = LabeledDataset(np.zeros(0), np.zeros((3, 0)))
    path = tmp_path / "empty.csv"
    save_dataset(ds, path)
    assert path.read_text().strip() == "chi,f0,f1,f2"
    back = load_dataset(path)
    assert back.m == 0 and back.n == 3


def test_json_round_trip(tmp_path):
    ds = make_ds([1.0, 2.0])
    path = tmp_path / "data.json"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back == ds


def test_json_rejects_non_numeric_values(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('[{"chi": "1.0", "field": [2.0]}]')
    with pytest.raises(ParseError):
        load_dataset(path)
    path.write_text('[{"chi": 1.0, "field": [true]}]')
    with pytest.raises(ParseError):
        load_dataset(path)


def test_csv_parse_errors_carry_location(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("chi,f0\n1.0,oops\n")
    with pytest.raises(ParseError) as err:
        load_dataset(path)
    assert "bad.csv" in str(err.value)


def test_csv_ragged_row_rejected(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("chi,f0,f1\n1.0,2.0\n")
    with pytest.raises(ParseError):
        load_dataset(path)


def test_missing_file_raises_io_error(tmp_path):
    with pytest.raises(IoError):
        load_dataset(tmp_path / "nope.csv")


def test_format_inferred_from_extension(tmp_path):
    ds = make_ds([1.0, 2.0])
    jpath = tmp_path / "d.json"
    save_dataset(ds, jpath)
    assert jpath.read_text().lstrip().startswith("[")
    with pytest.raises(InvalidParameter):
        save_dataset(ds, tmp_path / "d.parquet")
