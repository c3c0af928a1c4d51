import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazekit.core import N_FEATURES, Coarse5, Fine13, Taxonomy, ValidationError, collapse_indices
from gazekit.preprocess import (
    NO_LABEL, WindowedDataset, assign_label, assign_labels, build_dataset, dataset_from_samples,
    read_samples_csv, resample, sample_validity,
)
from gazekit.scenario import write_samples_file


def _aoi(*rects):
    aoi = np.full((13, 4), np.nan)
    for idx, r in rects:
        aoi[idx] = r
    return aoi


def test_frame_count_from_samples(rng):
    x = rng.uniform(0, 1900, 120_000)
    frames = resample(x, x * 0.5)
    assert len(frames) == 3600


def test_index_ramp_means():
    ramp = np.arange(100, dtype=float)
    f = resample(ramp, ramp)
    assert list(f.x) == [16.0, 49.0, 82.5]


def test_validity_rules():
    x = np.array([0.0, 1919.5, 1920.0, -0.1, np.nan, 5.0])
    y = np.array([0.0, 1079.5, 5.0, 5.0, 5.0, 1080.0])
    assert list(sample_validity(x, y)) == [True, True, False, False, False, False]


def test_single_bad_sample_invalidates_only_its_frame():
    x = np.full(100, 500.0)
    x[40] = np.nan
    f = resample(x, np.full(100, 500.0))
    assert list(f.valid) == [True, False, True]
    assert np.isnan(f.x[1])


def test_smallest_rectangle_wins():
    aoi = _aoi((Fine13.P1_BODY, (0, 0, 100, 200)), (Fine13.P1_RIGHT_HAND, (10, 10, 30, 30)),
               (Fine13.BOX, (500, 500, 600, 600)))
    assert assign_label(20, 20, aoi) is Fine13.P1_RIGHT_HAND
    assert assign_label(50, 150, aoi) is Fine13.P1_BODY
    assert assign_label(20, 20, aoi, Taxonomy.COARSE5) is Coarse5.P1
    assert assign_label(550, 550, aoi, "coarse5") is Coarse5.BOX
    assert assign_label(300, 300, aoi) is None
    with pytest.raises(ValidationError):
        assign_label(20, 20, aoi, valid=False)


def test_equal_areas_prefer_lower_index():
    aoi = _aoi((Fine13.P2_BODY, (0, 0, 10, 10)), (Fine13.P1_BODY, (5, 5, 15, 15)))
    assert assign_label(7, 7, aoi) is Fine13.P1_BODY


def test_right_edge_is_exclusive():
    aoi = _aoi((Fine13.BOX, (0, 0, 10, 10)))
    assert assign_label(9.999, 0, aoi) is Fine13.BOX
    assert assign_label(10, 0, aoi) is None


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1900), st.floats(0, 1000)), min_size=1, max_size=20))
def test_coarse_labels_are_collapsed_fine_labels(points):
    rng = np.random.default_rng(len(points))
    n = len(points)
    aoi = np.full((n, 13, 4), np.nan)
    lo = rng.uniform(0, 1500, (n, 13, 2))
    aoi[..., :2] = lo
    aoi[..., 2:] = lo + rng.uniform(50, 600, (n, 13, 2))
    x, y = map(np.array, zip(*points))
    from gazekit.preprocess import GazeFrames
    frames = GazeFrames(x, y, np.ones(n, dtype=bool))
    fine = assign_labels(frames, aoi)
    coarse = assign_labels(frames, aoi, Taxonomy.COARSE5)
    np.testing.assert_array_equal(coarse, collapse_indices(fine))


def test_window_count_full_stream():
    ds = build_dataset(np.zeros((3600, N_FEATURES)), np.zeros(3600, dtype=int))
    assert len(ds) == 3570
    assert ds.X.shape == (3570, 30, N_FEATURES)


def test_invalid_frame_removes_overlapping_windows():
    valid = np.ones(3600, dtype=bool)
    valid[100] = False
    ds = build_dataset(np.zeros((3600, N_FEATURES)), np.zeros(3600, dtype=int), valid)
    # starts 70..100 all touch frame 100 (as input or target)
    assert len(ds) == 3570 - 31
    assert not np.any((ds.starts >= 70) & (ds.starts <= 100))


def test_unlabeled_target_removes_only_that_window():
    labels = np.zeros(100, dtype=int)
    labels[50] = NO_LABEL
    ds = build_dataset(np.zeros((100, N_FEATURES)), labels)
    assert len(ds) == 69 and 20 not in ds.starts


def test_target_is_frame_after_window(rng):
    feats = rng.random((80, N_FEATURES))
    labels = rng.integers(0, 13, 80)
    ds = build_dataset(feats, labels, step=5)
    assert list(ds.starts) == list(range(0, 50, 5))
    for i, s in enumerate(ds.starts):
        assert ds.targets[i] == labels[s + 30]
        np.testing.assert_array_equal(ds.windows([i])[0], feats[s:s + 30])


def test_short_stream_gives_empty_dataset():
    ds = build_dataset(np.zeros((30, N_FEATURES)), np.zeros(30, dtype=int))
    assert len(ds) == 0 and ds.X.shape == (0, 30, N_FEATURES)


def test_mismatched_streams_rejected():
    with pytest.raises(ValidationError):
        build_dataset(np.zeros((50, N_FEATURES)), np.zeros(49, dtype=int))
    with pytest.raises(ValidationError):
        build_dataset(np.zeros((50, 27)), np.zeros(50, dtype=int))


def test_concat_and_save_round_trip(tmp_path, rng):
    a = build_dataset(rng.random((60, N_FEATURES)), rng.integers(0, 13, 60), participant="c01")
    b = build_dataset(rng.random((70, N_FEATURES)), rng.integers(0, 13, 70), participant="a01",
                      cohort="adult")
    both = WindowedDataset.concat([a, b])
    assert len(both) == len(a) + len(b)
    np.testing.assert_array_equal(both.X[len(a):], b.X)
    both.save(tmp_path / "d.npz")
    back = WindowedDataset.load(tmp_path / "d.npz")
    np.testing.assert_array_equal(back.X, both.X)
    assert list(back.participants) == list(both.participants)
    assert back.taxonomy is Taxonomy.FINE13
    with pytest.raises(ValidationError):
        WindowedDataset.concat([a, build_dataset(np.zeros((40, N_FEATURES)), np.zeros(40, dtype=int),
                                                 taxonomy="coarse5")])


def test_samples_csv_round_trip(tmp_path):
    t = np.arange(4)
    x = np.array([1.5, np.nan, 3.0, 4.0])
    write_samples_file(tmp_path / "s.csv", t, x, x)
    t2, x2, y2 = read_samples_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(t2, t)
    np.testing.assert_array_equal(x2, x)
    (tmp_path / "bad.csv").write_text("time,x,y\n")
    with pytest.raises(ValidationError):
        read_samples_csv(tmp_path / "bad.csv")


def test_dataset_from_samples_pads_missing_tail(canonical, canonical_gaze):
    from gazekit.scenario import synthesize_samples
    _, x, y = synthesize_samples(canonical_gaze)
    ds = dataset_from_samples(canonical.features, canonical.aoi, x[:60_000], y[:60_000])
    assert len(ds) == 1800 - 30
