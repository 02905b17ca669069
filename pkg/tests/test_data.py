import gzip
import struct
from pathlib import Path

import numpy as np
import pytest

from neural_ricci.data import (
    DatasetHandle,
    generate_synthetic_digits,
    ingest_mnist,
    load_dataset,
    read_idx_images,
    read_idx_labels,
    render_digit,
    select_calibration,
    write_idx_images,
    write_idx_labels,
)
from neural_ricci.errors import DataFormatError, InvalidInputError

from oracles import read_idx_independent


class TestIdxRoundTrip:
    def test_images_plain_and_gzip(self, tmp_path):
        rng = np.random.default_rng(0)
        imgs = rng.integers(0, 256, size=(7, 28, 28), dtype=np.uint8)
        for name in ("imgs-idx3-ubyte", "imgs-idx3-ubyte.gz"):
            p = tmp_path / name
            write_idx_images(p, imgs)
            np.testing.assert_array_equal(read_idx_images(p), imgs)
            np.testing.assert_array_equal(read_idx_independent(str(p)), imgs)

    def test_labels_roundtrip(self, tmp_path):
        labels = np.arange(10, dtype=np.uint8)
        p = tmp_path / "lab-idx1-ubyte.gz"
        write_idx_labels(p, labels)
        np.testing.assert_array_equal(read_idx_labels(p), labels)
        np.testing.assert_array_equal(read_idx_independent(str(p)), labels)

    def test_bad_magic_names_file(self, tmp_path):
        p = tmp_path / "broken"
        p.write_bytes(struct.pack(">IIII", 1234, 1, 2, 2) + b"\x00" * 4)
        with pytest.raises(DataFormatError) as err:
            read_idx_images(p)
        assert "broken" in str(err.value)
        assert "magic" in str(err.value)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "short"
        p.write_bytes(struct.pack(">IIII", 2051, 2, 3, 3) + b"\x00" * 5)
        with pytest.raises(DataFormatError):
            read_idx_images(p)

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "stub"
        p.write_bytes(b"\x00\x00")
        with pytest.raises(DataFormatError):
            read_idx_labels(p)


class TestIngest:
    def make_dataset(self, directory, n_train=40, n_test=12):
        rng = np.random.default_rng(1)
        tr = rng.integers(0, 256, size=(n_train, 28, 28), dtype=np.uint8)
        trl = (np.arange(n_train) % 10).astype(np.uint8)
        te = rng.integers(0, 256, size=(n_test, 28, 28), dtype=np.uint8)
        tel = (np.arange(n_test) % 10).astype(np.uint8)
        write_idx_images(directory / "train-images-idx3-ubyte.gz", tr)
        write_idx_labels(directory / "train-labels-idx1-ubyte.gz", trl)
        write_idx_images(directory / "t10k-images-idx3-ubyte.gz", te)
        write_idx_labels(directory / "t10k-labels-idx1-ubyte.gz", tel)
        return tr, trl, te, tel

    def test_splits_and_scaling(self, tmp_path):
        tr, trl, te, tel = self.make_dataset(tmp_path)
        h = ingest_mnist(tmp_path, val_size=10)
        assert len(h.Xtr) == 30 and len(h.Xval) == 10 and len(h.Xte) == 12
        assert h.Xtr.max() <= 1.0 and h.Xtr.min() >= 0.0
        np.testing.assert_allclose(h.Xtr[0], tr[0].ravel() / 255.0)
        np.testing.assert_array_equal(h.yval, trl[30:])
        h.validate()

    def test_count_mismatch(self, tmp_path):
        self.make_dataset(tmp_path)
        write_idx_labels(tmp_path / "train-labels-idx1-ubyte.gz",
                         np.zeros(5, dtype=np.uint8))
        with pytest.raises(DataFormatError):
            ingest_mnist(tmp_path, val_size=10)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError):
            ingest_mnist(tmp_path)

    @pytest.mark.skipif(not Path("/data/mnist").exists(),
                        reason="real MNIST files not present")
    def test_real_mnist_first_label(self):
        h = ingest_mnist("/data/mnist")
        assert len(h.Xtr) + len(h.Xval) == 60000
        assert h.image_shape == (28, 28)
        # first training label of the standard file is 5
        assert int(np.concatenate([h.ytr, h.yval])[0]) == 5


class TestSynthetic:
    def test_deterministic_generation(self, tmp_path):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        generate_synthetic_digits(d1, n_train=30, n_test=10, seed=4)
        generate_synthetic_digits(d2, n_train=30, n_test=10, seed=4)
        for name in ("train-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"):
            a = gzip.open(d1 / name).read()
            b = gzip.open(d2 / name).read()
            assert a == b

    def test_render_value_range(self):
        rng = np.random.default_rng(0)
        for digit in range(10):
            img = render_digit(digit, rng)
            assert img.shape == (28, 28)
            assert img.min() >= 0.0 and img.max() <= 1.0

    def test_load_dataset_generates_once(self, tmp_path):
        h1 = load_dataset("synthetic", tmp_path / "d", train_size=40,
                          test_size=10, val_size=10, seed=3)
        stamp = (tmp_path / "d" / "train-images-idx3-ubyte.gz").stat().st_mtime
        h2 = load_dataset("synthetic", tmp_path / "d", train_size=40,
                          test_size=10, val_size=10, seed=3)
        assert (tmp_path / "d" /
                "train-images-idx3-ubyte.gz").stat().st_mtime == stamp
        np.testing.assert_array_equal(h1.Xtr, h2.Xtr)
        assert h1.name == "synthetic"

    def test_unknown_dataset(self, tmp_path):
        with pytest.raises(InvalidInputError):
            load_dataset("imagenet", tmp_path)

    def test_labels_cycle_all_classes(self, tmp_path):
        h = load_dataset("synthetic", tmp_path / "d", train_size=50,
                         test_size=20, val_size=10, seed=1)
        assert set(np.unique(h.yte)) == set(range(10))


class TestCalibration:
    def test_stratified_counts(self, digits):
        X, ids = select_calibration(digits, 100, seed=7)
        assert X.shape == (100, 784)
        labels = digits.yval[ids]
        counts = np.bincount(labels, minlength=10)
        assert np.all(counts == 10)

    def test_small_sizes_use_leading_classes(self, digits):
        X, ids = select_calibration(digits, 5, seed=7)
        labels = sorted(digits.yval[ids])
        assert labels == [0, 1, 2, 3, 4]

    def test_single_example(self, digits):
        X, ids = select_calibration(digits, 1, seed=7)
        assert digits.yval[ids][0] == 0

    def test_seed_changes_selection(self, digits):
        _, a = select_calibration(digits, 20, seed=1)
        _, b = select_calibration(digits, 20, seed=2)
        assert not np.array_equal(a, b)

    def test_seed_determinism(self, digits):
        _, a = select_calibration(digits, 20, seed=5)
        _, b = select_calibration(digits, 20, seed=5)
        assert np.array_equal(a, b)

    def test_invalid_sizes(self, digits):
        with pytest.raises(InvalidInputError):
            select_calibration(digits, 0)
        with pytest.raises(InvalidInputError):
            select_calibration(digits, 15)  # not a multiple of 10
