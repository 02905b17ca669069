"""Dataset ingestion (IDX containers, optionally gzipped) and a deterministic
synthetic digit generator for offline desk-scale runs.

IDX parsing follows the standard container: big-endian magic 2051 (images,
3 dimensions) / 2049 (labels, 1 dimension), unsigned-byte payload. Pixels are
scaled to [0, 1] on load.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DataFormatError, InvalidInputError

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049


# ---------------------------------------------------------------------------
# IDX read / write
# ---------------------------------------------------------------------------

def _open_maybe_gzip(path: Path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx_images(path) -> np.ndarray:
    """(N, rows, cols) uint8 array from an IDX3 file."""
    path = Path(path)
    with _open_maybe_gzip(path) as fh:
        head = fh.read(16)
        if len(head) < 16:
            raise DataFormatError(f"{path.name}: truncated IDX header")
        magic, n, rows, cols = struct.unpack(">IIII", head)
        if magic != IMAGES_MAGIC:
            raise DataFormatError(
                f"{path.name}: bad magic {magic} (expected {IMAGES_MAGIC})")
        payload = fh.read(n * rows * cols)
        if len(payload) != n * rows * cols:
            raise DataFormatError(f"{path.name}: truncated image payload "
                                  f"({len(payload)} of {n * rows * cols} bytes)")
    return np.frombuffer(payload, dtype=np.uint8).reshape(n, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    """(N,) uint8 label array from an IDX1 file."""
    path = Path(path)
    with _open_maybe_gzip(path) as fh:
        head = fh.read(8)
        if len(head) < 8:
            raise DataFormatError(f"{path.name}: truncated IDX header")
        magic, n = struct.unpack(">II", head)
        if magic != LABELS_MAGIC:
            raise DataFormatError(
                f"{path.name}: bad magic {magic} (expected {LABELS_MAGIC})")
        payload = fh.read(n)
        if len(payload) != n:
            raise DataFormatError(f"{path.name}: truncated label payload")
    return np.frombuffer(payload, dtype=np.uint8)


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    raw = struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols) + images.tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(raw)


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    raw = struct.pack(">II", LABELS_MAGIC, len(labels)) + labels.tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(raw)


# ---------------------------------------------------------------------------
# dataset handle
# ---------------------------------------------------------------------------

@dataclass
class DatasetHandle:
    name: str
    Xtr: np.ndarray
    ytr: np.ndarray
    Xval: np.ndarray
    yval: np.ndarray
    Xte: np.ndarray
    yte: np.ndarray
    image_shape: tuple[int, int] = (28, 28)
    n_classes: int = 10

    def validate(self):
        for X, y in ((self.Xtr, self.ytr), (self.Xval, self.yval),
                     (self.Xte, self.yte)):
            if len(X) != len(y):
                raise DataFormatError("image/label count mismatch")
            if X.size and (X.min() < 0 or X.max() > 1):
                raise DataFormatError("pixels must lie in [0, 1]")
            if y.size and (y.min() < 0 or y.max() >= self.n_classes):
                raise DataFormatError("label out of range")

    @property
    def input_dims(self) -> int:
        return int(np.prod(self.image_shape))


def _find_idx(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        p = directory / name
        if p.exists():
            return p
    raise DataFormatError(f"missing dataset file {stem}[.gz] in {directory}")


def ingest_mnist(directory, val_size: int = 10000) -> DatasetHandle:
    """Load the four standard IDX files and split train into train/validation
    (the validation block is the tail of the training file)."""
    directory = Path(directory)
    tr_img = read_idx_images(_find_idx(directory, "train-images-idx3-ubyte"))
    tr_lab = read_idx_labels(_find_idx(directory, "train-labels-idx1-ubyte"))
    te_img = read_idx_images(_find_idx(directory, "t10k-images-idx3-ubyte"))
    te_lab = read_idx_labels(_find_idx(directory, "t10k-labels-idx1-ubyte"))
    if len(tr_img) != len(tr_lab):
        raise DataFormatError("train images/labels count mismatch")
    if len(te_img) != len(te_lab):
        raise DataFormatError("test images/labels count mismatch")
    if not 0 < val_size < len(tr_img):
        raise InvalidInputError("val_size must be inside the train file")
    shape = tr_img.shape[1:]
    Xtr = tr_img.reshape(len(tr_img), -1).astype(np.float64) / 255.0
    Xte = te_img.reshape(len(te_img), -1).astype(np.float64) / 255.0
    cut = len(Xtr) - val_size
    handle = DatasetHandle(
        name="mnist",
        Xtr=Xtr[:cut], ytr=tr_lab[:cut].astype(np.int64),
        Xval=Xtr[cut:], yval=tr_lab[cut:].astype(np.int64),
        Xte=Xte, yte=te_lab.astype(np.int64),
        image_shape=shape)
    handle.validate()
    return handle


# ---------------------------------------------------------------------------
# synthetic digits
# ---------------------------------------------------------------------------

_GLYPHS = {
    0: (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    1: ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    2: (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    3: ("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."),
    4: ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    5: ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    6: ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    7: ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    8: (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    9: (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
}


def _glyph_array(digit: int) -> np.ndarray:
    rows = _GLYPHS[digit]
    return np.array([[1.0 if ch == "#" else 0.0 for ch in row]
                     for row in rows])


def render_digit(digit: int, rng: np.random.Generator,
                 canvas: int = 28) -> np.ndarray:
    """One jittered 28x28 digit image in [0, 1]."""
    glyph = _glyph_array(digit)
    height = rng.uniform(15, 20)
    width = height * (5.0 / 7.0) * rng.uniform(0.9, 1.1)
    zoomed = ndimage.zoom(glyph, (height / 7.0, width / 5.0), order=1)
    zoomed = ndimage.rotate(zoomed, rng.uniform(-9, 9), order=1,
                            reshape=True, mode="constant")
    zoomed = np.clip(zoomed, 0.0, 1.0) * rng.uniform(0.7, 1.0)
    h, w = zoomed.shape
    img = np.zeros((canvas, canvas))
    max_y = canvas - h
    max_x = canvas - w
    y0 = rng.integers(0, max(max_y, 0) + 1)
    x0 = rng.integers(0, max(max_x, 0) + 1)
    img[y0:y0 + h, x0:x0 + w] = zoomed[:canvas - y0, :canvas - x0]
    # sparse speckle noise: backgrounds stay mostly exact zero, as in MNIST
    speckle = rng.random(img.shape) < 0.04
    img += speckle * rng.uniform(0.1, 0.45, size=img.shape)
    img[img < 0.02] = 0.0
    return np.clip(img, 0.0, 1.0)


def generate_synthetic_digits(directory, n_train: int = 14000,
                              n_test: int = 2000, seed: int = 9) -> None:
    """Write four IDX.gz files of procedurally rendered digits (labels cycle
    0..9). Deterministic for a fixed seed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    def render_split(n, tag):
        images = np.empty((n, 28, 28), dtype=np.uint8)
        labels = np.empty(n, dtype=np.uint8)
        for i in range(n):
            digit = i % 10
            rng = np.random.default_rng([seed, tag, i])
            images[i] = np.round(render_digit(digit, rng) * 255).astype(np.uint8)
            labels[i] = digit
        return images, labels

    tr_img, tr_lab = render_split(n_train, 0)
    te_img, te_lab = render_split(n_test, 1)
    write_idx_images(directory / "train-images-idx3-ubyte.gz", tr_img)
    write_idx_labels(directory / "train-labels-idx1-ubyte.gz", tr_lab)
    write_idx_images(directory / "t10k-images-idx3-ubyte.gz", te_img)
    write_idx_labels(directory / "t10k-labels-idx1-ubyte.gz", te_lab)


def load_dataset(name: str, directory, val_size: int | None = None,
                 train_size: int = 14000, test_size: int = 2000,
                 seed: int = 9) -> DatasetHandle:
    """'mnist' expects the four IDX files in `directory`; 'synthetic'
    generates them there first (once) with the given sizes and seed."""
    directory = Path(directory)
    if name == "mnist":
        return ingest_mnist(directory, val_size=val_size or 10000)
    if name == "synthetic":
        needed = ["train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz",
                  "t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"]
        if not all((directory / f).exists() for f in needed):
            generate_synthetic_digits(directory, n_train=train_size,
                                      n_test=test_size, seed=seed)
        handle = ingest_mnist(directory, val_size=val_size or
                              max(train_size // 7, 10))
        handle.name = "synthetic"
        return handle
    raise InvalidInputError(f"unknown dataset {name!r}")


# ---------------------------------------------------------------------------
# calibration selection
# ---------------------------------------------------------------------------

def select_calibration(handle: DatasetHandle, total: int, seed: int = 7
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Class-stratified calibration draw from the validation split.

    Fewer examples than classes: one example each for classes 0..total-1.
    Otherwise total/n_classes per class (total must divide evenly). Selection
    is first-come per class over a seed-shuffled validation order.
    """
    if total < 1:
        raise InvalidInputError("calibration size must be >= 1")
    p = handle.n_classes
    if total < p:
        want = {c: 1 for c in range(total)}
    else:
        if total % p != 0:
            raise InvalidInputError(
                f"calibration size must be below {p} or a multiple of it")
        want = {c: total // p for c in range(p)}
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(handle.Xval))
    chosen = []
    got = {c: 0 for c in want}
    for idx in order:
        c = int(handle.yval[idx])
        if c in want and got[c] < want[c]:
            chosen.append(idx)
            got[c] += 1
            if len(chosen) == total:
                break
    if len(chosen) != total:
        raise InvalidInputError("validation split cannot satisfy the "
                                "requested per-class calibration counts")
    chosen = np.asarray(sorted(chosen), dtype=np.int64)
    return handle.Xval[chosen], chosen
