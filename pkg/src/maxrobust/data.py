"""Synthetic linearly separable datasets and their file container.

Points are drawn i.i.d. from N(0, I_d), labeled by the sign of a random
Gaussian teacher through the origin, and optionally augmented with a
constant-1 coordinate so a bias can be trained as an ordinary weight. With
n <= d (and in fact for any n, because the teacher itself separates) the
construction is linearly separable; a draw landing within 1e-12 of the
teacher boundary is redrawn so no point sits exactly on it.
"""

from __future__ import annotations

import hashlib
import logging
import zipfile
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1

# |teacher . x| below this triggers a redraw of the point.
BOUNDARY_TOL = 1e-12


class DatasetFormatError(ValueError):
    """Raised when a dataset file is truncated, corrupt, or mislabeled."""


@dataclass(frozen=True)
class Dataset:
    """A labeled sample with its generating teacher.

    Attributes
    ----------
    X : ndarray, shape (n, d) or (n, d+1)
        Row-major points; the trailing column is the constant 1 when
        ``augmented`` is set.
    y : ndarray, shape (n,)
        Labels in {-1, +1}.
    teacher : ndarray, shape (d,)
        The weight vector whose sign labeled the points (bias 0).
    seed : int
    d : int
        Signal dimension, excluding the augmented coordinate.
    n : int
    augmented : bool
    """

    X: np.ndarray
    y: np.ndarray
    teacher: np.ndarray
    seed: int
    d: int
    n: int
    augmented: bool

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        teacher = np.asarray(self.teacher, dtype=np.float64)
        if self.d < 2 or self.n < 1:
            raise ValueError("need d >= 2 and n >= 1")
        width = self.d + 1 if self.augmented else self.d
        if X.shape != (self.n, width):
            raise ValueError(f"X shape {X.shape} != ({self.n}, {width})")
        if y.shape != (self.n,) or not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be a length-n vector over {-1, +1}")
        if teacher.shape != (self.d,):
            raise ValueError("teacher must be a d-vector")
        if self.augmented and not np.all(X[:, -1] == 1.0):
            raise ValueError("augmented coordinate must be constant 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "teacher", teacher)

    @property
    def ambient_dim(self) -> int:
        """Number of weight coordinates a model on this dataset carries."""
        return self.X.shape[1]

    def signal(self) -> np.ndarray:
        """The points without the augmented coordinate."""
        return self.X[:, :-1] if self.augmented else self.X


def generate_gaussian_separable(
    d: int, n: int, seed: int, augment: bool = True
) -> Dataset:
    """Draw a separable Gaussian sample labeled by a random teacher.

    Deterministic in (d, n, seed): the teacher is drawn first, then the n
    points in order; only a degenerate point (within ``BOUNDARY_TOL`` of the
    teacher boundary) consumes extra draws. A sample with n >= 2 that comes
    out single-class is redrawn whole (continuing the stream), because a
    one-class sample makes the bias-free max-margin game unbounded. The
    augmented coordinate is appended after labeling and the stored teacher
    keeps length d.
    """
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    teacher = rng.standard_normal(d)
    X = np.empty((n, d))
    y = np.empty(n)
    redraws = 0
    while True:
        for i in range(n):
            while True:
                x = rng.standard_normal(d)
                score = float(teacher @ x)
                if abs(score) >= BOUNDARY_TOL:
                    break
                redraws += 1
                log.info("redrew point %d (boundary score %.3e)", i, score)
            X[i] = x
            y[i] = np.sign(score)
        if n < 2 or (y > 0).any() and (y < 0).any():
            break
        log.info("single-class sample at d=%d n=%d seed=%d; redrawing", d, n, seed)
    if redraws:
        log.info("dataset d=%d n=%d seed=%d used %d redraws", d, n, seed, redraws)
    if augment:
        X = np.hstack([X, np.ones((n, 1))])
    return Dataset(X=X, y=y, teacher=teacher, seed=seed, d=d, n=n, augmented=augment)


def verify_separable(ds: Dataset, w) -> bool:
    """Whether w strictly separates the dataset: y_i (w . x_i) > 0 for all i.

    Accepts w of length ``ds.ambient_dim`` or, for augmented datasets, of
    length d (embedded with a zero bias coordinate, which is how the stored
    teacher separates its own augmented sample).
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape == (ds.d,) and ds.augmented:
        w = np.append(w, 0.0)
    if w.shape != (ds.ambient_dim,):
        raise ValueError(
            f"weight length {w.shape} incompatible with ambient dim {ds.ambient_dim}"
        )
    return bool(np.all(ds.y * (ds.X @ w) > 0))


def _checksum(X: np.ndarray, y: np.ndarray, teacher: np.ndarray) -> str:
    h = hashlib.sha256()
    for arr in (X, y, teacher):
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


def save_dataset(ds: Dataset, path) -> None:
    """Write a dataset to a self-describing .npz container.

    Float payloads are stored losslessly (raw float64 bits); a version field
    and a sha256 checksum over X, y, teacher guard loading.
    """
    np.savez(
        path,
        version=np.int64(DATASET_FORMAT_VERSION),
        d=np.int64(ds.d),
        n=np.int64(ds.n),
        seed=np.int64(ds.seed),
        augmented=np.bool_(ds.augmented),
        X=ds.X,
        y=ds.y,
        teacher=ds.teacher,
        checksum=np.str_(_checksum(ds.X, ds.y, ds.teacher)),
    )


def load_dataset(path) -> Dataset:
    """Read a dataset container, verifying version, checksum, and labels.

    Raises
    ------
    DatasetFormatError
        On truncated or corrupt files, unknown versions, checksum
        mismatches, or label values outside {-1, +1}.
    """
    try:
        with np.load(path, allow_pickle=False) as payload:
            fields = {name: payload[name] for name in payload.files}
    except (OSError, ValueError, zipfile.BadZipFile, KeyError) as exc:
        raise DatasetFormatError(f"unreadable dataset file {path}: {exc}") from exc
    required = {"version", "d", "n", "seed", "augmented", "X", "y", "teacher", "checksum"}
    missing = required - set(fields)
    if missing:
        raise DatasetFormatError(f"dataset file {path} missing fields {sorted(missing)}")
    version = int(fields["version"])
    if version != DATASET_FORMAT_VERSION:
        raise DatasetFormatError(
            f"dataset file {path} has version {version}, expected {DATASET_FORMAT_VERSION}"
        )
    stored = str(fields["checksum"])
    actual = _checksum(fields["X"], fields["y"], fields["teacher"])
    if stored != actual:
        raise DatasetFormatError(f"dataset file {path} failed its checksum")
    try:
        return Dataset(
            X=fields["X"],
            y=fields["y"],
            teacher=fields["teacher"],
            seed=int(fields["seed"]),
            d=int(fields["d"]),
            n=int(fields["n"]),
            augmented=bool(fields["augmented"]),
        )
    except ValueError as exc:
        raise DatasetFormatError(f"dataset file {path} is inconsistent: {exc}") from exc
