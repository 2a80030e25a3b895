"""Datasets: MovieLens parsing, synthetic matrices, splits, initialization and Test RMSE."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .matrix import FactorPair, MaskedMatrix, atomic_write_text
from .rng import splitmix64, uniform

# published (users, movies, ratings) per release
MOVIELENS_TABLE = {
    "ml100k": (943, 1682, 100000),
    "ml1m": (6040, 3952, 1000209),
    "ml10m": (71567, 10681, 10000054),
}
_SEPARATORS = {"ml100k": "\t", "ml1m": "::", "ml10m": "::"}


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class IdMap:
    """Original user / movie ids in index order (index ``i`` holds id ``users[i]``)."""

    users: np.ndarray
    movies: np.ndarray
    identity: bool

    def save(self, path) -> None:
        lines = ["kind,index,id"]
        lines += [f"user,{i},{u}" for i, u in enumerate(self.users.tolist())]
        lines += [f"movie,{i},{m}" for i, m in enumerate(self.movies.tolist())]
        atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class RatingDataset:
    train: MaskedMatrix
    test: MaskedMatrix
    scale: tuple[float, float]


def _parse_ratings(path, sep: str):
    users, movies, ratings = [], [], []
    with open(path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split(sep)
            if len(parts) < 3:
                raise DataFormatError(f"{path}:{lineno}: expected user{sep}item{sep}rating, got {line!r}")
            try:
                u, m, r = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: malformed record {line!r}") from None
            if u < 1 or m < 1 or not math.isfinite(r):
                raise DataFormatError(f"{path}:{lineno}: invalid ids or rating in {line!r}")
            users.append(u)
            movies.append(m)
            ratings.append(r)
    if not users:
        raise DataFormatError(f"{path}: no ratings found (empty file)")
    return np.array(users, dtype=np.int64), np.array(movies, dtype=np.int64), np.array(ratings)


def load_movielens_with_ids(path, fmt: str) -> tuple[MaskedMatrix, IdMap]:
    """Parse a MovieLens ratings file and return the matrix with its id map.

    ``ml100k`` is tab separated, ``ml1m`` / ``ml10m`` use ``::``. When all ids
    fit the published table the index is ``id - 1`` and the shape is the
    table's; otherwise ids are remapped to dense indices in increasing id order
    and the shape comes from the data.

    Raises:
        DataFormatError: on a malformed line (with its number) or an empty file.
    """
    if fmt not in _SEPARATORS:
        raise ValueError(f"unknown MovieLens format {fmt!r}; expected one of {sorted(_SEPARATORS)}")
    u, m, r = _parse_ratings(path, _SEPARATORS[fmt])
    n_users, n_movies, _ = MOVIELENS_TABLE[fmt]
    if u.max() <= n_users and m.max() <= n_movies:
        ids = IdMap(np.arange(1, n_users + 1), np.arange(1, n_movies + 1), True)
        return MaskedMatrix.from_triples((n_users, n_movies), u - 1, m - 1, r), ids
    uid, ui = np.unique(u, return_inverse=True)
    mid, mi = np.unique(m, return_inverse=True)
    return MaskedMatrix.from_triples((uid.size, mid.size), ui, mi, r), IdMap(uid, mid, False)


def load_movielens(path, fmt: str) -> MaskedMatrix:
    return load_movielens_with_ids(path, fmt)[0]


def split_train_test(m: MaskedMatrix, frac: float = 0.8, seed: int = 0) -> RatingDataset:
    """Global uniform split of the observed entries.

    Each entry gets a SplitMix64 key; the ``round(frac * nnz)`` smallest keys
    form the training set.
    """
    if not 0 < frac < 1:
        raise ValueError("frac must lie in (0, 1)")
    keys = splitmix64(seed, m.nnz)
    order = np.argsort(keys, kind="stable")
    n_train = int(round(frac * m.nnz))
    vals = m.vals
    scale = (float(vals.min()), float(vals.max())) if m.nnz else (0.0, 0.0)
    return RatingDataset(m.subset(order[:n_train]), m.subset(order[n_train:]), scale)


def test_rmse(x: FactorPair, test: MaskedMatrix) -> float:
    """Root mean squared error on the held-out entries, predicted per entry."""
    if test.nnz == 0:
        raise ValueError("test set is empty")
    r = test.vals - test.predict(x.u, x.z)
    return math.sqrt(float(r @ r) / test.nnz)


test_rmse.__test__ = False  # not a pytest test


def synthetic_dense(m: int, n: int, seed: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """``m x n`` matrix of i.i.d. uniform ``[lo, hi)`` entries, row-major from one SplitMix64 stream."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be >= 1")
    return uniform(seed, m * n, lo, hi).reshape(m, n)


def init_factors(m: int, n: int, k: int, seed: int, lo: float = 0.0, hi: float = 0.1) -> FactorPair:
    """Uniform ``[lo, hi)`` initialization: U then Z, row-major, from one stream."""
    vals = uniform(seed, m * k + k * n, lo, hi)
    return FactorPair(vals[: m * k].reshape(m, k).copy(), vals[m * k:].reshape(k, n).copy())


def write_movielens_like(path, m: MaskedMatrix, fmt: str = "ml100k", ids: Optional[IdMap] = None) -> None:
    """Write ``m`` in a MovieLens ratings layout (timestamps are zero)."""
    sep = _SEPARATORS[fmt]
    users = ids.users if ids is not None else np.arange(1, m.shape[0] + 1)
    movies = ids.movies if ids is not None else np.arange(1, m.shape[1] + 1)
    lines = []
    for r, c, v in zip(m.rows.tolist(), m.cols.tolist(), m.vals.tolist()):
        rating = int(v) if float(v).is_integer() else v
        lines.append(f"{users[r]}{sep}{movies[c]}{sep}{rating}{sep}0")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def synthetic_ratings(m: int, n: int, nnz: int, seed: int, levels=(1, 2, 3, 4, 5)) -> MaskedMatrix:
    """Random sparse rating matrix with ``nnz`` distinct observed entries.

    Every row and column gets at least one rating when ``nnz`` allows, so the
    shape is recoverable from the file.
    """
    if nnz > m * n:
        raise ValueError("more ratings than matrix entries")
    keys = splitmix64(seed, m * n)
    cover = np.concatenate([np.arange(m) * n + (np.arange(m) % n), (np.arange(n) % m) * n + np.arange(n)])
    cover = np.unique(cover)
    chosen = np.zeros(m * n, dtype=bool)
    chosen[cover[:nnz]] = True
    rest = np.argsort(keys, kind="stable")
    need = nnz - int(chosen.sum())
    extra = rest[~chosen[rest]][:need]
    chosen[extra] = True
    flat = np.flatnonzero(chosen)
    lv = np.asarray(levels, dtype=np.float64)
    picks = (splitmix64(seed + 1, flat.size) % np.uint64(lv.size)).astype(np.int64)
    return MaskedMatrix.from_triples((m, n), flat // n, flat % n, lv[picks])
