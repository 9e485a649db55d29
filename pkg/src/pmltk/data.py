"""Multi-label datasets with candidate labels: parsing, noise, splits.

Two text formats are supported. Both are UTF-8 with LF line endings and
start with a ``#n d l`` header line:

* ``sparse-multilabel``: one instance per line, ``L f:v f:v ...`` where
  ``L`` is a comma-separated list of 0-based label indices (an empty
  list is forbidden) and each ``f:v`` pair holds a 0-based feature
  index with its real value. Files written after noise injection carry
  two label blocks separated by ``|``: ``L_cand|L_truth``.
* ``dense-csv``: ``x1,...,xd;y1,...,yl`` per line with binary labels,
  optionally followed by a third ``;t1,...,tl`` ground-truth block.

Floats are serialized with ``repr`` so save followed by load restores
every matrix bit-exactly.

Randomness uses numpy's PCG64 generator, so seeded operations are
reproducible across platforms. Datasets are immutable by convention:
no operation mutates an existing instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    ParseError,
    RangeError,
    StateError,
    ValidationError,
)

SPARSE_FORMAT = "sparse-multilabel"
DENSE_FORMAT = "dense-csv"
FORMATS = (SPARSE_FORMAT, DENSE_FORMAT)


def _as_binary(M, name):
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValidationError(f"{name} must be a 2-d matrix, got ndim={M.ndim}")
    vals = np.unique(M)
    if not np.isin(vals, (0, 1)).all():
        raise ValidationError(f"{name} must be binary (0/1 entries)")
    return M.astype(np.int8)


@dataclass(frozen=True)
class Dataset:
    """A (partial) multi-label dataset.

    ``X`` is the dense n x d feature matrix, ``Y`` the binary n x l
    candidate label matrix and ``Ytruth`` the optional ground-truth
    matrix, kept only for evaluation. Every row of ``Y`` carries at
    least one and at most l-1 labels, and ``Ytruth`` is covered by
    ``Y`` elementwise when present.
    """

    X: np.ndarray
    Y: np.ndarray
    Ytruth: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError(f"X must be a 2-d matrix, got ndim={X.ndim}")
        Y = _as_binary(self.Y, "Y")
        if X.shape[0] != Y.shape[0]:
            raise ValidationError(
                f"X has {X.shape[0]} rows but Y has {Y.shape[0]}"
            )
        n, d = X.shape
        l = Y.shape[1]
        if n == 0 or d == 0 or l == 0:
            raise ValidationError(f"dimensions must be positive, got n={n} d={d} l={l}")
        sums = Y.sum(axis=1)
        if (sums < 1).any():
            i = int(np.argmin(sums))
            raise ValidationError(f"instance {i} has an empty candidate label set")
        if (sums > l - 1).any():
            i = int(np.argmax(sums))
            raise ValidationError(
                f"instance {i} carries all {l} labels; at most l-1 are allowed"
            )
        Yt = self.Ytruth
        if Yt is not None:
            Yt = _as_binary(Yt, "Ytruth")
            if Yt.shape != Y.shape:
                raise ValidationError(
                    f"Ytruth shape {Yt.shape} does not match Y shape {Y.shape}"
                )
            if (Yt > Y).any():
                raise ValidationError("Ytruth must be covered by Y elementwise")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Ytruth", Yt)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def l(self) -> int:
        return self.Y.shape[1]

    def subset(self, indices) -> "Dataset":
        """Row subset as a new Dataset; indices keep the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        Yt = None if self.Ytruth is None else self.Ytruth[idx].copy()
        return Dataset(self.X[idx].copy(), self.Y[idx].copy(), Yt)


@dataclass(frozen=True)
class NoiseConfig:
    """Synthetic corruption level: each instance with g ground-truth labels
    receives round-half-up(g*a/100) random irrelevant candidates."""

    a: int
    seed: int = 0

    def __post_init__(self):
        if self.a < 0:
            raise ConfigError(f"noise percentage must be >= 0, got {self.a}")


@dataclass(frozen=True)
class SplitSpec:
    """Random train/test partition parameters."""

    train_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must lie in (0,1), got {self.train_fraction}"
            )


def _parse_header(line: str) -> tuple[int, int, int]:
    parts = line.strip().lstrip("#").split()
    if not line.startswith("#") or len(parts) != 3:
        raise ParseError("expected header '#n d l'", line=1)
    try:
        n, d, l = (int(p) for p in parts)
    except ValueError as exc:
        raise ParseError(f"header fields must be integers: {exc}", line=1) from None
    if n <= 0 or d <= 0 or l <= 0:
        raise ParseError(f"header dimensions must be positive, got {n} {d} {l}", line=1)
    return n, d, l


def _parse_label_list(text: str, l: int, lineno: int, what: str) -> list[int]:
    if not text:
        raise ValidationError(f"line {lineno}: empty {what} label set")
    out = []
    for tok in text.split(","):
        try:
            j = int(tok)
        except ValueError:
            raise ParseError(f"bad label index {tok!r}", line=lineno) from None
        if not 0 <= j < l:
            raise RangeError(f"label index {j} out of range [0,{l})", line=lineno)
        out.append(j)
    return out


def _parse_sparse_body(lines, n, d, l):
    X = np.zeros((n, d), dtype=np.float64)
    Y = np.zeros((n, l), dtype=np.int8)
    T = np.zeros((n, l), dtype=np.int8)
    has_truth = None
    for i, (lineno, line) in enumerate(lines):
        parts = line.split()
        block = parts[0]
        if "|" in block:
            cand_txt, truth_txt = block.split("|", 1)
            with_truth = True
        else:
            cand_txt, truth_txt = block, None
            with_truth = False
        if has_truth is None:
            has_truth = with_truth
        elif has_truth != with_truth:
            raise ParseError(
                "mixed label blocks: some lines carry '|truth' and some do not",
                line=lineno,
            )
        Y[i, _parse_label_list(cand_txt, l, lineno, "candidate")] = 1
        if with_truth:
            T[i, _parse_label_list(truth_txt, l, lineno, "ground-truth")] = 1
        for pair in parts[1:]:
            f, sep, v = pair.partition(":")
            if not sep:
                raise ParseError(f"bad feature pair {pair!r}", line=lineno)
            try:
                fi = int(f)
                fv = float(v)
            except ValueError:
                raise ParseError(f"bad feature pair {pair!r}", line=lineno) from None
            if not 0 <= fi < d:
                raise RangeError(f"feature index {fi} out of range [0,{d})", line=lineno)
            X[i, fi] = fv
    return X, Y, (T if has_truth else None)


def _parse_float_row(text, width, lineno, what):
    toks = text.split(",")
    if len(toks) != width:
        raise ParseError(
            f"expected {width} {what} values, got {len(toks)}", line=lineno
        )
    try:
        return [float(t) for t in toks]
    except ValueError as exc:
        raise ParseError(f"bad {what} value: {exc}", line=lineno) from None


def _parse_dense_body(lines, n, d, l):
    X = np.zeros((n, d), dtype=np.float64)
    Y = np.zeros((n, l), dtype=np.int8)
    T = np.zeros((n, l), dtype=np.int8)
    has_truth = None
    for i, (lineno, line) in enumerate(lines):
        blocks = line.split(";")
        if len(blocks) not in (2, 3):
            raise ParseError(
                f"expected 2 or 3 ';'-separated blocks, got {len(blocks)}", line=lineno
            )
        with_truth = len(blocks) == 3
        if has_truth is None:
            has_truth = with_truth
        elif has_truth != with_truth:
            raise ParseError(
                "mixed rows: some carry a ground-truth block and some do not",
                line=lineno,
            )
        X[i] = _parse_float_row(blocks[0], d, lineno, "feature")
        for target, text, what in ((Y, blocks[1], "candidate"),) + (
            ((T, blocks[2], "ground-truth"),) if with_truth else ()
        ):
            row = _parse_float_row(text, l, lineno, what + " label")
            for j, v in enumerate(row):
                if v not in (0.0, 1.0):
                    raise ParseError(
                        f"{what} labels must be 0 or 1, got {v}", line=lineno
                    )
                target[i, j] = int(v)
        if Y[i].sum() == 0:
            raise ValidationError(f"line {lineno}: empty candidate label set")
    return X, Y, (T if has_truth else None)


def load(path, format: str = SPARSE_FORMAT) -> Dataset:
    """Read a dataset file.

    Plain files (single label block) come back in the noise-free state:
    ``Ytruth`` holds the parsed labels and ``Y`` equals it. Files with a
    second label block populate ``Y`` from the candidates and ``Ytruth``
    from the truth block.
    """
    if format not in FORMATS:
        raise ConfigError(f"unknown dataset format {format!r}; expected one of {FORMATS}")
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read().split("\n")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from None
    if not raw or not raw[0].strip():
        raise ParseError("missing '#n d l' header", line=1)
    n, d, l = _parse_header(raw[0])
    body = []
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue  # blank lines tolerated (incl. trailing newline)
        body.append((lineno, line.strip()))
    if len(body) != n:
        raise ParseError(
            f"header declares {n} instances but file has {len(body)}",
            line=body[-1][0] if body else 1,
        )
    parser = _parse_sparse_body if format == SPARSE_FORMAT else _parse_dense_body
    X, Y, T = parser(body, n, d, l)
    if T is None:
        T = Y.copy()
    return Dataset(X, Y, T)


def _fmt_float(v: float) -> str:
    return repr(float(v))


def save(ds: Dataset, path, format: str = SPARSE_FORMAT) -> None:
    """Write ``ds`` to ``path``; the ground-truth block is emitted whenever
    ``Ytruth`` is present, so noisy datasets round-trip losslessly."""
    if format not in FORMATS:
        raise ConfigError(f"unknown dataset format {format!r}; expected one of {FORMATS}")
    lines = [f"#{ds.n} {ds.d} {ds.l}"]
    for i in range(ds.n):
        cand = ",".join(str(j) for j in np.flatnonzero(ds.Y[i]))
        if ds.Ytruth is not None:
            cand += "|" + ",".join(str(j) for j in np.flatnonzero(ds.Ytruth[i]))
        if format == SPARSE_FORMAT:
            # negative zeros are stored explicitly to keep round-trips bit-exact
            stored = (ds.X[i] != 0.0) | np.signbit(ds.X[i])
            feats = " ".join(
                f"{j}:{_fmt_float(ds.X[i, j])}" for j in np.flatnonzero(stored)
            )
            lines.append(cand + (" " + feats if feats else ""))
        else:
            row = ",".join(_fmt_float(v) for v in ds.X[i])
            blocks = [row, ",".join(str(int(v)) for v in ds.Y[i])]
            if ds.Ytruth is not None:
                blocks.append(",".join(str(int(v)) for v in ds.Ytruth[i]))
            lines.append(";".join(blocks))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def inject_noise(ds: Dataset, cfg: NoiseConfig) -> Dataset:
    """Corrupt candidate sets with randomly drawn irrelevant labels.

    Each instance with g ground-truth labels gains
    ``m = min(round_half_up(g*a/100), l-1-g)`` distinct labels drawn
    uniformly without replacement from its non-ground-truth labels,
    capping candidate sets at l-1 entries. ``Ytruth`` is preserved and
    the result is deterministic for a given seed.
    """
    if ds.Ytruth is None:
        raise StateError("inject_noise needs a dataset with ground-truth labels")
    g_per_row = ds.Ytruth.sum(axis=1)
    if (g_per_row < 1).any():
        i = int(np.argmin(g_per_row))
        raise ValidationError(f"instance {i} has no ground-truth labels")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    Y = ds.Ytruth.copy()
    l = ds.l
    for i in range(ds.n):
        g = int(g_per_row[i])
        m = min((g * cfg.a + 50) // 100, l - 1 - g)
        if m <= 0:
            continue
        pool = np.flatnonzero(ds.Ytruth[i] == 0)
        picked = rng.choice(pool, size=m, replace=False)
        Y[i, picked] = 1
    return Dataset(ds.X, Y, ds.Ytruth)


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Random train/test partition.

    A seeded permutation is drawn and the first
    ``ceil(n * train_fraction)`` indices form the train set (the ceiling
    is computed with a 1e-9 slack so binary fractions are not pushed up
    a whole index by float error). Both subsets keep original row order.
    """
    if ds.n < 2:
        raise ValidationError(f"need at least 2 instances to split, got {ds.n}")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    perm = rng.permutation(ds.n)
    t = math.ceil(ds.n * spec.train_fraction - 1e-9)
    train_idx = np.sort(perm[:t])
    test_idx = np.sort(perm[t:])
    return ds.subset(train_idx), ds.subset(test_idx)
