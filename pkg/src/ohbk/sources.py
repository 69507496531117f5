"""Seeded streams of noiseless linear measurements.

Every stream is driven by a single ``numpy.random.Generator`` over PCG64,
seeded with one integer per trial. Gaussian entries come from the polar
Box-Muller method applied to the generator's uniform doubles, so the whole
stream is a deterministic function of the seed.

Synthetic sources draw their vectors in fixed-size blocks. A source therefore
always yields the same sequence no matter whether it is consumed one
measurement at a time or a block at a time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import DimensionError

KINDS = ("gaussian", "uniform", "sphere", "dataset")
ROW_MODES = ("cyclic", "random", "once")
BLOCK = 256


def make_rng(seed):
    """PCG64 generator seeded with ``seed``; the only PRNG used by the package."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def standard_normals(rng, count):
    """``count`` standard normal draws via the polar (Marsaglia) Box-Muller method."""
    out = np.empty(count, dtype=np.float64)
    filled = 0
    while filled < count:
        pairs = (count - filled + 1) // 2
        # acceptance rate is pi/4; oversample so one round usually suffices
        m = int(pairs / 0.785) + 8
        u = 2.0 * rng.random((m, 2)) - 1.0
        s = u[:, 0] * u[:, 0] + u[:, 1] * u[:, 1]
        ok = (s > 0.0) & (s < 1.0)
        u, s = u[ok], s[ok]
        factor = np.sqrt(-2.0 * np.log(s) / s)
        z = (u * factor[:, None]).ravel()
        take = min(z.size, count - filled)
        out[filled:filled + take] = z[:take]
        filled += take
    return out


def sample_gaussian_vector(rng, n):
    if n < 1:
        raise ValueError("n must be at least 1")
    return standard_normals(rng, n)


def sample_uniform_vector(rng, n, lo=0.0, hi=1.0):
    if n < 1:
        raise ValueError("n must be at least 1")
    if not lo < hi:
        raise ValueError(f"uniform range needs lo < hi, got [{lo}, {hi}]")
    return lo + (hi - lo) * rng.random(n)


def sample_sphere_vector(rng, n):
    """Uniform sample from the unit sphere in R^n (normalized Gaussian)."""
    while True:
        g = sample_gaussian_vector(rng, n)
        nrm = math.sqrt(float(np.dot(g, g)))
        if nrm > 0.0:
            return g / nrm


def synthesize_ground_truth(rng, n):
    """Hidden signal with i.i.d. standard normal entries."""
    return sample_gaussian_vector(rng, n)


@dataclass(frozen=True)
class Measurement:
    phi: np.ndarray
    y: float


@dataclass(frozen=True)
class SourceSpec:
    """What a measurement stream draws from.

    ``kind`` is one of ``gaussian``, ``uniform``, ``sphere`` or ``dataset``.
    ``lo``/``hi`` apply to ``uniform``; ``rows`` and ``row_mode`` apply to
    ``dataset`` (``cyclic``, ``random`` for uniform i.i.d. row picks, or
    ``once`` for a single pass, optionally ``shuffle``-d).
    """

    kind: str
    n: int
    seed: int = 0
    lo: float = 0.0
    hi: float = 1.0
    rows: np.ndarray | None = field(default=None, repr=False, compare=False)
    row_mode: str = "cyclic"
    shuffle: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "dataset":
            if self.rows is None:
                raise ValueError("dataset source needs a loaded matrix")
            rows = np.asarray(self.rows, dtype=np.float64)
            if rows.ndim != 2 or rows.shape[0] == 0:
                raise DimensionError("dataset matrix must be 2-D and non-empty")
            if rows.shape[1] != self.n:
                raise DimensionError(f"dataset has {rows.shape[1]} columns, expected n={self.n}")
            object.__setattr__(self, "rows", rows)
            if self.row_mode not in ROW_MODES:
                raise ValueError(f"unknown row mode {self.row_mode!r}; expected one of {ROW_MODES}")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.kind == "uniform" and not self.lo < self.hi:
            raise ValueError(f"uniform range needs lo < hi, got [{self.lo}, {self.hi}]")

    def with_seed(self, seed):
        return SourceSpec(self.kind, self.n, seed, self.lo, self.hi, self.rows,
                          self.row_mode, self.shuffle)

    def describe(self):
        if self.kind == "uniform":
            return f"uniform[{self.lo!r},{self.hi!r}] n={self.n}"
        if self.kind == "dataset":
            extra = " shuffled" if self.shuffle else ""
            return f"dataset rows={self.rows.shape[0]} n={self.n} mode={self.row_mode}{extra}"
        return f"{self.kind} n={self.n}"


class MeasurementSource:
    """A restartable stream of measurements ``(phi, <phi, x_star>)``.

    The hidden signal is drawn first from the trial generator unless one is
    passed in; the measurement vectors follow from the same generator.
    ``next_measurement`` returns ``None`` once a single-pass dataset is used up.
    """

    def __init__(self, spec, x_star=None):
        self.spec = spec
        self._given_x_star = None if x_star is None else np.array(x_star, dtype=np.float64)
        if self._given_x_star is not None and self._given_x_star.shape != (spec.n,):
            raise DimensionError(f"ground truth has shape {self._given_x_star.shape}, expected ({spec.n},)")
        self.restart()

    def restart(self):
        self._rng = make_rng(self.spec.seed)
        if self._given_x_star is None:
            self.x_star = synthesize_ground_truth(self._rng, self.spec.n)
        else:
            self.x_star = self._given_x_star.copy()
        self.emitted = 0
        self._buf_phi = np.empty((0, self.spec.n))
        self._buf_y = np.empty(0)
        self._pos = 0
        if self.spec.kind == "dataset":
            rows = self.spec.rows
            # same reduction as the solver residual, so x_star is an exact fixed point
            self._b = (rows * self.x_star).sum(axis=1)
            m = rows.shape[0]
            if self.spec.row_mode == "once" and self.spec.shuffle:
                self._order = self._rng.permutation(m)
            else:
                self._order = np.arange(m)
            self._cursor = 0

    @property
    def exhausted(self):
        return (self.spec.kind == "dataset" and self.spec.row_mode == "once"
                and self._pos >= len(self._buf_y) and self._cursor >= len(self._order))

    def _draw_block(self):
        spec = self.spec
        n = spec.n
        if spec.kind == "gaussian":
            phi = standard_normals(self._rng, BLOCK * n).reshape(BLOCK, n)
        elif spec.kind == "sphere":
            phi = standard_normals(self._rng, BLOCK * n).reshape(BLOCK, n)
            norms = np.sqrt(np.einsum("ij,ij->i", phi, phi))
            while np.any(norms == 0.0):
                bad = norms == 0.0
                phi[bad] = standard_normals(self._rng, int(bad.sum()) * n).reshape(-1, n)
                norms = np.sqrt(np.einsum("ij,ij->i", phi, phi))
            phi = phi / norms[:, None]
        elif spec.kind == "uniform":
            phi = spec.lo + (spec.hi - spec.lo) * self._rng.random((BLOCK, n))
        else:
            m = spec.rows.shape[0]
            if spec.row_mode == "random":
                idx = self._rng.integers(0, m, size=BLOCK)
            elif spec.row_mode == "cyclic":
                idx = np.arange(self._cursor, self._cursor + BLOCK) % m
                self._cursor = (self._cursor + BLOCK) % m
            else:
                idx = self._order[self._cursor:self._cursor + BLOCK]
                self._cursor += idx.size
            return spec.rows[idx], self._b[idx]
        return phi, (phi * self.x_star).sum(axis=1)

    def _fill(self):
        if self._pos < len(self._buf_y):
            return True
        if self.exhausted:
            return False
        self._buf_phi, self._buf_y = self._draw_block()
        self._pos = 0
        return len(self._buf_y) > 0

    def next_measurement(self):
        if not self._fill():
            return None
        i = self._pos
        self._pos += 1
        self.emitted += 1
        return Measurement(self._buf_phi[i], float(self._buf_y[i]))

    def take(self, count):
        """Up to ``count`` measurements as arrays ``(phis, ys)``; fewer at end of stream."""
        phis, ys = [], []
        need = count
        while need > 0 and self._fill():
            k = min(need, len(self._buf_y) - self._pos)
            phis.append(self._buf_phi[self._pos:self._pos + k])
            ys.append(self._buf_y[self._pos:self._pos + k])
            self._pos += k
            need -= k
        got = count - need
        self.emitted += got
        if not phis:
            return np.empty((0, self.spec.n)), np.empty(0)
        return np.concatenate(phis), np.concatenate(ys)

    def __iter__(self):
        while True:
            m = self.next_measurement()
            if m is None:
                return
            yield m


def next_measurement(source):
    """Functional alias of ``MeasurementSource.next_measurement``."""
    return source.next_measurement()


class CsvParseError(ValueError):
    def __init__(self, message, row, column):
        super().__init__(f"{message} (row {row}, column {column})")
        self.row = row
        self.column = column


@dataclass
class CsvMatrix:
    values: np.ndarray
    dropped_rows: int
    columns: tuple


def load_csv_matrix(path, delimiter=",", skip_header=False, missing="?", columns=None,
                    drop_columns=None):
    """Read a numeric matrix from a delimited text file.

    Rows holding the ``missing`` token in any cell are dropped and counted.
    ``columns`` keeps only the listed 0-based column indices; ``drop_columns``
    removes the listed ones instead. Row numbers in errors are 1-based file
    lines.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        lines = list(csv.reader(fh, delimiter=delimiter))

    start = 1 if skip_header else 0
    body = [(lineno, row) for lineno, row in enumerate(lines[start:], start=start + 1)
            if row and any(cell.strip() for cell in row)]
    if not body:
        raise ValueError(f"{path}: no data rows")

    width = len(body[0][1])
    if columns is not None:
        keep = tuple(int(c) for c in columns)
    else:
        dropped = set(int(c) for c in (drop_columns or ()))
        keep = tuple(c for c in range(width) if c not in dropped)
    for c in keep:
        if not 0 <= c < width:
            raise ValueError(f"{path}: column {c} out of range for {width} columns")

    values = []
    dropped_rows = 0
    for lineno, row in body:
        if len(row) != width:
            raise CsvParseError(f"{path}: expected {width} cells, found {len(row)}", lineno, len(row))
        cells = [cell.strip() for cell in row]
        if missing is not None and missing in cells:
            dropped_rows += 1
            continue
        rec = []
        for c in keep:
            try:
                v = float(cells[c])
            except ValueError:
                raise CsvParseError(f"{path}: non-numeric cell {cells[c]!r}", lineno, c + 1) from None
            if not math.isfinite(v):
                raise CsvParseError(f"{path}: non-finite cell {cells[c]!r}", lineno, c + 1)
            rec.append(v)
        values.append(rec)
    if not values:
        raise ValueError(f"{path}: every row was dropped")
    return CsvMatrix(np.array(values, dtype=np.float64), dropped_rows, keep)


def load_wdbc(path, **options):
    """WDBC-layout file: sample id in column 0, then the attribute columns."""
    options.setdefault("drop_columns", (0,))
    return load_csv_matrix(path, **options)


STANDIN_ROWS = 699
STANDIN_MISSING_ROWS = 16


def write_wdbc_standin(path, seed=699):
    """Write a synthetic file laid out like the original Wisconsin breast cancer data.

    One id column, nine integer attributes in 1..10 and a class column
    (2 benign, 4 malignant). There are ``STANDIN_ROWS`` complete rows plus
    ``STANDIN_MISSING_ROWS`` rows with a ``?`` in the sixth attribute, so
    cleaning leaves 699 rows with 10 numeric columns.
    """
    rng = make_rng(seed)
    total = STANDIN_ROWS + STANDIN_MISSING_ROWS
    malignant = rng.random(total) < 0.35
    centers = np.where(malignant, 7.0, 2.0)
    spread = np.where(malignant, 2.5, 1.2)
    attrs = centers[:, None] + spread[:, None] * standard_normals(rng, total * 9).reshape(total, 9)
    attrs = np.clip(np.rint(attrs), 1, 10).astype(int)
    ids = 1000000 + rng.permutation(total)[:total] * 37 + rng.integers(0, 37, size=total)
    missing_at = set(rng.choice(total, size=STANDIN_MISSING_ROWS, replace=False).tolist())

    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i in range(total):
            cells = [str(ids[i])] + [str(v) for v in attrs[i]] + ["4" if malignant[i] else "2"]
            if i in missing_at:
                cells[6] = "?"
            w.writerow(cells)
    return path


def bundled_standin_path():
    return Path(__file__).with_name("data") / "wdbc_standin.csv"
