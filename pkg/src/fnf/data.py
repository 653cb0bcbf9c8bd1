"""CSV ingestion, chronological splits, z-score scaling, windows, synthetic series."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import ConfigError, LoadError


@dataclass
class SeriesTable:
    timestamps: list
    values: np.ndarray  # (Total, M)
    variable_names: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise LoadError(f"values must be (Total, M), got {self.values.shape}")
        if len(self.timestamps) != self.values.shape[0]:
            raise LoadError("timestamp count does not match row count")
        if len(self.variable_names) != self.values.shape[1]:
            raise LoadError("variable name count does not match column count")

    @property
    def total(self) -> int:
        return self.values.shape[0]

    @property
    def num_variables(self) -> int:
        return self.values.shape[1]


def _parse_timestamp(raw: str, row: int):
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(raw)
    except ValueError:
        raise LoadError(f"row {row}: unparseable timestamp {raw!r}") from None


def load_csv(path) -> SeriesTable:
    """Read a header + rows file whose first column is a timestamp."""
    path = Path(path)
    if not path.exists():
        raise LoadError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise LoadError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise LoadError(f"{path}: need a timestamp column and at least one variable")
    if not body:
        raise LoadError(f"{path}: header but no data rows")
    stamps, values = [], []
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise LoadError(f"row {i}: expected {len(header)} cells, got {len(row)}")
        ts = _parse_timestamp(row[0], i)
        if stamps:
            if type(ts) is not type(stamps[-1]):
                raise LoadError(f"row {i}: timestamp kind changes mid-file")
            if ts <= stamps[-1]:
                raise LoadError(f"row {i}: timestamps must be strictly increasing")
        vals = []
        for j, cell in enumerate(row[1:], start=2):
            if not cell.strip():
                raise LoadError(f"row {i}: missing value in column {j}")
            try:
                v = float(cell)
            except ValueError:
                raise LoadError(f"row {i}: non-numeric value {cell!r} in column {j}") from None
            if not np.isfinite(v):
                raise LoadError(f"row {i}: non-finite value in column {j}")
            vals.append(v)
        stamps.append(ts)
        values.append(vals)
    return SeriesTable(stamps, np.array(values), [h.strip() for h in header[1:]])


def write_csv(table: SeriesTable, path, time_label: str = "date") -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([time_label, *table.variable_names])
        for ts, row in zip(table.timestamps, table.values):
            stamp = ts.isoformat() if isinstance(ts, datetime) else ts
            w.writerow([stamp, *(repr(float(v)) for v in row)])


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.7
    val_frac: float = 0.1
    test_frac: float = 0.2

    def __post_init__(self):
        fr = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must be positive and sum to 1, got {fr}")

    def lengths(self, total: int) -> tuple[int, int, int]:
        n_train = int(round(total * self.train_frac))
        n_val = int(round(total * self.val_frac))
        return n_train, n_val, total - n_train - n_val


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "Scaler":
        std = values.std(axis=0)
        return cls(values.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


@dataclass
class Split:
    name: str
    timestamps: list
    values: np.ndarray  # scaled, (len, M)
    offset: int  # row index of the first element in the source table

    def __len__(self) -> int:
        return self.values.shape[0]


def split_and_scale(table: SeriesTable, spec: SplitSpec = SplitSpec(), min_length: int = 1):
    """Chronological train/val/test splits scaled with train statistics only."""
    lengths = spec.lengths(table.total)
    for name, n in zip(("train", "val", "test"), lengths):
        if n < min_length:
            raise ConfigError(f"{name} split has {n} rows but a window needs {min_length}")
    scaler = Scaler.fit(table.values[: lengths[0]])
    splits, start = [], 0
    for name, n in zip(("train", "val", "test"), lengths):
        sl = slice(start, start + n)
        splits.append(Split(name, table.timestamps[sl], scaler.transform(table.values[sl]), start))
        start += n
    return splits[0], splits[1], splits[2], scaler


@dataclass
class WindowDataset:
    split: Split
    L: int
    H: int
    starts: np.ndarray = field(init=False)

    def __post_init__(self):
        n = len(self.split) - self.L - self.H + 1
        if n < 1:
            raise ConfigError(
                f"{self.split.name} split of length {len(self.split)} cannot hold a "
                f"window of L={self.L} + H={self.H}"
            )
        self.starts = np.arange(n)

    def __len__(self) -> int:
        return len(self.starts)

    def window(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        t = self.starts[i]
        v = self.split.values
        return v[t : t + self.L], v[t + self.L : t + self.L + self.H]

    def arrays(self, idx=None) -> tuple[np.ndarray, np.ndarray]:
        """Stacked ``(x, y)`` of shapes (n, L, M) and (n, H, M)."""
        idx = self.starts if idx is None else self.starts[np.asarray(idx)]
        full = np.lib.stride_tricks.sliding_window_view(self.split.values, self.L + self.H, axis=0)
        w = np.moveaxis(full[idx], -1, 1)
        return np.ascontiguousarray(w[:, : self.L]), np.ascontiguousarray(w[:, self.L :])

    def batches(self, batch_size: int, rng: np.random.Generator | None = None):
        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        for s in range(0, len(order), batch_size):
            yield self.arrays(order[s : s + batch_size])


def make_windows(split: Split, L: int, H: int) -> WindowDataset:
    return WindowDataset(split, L, H)


def synth_generate(seed: int, M: int, total: int, coupling: float = 0.0, *, noise: float = 0.05,
                   n_components: int = 2, lag: int = 8, periods=(6.0, 48.0)) -> SeriesTable:
    """Seeded multivariate sum-of-sinusoids with lagged cross-variable coupling.

    Variable m is ``sum_j a[m,j] sin(2 pi f[m,j] t + phi[m,j])`` plus
    ``coupling * sum_k w[m,k] x_k(t - lag)`` over the other variables plus
    Gaussian noise of std ``noise``. The mixing rows sum to one, so the
    recursion is stable for ``|coupling| < 1``. Every (variable, component)
    pair gets its own frequency.
    """
    if M < 1:
        raise ConfigError(f"need at least one variable, got M={M}")
    if total < 1:
        raise ConfigError(f"need a positive length, got {total}")
    rng = np.random.default_rng(seed)
    k = M * n_components
    # distinct periods spread over the range, randomly assigned
    grid = np.geomspace(periods[0], periods[1], k)
    freqs = (1.0 / rng.permutation(grid)).reshape(M, n_components)
    amps = rng.uniform(0.5, 1.5, size=(M, n_components))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(M, n_components))
    t = np.arange(total, dtype=np.float64)
    base = np.einsum("mj,mjt->tm", amps, np.sin(2 * np.pi * freqs[..., None] * t + phases[..., None]))
    mix = rng.uniform(0.0, 1.0, size=(M, M))
    np.fill_diagonal(mix, 0.0)
    rows = mix.sum(axis=1, keepdims=True)
    mix = np.divide(mix, rows, out=np.zeros_like(mix), where=rows > 0)
    eps = noise * rng.standard_normal((total, M))
    x = base + eps
    if coupling and M > 1:
        for i in range(lag, total):
            x[i] += coupling * (mix @ x[i - lag])
    names = [f"x{m}" for m in range(M)]
    return SeriesTable(list(range(total)), x, names)

