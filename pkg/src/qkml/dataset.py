"""Tabular ingestion: CSV -> status filter -> numeric feature matrix.

The pipeline is declarative: a FeatureConfig lists the engineered
columns in output order. Three feature types exist:

* ``numeric`` -- parse one cell as a float after stripping currency
  punctuation (``$``, thousands separators, surrounding space); a bare
  ``-`` or empty cell counts as blank.
* ``duration_days`` -- calendar-day difference between two date cells
  (ISO ``YYYY-MM-DD`` first, ``MM/DD/YYYY`` as fallback).
* ``frequency`` -- relative frequency of the cell's value within the
  filtered table (blank is its own category).

Blank cells follow the per-feature policy: ``zero`` substitutes 0.0 and
``drop`` removes the row.  Cells that are present but unparseable always
drop the row; dropped rows are counted in the returned summary.

Company outcome labels: status ``acquired``/``ipo`` map to class 1
(exit), ``closed`` to class 0; anything else is removed by
``filter_status`` before engineering.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

log = logging.getLogger("qkml.dataset")

STATUS_EXIT = ("acquired", "ipo")
STATUS_CLOSED = ("closed",)
KEPT_STATUSES = STATUS_EXIT + STATUS_CLOSED

MINMAX_PI = "minmax_pi"
STANDARDIZE = "standardize"
_SCALER_MODES = (MINMAX_PI, STANDARDIZE)

_DATE_FORMATS = ("%Y-%m-%d", "%m/%d/%Y")


@dataclass(frozen=True)
class RawTable:
    """Parsed CSV: stripped header names plus string rows."""

    header: tuple
    rows: tuple

    def column_index(self, name: str) -> int:
        try:
            return self.header.index(name)
        except ValueError:
            raise ValueError(
                f"column {name!r} not found; available: {list(self.header)}"
            ) from None


@dataclass(frozen=True)
class Dataset:
    """Numeric design matrix with 0/1 labels and column names."""

    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    feature_names: tuple

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise ValueError(f"features must be 2-d, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError(
                f"labels shape {y.shape} does not match {x.shape[0]} rows"
            )
        if x.shape[1] != len(self.feature_names):
            raise ValueError(
                f"{len(self.feature_names)} names for {x.shape[1]} columns"
            )
        bad = set(np.unique(y).tolist()) - {0, 1} if y.size else set()
        if bad:
            raise ValueError(f"labels must be 0/1, got {sorted(bad)}")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


def load_csv(path) -> RawTable:
    """RFC-4180 CSV reader; rejects ragged rows and empty files.

    Header cells are whitespace-stripped (real-world exports pad them);
    data cells are kept verbatim for the parsers downstream.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV, no header row") from None
        header = tuple(h.strip() for h in header)
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: data row {lineno} has {len(row)} cells, "
                    f"header has {len(header)}"
                )
            rows.append(tuple(row))
    return RawTable(header=header, rows=tuple(rows))


def filter_status(
    table: RawTable, status_column: str = "status"
) -> Tuple[RawTable, dict]:
    """Keep rows whose status maps to a known outcome.

    Returns the filtered table plus a summary with per-status counts
    (statuses compared case-insensitively after stripping).
    """
    col = table.column_index(status_column)
    by_status = {}
    kept = []
    for row in table.rows:
        status = row[col].strip().lower()
        by_status[status] = by_status.get(status, 0) + 1
        if status in KEPT_STATUSES:
            kept.append(row)
    summary = {
        "total": len(table.rows),
        "kept": len(kept),
        "by_status": dict(sorted(by_status.items())),
    }
    if not kept:
        warnings.warn(
            f"status filter kept 0 of {len(table.rows)} rows", stacklevel=2
        )
    log.info("status filter kept %d of %d rows", len(kept), len(table.rows))
    return RawTable(header=table.header, rows=tuple(kept)), summary


# -- feature configuration ---------------------------------------------------

BLANK_ZERO = "zero"
BLANK_DROP = "drop"


@dataclass(frozen=True)
class FeatureSpec:
    type: str  # numeric | duration_days | frequency
    name: str
    blank: str = BLANK_ZERO
    column: Optional[str] = None
    start: Optional[str] = None
    end: Optional[str] = None

    def __post_init__(self):
        if self.type not in ("numeric", "duration_days", "frequency"):
            raise ValueError(f"unknown feature type {self.type!r}")
        if self.blank not in (BLANK_ZERO, BLANK_DROP):
            raise ValueError(f"unknown blank policy {self.blank!r}")
        if self.type in ("numeric", "frequency") and not self.column:
            raise ValueError(f"feature {self.name!r} needs a source column")
        if self.type == "duration_days" and not (self.start and self.end):
            raise ValueError(f"feature {self.name!r} needs start and end columns")


@dataclass(frozen=True)
class FeatureConfig:
    status_column: str
    features: tuple

    @staticmethod
    def from_dict(doc: dict) -> "FeatureConfig":
        specs = []
        for item in doc.get("features", []):
            kind = item["type"]
            name = item.get("name") or (
                item["column"] + "_freq" if kind == "frequency" else item["column"]
            )
            specs.append(
                FeatureSpec(
                    type=kind,
                    name=name,
                    blank=item.get("blank", BLANK_ZERO),
                    column=item.get("column"),
                    start=item.get("start"),
                    end=item.get("end"),
                )
            )
        if not specs:
            raise ValueError("feature config lists no features")
        return FeatureConfig(
            status_column=doc.get("status_column", "status"),
            features=tuple(specs),
        )

    @staticmethod
    def from_json(text: str) -> "FeatureConfig":
        return FeatureConfig.from_dict(json.loads(text))


def default_feature_config() -> FeatureConfig:
    """17-column default for the startup-investments export schema."""
    numeric_zero = [
        "funding_rounds",
        "seed",
        "venture",
        "equity_crowdfunding",
        "convertible_note",
        "debt_financing",
        "angel",
        "grant",
        "private_equity",
        "round_A",
        "round_B",
        "round_C",
        "round_D",
    ]
    doc = {
        "status_column": "status",
        "features": (
            [{"type": "numeric", "column": "funding_total_usd", "blank": "drop"}]
            + [{"type": "numeric", "column": c, "blank": "zero"} for c in numeric_zero]
            + [
                {
                    "type": "duration_days",
                    "name": "days_founded_to_first_funding",
                    "start": "founded_at",
                    "end": "first_funding_at",
                    "blank": "drop",
                },
                {
                    "type": "duration_days",
                    "name": "days_first_to_last_funding",
                    "start": "first_funding_at",
                    "end": "last_funding_at",
                    "blank": "drop",
                },
                {"type": "frequency", "column": "market"},
            ]
        ),
    }
    return FeatureConfig.from_dict(doc)


def _parse_number(cell: str):
    """float value, or None when blank, or raise on garbage."""
    text = cell.strip().replace("$", "").replace(",", "").replace(" ", "")
    if text in ("", "-"):
        return None
    return float(text)


def _parse_date(cell: str):
    text = cell.strip()
    if not text:
        return None
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unparseable date {cell!r}")


def engineer_features(
    table: RawTable, config: FeatureConfig
) -> Tuple[Dataset, dict]:
    """Build the numeric matrix and labels from a filtered table.

    Returns the dataset plus a summary counting rows dropped for blanks
    (per the drop policy) and for unparseable cells.
    """
    status_col = table.column_index(config.status_column)
    col_idx = {}
    for spec in config.features:
        for name in filter(None, (spec.column, spec.start, spec.end)):
            col_idx[name] = table.column_index(name)

    freq_maps = {}
    n_total = len(table.rows)
    for spec in config.features:
        if spec.type == "frequency":
            counts = {}
            for row in table.rows:
                key = row[col_idx[spec.column]].strip()
                counts[key] = counts.get(key, 0) + 1
            freq_maps[spec.name] = {
                k: v / n_total for k, v in counts.items()
            }

    rows_out = []
    labels = []
    dropped_blank = 0
    dropped_bad = 0
    for row in table.rows:
        status = row[status_col].strip().lower()
        if status in STATUS_EXIT:
            label = 1
        elif status in STATUS_CLOSED:
            label = 0
        else:
            raise ValueError(
                f"status {status!r} survived filtering but has no label mapping"
            )
        values = []
        drop_row = False
        for spec in config.features:
            if spec.type == "frequency":
                values.append(freq_maps[spec.name][row[col_idx[spec.column]].strip()])
                continue
            try:
                if spec.type == "numeric":
                    v = _parse_number(row[col_idx[spec.column]])
                else:
                    start = _parse_date(row[col_idx[spec.start]])
                    end = _parse_date(row[col_idx[spec.end]])
                    v = (
                        None
                        if start is None or end is None
                        else float((end - start).days)
                    )
            except ValueError:
                dropped_bad += 1
                drop_row = True
                break
            if v is None:
                if spec.blank == BLANK_DROP:
                    dropped_blank += 1
                    drop_row = True
                    break
                v = 0.0
            values.append(v)
        if drop_row:
            continue
        rows_out.append(values)
        labels.append(label)

    if not rows_out:
        raise ValueError(
            f"feature engineering dropped all {n_total} rows "
            f"(blank: {dropped_blank}, unparseable: {dropped_bad})"
        )
    names = tuple(spec.name for spec in config.features)
    ds = Dataset(
        np.asarray(rows_out, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        names,
    )
    summary = {
        "rows_in": n_total,
        "rows_out": ds.n_rows,
        "dropped_blank": dropped_blank,
        "dropped_unparseable": dropped_bad,
        "feature_names": list(names),
    }
    return ds, summary


# -- splitting, scaling, selection -------------------------------------------


def train_test_split(
    ds: Dataset,
    test_fraction: float,
    seed: int,
    stratify: bool = False,
) -> Tuple[Dataset, Dataset]:
    """Shuffle rows with the seeded generator, slice the test block.

    The test block holds floor(n * test_fraction) rows, at least 1; with
    ``stratify`` the floor is taken per class (again at least 1 each).
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = ds.n_rows
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    rng = np.random.default_rng(seed)
    if stratify:
        test_idx = []
        train_idx = []
        for cls in (0, 1):
            members = np.flatnonzero(ds.labels == cls)
            if members.size == 0:
                continue
            perm = members[rng.permutation(members.size)]
            k = max(1, math.floor(perm.size * test_fraction))
            test_idx.append(perm[:k])
            train_idx.append(perm[k:])
        test = np.concatenate(test_idx)
        train = np.concatenate(train_idx)
    else:
        perm = rng.permutation(n)
        k = max(1, math.floor(n * test_fraction))
        test = perm[:k]
        train = perm[k:]
    if train.size == 0:
        raise ValueError("split left no training rows; lower test_fraction")
    return _take(ds, train), _take(ds, test)


def _take(ds: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(ds.features[idx], ds.labels[idx], ds.feature_names)


@dataclass(frozen=True)
class ScalerParams:
    """Fit statistics plus the surviving (non-constant) column indices."""

    mode: str
    kept_indices: tuple
    feature_names: tuple
    shift: np.ndarray = field(repr=False)  # min (minmax) or mean (standardize)
    scale: np.ndarray = field(repr=False)  # range or population std


def fit_scaler(ds: Dataset, mode: str = MINMAX_PI) -> ScalerParams:
    """Fit on training data only; constant columns are dropped (warned)."""
    if mode not in _SCALER_MODES:
        raise ValueError(f"unknown scaler mode {mode!r}")
    x = ds.features
    if x.shape[0] == 0:
        raise ValueError("cannot fit a scaler on an empty dataset")
    if mode == MINMAX_PI:
        shift = x.min(axis=0)
        scale = x.max(axis=0) - shift
    else:
        shift = x.mean(axis=0)
        scale = x.std(axis=0)  # population std
    keep = np.flatnonzero(scale > 0.0)
    if keep.size < x.shape[1]:
        keep_set = set(keep.tolist())
        dropped = [n for i, n in enumerate(ds.feature_names) if i not in keep_set]
        warnings.warn(
            f"dropping constant feature column(s): {dropped}",
            RuntimeWarning,
            stacklevel=2,
        )
    if keep.size == 0:
        raise ValueError("every feature column is constant; nothing to scale")
    return ScalerParams(
        mode=mode,
        kept_indices=tuple(int(i) for i in keep),
        feature_names=tuple(ds.feature_names[i] for i in keep),
        shift=shift[keep].copy(),
        scale=scale[keep].copy(),
    )


def apply_scaler(params: ScalerParams, ds: Dataset) -> Dataset:
    """Transform any dataset with the fitted statistics.

    minmax_pi maps the training range onto [0, pi] and clips values that
    fall outside it (test rows may); standardize centres and divides by
    the population std.
    """
    idx = list(params.kept_indices)
    x = ds.features[:, idx]
    if params.mode == MINMAX_PI:
        out = (x - params.shift) / params.scale * math.pi
        out = np.clip(out, 0.0, math.pi)
    else:
        out = (x - params.shift) / params.scale
    return Dataset(out, ds.labels, params.feature_names)


def select_features(ds: Dataset, k: int = 8) -> np.ndarray:
    """Indices of the k columns with the largest class-mean separation.

    Score = |mean_1 - mean_0| / (pooled population std + 1e-12); ties
    resolve to the lower column index.  Returned indices are ascending,
    preserving column order for ``take_features``.
    """
    if int(k) < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    x, y = ds.features, ds.labels
    d = x.shape[1]
    if k >= d:
        return np.arange(d)
    ones = y == 1
    zeros = ~ones
    if not ones.any() or not zeros.any():
        raise ValueError("feature selection needs both classes present")
    mu1 = x[ones].mean(axis=0)
    mu0 = x[zeros].mean(axis=0)
    var1 = x[ones].var(axis=0)
    var0 = x[zeros].var(axis=0)
    n1, n0 = int(ones.sum()), int(zeros.sum())
    pooled = np.sqrt((n1 * var1 + n0 * var0) / (n1 + n0))
    score = np.abs(mu1 - mu0) / (pooled + 1e-12)
    # Stable sort on negated scores keeps the lower index first on ties.
    ranked = np.argsort(-score, kind="stable")[: int(k)]
    return np.sort(ranked)


def take_features(ds: Dataset, indices) -> Dataset:
    idx = [int(i) for i in indices]
    return Dataset(
        ds.features[:, idx],
        ds.labels,
        tuple(ds.feature_names[i] for i in idx),
    )


# -- cache files used by the CLI ---------------------------------------------


def save_dataset(directory, ds: Dataset) -> None:
    """Write features.npy / labels.npy / feature_names.json (all
    byte-deterministic for identical inputs, written atomically)."""
    from io import BytesIO

    from .artifacts import write_bytes_atomic, write_text_atomic

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, arr in (("features.npy", ds.features), ("labels.npy", ds.labels)):
        buf = BytesIO()
        np.save(buf, arr)
        write_bytes_atomic(directory / name, buf.getvalue())
    write_text_atomic(
        directory / "feature_names.json",
        json.dumps(list(ds.feature_names), indent=2) + "\n",
    )


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    feat_path = directory / "features.npy"
    if not feat_path.exists():
        raise ValueError(
            f"no cached dataset under {directory} (run the ingest command first)"
        )
    features = np.load(feat_path)
    labels = np.load(directory / "labels.npy")
    names = tuple(json.loads((directory / "feature_names.json").read_text()))
    return Dataset(features, labels, names)
