"""Tabular case data: schemas, CSV ingestion, scaling, splitting, resampling.

Cases are company-year observations with a fixed-width numeric feature
vector (missing slots allowed) and an optional binary solvency label
(0 = solvent, 1 = insolvent).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

SOLVENT = 0
INSOLVENT = 1
UNLABELED = -1

# Cell contents parsed as a missing value (case-insensitive, after strip).
MISSING_SENTINELS = frozenset({"", "-", "na", "nan"})


class DataError(ValueError):
    """Raised for malformed input data (bad CSV, schema mismatch, ...)."""


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature list. ``codes`` are optional short aliases (VAR1, ...)."""

    names: tuple[str, ...]
    units: tuple[str, ...] | None = None
    codes: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.names) < 1:
            raise DataError("schema needs at least one feature")
        lowered = [n.lower() for n in self.names]
        if len(set(lowered)) != len(lowered):
            raise DataError("feature names must be unique (case-insensitive)")
        for attr in ("units", "codes"):
            val = getattr(self, attr)
            if val is not None and len(val) != len(self.names):
                raise DataError(f"{attr} length must match feature count")

    @property
    def n_features(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        """Resolve a feature by name or code, case-insensitively."""
        key = name.strip().lower()
        for i, n in enumerate(self.names):
            if n.lower() == key:
                return i
        if self.codes is not None:
            for i, c in enumerate(self.codes):
                if c.lower() == key:
                    return i
        raise KeyError(f"unknown feature: {name!r}")

    def display(self, j: int) -> str:
        return self.names[j]

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "units": list(self.units) if self.units else None,
            "codes": list(self.codes) if self.codes else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(
            names=tuple(d["names"]),
            units=tuple(d["units"]) if d.get("units") else None,
            codes=tuple(d["codes"]) if d.get("codes") else None,
        )

    @classmethod
    def generic(cls, n: int) -> "FeatureSchema":
        return cls(names=tuple(f"VAR{i + 1}" for i in range(n)))


_FINANCIAL_FEATURES = [
    ("Cash", "kEUR"),
    ("Inventories", "kEUR"),
    ("Current assets", "kEUR"),
    ("Tangible assets", "kEUR"),
    ("Intangible assets", "kEUR"),
    ("Total assets", "kEUR"),
    ("Accounts receivable (A.R.)", "kEUR"),
    ("Lands and buildings", "kEUR"),
    ("Equity", "kEUR"),
    ("Shareholder loan", "kEUR"),
    ("Accrual for pension liabilities", "kEUR"),
    ("Total current liabilities", "kEUR"),
    ("Total long-term liabilities", "kEUR"),
    ("Bank debt", "kEUR"),
    ("Accounts payable (A.P.)", "kEUR"),
    ("Sales", "kEUR"),
    ("Administrative expenses", "kEUR"),
    ("Amortization depreciation", "kEUR"),
    ("Interest expenses", "kEUR"),
    ("EBIT", "kEUR"),
    ("Operating income", "kEUR"),
    ("Net income", "kEUR"),
    ("Increase inventories", "kEUR"),
    ("Increase liabilities", "kEUR"),
    ("Increase cash", "kEUR"),
    ("A.R. against affiliated companies", "kEUR"),
    ("A.P. against affiliated companies", "kEUR"),
    ("Number of employees", "thousand"),
]


def financial_statement_schema() -> FeatureSchema:
    """The 28-slot annual-statement schema used for insolvency prediction."""
    return FeatureSchema(
        names=tuple(n for n, _ in _FINANCIAL_FEATURES),
        units=tuple(u for _, u in _FINANCIAL_FEATURES),
        codes=tuple(f"VAR{i + 1}" for i in range(len(_FINANCIAL_FEATURES))),
    )


@dataclass(frozen=True)
class Case:
    """One company-year observation."""

    id: str
    values: np.ndarray  # (L,) float64, NaN marks a missing slot
    label: Optional[int] = None  # 0 solvent, 1 insolvent
    year: Optional[int] = None

    def __post_init__(self):
        if self.label is not None and self.label not in (SOLVENT, INSOLVENT):
            raise DataError(f"label must be 0 or 1, got {self.label}")


@dataclass
class Dataset:
    """A case base: schema plus aligned id/feature/label arrays.

    ``labels`` uses -1 for unlabeled cases; ``X`` uses NaN for missing slots.
    """

    schema: FeatureSchema
    ids: list[str]
    X: np.ndarray  # (n, L) float64
    labels: np.ndarray  # (n,) int8
    years: Optional[np.ndarray] = None  # (n,) int32
    provenance: str = ""

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        n = len(self.ids)
        if n < 1:
            raise DataError("dataset needs at least one case")
        if self.X.shape != (n, self.schema.n_features):
            raise DataError(
                f"feature matrix shape {self.X.shape} does not match "
                f"{n} cases x {self.schema.n_features} features"
            )
        if self.labels.shape != (n,):
            raise DataError("labels length must match case count")
        bad = ~np.isin(self.labels, (SOLVENT, INSOLVENT, UNLABELED))
        if bad.any():
            raise DataError("labels must be 0, 1 or -1 (unlabeled)")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_features(self) -> int:
        return self.schema.n_features

    @property
    def fully_labeled(self) -> bool:
        return bool((self.labels != UNLABELED).all())

    def case(self, i: int) -> Case:
        return Case(
            id=self.ids[i],
            values=self.X[i].copy(),
            label=None if self.labels[i] == UNLABELED else int(self.labels[i]),
            year=None if self.years is None else int(self.years[i]),
        )

    def subset(self, idx: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(
            schema=self.schema,
            ids=[self.ids[i] for i in idx],
            X=self.X[idx].copy(),
            labels=self.labels[idx].copy(),
            years=None if self.years is None else self.years[idx].copy(),
            provenance=self.provenance,
        )

    def class_counts(self) -> tuple[int, int]:
        """(solvent, insolvent) counts among labeled cases."""
        return (
            int((self.labels == SOLVENT).sum()),
            int((self.labels == INSOLVENT).sum()),
        )

    def index_of_id(self, case_id: str) -> int:
        try:
            return self.ids.index(case_id)
        except ValueError:
            raise KeyError(f"unknown case id: {case_id!r}") from None

    def require_labels(self):
        if not self.fully_labeled:
            i = int(np.argmax(self.labels == UNLABELED))
            raise DataError(f"case {self.ids[i]!r} has no label")

    def append_case(self, case: Case) -> "Dataset":
        """Retain a solved case: returns a new base with ``case`` appended."""
        if case.values.shape != (self.n_features,):
            raise DataError("case width does not match schema")
        return Dataset(
            schema=self.schema,
            ids=self.ids + [case.id],
            X=np.vstack([self.X, case.values[None, :]]),
            labels=np.append(
                self.labels, UNLABELED if case.label is None else case.label
            ),
            years=None
            if self.years is None
            else np.append(self.years, -1 if case.year is None else case.year),
            provenance=self.provenance,
        )


def _parse_cell(text: str, column: str, row: int) -> float:
    stripped = text.strip()
    if stripped.lower() in MISSING_SENTINELS:
        return float("nan")
    try:
        return float(stripped)
    except ValueError:
        raise DataError(
            f"non-numeric value {text!r} in column {column!r}, data row {row}"
        ) from None


def load_csv(
    path: str | Path,
    schema: FeatureSchema,
    require_labels: bool = True,
) -> Dataset:
    """Read a case CSV (UTF-8, header row; one case per row).

    Feature columns are matched to schema names or codes case-insensitively
    and may appear in any order. ``id`` and ``year`` columns are optional;
    the ``label`` column is required unless ``require_labels`` is False.
    Empty cells and the sentinels "-", "NA", "NaN" parse as missing.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: zero data rows")

    lowered = [h.strip().lower() for h in header]
    col_of = {}
    for j, name in enumerate(schema.names):
        candidates = [name.lower()]
        if schema.codes is not None:
            candidates.append(schema.codes[j].lower())
        hit = next((lowered.index(c) for c in candidates if c in lowered), None)
        if hit is None:
            raise DataError(f"{path}: missing column {name!r}")
        col_of[j] = hit
    id_col = lowered.index("id") if "id" in lowered else None
    year_col = lowered.index("year") if "year" in lowered else None
    label_col = lowered.index("label") if "label" in lowered else None
    if require_labels and label_col is None:
        raise DataError(f"{path}: missing column 'label'")

    n, L = len(rows), schema.n_features
    X = np.full((n, L), np.nan)
    labels = np.full(n, UNLABELED, dtype=np.int8)
    ids = []
    years = np.full(n, -1, dtype=np.int32) if year_col is not None else None
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}")
        ids.append(row[id_col].strip() if id_col is not None else f"case-{i + 1}")
        for j in range(L):
            X[i, j] = _parse_cell(row[col_of[j]], schema.names[j], i + 1)
        if label_col is not None:
            cell = row[label_col].strip()
            if cell.lower() in MISSING_SENTINELS:
                if require_labels:
                    raise DataError(f"{path}: row {i + 1} has no label")
            elif cell not in ("0", "1"):
                raise DataError(f"{path}: row {i + 1} label must be 0 or 1, got {cell!r}")
            else:
                labels[i] = int(cell)
        if year_col is not None:
            cell = row[year_col].strip()
            if cell.lower() not in MISSING_SENTINELS:
                try:
                    years[i] = int(float(cell))
                except ValueError:
                    raise DataError(f"{path}: row {i + 1} has bad year {cell!r}") from None
    return Dataset(
        schema=schema, ids=ids, X=X, labels=labels, years=years,
        provenance=str(path),
    )


def save_csv(data: Dataset, path: str | Path):
    """Write a Dataset in the same CSV layout ``load_csv`` reads."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["id"]
        if data.years is not None:
            header.append("year")
        header.extend(data.schema.names)
        header.append("label")
        writer.writerow(header)
        for i in range(len(data)):
            row = [data.ids[i]]
            if data.years is not None:
                row.append("" if data.years[i] < 0 else str(int(data.years[i])))
            for v in data.X[i]:
                row.append("" if np.isnan(v) else repr(float(v)))
            row.append("" if data.labels[i] == UNLABELED else str(int(data.labels[i])))
            writer.writerow(row)


@dataclass(frozen=True)
class ScalingParams:
    """Per-feature min/max fitted on training data; range = max - min."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        if np.any(self.maxs < self.mins):
            raise DataError("scaler max < min")

    @property
    def ranges(self) -> np.ndarray:
        return self.maxs - self.mins

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingParams":
        return cls(mins=np.asarray(d["mins"], float), maxs=np.asarray(d["maxs"], float))


def fit_scaler(train: Dataset) -> ScalingParams:
    """Per-feature min/max over non-missing training values."""
    all_missing = np.isnan(train.X).all(axis=0)
    if all_missing.any():
        j = int(np.argmax(all_missing))
        raise DataError(f"feature {train.schema.names[j]!r} is entirely missing")
    with np.errstate(all="ignore"):
        mins = np.nanmin(train.X, axis=0)
        maxs = np.nanmax(train.X, axis=0)
    return ScalingParams(mins=mins, maxs=maxs)


def apply_scaler(data: Dataset, params: ScalingParams) -> Dataset:
    """Map values into [0, 1]: (v - min) / range, clipped.

    Out-of-range values clip to the nearest endpoint; constant features
    (range 0) map to 0.5; missing slots stay missing.
    """
    if params.mins.shape != (data.n_features,):
        raise DataError("scaler width does not match schema")
    ranges = params.ranges
    safe = np.where(ranges > 0, ranges, 1.0)
    scaled = np.clip((data.X - params.mins) / safe, 0.0, 1.0)
    scaled = np.where(ranges > 0, scaled, 0.5)
    scaled = np.where(np.isnan(data.X), np.nan, scaled)
    out = replace(data)
    out.X = scaled
    return out


def scale_values(values: np.ndarray, params: ScalingParams) -> np.ndarray:
    """Scale a single raw feature vector with the apply_scaler rules."""
    ranges = params.ranges
    safe = np.where(ranges > 0, ranges, 1.0)
    scaled = np.clip((np.asarray(values, float) - params.mins) / safe, 0.0, 1.0)
    scaled = np.where(ranges > 0, scaled, 0.5)
    return np.where(np.isnan(values), np.nan, scaled)


def stratified_split(
    data: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Class-preserving train/test split; deterministic for a given seed.

    Per class, round(fraction * count) cases go to the test side. Output
    row order follows the input order.
    """
    if not 0 < test_fraction < 1:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    data.require_labels()
    rng = np.random.default_rng(seed)
    test_mask = np.zeros(len(data), dtype=bool)
    for cls in (SOLVENT, INSOLVENT):
        idx = np.flatnonzero(data.labels == cls)
        if idx.size == 0:
            continue
        n_test = int(round(test_fraction * idx.size))
        chosen = rng.permutation(idx)[:n_test]
        test_mask[chosen] = True
    train_idx = np.flatnonzero(~test_mask)
    test_idx = np.flatnonzero(test_mask)
    if train_idx.size == 0 or test_idx.size == 0:
        raise DataError("split produced an empty partition")
    return data.subset(train_idx), data.subset(test_idx)


def random_undersample(data: Dataset, seed: int) -> Dataset:
    """Balance classes by dropping random majority-class cases.

    The minority class is kept intact; sampling is without replacement and
    deterministic for a given seed. Input row order is preserved.
    """
    data.require_labels()
    n_solvent, n_insolvent = data.class_counts()
    if n_solvent == 0 or n_insolvent == 0:
        raise DataError("undersampling needs both classes present")
    if n_solvent == n_insolvent:
        return data.subset(np.arange(len(data)))
    minority = INSOLVENT if n_insolvent < n_solvent else SOLVENT
    majority = SOLVENT if minority == INSOLVENT else INSOLVENT
    rng = np.random.default_rng(seed)
    maj_idx = np.flatnonzero(data.labels == majority)
    keep_maj = rng.choice(maj_idx, size=min(n_solvent, n_insolvent), replace=False)
    keep = np.sort(np.concatenate([np.flatnonzero(data.labels == minority), keep_maj]))
    return data.subset(keep)


def stratified_folds(labels: np.ndarray, n_folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified fold assignment; returns index arrays."""
    if n_folds < 2:
        raise DataError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in (SOLVENT, INSOLVENT):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        for pos, i in enumerate(idx):
            folds[pos % n_folds].append(int(i))
    return [np.array(sorted(f), dtype=np.intp) for f in folds]
