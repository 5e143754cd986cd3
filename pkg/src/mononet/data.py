"""Tabular data: descriptors, CSV ingestion, normalisation, splits, synthetic data.

A :class:`DatasetDescriptor` names the feature columns, the target and the
monotone direction of each feature.  Categorical columns listed in
``categorical`` are one-hot encoded at load time (one column per level, in
the listed order, named ``"<col>=<level>"``); encoded columns are free.
"""
import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

MISSING = ("?", "")


class DataError(ValueError):
    """Raised for unreadable or inconsistent tabular input."""


@dataclass
class DatasetDescriptor:
    name: str
    task: str  # "regression" | "classification"
    feature_names: list
    indicator: list
    target: str
    categorical: dict = field(default_factory=dict)
    n_classes: int = 2
    binarize_target: bool = False
    target_quantile_filter: float | None = None
    normalization: dict | None = None
    notes: str = ""

    def __post_init__(self):
        if self.task not in ("regression", "classification"):
            raise ValueError(f"task must be regression or classification, got {self.task!r}")
        if len(self.indicator) != len(self.feature_names):
            raise ValueError(
                f"indicator length {len(self.indicator)} does not match {len(self.feature_names)} features")
        if any(v not in (-1, 0, 1) for v in self.indicator):
            raise ValueError("indicator entries must be in {-1, 0, 1}")
        for col in self.categorical:
            if col not in self.feature_names:
                raise ValueError(f"categorical column {col!r} is not a feature")
            if self.indicator[self.feature_names.index(col)] != 0:
                raise ValueError(f"categorical column {col!r} cannot be monotone")

    def encoded_names(self):
        names = []
        for col in self.feature_names:
            if col in self.categorical:
                names.extend(f"{col}={_fmt(level)}" for level in self.categorical[col])
            else:
                names.append(col)
        return names

    def encoded_indicator(self):
        t = []
        for col, v in zip(self.feature_names, self.indicator):
            t.extend([0] * len(self.categorical[col]) if col in self.categorical else [v])
        return t

    @property
    def head(self) -> str:
        if self.task == "regression":
            return "linear"
        return "sigmoid" if self.n_classes == 2 else "softmax"

    @property
    def n_outputs(self) -> int:
        if self.task == "regression":
            return 1
        return 1 if self.n_classes == 2 else self.n_classes

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (json.JSONDecodeError, TypeError) as exc:
            raise DataError(f"{path}: invalid descriptor ({exc})") from exc


def _fmt(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


@dataclass
class TabularDataset:
    X: np.ndarray
    y: np.ndarray
    descriptor: DatasetDescriptor
    dropped: int = 0

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError(f"row mismatch: X {self.X.shape}, y {self.y.shape}")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y.astype(np.float64)))):
            raise DataError("dataset contains non-finite values")

    def __len__(self):
        return self.X.shape[0]

    @property
    def columns(self):
        return self.descriptor.encoded_names()

    @property
    def indicator(self):
        return self.descriptor.encoded_indicator()

    def subset(self, idx):
        return replace(self, X=self.X[idx], y=self.y[idx], dropped=0)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def load_csv(path, descriptor: DatasetDescriptor) -> TabularDataset:
    """Read a headed CSV; rows with a ``?`` or empty needed cell are dropped."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"CSV file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        needed = list(descriptor.feature_names) + [descriptor.target]
        missing = [c for c in needed if c not in header]
        if missing:
            raise DataError(f"{path}: header lacks columns {missing}")
        pos = {c: header.index(c) for c in needed}
        rows, targets, dropped = [], [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, found {len(row)}")
            cells = {c: row[pos[c]].strip() for c in needed}
            if any(v in MISSING for v in cells.values()):
                dropped += 1
                continue
            parsed = {}
            for c, v in cells.items():
                try:
                    parsed[c] = float(v)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: column {c!r} has unparseable value {v!r}") from None
                if not math.isfinite(parsed[c]):
                    raise DataError(f"{path}:{lineno}: column {c!r} is not finite")
            rows.append(_encode_row(parsed, descriptor, path, lineno))
            targets.append(parsed[descriptor.target])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(descriptor.encoded_names()))
    y = _prepare_target(np.array(targets, dtype=np.float64), descriptor)
    if descriptor.target_quantile_filter is not None and len(y):
        keep = y < np.quantile(y, descriptor.target_quantile_filter)
        X, y = X[keep], y[keep]
    return TabularDataset(X, y, descriptor, dropped)


def _encode_row(parsed, d, path, lineno):
    out = []
    for col in d.feature_names:
        v = parsed[col]
        if col in d.categorical:
            levels = [float(level) for level in d.categorical[col]]
            if v not in levels:
                raise DataError(f"{path}:{lineno}: column {col!r} has unknown level {v!r}")
            out.extend(1.0 if v == level else 0.0 for level in levels)
        else:
            out.append(v)
    return out


def _prepare_target(y, d):
    if d.task == "regression":
        return y
    if d.binarize_target:
        return (y > 0).astype(np.int64)
    if np.any(y != np.round(y)) or np.any(y < 0) or np.any(y >= d.n_classes):
        raise DataError(f"class targets must be integers in [0, {d.n_classes})")
    return y.astype(np.int64)


def write_csv(dataset: TabularDataset, path) -> None:
    """Write encoded features plus target; floats keep full precision."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset.columns + [dataset.descriptor.target])
        for x, t in zip(dataset.X, dataset.y):
            w.writerow([repr(float(v)) for v in x] + [repr(t.item())])


def raw_descriptor(dataset: TabularDataset) -> DatasetDescriptor:
    """Descriptor matching the encoded columns written by :func:`write_csv`."""
    d = dataset.descriptor
    return replace(d, feature_names=dataset.columns, indicator=dataset.indicator,
                   categorical={}, binarize_target=False, target_quantile_filter=None)


# ---------------------------------------------------------------------------
# normalisation and splitting
# ---------------------------------------------------------------------------


def normalize(dataset: TabularDataset, stats=None):
    """Z-score features; statistics come from ``dataset`` unless given.

    Returns ``(normalized_dataset, stats)``.  Constant columns keep std 1 so
    they map to zero.
    """
    if stats is None:
        if len(dataset) < 2:
            raise DataError("normalization needs at least two rows")
        std = dataset.X.std(axis=0)
        stats = {"mean": dataset.X.mean(axis=0).tolist(), "std": np.where(std > 0, std, 1.0).tolist()}
    mean = np.asarray(stats["mean"])
    std = np.asarray(stats["std"])
    desc = replace(dataset.descriptor, normalization=stats)
    return replace(dataset, X=(dataset.X - mean) / std, descriptor=desc), stats


def denormalize(X, stats):
    return np.asarray(X, dtype=np.float64) * np.asarray(stats["std"]) + np.asarray(stats["mean"])


def split_80_20(dataset: TabularDataset, seed=0):
    n = len(dataset)
    if n < 5:
        raise DataError(f"need at least 5 rows to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    cut = int(math.floor(0.8 * n))
    return dataset.subset(np.sort(order[:cut])), dataset.subset(np.sort(order[cut:]))


# ---------------------------------------------------------------------------
# built-in descriptors
# ---------------------------------------------------------------------------


def _auto_mpg():
    names = ["cylinders", "displacement", "horsepower", "weight", "acceleration", "model_year", "origin"]
    t = [0, -1, -1, -1, 0, 0, 0]
    return DatasetDescriptor("auto-mpg", "regression", names, t, "mpg",
                             notes="UCI Auto MPG; MPG decreases with displacement, horsepower and weight.")


def _heart():
    names = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach",
             "exang", "oldpeak", "slope", "ca", "thal"]
    t = [0] * 13
    t[names.index("trestbps")] = 1
    t[names.index("chol")] = 1
    cats = {"cp": [1, 2, 3, 4], "restecg": [0, 1, 2], "slope": [1, 2, 3], "thal": [3, 6, 7]}
    return DatasetDescriptor("heart-disease", "classification", names, t, "num", categorical=cats,
                             binarize_target=True,
                             notes="UCI Cleveland heart disease; target num > 0 means disease present.")


def _compas():
    mono = ["priors_count", "juv_fel_count", "juv_misd_count", "juv_other_count"]
    free = ["age", "sex", "c_charge_degree", "race_african_american", "race_asian", "race_caucasian",
            "race_hispanic", "race_native_american", "race_other"]
    return DatasetDescriptor("compas", "classification", mono + free, [1] * 4 + [0] * 9, "two_year_recid",
                             notes="Risk increases with prior adult convictions and juvenile records.")


def _blog():
    names = [f"A{i}" for i in range(1, 277)]
    mono = {f"A{i}" for i in (51, 52, 53, 54, 56, 57, 58, 59)}
    return DatasetDescriptor("blog-feedback", "regression", names, [1 if c in mono else 0 for c in names],
                             "target", target_quantile_filter=0.9,
                             notes="Rows with targets at or above the 90th percentile are dropped.")


def _loan():
    inc = ["pub_rec_bankruptcies", "dti"]
    dec = ["fico_score", "emp_length", "annual_inc"]
    free = [f"x{i:02d}" for i in range(23)]
    return DatasetDescriptor("loan-defaulter", "classification", inc + dec + free,
                             [1, 1, -1, -1, -1] + [0] * 23, "default",
                             notes="Free columns x00..x22 stand in for the remaining 23 preprocessed features.")


BUILTIN = {"auto-mpg": _auto_mpg, "heart-disease": _heart, "compas": _compas,
           "blog-feedback": _blog, "loan-defaulter": _loan}


def builtin_descriptor(name) -> DatasetDescriptor:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise DataError(f"unknown dataset {name!r}; available: {', '.join(sorted(BUILTIN))}") from None


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

SYNTH_CONSTANTS = (0.5, 0.35, 3.3)


def synthetic_target(x, y, a=SYNTH_CONSTANTS[0], b=SYNTH_CONSTANTS[1], c=SYNTH_CONSTANTS[2]):
    """``sign(a) * x**3 + b * sin(c * y)``: increasing in ``x`` when ``a > 0``."""
    return np.sign(a) * np.asarray(x) ** 3 + b * np.sin(c * np.asarray(y))


def synthetic_descriptor():
    return DatasetDescriptor("synthetic", "regression", ["x", "y"], [1, 0], "f")


def generate_synthetic(n_points, noise_std=0.2, seed=0, low=-2.5, high=2.5):
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points}")
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(low, high, size=(n_points, 2))
    f = synthetic_target(X[:, 0], X[:, 1])
    if noise_std > 0:
        f = f + rng.normal(0.0, noise_std, size=n_points)
    return TabularDataset(X, f, synthetic_descriptor())


def synthetic_grid(n=51, low=-2.5, high=2.5):
    """Noiseless evaluation grid over the sampling square."""
    g = np.linspace(low, high, n)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    X = np.column_stack([xx.ravel(), yy.ravel()])
    return TabularDataset(X, synthetic_target(X[:, 0], X[:, 1]), synthetic_descriptor())
