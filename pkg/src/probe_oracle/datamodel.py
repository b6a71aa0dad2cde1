"""Core data types and file formats.

A study couples a probe matrix (models x probing features, values are
accuracies) with a score table (models x fine-tune tasks).  Rows and columns
are held in canonical order no matter how the inputs were arranged, so
downstream numerics never depend on file layout.
"""

import csv
import enum
import io
import json
import re
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateKey,
    MalformedFile,
    MissingCell,
    ModelMismatch,
    NonFinite,
    UnknownTask,
    ValueOutOfRange,
)

_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9.+-]*$")


class ProbeMethod(enum.Enum):
    BEST_BY_DEV = "BestByDev"
    LOGREG = "LogReg"
    MLP10 = "MLP10"
    MLP20 = "MLP20"
    RANDOM_FOREST_10 = "RandomForest10"
    RANDOM_FOREST_100 = "RandomForest100"
    DECISION_TREE = "DecisionTree"
    SVM = "SVM"

    @property
    def order(self):
        return _METHOD_ORDER[self]


_METHOD_ORDER = {m: i for i, m in enumerate(ProbeMethod)}
_METHOD_BY_NAME = {m.value: m for m in ProbeMethod}

# classifiers eligible inside the battery, in tie-break order
CLASSIFIER_METHODS = tuple(m for m in ProbeMethod if m is not ProbeMethod.BEST_BY_DEV)


@dataclass(frozen=True, order=True)
class ModelId:
    """Identity of one fine-tuned model.  family defaults to name."""

    name: str
    variant: str = ""
    family: str = ""

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueOutOfRange(f"bad model name: {self.name!r}")
        for part in (self.variant, self.family):
            if part and not _NAME_RE.match(part):
                raise ValueOutOfRange(f"bad model id component: {part!r}")
        if self.family == self.name:
            object.__setattr__(self, "family", "")

    @property
    def family_name(self):
        return self.family or self.name

    def render(self):
        if self.family:
            return f"{self.name}/{self.variant}/{self.family}"
        if self.variant:
            return f"{self.name}/{self.variant}"
        return self.name

    @classmethod
    def parse(cls, text):
        parts = text.split("/")
        if len(parts) == 1:
            return cls(parts[0])
        if len(parts) == 2:
            return cls(parts[0], parts[1])
        if len(parts) == 3:
            return cls(parts[0], parts[1], parts[2])
        raise MalformedFile(f"cannot parse model id: {text!r}")


@dataclass(frozen=True)
class FeatureId:
    """One probing feature: task, layer, and which classifier produced it."""

    task: str
    layer: int
    method: ProbeMethod = ProbeMethod.BEST_BY_DEV

    def __post_init__(self):
        # underscores are the render separator, so task names must not use them
        if not _NAME_RE.match(self.task):
            raise ValueOutOfRange(f"bad probing task name: {self.task!r}")
        if not isinstance(self.layer, (int, np.integer)) or self.layer < 0:
            raise ValueOutOfRange(f"bad layer: {self.layer!r}")
        object.__setattr__(self, "layer", int(self.layer))
        if not isinstance(self.method, ProbeMethod):
            raise ValueOutOfRange(f"bad probe method: {self.method!r}")

    @property
    def sort_key(self):
        return (self.task, self.layer, self.method.order)

    def render(self):
        if self.method is ProbeMethod.BEST_BY_DEV:
            return f"{self.task}_{self.layer}"
        return f"{self.task}_{self.layer}_{self.method.value}"

    @classmethod
    def parse(cls, text):
        parts = text.split("_")
        method = ProbeMethod.BEST_BY_DEV
        if len(parts) >= 3 and parts[-1] in _METHOD_BY_NAME:
            method = _METHOD_BY_NAME[parts[-1]]
            parts = parts[:-1]
        if len(parts) != 2:
            raise MalformedFile(f"cannot parse feature id: {text!r}")
        task, layer = parts
        try:
            layer = int(layer)
        except ValueError:
            raise MalformedFile(f"cannot parse feature id: {text!r}") from None
        return cls(task, layer, method)


@dataclass(frozen=True)
class StudyConfig:
    """Knobs shared across a study; everything downstream is seeded from here."""

    seed: int = 0
    folds: int = 5
    control_draws: int = 100
    control_sigma_sq: float = 0.1
    control_scale: str = "variance"  # or "sigma": how control_sigma_sq is read
    samples_per_class: int = 1200
    subset_cap: int = 10_000_000

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueOutOfRange(f"seed must fit in u64, got {self.seed}")
        if self.folds < 2:
            raise ValueOutOfRange(f"folds must be >= 2, got {self.folds}")
        if self.control_draws < 1:
            raise ValueOutOfRange(f"control_draws must be >= 1, got {self.control_draws}")
        if not (np.isfinite(self.control_sigma_sq) and self.control_sigma_sq > 0):
            raise ValueOutOfRange(f"control_sigma_sq must be positive, got {self.control_sigma_sq}")
        if self.control_scale not in ("variance", "sigma"):
            raise ValueOutOfRange(f"control_scale must be 'variance' or 'sigma', got {self.control_scale!r}")
        if self.samples_per_class < 1:
            raise ValueOutOfRange(f"samples_per_class must be >= 1, got {self.samples_per_class}")
        if self.subset_cap < 1:
            raise ValueOutOfRange(f"subset_cap must be >= 1, got {self.subset_cap}")

    @property
    def control_sigma(self):
        """Standard deviation of control features under the configured reading."""
        if self.control_scale == "variance":
            return float(np.sqrt(self.control_sigma_sq))
        return float(self.control_sigma_sq)


def _float_cell(text, where):
    if text == "":
        raise MissingCell(f"empty cell at {where}")
    try:
        return float(text)
    except ValueError:
        raise MalformedFile(f"bad number {text!r} at {where}") from None


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(np.atleast_2d(values)))[0]
        raise NonFinite(f"non-finite value in {what} at {tuple(int(i) for i in bad)}")


def _canonical_rows(models, values):
    order = sorted(range(len(models)), key=lambda i: (models[i].name, models[i].variant, models[i].family))
    return tuple(models[i] for i in order), values[order]


class ProbeMatrix:
    """Models x probing features, entries are accuracies in [0, 1]."""

    def __init__(self, models, features, values):
        models = tuple(models)
        features = tuple(features)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(models), len(features)):
            raise DimensionMismatch(
                f"values shape {values.shape} does not match {len(models)} models x {len(features)} features"
            )
        if len(models) == 0 or len(features) == 0:
            raise DimensionMismatch("probe matrix needs at least one model and one feature")
        if len(set(models)) != len(models):
            raise DuplicateKey("duplicate model id in probe matrix")
        if len(set(features)) != len(features):
            raise DuplicateKey("duplicate feature id in probe matrix")
        _check_finite(values, "probe matrix")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueOutOfRange("probe accuracies must lie in [0, 1]")
        models, values = _canonical_rows(models, values)
        col_order = sorted(range(len(features)), key=lambda j: features[j].sort_key)
        self.models = models
        self.features = tuple(features[j] for j in col_order)
        self.values = np.ascontiguousarray(values[:, col_order])
        self.values.flags.writeable = False

    def __eq__(self, other):
        return (
            isinstance(other, ProbeMatrix)
            and self.models == other.models
            and self.features == other.features
            and np.array_equal(self.values, other.values)
        )

    def column(self, feature):
        try:
            j = self.features.index(feature)
        except ValueError:
            raise UnknownTask(f"feature {feature.render()} not in probe matrix") from None
        return self.values[:, j]

    def restrict(self, features):
        """Submatrix with the given feature columns, in the given order."""
        idx = []
        for f in features:
            try:
                idx.append(self.features.index(f))
            except ValueError:
                raise UnknownTask(f"feature {f.render()} not in probe matrix") from None
        return np.ascontiguousarray(self.values[:, idx])

    def with_method(self, method):
        """Features carrying the given probe method, in canonical order."""
        return tuple(f for f in self.features if f.method is method)

    def save_csv(self, path):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model"] + [f.render() for f in self.features])
        for i, m in enumerate(self.models):
            w.writerow([m.render()] + [repr(float(v)) for v in self.values[i]])
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())

    @classmethod
    def load_csv(cls, path):
        rows = _read_csv_rows(path)
        if not rows or not rows[0] or rows[0][0] != "model":
            raise MalformedFile(f"{path}: first header cell must be 'model'")
        features = [FeatureId.parse(cell) for cell in rows[0][1:]]
        models, values = [], []
        for r, row in enumerate(rows[1:], start=2):
            if len(row) != len(rows[0]):
                raise MalformedFile(f"{path}: row {r} has {len(row)} cells, expected {len(rows[0])}")
            models.append(ModelId.parse(row[0]))
            values.append([_float_cell(c, f"{path}:{r}") for c in row[1:]])
        return cls(models, features, np.array(values, dtype=np.float64))

    def to_json_obj(self):
        return {
            "models": [{"name": m.name, "variant": m.variant, "family": m.family} for m in self.models],
            "features": [
                {"task": f.task, "layer": f.layer, "method": f.method.value} for f in self.features
            ],
            "values": [[float(v) for v in row] for row in self.values],
        }

    def save_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_obj(cls, obj):
        try:
            models = [ModelId(d["name"], d.get("variant", ""), d.get("family", "")) for d in obj["models"]]
            features = [
                FeatureId(d["task"], d["layer"], _METHOD_BY_NAME[d.get("method", "BestByDev")])
                for d in obj["features"]
            ]
            values = np.array(obj["values"], dtype=np.float64)
        except (KeyError, TypeError) as exc:
            raise MalformedFile(f"bad probe matrix json: {exc}") from None
        return cls(models, features, values)

    @classmethod
    def load_json(cls, path):
        return cls.from_json_obj(_read_json(path))

    def save(self, path):
        _dispatch_save(self, path)

    @classmethod
    def load(cls, path):
        return _dispatch_load(cls, path)


class ScoreTable:
    """Models x fine-tune tasks, entries are finite performance scores."""

    def __init__(self, models, tasks, values):
        models = tuple(models)
        tasks = tuple(tasks)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(models), len(tasks)):
            raise DimensionMismatch(
                f"values shape {values.shape} does not match {len(models)} models x {len(tasks)} tasks"
            )
        if len(models) == 0 or len(tasks) == 0:
            raise DimensionMismatch("score table needs at least one model and one task")
        if len(set(models)) != len(models):
            raise DuplicateKey("duplicate model id in score table")
        if len(set(tasks)) != len(tasks):
            raise DuplicateKey("duplicate task in score table")
        for t in tasks:
            if not _NAME_RE.match(t):
                raise ValueOutOfRange(f"bad task name: {t!r}")
        _check_finite(values, "score table")
        models, values = _canonical_rows(models, values)
        col_order = sorted(range(len(tasks)), key=lambda j: tasks[j])
        self.models = models
        self.tasks = tuple(tasks[j] for j in col_order)
        self.values = np.ascontiguousarray(values[:, col_order])
        self.values.flags.writeable = False

    def __eq__(self, other):
        return (
            isinstance(other, ScoreTable)
            and self.models == other.models
            and self.tasks == other.tasks
            and np.array_equal(self.values, other.values)
        )

    def column(self, task):
        try:
            j = self.tasks.index(task)
        except ValueError:
            raise UnknownTask(f"task {task!r} not in score table") from None
        return self.values[:, j]

    def save_csv(self, path):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model"] + list(self.tasks))
        for i, m in enumerate(self.models):
            w.writerow([m.render()] + [repr(float(v)) for v in self.values[i]])
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())

    @classmethod
    def load_csv(cls, path):
        rows = _read_csv_rows(path)
        if not rows or not rows[0] or rows[0][0] != "model":
            raise MalformedFile(f"{path}: first header cell must be 'model'")
        tasks = rows[0][1:]
        models, values = [], []
        for r, row in enumerate(rows[1:], start=2):
            if len(row) != len(rows[0]):
                raise MalformedFile(f"{path}: row {r} has {len(row)} cells, expected {len(rows[0])}")
            models.append(ModelId.parse(row[0]))
            values.append([_float_cell(c, f"{path}:{r}") for c in row[1:]])
        return cls(models, tasks, np.array(values, dtype=np.float64))

    def to_json_obj(self):
        return {
            "models": [{"name": m.name, "variant": m.variant, "family": m.family} for m in self.models],
            "tasks": list(self.tasks),
            "values": [[float(v) for v in row] for row in self.values],
        }

    def save_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_obj(cls, obj):
        try:
            models = [ModelId(d["name"], d.get("variant", ""), d.get("family", "")) for d in obj["models"]]
            tasks = list(obj["tasks"])
            values = np.array(obj["values"], dtype=np.float64)
        except (KeyError, TypeError) as exc:
            raise MalformedFile(f"bad score table json: {exc}") from None
        return cls(models, tasks, values)

    @classmethod
    def load_json(cls, path):
        return cls.from_json_obj(_read_json(path))

    def save(self, path):
        _dispatch_save(self, path)

    @classmethod
    def load(cls, path):
        return _dispatch_load(cls, path)


def _read_csv_rows(path):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise MalformedFile(f"cannot read {path}: {exc}") from None
    except UnicodeDecodeError:
        raise MalformedFile(f"{path} is not utf-8 text") from None


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise MalformedFile(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: invalid json: {exc}") from None


def _dispatch_save(obj, path):
    p = str(path)
    if p.endswith(".json"):
        obj.save_json(path)
    else:
        obj.save_csv(path)


def _dispatch_load(cls, path):
    p = str(path)
    if p.endswith(".json"):
        return cls.load_json(path)
    return cls.load_csv(path)


def join(pm, st, task):
    """Align a probe matrix with one score column; returns (X, y).

    Model sets must agree exactly; both sides are already in canonical row
    order, so after the set check rows line up index by index.
    """
    if set(pm.models) != set(st.models):
        only_pm = sorted(m.render() for m in set(pm.models) - set(st.models))
        only_st = sorted(m.render() for m in set(st.models) - set(pm.models))
        raise ModelMismatch(
            f"model sets differ; only in probe matrix: {only_pm}; only in score table: {only_st}"
        )
    y = st.column(task)
    return np.array(pm.values, dtype=np.float64), np.array(y, dtype=np.float64)


# ---------------------------------------------------------------------------
# embedding datasets and their binary container

SPLIT_NAMES = ("train", "dev", "test")
_MAGIC = b"PEMB"
_VERSION = 1


@dataclass
class EmbeddingDataset:
    """Vectors and labels for one (model, probing task, layer) triple."""

    dim: int
    class_count: int
    splits: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueOutOfRange(f"dim must be >= 1, got {self.dim}")
        if self.class_count < 2:
            raise ValueOutOfRange(f"class_count must be >= 2, got {self.class_count}")
        if set(self.splits) != set(SPLIT_NAMES):
            raise DimensionMismatch(f"splits must be exactly {SPLIT_NAMES}, got {sorted(self.splits)}")
        norm = {}
        for name in SPLIT_NAMES:
            x, y = self.splits[name]
            x = np.ascontiguousarray(np.asarray(x, dtype=np.float32))
            y = np.ascontiguousarray(np.asarray(y, dtype=np.int32))
            if x.ndim != 2 or x.shape[1] != self.dim:
                raise DimensionMismatch(f"{name} vectors must be (n, {self.dim}), got {x.shape}")
            if y.shape != (x.shape[0],):
                raise DimensionMismatch(f"{name} labels must align with vectors")
            _check_finite(x, f"{name} vectors")
            if y.size and (y.min() < 0 or y.max() >= self.class_count):
                raise ValueOutOfRange(f"{name} labels must lie in [0, {self.class_count})")
            norm[name] = (x, y)
        xtr, ytr = norm["train"]
        if xtr.shape[0] == 0:
            raise DimensionMismatch("train split is empty")
        present = np.unique(ytr)
        if len(present) != self.class_count:
            raise ValueOutOfRange("every class must appear in the train split")
        # cross-split leakage check: identical vectors in two splits
        seen = {}
        for name in SPLIT_NAMES:
            x, _ = norm[name]
            for row in x:
                key = row.tobytes()
                prev = seen.get(key)
                if prev is not None and prev != name:
                    raise DuplicateKey(f"identical vector appears in splits {prev!r} and {name!r}")
                seen[key] = name
        self.splits = norm

    def split(self, name):
        return self.splits[name]

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<HII", _VERSION, self.dim, self.class_count))
            rec = np.dtype([("label", "<u4"), ("vec", "<f4", (self.dim,))])
            for tag, name in enumerate(SPLIT_NAMES):
                x, y = self.splits[name]
                fh.write(struct.pack("<BQ", tag, x.shape[0]))
                block = np.zeros(x.shape[0], dtype=rec)
                block["label"] = y.astype(np.uint32)
                block["vec"] = x
                fh.write(block.tobytes())
            meta = json.dumps(self.metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
            fh.write(struct.pack("<Q", len(meta)))
            fh.write(meta)

    @classmethod
    def load(cls, path):
        try:
            with open(path, "rb") as fh:
                blob = fh.read()
        except OSError as exc:
            raise MalformedFile(f"cannot read {path}: {exc}") from None
        off = 0

        def take(n):
            nonlocal off
            if off + n > len(blob):
                raise MalformedFile(f"{path}: truncated")
            out = blob[off : off + n]
            off += n
            return out

        if take(4) != _MAGIC:
            raise MalformedFile(f"{path}: bad magic")
        version, dim, class_count = struct.unpack("<HII", take(10))
        if version != _VERSION:
            raise MalformedFile(f"{path}: unsupported version {version}")
        rec = np.dtype([("label", "<u4"), ("vec", "<f4", (dim,))])
        splits = {}
        for want_tag, name in enumerate(SPLIT_NAMES):
            tag, count = struct.unpack("<BQ", take(9))
            if tag != want_tag:
                raise MalformedFile(f"{path}: expected split tag {want_tag}, got {tag}")
            block = np.frombuffer(take(count * rec.itemsize), dtype=rec)
            splits[name] = (
                block["vec"].astype(np.float32),
                block["label"].astype(np.int32),
            )
        (meta_len,) = struct.unpack("<Q", take(8))
        meta_raw = take(meta_len)
        if off != len(blob):
            raise MalformedFile(f"{path}: {len(blob) - off} trailing bytes")
        try:
            metadata = json.loads(meta_raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedFile(f"{path}: bad metadata block: {exc}") from None
        return cls(dim=dim, class_count=class_count, splits=splits, metadata=metadata)
