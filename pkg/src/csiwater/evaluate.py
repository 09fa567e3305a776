"""Stratified cross-validation, the five report metrics, and model search.

Metrics follow the detection framing: the toxic/poisoned side is the
positive class. AUC is the Mann-Whitney rank statistic (ties get half
credit), TPR/TNR/F1/accuracy come from the 2x2 confusion table, and all
five are reported as percentages. Three-class runs macro-average the
one-vs-rest binary values; accuracy stays the overall fraction correct.

Per fold, every fitted statistic (normalisation, model parameters) comes
from the training split only.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .csi import CLASS_ORDER, ClassLabel
from .features import Dataset
from .learn import adaboost_train, knn_train, lstm_train, predict_batch, svm_train
from .learn.base import resolve_classes
from .learn.lstm import LstmConfig
from .preprocess import zscore_apply, zscore_fit

METRIC_NAMES = ("auc", "tpr", "tnr", "f1", "accuracy")
METRIC_HEADERS = {"auc": "AUC", "tpr": "TPR", "tnr": "TNR", "f1": "F1-Score",
                  "accuracy": "Accuracy"}
MODEL_DISPLAY = {"knn": "K-NN", "svm": "SVM", "adaboost": "AdaBoost", "lstm": "LSTM"}
SEARCH_FAMILIES = ("knn", "svm", "adaboost")
POISONED = "Poisoned"
CLEAN = "Clean"


class ClassTooSmallError(ValueError):
    """A class has fewer samples than the number of folds."""


class EmptySpaceError(ValueError):
    """No hyperparameter search space exists for the requested family."""


class ScenarioClassMissingError(ValueError):
    """The dataset lacks a class the scenario requires."""


class TrainingFoldError(RuntimeError):
    """Training failed inside cross-validation; carries the fold index."""

    def __init__(self, fold: int, cause: BaseException):
        super().__init__(f"training failed in fold {fold}: {cause}")
        self.fold = fold


# ---------------------------------------------------------------------------
# Fold planning
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    seed: int
    assignment: np.ndarray  # per-sample fold index in [0, k)


def stratified_kfold(labels: Sequence, k: int = 5, seed: int = 0) -> FoldPlan:
    """Assign each sample to one of k folds, stratified by class.

    Within each class the samples are shuffled and dealt so per-fold
    counts differ by at most one; which folds receive the remainder is
    itself randomised. Deterministic given (labels, k, seed).
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    labels = list(labels)
    classes = resolve_classes(labels)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    assignment = np.full(len(labels), -1, dtype=np.intp)
    for cls in classes:
        idx = np.array([i for i, lab in enumerate(labels) if lab == cls], dtype=np.intp)
        if idx.size < k:
            raise ClassTooSmallError(
                f"class {cls!r} has {idx.size} samples, fewer than k={k}"
            )
        shuffled = rng.permutation(idx)
        base, extra = divmod(idx.size, k)
        fold_order = rng.permutation(k)
        start = 0
        for pos, fold in enumerate(fold_order):
            size = base + (1 if pos < extra else 0)
            assignment[shuffled[start : start + size]] = fold
            start += size
    return FoldPlan(k=k, seed=seed, assignment=assignment)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinaryMetrics:
    """The five metrics in percent; NaN plus the flag marks degenerate
    inputs where only one class is present (accuracy stays defined)."""

    auc: float
    tpr: float
    tnr: float
    f1: float
    accuracy: float
    one_class_only: bool = False

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _tie_average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    sorted_v = values[order]
    n = values.size
    boundaries = np.nonzero(np.diff(sorted_v))[0] + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [n]])
    avg = (starts + ends - 1) / 2.0 + 1.0  # 1-based mid-rank per tie group
    ranks = np.empty(n)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def auc_rank(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Mann-Whitney AUC with half credit for ties, as a fraction."""
    pos = np.asarray(pos_scores, dtype=float)
    neg = np.asarray(neg_scores, dtype=float)
    ranks = _tie_average_ranks(np.concatenate([pos, neg]))
    p, n = pos.size, neg.size
    u = ranks[:p].sum() - p * (p + 1) / 2.0
    return u / (p * n)


def binary_metrics(truth: Sequence, predictions: Sequence, scores, positive) -> BinaryMetrics:
    """Confusion-table metrics plus rank AUC; everything in percent.

    ``positive`` names the positive class; ``scores`` rank confidence in
    the positive class (any strictly increasing transform gives the same
    AUC).
    """
    truth = list(truth)
    predictions = list(predictions)
    scores = np.asarray(scores, dtype=float)
    if not (len(truth) == len(predictions) == scores.size >= 1):
        raise ValueError("truth, predictions and scores must have equal length >= 1")

    t_pos = np.array([lab == positive for lab in truth])
    p_pos = np.array([lab == positive for lab in predictions])
    tp = int(np.sum(t_pos & p_pos))
    tn = int(np.sum(~t_pos & ~p_pos))
    fp = int(np.sum(~t_pos & p_pos))
    fn = int(np.sum(t_pos & ~p_pos))

    total = len(truth)
    accuracy = 100.0 * (tp + tn) / total
    one_class = (tp + fn == 0) or (tn + fp == 0)
    if one_class:
        nan = float("nan")
        f1 = nan if tp + fp + fn == 0 else 100.0 * 2 * tp / (2 * tp + fp + fn)
        return BinaryMetrics(nan, nan, nan, f1, accuracy, one_class_only=True)

    tpr = 100.0 * tp / (tp + fn)
    tnr = 100.0 * tn / (tn + fp)
    f1 = 100.0 * 2 * tp / (2 * tp + fp + fn)
    auc = 100.0 * auc_rank(scores[t_pos], scores[~t_pos])
    return BinaryMetrics(auc, tpr, tnr, f1, accuracy)


_REST = object()  # sentinel for one-vs-rest relabelling


def multiclass_metrics(
    truth: Sequence, predictions: Sequence, score_matrix: np.ndarray, classes: Sequence
) -> BinaryMetrics:
    """Macro one-vs-rest average of the binary metrics; overall accuracy."""
    classes = list(classes)
    if len(classes) < 2:
        raise ValueError("multiclass metrics need at least two classes")
    truth = list(truth)
    predictions = list(predictions)
    score_matrix = np.asarray(score_matrix, dtype=float)

    accuracy = 100.0 * np.mean([t == p for t, p in zip(truth, predictions)])
    per_class = []
    for ci, cls in enumerate(classes):
        t = [lab if lab == cls else _REST for lab in truth]
        p = [lab if lab == cls else _REST for lab in predictions]
        per_class.append(binary_metrics(t, p, score_matrix[:, ci], positive=cls))
    return BinaryMetrics(
        auc=float(np.mean([m.auc for m in per_class])),
        tpr=float(np.mean([m.tpr for m in per_class])),
        tnr=float(np.mean([m.tnr for m in per_class])),
        f1=float(np.mean([m.f1 for m in per_class])),
        accuracy=float(accuracy),
        one_class_only=any(m.one_class_only for m in per_class),
    )


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

class ScenarioKind(enum.Enum):
    CLEAN_VS_100PPM = "CleanVs100ppm"
    CLEAN_VS_1000PPM = "CleanVs1000ppm"
    ALL_THREE = "AllThree"


class MulticlassMode(enum.Enum):
    THREE_CLASS = "ThreeClass"
    POISONED_VS_CLEAN = "PoisonedVsClean"


@dataclass(frozen=True)
class Scenario:
    kind: ScenarioKind
    multiclass_mode: MulticlassMode = MulticlassMode.THREE_CLASS

    @property
    def is_binary(self) -> bool:
        return (
            self.kind is not ScenarioKind.ALL_THREE
            or self.multiclass_mode is MulticlassMode.POISONED_VS_CLEAN
        )

    def describe(self) -> str:
        if self.kind is ScenarioKind.ALL_THREE:
            return f"{self.kind.value}/{self.multiclass_mode.value}"
        return self.kind.value


def scenario_arrays(dataset: Dataset, scenario: Scenario):
    """Filter and relabel a dataset for one scenario.

    Returns (X, y, classes, positive) where ``positive`` is None for the
    three-class mode. Raises ScenarioClassMissingError when a required
    class is absent.
    """
    present = set(dataset.labels)
    if scenario.kind is ScenarioKind.CLEAN_VS_100PPM:
        wanted = (ClassLabel.CLEAN, ClassLabel.TOXIC_100PPM)
    elif scenario.kind is ScenarioKind.CLEAN_VS_1000PPM:
        wanted = (ClassLabel.CLEAN, ClassLabel.TOXIC_1000PPM)
    else:
        wanted = CLASS_ORDER
    missing = [c for c in wanted if c not in present]
    if missing:
        raise ScenarioClassMissingError(
            f"scenario {scenario.describe()} needs classes "
            f"{[c.value for c in missing]} absent from the dataset"
        )

    keep = [i for i, lab in enumerate(dataset.labels) if lab in wanted]
    X = dataset.X[keep]
    labels = [dataset.labels[i] for i in keep]

    if scenario.kind is not ScenarioKind.ALL_THREE:
        classes = wanted
        return X, labels, classes, wanted[1]
    if scenario.multiclass_mode is MulticlassMode.POISONED_VS_CLEAN:
        y = [CLEAN if lab is ClassLabel.CLEAN else POISONED for lab in labels]
        return X, y, (CLEAN, POISONED), POISONED
    return X, labels, CLASS_ORDER, None


# ---------------------------------------------------------------------------
# Model specs and cross-validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def describe(self) -> str:
        if not self.params:
            return self.family
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.family}({inner})"


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def train_spec(spec: ModelSpec, X: np.ndarray, y: Sequence, classes, fold_seed: int):
    family = spec.family
    params = dict(spec.params)
    if family == "knn":
        return knn_train(X, y, classes=classes, **params)
    if family == "svm":
        return svm_train(X, y, classes=classes, **params)
    if family == "adaboost":
        return adaboost_train(X, y, classes=classes, **params)
    if family == "lstm":
        cfg = params.get("cfg")
        if cfg is None:
            cfg = LstmConfig(**{k: v for k, v in params.items() if k != "cfg"})
        cfg = LstmConfig(**{**cfg.__dict__, "seed": fold_seed})
        return lstm_train(X, y, cfg=cfg, classes=classes)
    raise ValueError(f"unknown model family {family!r}")


@dataclass
class FoldResult:
    fold: int
    metrics: dict[str, float]
    n_train: int
    n_test: int
    model: object = None
    norm: Optional[tuple[np.ndarray, np.ndarray]] = None


@dataclass
class CvReport:
    scenario: Scenario
    model: ModelSpec
    k: int
    seed: int
    folds: list[FoldResult]
    metrics: dict[str, tuple[float, float]]  # name -> (mean %, sample std %)

    def cell(self, name: str) -> str:
        mean, std = self.metrics[name]
        return f"{mean:.2f}±{std:.2f}"


def _evaluate_fold(fold, plan, X, y, classes, positive, scenario, spec,
                   seed, normalize, keep_models):
    test_mask = plan.assignment == fold
    train_idx = np.nonzero(~test_mask)[0]
    test_idx = np.nonzero(test_mask)[0]
    X_train, X_test = X[train_idx], X[test_idx]
    y_train = [y[i] for i in train_idx]
    y_test = [y[i] for i in test_idx]

    norm = None
    if normalize:
        norm = zscore_fit(X_train)
        X_train = zscore_apply(X_train, *norm)
        X_test = zscore_apply(X_test, *norm)

    fold_seed = _derive_seed(spec.seed, seed, fold)
    try:
        model = train_spec(spec, X_train, y_train, classes, fold_seed)
    except Exception as exc:
        raise TrainingFoldError(fold, exc) from exc

    pred, scores = predict_batch(model, X_test)
    if positive is not None:
        pos_idx = classes.index(positive)
        m = binary_metrics(y_test, pred, scores[:, pos_idx], positive)
    else:
        m = multiclass_metrics(y_test, pred, scores, classes)
    return FoldResult(
        fold=fold,
        metrics=m.as_dict(),
        n_train=len(train_idx),
        n_test=len(test_idx),
        model=model if keep_models else None,
        norm=norm if keep_models else None,
    )


def cross_validate(
    dataset: Dataset,
    scenario: Scenario,
    model_spec: ModelSpec,
    k: int = 5,
    seed: int = 0,
    normalize: bool = False,
    n_jobs: int = 1,
    keep_models: bool = False,
) -> CvReport:
    """Stratified k-fold evaluation of one model spec under a scenario.

    Normalisation statistics and model parameters are fitted per fold on
    the training split only. Fold failures abort the run with the fold
    index attached.
    """
    X, y, classes, positive = scenario_arrays(dataset, scenario)
    plan = stratified_kfold(y, k=k, seed=seed)

    def run(fold: int) -> FoldResult:
        return _evaluate_fold(
            fold, plan, X, y, classes, positive, scenario, model_spec,
            seed, normalize, keep_models,
        )

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            folds = list(pool.map(run, range(k)))
    else:
        folds = [run(fold) for fold in range(k)]

    metrics: dict[str, tuple[float, float]] = {}
    for name in METRIC_NAMES:
        values = np.array([f.metrics[name] for f in folds], dtype=float)
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        metrics[name] = (float(values.mean()), std)
    return CvReport(
        scenario=scenario, model=model_spec, k=k, seed=seed,
        folds=folds, metrics=metrics,
    )


# ---------------------------------------------------------------------------
# Hyperparameter search
# ---------------------------------------------------------------------------

def sample_spec(family: str, rng: np.random.Generator, seed: int) -> ModelSpec:
    if family == "knn":
        params = {
            "k": int(rng.integers(1, 16)),
            "metric": ("euclidean", "correlation")[int(rng.integers(0, 2))],
        }
    elif family == "svm":
        kernel = ("linear", "rbf")[int(rng.integers(0, 2))]
        params = {"kernel": kernel, "C": float(10.0 ** rng.uniform(-2, 3))}
        if kernel == "rbf":
            params["gamma"] = float(10.0 ** rng.uniform(-4, 1))
    elif family == "adaboost":
        params = {
            "n_learners": int(rng.integers(10, 501)),
            "max_splits": int(rng.integers(1, 151)),
            "learn_rate": float(rng.uniform(0.01, 1.0)),
        }
    else:
        raise EmptySpaceError(
            f"no search space for family {family!r} (choose from {SEARCH_FAMILIES})"
        )
    return ModelSpec(family=family, params=params, seed=seed)


def random_search(
    dataset: Dataset,
    scenario: Scenario,
    family: str,
    budget: int = 30,
    seed: int = 0,
    k: int = 5,
) -> ModelSpec:
    """Pick the spec with the best inner-CV mean accuracy over seeded draws.

    All draws are scored on the same folds; ties keep the earlier draw.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if family not in SEARCH_FAMILIES:
        raise EmptySpaceError(
            f"no search space for family {family!r} (choose from {SEARCH_FAMILIES})"
        )
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    best_spec = None
    best_acc = -math.inf
    for _ in range(budget):
        spec = sample_spec(family, rng, seed)
        report = cross_validate(dataset, scenario, spec, k=k, seed=seed)
        acc = report.metrics["accuracy"][0]
        if acc > best_acc:
            best_spec, best_acc = spec, acc
    return best_spec


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

def render_text_report(reports: list[CvReport], config_hash: str = "") -> str:
    """Aligned table, one model per row, columns as in the result tables."""
    if not reports:
        raise ValueError("nothing to render")
    scenario = reports[0].scenario
    header = ["Model"] + [METRIC_HEADERS[m] for m in METRIC_NAMES]
    rows = [
        [MODEL_DISPLAY.get(r.model.family, r.model.family)]
        + [r.cell(m) for m in METRIC_NAMES]
        for r in reports
    ]
    widths = [
        max(len(header[c]), *(len(row[c]) for row in rows)) for c in range(len(header))
    ]
    lines = [
        f"Scenario: {scenario.describe()}"
        + ("" if not reports[0].scenario.is_binary else "  (positive=Poisoned)")
        + f"  folds={reports[0].k}  seed={reports[0].seed}"
        + (f"  config={config_hash}" if config_hash else ""),
        "  ".join(h.ljust(w) for h, w in zip(header, widths)),
    ]
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def render_csv_report(reports: list[CvReport], config_hash: str = "") -> str:
    """Machine-readable rows: scenario, model, metric, mean, std, seed.

    Lines starting with '#' are comments (they carry the config hash).
    """
    lines = []
    if config_hash:
        lines.append(f"# config_hash: {config_hash}")
    lines.append("scenario,model,metric,mean,std,seed")
    for r in reports:
        for name in METRIC_NAMES:
            mean, std = r.metrics[name]
            lines.append(
                f"{r.scenario.describe()},{r.model.family},{name},"
                f"{mean!r},{std!r},{r.seed}"
            )
    return "\n".join(lines) + "\n"


def render_text_from_csv(text: str) -> str:
    """Re-render a CSV report produced by render_csv_report as a table."""
    config_hash = ""
    rows: dict[tuple[str, str, int], dict[str, tuple[float, float]]] = {}
    order: list[tuple[str, str, int]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            if "config_hash:" in line:
                config_hash = line.split("config_hash:", 1)[1].strip()
            continue
        if line.startswith("scenario,"):
            continue
        scenario, model, metric, mean, std, seed = line.split(",")
        key = (scenario, model, int(seed))
        if key not in rows:
            rows[key] = {}
            order.append(key)
        rows[key][metric] = (float(mean), float(std))

    if not order:
        raise ValueError("report CSV has no data rows")
    lines = []
    scenario_line = None
    header = ["Model"] + [METRIC_HEADERS[m] for m in METRIC_NAMES]
    table = []
    for scenario, model, seed in order:
        if scenario_line is None:
            scenario_line = (
                f"Scenario: {scenario}  seed={seed}"
                + (f"  config={config_hash}" if config_hash else "")
            )
        cells = [MODEL_DISPLAY.get(model, model)]
        for m in METRIC_NAMES:
            mean, std = rows[(scenario, model, seed)][m]
            cells.append(f"{mean:.2f}±{std:.2f}")
        table.append(cells)
    widths = [
        max(len(header[c]), *(len(row[c]) for row in table)) for c in range(len(header))
    ]
    lines.append(scenario_line)
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in table:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"
