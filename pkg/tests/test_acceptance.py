"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete. Heavier criteria reuse the synthetic presets; the
whole module is self-contained and deterministic.
"""

import io
import math
import time

import numpy as np

from csiwater.csi import ClassLabel, CsiFrame
from csiwater.evaluate import (
    ModelSpec,
    Scenario,
    ScenarioKind,
    auc_rank,
    binary_metrics,
    cross_validate,
    multiclass_metrics,
    scenario_arrays,
    stratified_kfold,
)
from csiwater.features import Dataset
from csiwater.ingest import (
    ParseFailure,
    load_dataset,
    parse_capture,
    parse_csi_line,
    write_capture,
    write_dataset,
)
from csiwater.learn import adaboost_train, knn_train, predict_batch, svm_train
from csiwater.learn.knn import _center_unit_rows
from csiwater.learn.lstm import (
    LstmConfig,
    init_params,
    loss_and_grads,
    lstm_train,
    forward,
)
from csiwater.learn.svm import kernel_matrix
from csiwater.learn.tree import tree_predict
from csiwater.preprocess import sanitize_phase, unwrap_phases
from csiwater.synth import generate, presets, scaled_preset

LSTM_DESK = dict(hidden1=32, hidden2=16, max_epochs=12, lr_drop_period=12)


def report(number, description, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f"  [{detail}]" if detail else ""
    print(f"{status} criterion {number}: {description}{suffix}")
    assert ok, f"criterion {number}: {description}{suffix}"


def test_criterion_1_high_contrast_all_perfect():
    t0 = time.perf_counter()
    ds = generate(presets()["high-contrast"]).dataset
    assert ds.X.shape == (900, 128)
    scenario = Scenario(ScenarioKind.ALL_THREE)
    specs = [
        ModelSpec("knn", {"k": 1, "metric": "correlation"}),
        ModelSpec("svm", {"kernel": "rbf", "gamma": 1e-3, "C": 1.0}),
        ModelSpec("adaboost", {"n_learners": 50, "max_splits": 20,
                               "learn_rate": 0.1241}),
        ModelSpec("lstm", {"cfg": LstmConfig(**LSTM_DESK)}),
    ]
    bad = []
    for spec in specs:
        rep = cross_validate(ds, scenario, spec, k=5, seed=0, n_jobs=2)
        for name, (mean, std) in rep.metrics.items():
            if not (mean == 100.0 and std == 0.0):
                bad.append(f"{spec.family}.{name}={mean:.2f}±{std:.2f}")
    elapsed = time.perf_counter() - t0
    report(
        1,
        "high-contrast preset: all four classifiers at 100.00±0.00",
        not bad and elapsed <= 300.0,
        detail=f"{elapsed:.0f}s" + (f"; {bad}" if bad else ""),
    )


def test_criterion_2_low_contrast_band_and_null_chance():
    scenario = Scenario(ScenarioKind.CLEAN_VS_100PPM)
    specs = [
        ModelSpec("knn", {"k": 1, "metric": "correlation"}),
        ModelSpec("svm", {"kernel": "rbf", "gamma": 1e-3, "C": 1.0}),
        ModelSpec("adaboost", {"n_learners": 50, "max_splits": 20,
                               "learn_rate": 0.1241}),
        ModelSpec("lstm", {"cfg": LstmConfig(**LSTM_DESK)}),
    ]
    out_of_band = []
    for seed in range(5):
        ds = generate(scaled_preset("low-contrast", seed=seed)).dataset
        for spec in specs:
            acc = cross_validate(ds, scenario, spec, k=5, seed=seed,
                                 n_jobs=2).metrics["accuracy"][0]
            if not 80.0 <= acc <= 95.0:
                out_of_band.append(f"seed{seed}.{spec.family}={acc:.1f}")

    null_ds = generate(presets()["null"]).dataset
    null_acc = cross_validate(
        null_ds, scenario, specs[0], k=5, seed=0
    ).metrics["accuracy"][0]
    null_ok = 40.0 <= null_acc <= 60.0  # 50% +/- 4 sigma binomial on 400

    report(
        2,
        "low-contrast accuracies in [80, 95] over 5 seeds; null at chance",
        not out_of_band and null_ok,
        detail=f"null={null_acc:.1f}" + (f"; {out_of_band}" if out_of_band else ""),
    )


def test_criterion_3_metric_oracles():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(200):
        p = int(rng.integers(1, 101))
        n = int(rng.integers(1, 101))
        pos = np.round(rng.normal(0.2, 1.0, p), 1)  # ties guaranteed
        neg = np.round(rng.normal(-0.2, 1.0, n), 1)
        rank = auc_rank(pos, neg)
        wins = 0.0
        for a in pos:
            for b in neg:
                wins += 1.0 if a > b else (0.5 if a == b else 0.0)
        worst = max(worst, abs(rank - wins / (p * n)))

    truth = list(rng.integers(0, 3, size=60))
    truth[:3] = [0, 1, 2]
    scores = rng.random((60, 3))
    pred = list(np.argmax(scores, axis=1))
    m = multiclass_metrics(truth, pred, scores, classes=(0, 1, 2))
    per = []
    for c in range(3):
        t = [x if x == c else "rest" for x in truth]
        q = [x if x == c else "rest" for x in pred]
        per.append(binary_metrics(t, q, scores[:, c], positive=c))
    compose_ok = all(
        abs(getattr(m, f) - np.mean([getattr(x, f) for x in per])) < 1e-9
        for f in ("auc", "tpr", "tnr", "f1")
    )
    report(
        3,
        "rank AUC equals all-pairs oracle (1e-12); multiclass = binary composition",
        worst <= 1e-12 and compose_ok,
        detail=f"max auc gap {worst:.1e}",
    )


def test_criterion_4_knn_oracle_and_affine_invariance():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(50, 16))
    y = list(rng.integers(0, 3, size=50))
    queries = rng.normal(size=(20, 16))
    model = knn_train(X, y, k=1, metric="correlation", classes=(0, 1, 2))
    got, _ = predict_batch(model, queries)

    cx = _center_unit_rows(X, "train")
    exact = True
    for q, label in zip(queries, got):
        cq = _center_unit_rows(q[None, :], "query")[0]
        d = 1.0 - cx @ cq
        if y[int(np.argmin(d))] != label:
            exact = False

    affine_ok = True
    for _ in range(100):
        q = rng.normal(size=16)
        a = float(rng.uniform(0.1, 50.0))
        b = float(rng.uniform(-20.0, 20.0))
        p0, _ = predict_batch(model, q[None, :])
        p1, _ = predict_batch(model, (a * q + b)[None, :])
        if p0 != p1:
            affine_ok = False

    report(4, "1-NN matches brute-force scan exactly; affine invariance holds",
           exact and affine_ok)


def test_criterion_5_svm_correctness():
    rng = np.random.default_rng(11)
    X = np.vstack([rng.normal(-1, 1, (30, 4)), rng.normal(1, 1, (30, 4))])
    y = [0] * 30 + [1] * 30
    tol = 1e-3
    model = svm_train(X, y, kernel="rbf", gamma=0.3, C=1.0, tol=tol)
    machine = model.machines[0][2]

    y_pm = np.where(np.array(y) == 1, 1.0, -1.0)
    K = kernel_matrix("rbf", 0.3, X, X)
    alpha = np.zeros(60)
    lookup = {tuple(r): a for r, a in zip(machine.X_sv, machine.alpha_sv)}
    for i, r in enumerate(X):
        alpha[i] = lookup.get(tuple(r), 0.0)
    E = K @ (alpha * y_pm) + machine.b - y_pm
    kkt_ok = not (
        ((y_pm * E < -tol) & (alpha < model.C)) | ((y_pm * E > tol) & (alpha > 0))
    ).any()

    dual_ok = bool(np.all(np.diff(machine.dual_history) >= -1e-9))

    xor_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    xor_y = ["A", "B", "B", "A"]
    xor_model = svm_train(xor_X, xor_y, kernel="rbf", gamma=1.0, C=10.0)
    xor_labels, _ = predict_batch(xor_model, xor_X)
    xor_ok = xor_labels == xor_y

    report(5, "SVM: KKT within tol, dual non-decreasing, XOR solved",
           kkt_ok and dual_ok and xor_ok and machine.converged)


def test_criterion_6_adaboost_correctness():
    rng = np.random.default_rng(23)
    X = rng.normal(size=(20, 3))
    y = list(rng.integers(0, 2, size=20))
    model = adaboost_train(X, y, n_learners=466, max_splits=132, learn_rate=0.1241,
                           classes=(0, 1))
    codes = np.array([model.classes.index(v) for v in y], dtype=np.intp)
    w = np.full(20, 1 / 20)
    round1_err = float(w[tree_predict(model.trees[0], X) != codes].sum())
    best_stump = math.inf
    for f in range(3):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = lo + (hi - lo) / 2.0
            left = X[:, f] <= thr
            for kl in (0, 1):
                for kr in (0, 1):
                    pred = np.where(left, kl, kr)
                    best_stump = min(best_stump, float(w[pred != codes].sum()))
    stump_ok = round1_err <= best_stump + 1e-12

    norm_ok = bool(np.all(np.abs(model.weight_sums - 1.0) <= 1e-12))

    sep_X = np.linspace(-1, 1, 24)[:, None]
    sep_y = list((sep_X[:, 0] > 0).astype(int))
    sep_model = adaboost_train(sep_X, sep_y, n_learners=466, max_splits=132,
                               learn_rate=0.1241)
    sep_labels, _ = predict_batch(sep_model, sep_X)
    sep_ok = sep_labels == sep_y and len(sep_model.trees) == 1

    report(6, "AdaBoost: weights renormalised, round-1 beats stumps, 1-D in one round",
           stump_ok and norm_ok and sep_ok,
           detail=f"round1={round1_err:.4f} best_stump={best_stump:.4f}")


def test_criterion_7_lstm_gradients_and_convergence():
    rng = np.random.default_rng(31)
    params = init_params(rng, d_in=2, h1=4, h2=3, k=3)
    X_seq = rng.normal(size=(2, 5, 2))
    targets = np.array([0, 2])
    _, grads = loss_and_grads(params, X_seq, targets, 5e-4)
    worst = 0.0
    for key in params:
        flat = params[key].reshape(-1)
        numeric = np.zeros_like(flat)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + 1e-5
            up, _ = loss_and_grads(params, X_seq, targets, 5e-4)
            flat[idx] = orig - 1e-5
            down, _ = loss_and_grads(params, X_seq, targets, 5e-4)
            flat[idx] = orig
            numeric[idx] = (up - down) / 2e-5
        denom = np.maximum(np.abs(grads[key].reshape(-1)) + np.abs(numeric), 1e-8)
        worst = max(worst, float(np.max(np.abs(grads[key].reshape(-1) - numeric) / denom)))
    grad_ok = worst < 1e-4

    probs, _ = forward(params, rng.normal(size=(40, 5, 2)))
    softmax_ok = bool(np.all(np.abs(probs.sum(axis=1) - 1.0) <= 1e-9))

    base = np.concatenate([np.full(10, 2.0), np.full(10, -2.0)])
    X = np.vstack([s * base + 0.05 * rng.normal(size=20)
                   for s in [1.0] * 20 + [-1.0] * 20])
    toy_y = [0] * 20 + [1] * 20
    cfg = LstmConfig(hidden1=8, hidden2=6, dropout=0.2, batch_size=40,
                     max_epochs=50, initial_lr=0.01, lr_drop_period=50,
                     seed=0, early_stop_train_acc=1.0)
    toy_model = lstm_train(X, toy_y, cfg=cfg)
    toy_labels, _ = predict_batch(toy_model, X)
    toy_ok = toy_labels == toy_y and toy_model.epochs_run <= 50

    report(7, "LSTM: gradient check < 1e-4, softmax sums to 1, toy set solved",
           grad_ok and softmax_ok and toy_ok,
           detail=f"max rel grad err {worst:.2e}")


def test_criterion_8_ingestion(tmp_path):
    rng = np.random.default_rng(3)
    frames = []
    for i in range(1000):
        pairs = rng.integers(-128, 128, size=(64, 2))
        subc = pairs[:, 1].astype(float) + 1j * pairs[:, 0].astype(float)
        frames.append(CsiFrame(
            timestamp_ms=int(rng.integers(0, 1 << 30)),
            source_mac="AA:BB:CC:DD:EE:FF",
            rssi_dbm=int(rng.integers(-90, -20)),
            channel=int(rng.integers(1, 14)),
            subcarriers=subc,
        ))
    parsed, failures = parse_capture(io.StringIO(write_capture(frames)), 64)
    roundtrip_ok = failures == [] and parsed == frames

    aborts = 0
    for _ in range(100_000):
        raw = bytes(rng.integers(0, 256, size=int(rng.integers(0, 50))))
        try:
            result = parse_csi_line(raw.decode("latin-1"), 64)
            if not isinstance(result, (CsiFrame, ParseFailure)):
                aborts += 1
        except Exception:
            aborts += 1

    X = rng.normal(size=(5470, 128))
    labels = ([ClassLabel.CLEAN] * 2644 + [ClassLabel.TOXIC_1000PPM] * 1413
              + [ClassLabel.TOXIC_100PPM] * 1413)
    path = tmp_path / "paper_shape.csv"
    write_dataset(Dataset(X, labels), path)
    t0 = time.perf_counter()
    ds = load_dataset(path)
    load_seconds = time.perf_counter() - t0
    shape_ok = len(ds) == 5470 and ds.width == 128 and load_seconds < 1.0

    report(8, "ingest: roundtrip identity, fuzz-total parser, fast 5470x128 load",
           roundtrip_ok and aborts == 0 and shape_ok,
           detail=f"load {load_seconds*1000:.0f} ms, {aborts} aborts")


def test_criterion_9_cv_hygiene():
    rng = np.random.default_rng(17)
    labels = list(rng.choice(["a", "b", "c"], size=203, p=[0.5, 0.3, 0.2]))
    plan1 = stratified_kfold(labels, k=5, seed=99)
    plan2 = stratified_kfold(labels, k=5, seed=99)
    determinism_ok = plan1.assignment.tobytes() == plan2.assignment.tobytes()

    strat_ok = True
    for cls in "abc":
        idx = [i for i, lab in enumerate(labels) if lab == cls]
        counts = np.bincount(plan1.assignment[idx], minlength=5)
        if counts.max() - counts.min() > 1:
            strat_ok = False

    ds = generate(scaled_preset("high-contrast", n_per_class=25)).dataset
    scenario = Scenario(ScenarioKind.ALL_THREE)
    spec = ModelSpec("knn", {"k": 1, "metric": "euclidean"})
    _, y, _, _ = scenario_arrays(ds, scenario)
    plan = stratified_kfold(y, k=5, seed=5)
    clean = cross_validate(ds, scenario, spec, k=5, seed=5,
                           normalize=True, keep_models=True)
    leak_ok = True
    for fold in range(5):
        poisoned = ds.X.copy()
        poisoned[plan.assignment == fold] *= 1000.0
        dirty = cross_validate(Dataset(poisoned, list(ds.labels)), scenario, spec,
                               k=5, seed=5, normalize=True, keep_models=True)
        same_norm = (
            clean.folds[fold].norm[0].tobytes() == dirty.folds[fold].norm[0].tobytes()
            and clean.folds[fold].norm[1].tobytes() == dirty.folds[fold].norm[1].tobytes()
        )
        same_model = (
            clean.folds[fold].model.X.tobytes() == dirty.folds[fold].model.X.tobytes()
        )
        if not (same_norm and same_model):
            leak_ok = False

    report(9, "CV: stratified within +/-1, byte-exact determinism, no test leakage",
           determinism_ok and strat_ok and leak_ok)


def test_criterion_10_phase_calibration():
    idx = np.arange(64.0)
    rng = np.random.default_rng(29)
    ok = True
    for seed in range(10):
        gen = np.random.default_rng(seed)
        smooth = gen.uniform(0.5, 1.5) * np.sin(
            2 * np.pi * 2 * idx / 64 + gen.uniform(0, 6)
        )
        wrapped = np.angle(np.exp(1j * smooth))
        once = sanitize_phase(wrapped)
        if np.max(np.abs(sanitize_phase(once) - once)) > 1e-9:
            ok = False
        offset = gen.uniform(-5, 5)
        slope = gen.uniform(-0.2, 0.2)
        other = np.angle(np.exp(1j * (smooth + offset + slope * idx)))
        if np.max(np.abs(sanitize_phase(other) - once)) > 1e-9:
            ok = False

    out = unwrap_phases(np.array([3.1, -3.1]))
    unwrap_ok = abs(out[0] - 3.1) <= 1e-7 and abs(out[1] - 3.1831853) <= 1e-7

    report(10, "phase: idempotent + ramp/offset invariant (1e-9), unwrap crossing",
           ok and unwrap_ok,
           detail=f"unwrapped [3.1, {out[1]:.7f}]")
