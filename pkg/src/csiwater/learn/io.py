"""Model serialisation: one .npz container per trained model.

The container is self-describing: a JSON ``meta`` entry carries the
variant tag, hyperparameters and class list; every learned array is
stored as-is, so the save/load roundtrip is bit-exact and reloaded
models predict identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Union

import numpy as np

from ..csi import ClassLabel
from .adaboost import AdaBoostModel
from .knn import KnnModel
from .lstm import LstmConfig, LstmModel
from .svm import BinarySvm, SvmModel
from .tree import DecisionTree

_TREE_FIELDS = ("feature", "threshold", "left", "right", "leaf_class")


def _classes_to_meta(classes: tuple) -> dict:
    if all(isinstance(c, ClassLabel) for c in classes):
        return {"kind": "classlabel", "values": [c.value for c in classes]}
    if all(isinstance(c, str) for c in classes):
        return {"kind": "str", "values": list(classes)}
    if all(isinstance(c, (int, np.integer)) for c in classes):
        return {"kind": "int", "values": [int(c) for c in classes]}
    raise TypeError("serialisable class labels must be ClassLabel, str or int")


def _classes_from_meta(meta: dict) -> tuple:
    kind, values = meta["kind"], meta["values"]
    if kind == "classlabel":
        return tuple(ClassLabel.from_string(v) for v in values)
    if kind == "str":
        return tuple(values)
    if kind == "int":
        return tuple(int(v) for v in values)
    raise ValueError(f"unknown class-list kind {kind!r}")


def save_model(model, path: Union[str, Path]) -> None:
    arrays: dict[str, np.ndarray] = {}
    meta: dict = {"classes": _classes_to_meta(model.classes)}

    if isinstance(model, KnnModel):
        meta.update(variant="knn", k=model.k, metric=model.metric,
                    n_features=model.n_features)
        arrays["X"] = model.X
        arrays["y_codes"] = model.y_codes
    elif isinstance(model, SvmModel):
        meta.update(
            variant="svm", kernel=model.kernel, gamma=model.gamma, C=model.C,
            tol=model.tol, n_features=model.n_features, converged=model.converged,
            pairs=[[a, b] for a, b, _ in model.machines],
            machine_meta=[
                {"converged": m.converged, "n_passes": m.n_passes}
                for _, _, m in model.machines
            ],
        )
        for idx, (_, _, m) in enumerate(model.machines):
            arrays[f"m{idx}_X_sv"] = m.X_sv
            arrays[f"m{idx}_y_sv"] = m.y_sv
            arrays[f"m{idx}_alpha"] = m.alpha_sv
            arrays[f"m{idx}_b"] = np.array([m.b])
            arrays[f"m{idx}_dual"] = m.dual_history
    elif isinstance(model, AdaBoostModel):
        meta.update(
            variant="adaboost", learn_rate=model.learn_rate,
            max_splits=model.max_splits, n_features=model.n_features,
            n_trees=len(model.trees),
        )
        arrays["alphas"] = model.alphas
        arrays["errors"] = model.errors
        arrays["weight_sums"] = model.weight_sums
        for idx, tree in enumerate(model.trees):
            for name in _TREE_FIELDS:
                arrays[f"t{idx}_{name}"] = getattr(tree, name)
    elif isinstance(model, LstmModel):
        meta.update(variant="lstm", n_features=model.n_features,
                    cfg=asdict(model.cfg), epochs_run=model.epochs_run)
        for key, value in model.params.items():
            arrays[f"p_{key}"] = value
        arrays["norm_mean"] = model.norm_mean
        arrays["norm_std"] = model.norm_std
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")

    arrays["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fp:
        np.savez(fp, **arrays)


def load_model(path: Union[str, Path]):
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        classes = _classes_from_meta(meta["classes"])
        variant = meta["variant"]

        if variant == "knn":
            return KnnModel(
                classes=classes, n_features=meta["n_features"], k=meta["k"],
                metric=meta["metric"], X=data["X"], y_codes=data["y_codes"],
            )
        if variant == "svm":
            machines = []
            for idx, (a, b) in enumerate(meta["pairs"]):
                mm = meta["machine_meta"][idx]
                machines.append(
                    (
                        int(a),
                        int(b),
                        BinarySvm(
                            kernel=meta["kernel"], gamma=meta["gamma"], C=meta["C"],
                            tol=meta["tol"], X_sv=data[f"m{idx}_X_sv"],
                            y_sv=data[f"m{idx}_y_sv"], alpha_sv=data[f"m{idx}_alpha"],
                            b=float(data[f"m{idx}_b"][0]), converged=mm["converged"],
                            dual_history=data[f"m{idx}_dual"],
                            n_passes=mm["n_passes"],
                        ),
                    )
                )
            return SvmModel(
                classes=classes, n_features=meta["n_features"], kernel=meta["kernel"],
                gamma=meta["gamma"], C=meta["C"], tol=meta["tol"],
                machines=machines, converged=meta["converged"],
            )
        if variant == "adaboost":
            trees = [
                DecisionTree(
                    **{name: data[f"t{idx}_{name}"] for name in _TREE_FIELDS},
                    n_classes=len(classes),
                )
                for idx in range(meta["n_trees"])
            ]
            return AdaBoostModel(
                classes=classes, n_features=meta["n_features"],
                learn_rate=meta["learn_rate"], max_splits=meta["max_splits"],
                trees=trees, alphas=data["alphas"], errors=data["errors"],
                weight_sums=data["weight_sums"],
            )
        if variant == "lstm":
            cfg = LstmConfig(**meta["cfg"])
            params = {
                key[2:]: data[key] for key in data.files if key.startswith("p_")
            }
            return LstmModel(
                classes=classes, n_features=meta["n_features"], cfg=cfg,
                params=params, norm_mean=data["norm_mean"], norm_std=data["norm_std"],
                epochs_run=meta["epochs_run"],
            )
    raise ValueError(f"unknown model variant {variant!r}")
