"""Command-line pipeline: synth, featurize, eval, report.

Every run is deterministic given its configuration: all randomness is
seeded through the config/flags and outputs carry no wall-clock state.
Reports embed a short hash of the effective configuration so any table
row can be traced to an exact invocation.

Exit codes: 0 success, 2 config/usage error, 3 I/O failure, 4 empty
pipeline (no frames survived), 5 training failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .csi import ClassLabel
from .evaluate import (
    ModelSpec,
    MulticlassMode,
    Scenario,
    ScenarioClassMissingError,
    ScenarioKind,
    TrainingFoldError,
    cross_validate,
    random_search,
    render_csv_report,
    render_text_from_csv,
    render_text_report,
)
from .features import frames_to_dataset
from .ingest import (
    DatasetFormatError,
    _atomic_write_text,
    load_dataset,
    parse_capture,
    write_capture_file,
    write_dataset,
)
from .learn import NonFiniteLossError, WeakLearnerFailureError
from .learn.lstm import LstmConfig
from .preprocess import PreprocessConfig, filter_by_mac, reject_outlier_frames
from .synth import generate, presets, scaled_preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_EMPTY = 4
EXIT_TRAINING = 5

# Desk-scale model parameters used when the config names a family without
# hyperparameters. Library defaults keep the full-size settings (466
# learners, 200/100 LSTM units); these are sized so a four-model
# evaluation finishes in minutes.
DESK_MODEL_PARAMS = {
    "knn": {"k": 1, "metric": "correlation"},
    "svm": {"kernel": "rbf", "gamma": 1e-3, "C": 1.0},
    "adaboost": {"n_learners": 50, "max_splits": 20, "learn_rate": 0.1241},
    "lstm": {"hidden1": 32, "hidden2": 16, "max_epochs": 12, "lr_drop_period": 12},
}
MODEL_FAMILIES = ("knn", "svm", "adaboost", "lstm")


class ConfigError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(p, "r", encoding="utf-8") as fp:
            cfg = json.load(fp)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _config_hash(effective: dict) -> str:
    canon = json.dumps(effective, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def _preprocess_from_config(section: dict) -> PreprocessConfig:
    known = {
        k: section[k]
        for k in (
            "target_mac",
            "hampel_window",
            "hampel_k",
            "sanitize_phase",
            "drop_zero_subcarrier_frames",
        )
        if k in section
    }
    try:
        return PreprocessConfig(**known)
    except ValueError as exc:
        raise ConfigError(f"bad preprocess config: {exc}") from exc


def _require_input(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"no {what} given (exactly one input source is required)")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} {path} does not exist")
    return p


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    config = _load_config(args.config)
    synth_section = config.get("synth", {})
    preset_name = args.preset or synth_section.get("preset")
    if not preset_name:
        raise ConfigError("synth needs --preset or a synth.preset config entry")
    if preset_name not in presets():
        raise ConfigError(
            f"unknown preset {preset_name!r}; available: {sorted(presets())}"
        )
    count = args.count_per_class or synth_section.get("count_per_class")
    seed = args.seed if args.seed is not None else synth_section.get("seed")
    cfg = scaled_preset(preset_name, n_per_class=count, seed=seed)

    if not args.out_capture and not args.out_dataset:
        raise ConfigError("synth needs --out-capture and/or --out-dataset")

    # without an explicit preprocess section, keep the generator default
    # (raw phases: the class phase slope is part of the injected effect)
    pre = None
    if "preprocess" in config:
        pre = _preprocess_from_config(config["preprocess"])
    result = generate(cfg, preprocess=pre)

    if args.out_dataset:
        write_dataset(result.dataset, args.out_dataset)
        _say(args, f"dataset: {args.out_dataset} ({len(result.dataset)} rows)")
    if args.out_capture:
        out = Path(args.out_capture)
        for label in sorted(set(result.labels), key=lambda lab: lab.value):
            frames = [f for f, lab in zip(result.frames, result.labels) if lab is label]
            path = out.with_name(f"{out.stem}-{label.value}{out.suffix}")
            write_capture_file(frames, path)
            _say(args, f"capture: {path} ({len(frames)} frames)")

    counts = result.dataset.class_counts()
    for label in sorted(counts, key=lambda lab: lab.value):
        _say(args, f"{label.value}: {counts[label]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# featurize
# ---------------------------------------------------------------------------

def cmd_featurize(args) -> int:
    config = _load_config(args.config)
    pre_section = dict(config.get("preprocess", {}))
    if args.target_mac:
        pre_section["target_mac"] = args.target_mac
    if args.no_sanitize_phase:
        pre_section["sanitize_phase"] = False
    pre = _preprocess_from_config(pre_section)
    expected_n = args.expected_n or pre_section.get("expected_n", 64)

    capture_path = _require_input(
        args.capture or config.get("paths", {}).get("capture"), "capture file"
    )
    out_path = args.out or config.get("paths", {}).get("out_dataset")
    if not out_path:
        raise ConfigError("featurize needs --out (dataset CSV path)")
    try:
        label = ClassLabel.from_string(args.label)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    with open(capture_path, "r", encoding="utf-8", errors="replace") as fp:
        frames, failures = parse_capture(fp, expected_n)
    _say(args, f"parsed: {len(frames)} frames, {len(failures)} rejected lines")

    if pre.target_mac is not None:
        before = len(frames)
        frames = filter_by_mac(frames, pre.target_mac)
        _say(args, f"mac filter: {before - len(frames)} dropped, {len(frames)} kept")
    if pre.drop_zero_subcarrier_frames:
        before = len(frames)
        frames = [f for f in frames if not f.has_zero_subcarrier]
        _say(args, f"zero-subcarrier filter: {before - len(frames)} dropped")
    if frames and not args.keep_outliers:
        frames, rejected = reject_outlier_frames(frames, pre)
        _say(args, f"outlier filter: {len(rejected)} dropped, {len(frames)} kept")

    if not frames:
        print(
            f"error: no frames survived the pipeline "
            f"({len(failures)} parse failures)",
            file=sys.stderr,
        )
        return EXIT_EMPTY

    dataset = frames_to_dataset(frames, [label] * len(frames), pre)
    write_dataset(dataset, out_path)
    _say(args, f"dataset: {out_path} ({len(dataset)} rows x {dataset.width})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _scenario_from(args, section: dict) -> Scenario:
    kind_name = args.scenario or section.get("scenario")
    if not kind_name:
        raise ConfigError("eval needs --scenario or an eval.scenario config entry")
    try:
        kind = ScenarioKind(kind_name)
    except ValueError as exc:
        raise ConfigError(
            f"unknown scenario {kind_name!r}; choose from "
            f"{[s.value for s in ScenarioKind]}"
        ) from exc
    mode_name = args.mode or section.get("multiclass_mode", "ThreeClass")
    try:
        mode = MulticlassMode(mode_name)
    except ValueError as exc:
        raise ConfigError(f"unknown multiclass mode {mode_name!r}") from exc
    return Scenario(kind, mode)


def _model_specs(args, config: dict, eval_seed: int) -> list[dict]:
    """Normalised model sections: {family, params or search}."""
    sections = []
    if args.model:
        for name in args.model.split(","):
            name = name.strip()
            if name == "all":
                sections.extend({"family": fam} for fam in MODEL_FAMILIES)
            else:
                sections.append({"family": name})
    elif config.get("models"):
        sections = list(config["models"])
    else:
        raise ConfigError("eval needs --model or a models config list")

    for section in sections:
        family = section.get("family")
        if family not in MODEL_FAMILIES:
            raise ConfigError(
                f"unknown model family {family!r}; choose from {MODEL_FAMILIES}"
            )
        if args.search_budget and section.get("search") is None:
            section["search"] = {"budget": args.search_budget}
    return sections


def _build_spec(section: dict, dataset, scenario, eval_seed: int, k: int) -> ModelSpec:
    family = section["family"]
    search = section.get("search")
    if search:
        budget = int(search.get("budget", 30))
        seed = int(search.get("seed", eval_seed))
        return random_search(dataset, scenario, family, budget=budget, seed=seed, k=k)
    params = section.get("params")
    if params is None:
        params = dict(DESK_MODEL_PARAMS[family])
    if family == "lstm":
        cfg_kwargs = {k_: v for k_, v in params.items()}
        params = {"cfg": LstmConfig(**cfg_kwargs)}
    return ModelSpec(family=family, params=params, seed=eval_seed)


def cmd_eval(args) -> int:
    config = _load_config(args.config)
    eval_section = dict(config.get("eval", {}))
    scenario = _scenario_from(args, eval_section)
    k = args.k or int(eval_section.get("k", 5))
    seed = args.seed if args.seed is not None else int(eval_section.get("seed", 0))
    normalize = bool(eval_section.get("normalize", False)) or args.normalize

    dataset_path = _require_input(
        args.dataset or config.get("paths", {}).get("dataset"), "dataset file"
    )
    try:
        dataset = load_dataset(dataset_path)
    except DatasetFormatError as exc:
        raise ConfigError(f"bad dataset: {exc}") from exc

    sections = _model_specs(args, config, seed)
    effective = {
        "command": "eval",
        "scenario": scenario.describe(),
        "k": k,
        "seed": seed,
        "normalize": normalize,
        "models": sections,
        "dataset": str(dataset_path),
    }
    config_hash = _config_hash(effective)

    reports = []
    for section in sections:
        spec = _build_spec(section, dataset, scenario, seed, k)
        report = cross_validate(
            dataset,
            scenario,
            spec,
            k=k,
            seed=seed,
            normalize=normalize,
            n_jobs=args.threads,
        )
        reports.append(report)
        _say(args, f"{spec.describe()}: accuracy {report.cell('accuracy')}")

    text = render_text_report(reports, config_hash)
    csv = render_csv_report(reports, config_hash)
    if args.out_text:
        _atomic_write_text(args.out_text, text)
    if args.out_csv:
        _atomic_write_text(args.out_csv, csv)
    if not args.quiet:
        print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args) -> int:
    path = _require_input(args.infile, "report CSV")
    with open(path, "r", encoding="utf-8") as fp:
        text = render_text_from_csv(fp.read())
    if args.out:
        _atomic_write_text(args.out, text)
    if not args.quiet:
        print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON pipeline config; flags override it")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--threads", type=int, default=1, help="fold parallelism")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csiwater",
        description="CSI water-quality pipeline: synthesise, featurize, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset/capture")
    _add_common(p)
    p.add_argument("--preset", help="named generator preset")
    p.add_argument("--count-per-class", type=int, help="override per-class counts")
    p.add_argument("--out-capture", help="capture path; one file per class label")
    p.add_argument("--out-dataset", help="dataset CSV path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("featurize", help="capture file -> labeled dataset CSV")
    _add_common(p)
    p.add_argument("--in", dest="capture", help="capture file to parse")
    p.add_argument("--out", help="dataset CSV to write")
    p.add_argument("--label", required=True, help="class label of this capture")
    p.add_argument("--expected-n", type=int, default=None, help="subcarriers per frame")
    p.add_argument("--target-mac", help="keep only frames from this access point")
    p.add_argument("--no-sanitize-phase", action="store_true",
                   help="keep raw phases (skip unwrap + detrend)")
    p.add_argument("--keep-outliers", action="store_true",
                   help="skip Hampel outlier rejection")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("eval", help="cross-validated evaluation -> report files")
    _add_common(p)
    p.add_argument("--dataset", help="dataset CSV to evaluate")
    p.add_argument("--scenario", help="CleanVs100ppm | CleanVs1000ppm | AllThree")
    p.add_argument("--mode", help="ThreeClass | PoisonedVsClean (AllThree only)")
    p.add_argument("--model", help="comma list of families, or 'all'")
    p.add_argument("--k", type=int, default=None, help="number of folds")
    p.add_argument("--normalize", action="store_true",
                   help="z-score features (fit on each training split)")
    p.add_argument("--search-budget", type=int, default=None,
                   help="random-search draws before the final evaluation")
    p.add_argument("--out-text", help="write the text table here")
    p.add_argument("--out-csv", help="write the CSV report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="re-render a CSV report as a text table")
    _add_common(p)
    p.add_argument("--in", dest="infile", help="CSV report to render")
    p.add_argument("--out", help="write the table here instead of stdout")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioClassMissingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingFoldError, WeakLearnerFailureError, NonFiniteLossError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
