"""Command-line interface.

Subcommands: train, predict, diagnose, bench, gen-test, augment. Settings
come from an optional JSON config file (sections: dataset, method, ood,
quality, bench, llm, featurizer) with command-line flags taking precedence.
--seed applies everywhere; --dry-run validates inputs and prints the
resolved plan without training or writing anything.

Exit codes: 0 on success, 1 on runtime failures (bad data, training or
transport errors), 2 on usage and configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .augment import perturb
from .bench import BenchConfig, run_benchmark, run_from_manifest
from .bundle import InferenceManager, load_bundle
from .corpus import load_classification, load_ner
from .embed import FeaturizerConfig, HashingFeaturizer
from .errors import AutoNLUError, ConfigError
from .linear import TrainConfig
from .llmgen import HttpTransport, LLMGenerator, MockTransport
from .ood import OOD_METHODS
from .pipeline import METHOD_CHOICES, train_classifier, train_ner_pipeline
from .quality import CLASSIFICATION_EVALUATORS, diagnose


def _dump(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _section(cfg: dict, name: str) -> dict:
    value = cfg.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return value


def _pick(flag_value, section: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    if key in section:
        return section[key]
    return default


def _featurizer_config(cfg: dict) -> FeaturizerConfig:
    sec = _section(cfg, "featurizer")
    try:
        return FeaturizerConfig(
            dim=int(sec.get("dim", 512)),
            ngram_lo=int(sec.get("ngram_lo", 2)),
            ngram_hi=int(sec.get("ngram_hi", 4)),
            hash_seed=int(sec.get("hash_seed", 13)),
            normalize=bool(sec.get("normalize", True)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad featurizer config: {exc}") from exc


def _train_config(sec: dict, seed: int) -> TrainConfig | None:
    keys = ("learning_rate", "batch_size", "weight_decay", "max_epochs", "patience")
    if not any(k in sec for k in keys):
        return None
    return TrainConfig(
        learning_rate=float(sec.get("learning_rate", 1e-2)),
        batch_size=int(sec.get("batch_size", 32)),
        weight_decay=float(sec.get("weight_decay", 0.0)),
        max_epochs=int(sec.get("max_epochs", 30)),
        patience=int(sec.get("patience", 5)),
        seed=seed,
    )


def _resolve_seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _load_input_corpus(args, cfg: dict, task: str):
    sec = _section(cfg, "dataset")
    path = _pick(getattr(args, "data", None), sec, "path", None)
    if not path:
        raise ConfigError("no dataset path given (use --data or config dataset.path)")
    fmt = _pick(getattr(args, "format", None), sec, "format", "jsonl")
    if task == "ner":
        return load_ner(path, fmt=fmt), path
    if fmt != "jsonl":
        raise ConfigError("classification data must be jsonl")
    return load_classification(path), path


def _read_texts(path: str) -> list[str]:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"input file not found: {path}")
    lines = [l for l in p.read_text(encoding="utf-8").splitlines() if l.strip()]
    if path.endswith(".jsonl"):
        texts = []
        for line in lines:
            obj = json.loads(line)
            if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
                raise ConfigError("each JSONL input line needs a 'text' field")
            texts.append(obj["text"])
        return texts
    return lines


def _write_jsonl(path: str, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _build_transport(args, cfg: dict, seed: int):
    sec = _section(cfg, "llm")
    kind = _pick(getattr(args, "transport", None), sec, "transport", "mock")
    if kind == "mock":
        return MockTransport(seed=int(sec.get("mock_seed", seed)))
    if kind == "http":
        return HttpTransport(
            base_url=sec.get("base_url"),
            api_key=sec.get("api_key"),
            model=sec.get("model"),
            timeout=float(sec.get("timeout", 30.0)),
            max_retries=int(sec.get("max_retries", 2)),
        )
    raise ConfigError(f"unknown transport {kind!r} (use mock or http)")


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    dataset_sec = _section(cfg, "dataset")
    method_sec = _section(cfg, "method")
    ood_sec = _section(cfg, "ood")

    task = _pick(args.task, dataset_sec, "task", "classification")
    if task not in ("classification", "ner"):
        raise ConfigError("task must be classification or ner")
    corpus, data_path = _load_input_corpus(args, cfg, task)
    featurizer_config = _featurizer_config(cfg)
    out = _pick(args.out, cfg, "out", None)
    if not out:
        raise ConfigError("no output bundle path (use --out)")

    if task == "ner":
        ood_method = _pick(args.ood_method, ood_sec, "method", "none")
        if ood_method != "none":
            raise ConfigError("NER training does not support scope detection")
        plan = {
            "action": "train",
            "task": task,
            "data": data_path,
            "out": out,
            "seed": seed,
            "featurizer": featurizer_config.to_dict(),
            "n_samples": len(corpus),
            "entity_types": corpus.entity_types(),
        }
        if args.dry_run:
            print(_dump(plan))
            return 0
        result = train_ner_pipeline(
            corpus,
            seed=seed,
            featurizer_config=featurizer_config,
            train_config=_train_config(method_sec, seed),
        )
        result.save(out)
        print(_dump({**plan, "best_epoch": result.output.train_result.best_epoch}))
        return 0

    method = _pick(args.method, method_sec, "name", "auto")
    if method not in METHOD_CHOICES:
        raise ConfigError(f"method must be one of {METHOD_CHOICES}")
    ood_method = _pick(args.ood_method, ood_sec, "method", None)
    if ood_method is not None and ood_method not in OOD_METHODS:
        raise ConfigError(f"ood-method must be one of {OOD_METHODS}")
    threshold_factor = float(
        _pick(args.threshold_factor, ood_sec, "threshold_factor", 1.0)
    )
    hpo = bool(_pick(args.hpo or None, method_sec, "hpo", False))
    anchors = method_sec.get("anchors")

    plan = {
        "action": "train",
        "task": task,
        "data": data_path,
        "out": out,
        "seed": seed,
        "method": method,
        "ood_method": ood_method or "auto",
        "threshold_factor": threshold_factor,
        "hpo": hpo,
        "featurizer": featurizer_config.to_dict(),
        "n_samples": len(corpus),
        "classes": corpus.classes(),
    }
    if args.dry_run:
        print(_dump(plan))
        return 0

    result = train_classifier(
        corpus,
        method=method,
        ood_method=ood_method,
        threshold_factor=threshold_factor,
        seed=seed,
        featurizer_config=featurizer_config,
        train_config=_train_config(method_sec, seed),
        anchors=anchors,
        hpo=hpo,
        gibberish_n=int(ood_sec.get("gibberish_n", 1000)),
    )
    result.save(out)
    summary = {
        **plan,
        "regime": result.regime.value,
        "ood_method": result.ood_method,
        "rebalance": (
            result.output.rebalance_report.to_dict()
            if result.output.rebalance_report
            else None
        ),
        "calibration": result.calibration.to_dict() if result.calibration else None,
    }
    print(_dump(summary))
    return 0


def cmd_predict(args) -> int:
    cfg = _load_config(args.config)
    bundle_path = _pick(args.bundle, cfg, "bundle", None)
    if not bundle_path:
        raise ConfigError("no bundle path (use --bundle)")
    texts = _read_texts(args.input)
    if args.dry_run:
        print(_dump({"action": "predict", "bundle": bundle_path, "n_texts": len(texts)}))
        return 0
    bundle = load_bundle(bundle_path)
    manager = InferenceManager.from_bundle(bundle, max_batch=args.batch_size)
    records: list[dict] = []
    if bundle.task == "ner":
        for text, spans in zip(texts, manager.predict_entities(texts)):
            records.append(
                {
                    "text": text,
                    "entities": [
                        {"start": s.start, "end": s.end, "label": s.label}
                        for s in spans
                    ],
                }
            )
    else:
        for text, pred in zip(texts, manager.predict(texts)):
            rec = {"text": text, **pred.to_dict()}
            records.append(rec)
    if args.output:
        _write_jsonl(args.output, records)
        print(_dump({"action": "predict", "n_texts": len(texts), "output": args.output}))
    else:
        for rec in records:
            print(json.dumps(rec, sort_keys=True))
    return 0


def cmd_diagnose(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    quality_sec = _section(cfg, "quality")
    corpus, data_path = _load_input_corpus(args, cfg, "classification")
    featurizer_config = _featurizer_config(cfg)

    evaluators = args.evaluators.split(",") if args.evaluators else quality_sec.get(
        "evaluators"
    )
    if evaluators is not None:
        bad = [e for e in evaluators if e not in CLASSIFICATION_EVALUATORS]
        if bad:
            raise ConfigError(
                f"unknown evaluators {bad}; choose from {list(CLASSIFICATION_EVALUATORS)}"
            )
    out_dir = _pick(args.out_dir, quality_sec, "out_dir", None)

    if args.dry_run:
        print(
            _dump(
                {
                    "action": "diagnose",
                    "data": data_path,
                    "seed": seed,
                    "evaluators": evaluators or list(CLASSIFICATION_EVALUATORS),
                    "out_dir": out_dir,
                    "n_samples": len(corpus),
                }
            )
        )
        return 0

    report = diagnose(
        corpus,
        HashingFeaturizer(featurizer_config),
        seed=seed,
        evaluators=evaluators,
        out_dir=out_dir,
    )
    payload = _dump(report.to_dict())
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        print(_dump({"action": "diagnose", "flagged": len(report.flagged_indices), "out": args.out}))
    else:
        print(payload)
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    bench_sec = _section(cfg, "bench")

    if args.replay:
        manifest_path = Path(args.replay)
        if not manifest_path.exists():
            raise ConfigError(f"manifest not found: {args.replay}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if args.dry_run:
            print(_dump({"action": "bench-replay", "manifest": args.replay}))
            return 0
        run = run_from_manifest(manifest)
    else:
        n_shot = _pick(args.n_shot, bench_sec, "n_shot", None)
        if n_shot is None:
            shot_range = None
        elif isinstance(n_shot, int):
            shot_range = (n_shot, n_shot)
        else:
            vals = [int(v) for v in n_shot]
            if len(vals) == 1:
                shot_range = (vals[0], vals[0])
            elif len(vals) == 2:
                shot_range = (vals[0], vals[1])
            else:
                raise ConfigError("n_shot takes one value or a lo/hi pair")
        config = BenchConfig(
            dataset=_pick(args.dataset, bench_sec, "dataset", "synthetic7"),
            n_shot_range=shot_range,
            ood_aware=bool(_pick(args.ood_aware or None, bench_sec, "ood_aware", False)),
            include_close=bool(
                _pick(args.include_close or None, bench_sec, "include_close", False)
            ),
            method=_pick(args.method, bench_sec, "method", "auto"),
            threshold_factor=float(
                _pick(args.threshold_factor, bench_sec, "threshold_factor", 1.0)
            ),
            seed=seed,
        )
        if args.dry_run:
            plan = dict(config.__dict__)
            plan["n_shot_range"] = (
                list(config.n_shot_range) if config.n_shot_range else None
            )
            print(_dump({"action": "bench", **plan}))
            return 0
        run = run_benchmark(config)

    payload = _dump(run.to_dict())
    if args.manifest_out:
        Path(args.manifest_out).write_text(
            _dump(run.manifest) + "\n", encoding="utf-8"
        )
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        print(_dump({"action": "bench", "out": args.out, "macro_f1": run.report.macro_f1}))
    else:
        print(payload)
    return 0


def cmd_gen_test(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    llm_sec = _section(cfg, "llm")
    corpus, data_path = _load_input_corpus(args, cfg, "classification")
    n_per_class = int(_pick(args.n_per_class, llm_sec, "n_per_class", 5))

    if args.dry_run:
        print(
            _dump(
                {
                    "action": "gen-test",
                    "data": data_path,
                    "n_per_class": n_per_class,
                    "out": args.out,
                }
            )
        )
        return 0

    transport = _build_transport(args, cfg, seed)
    generator = LLMGenerator(
        transport,
        temperature=float(llm_sec.get("temperature", 0.7)),
        max_rounds=int(llm_sec.get("max_rounds", 3)),
    )
    result = generator.generate(corpus, n_per_class, purpose="test")
    records = [{"text": s.text, "label": s.label} for s in result.samples]
    if args.out:
        _write_jsonl(args.out, records)
    else:
        for rec in records:
            print(json.dumps(rec, sort_keys=True))
    print(_dump({"action": "gen-test", **result.to_dict()}), file=sys.stderr)
    return 0


def cmd_augment(args) -> int:
    cfg = _load_config(args.config)
    seed = _resolve_seed(args, cfg)
    llm_sec = _section(cfg, "llm")
    corpus, data_path = _load_input_corpus(args, cfg, "classification")

    if args.dry_run:
        print(
            _dump(
                {
                    "action": "augment",
                    "data": data_path,
                    "llm": bool(args.llm),
                    "n_per_sample": args.n_per_sample,
                    "out": args.out,
                }
            )
        )
        return 0

    if args.llm:
        transport = _build_transport(args, cfg, seed)
        generator = LLMGenerator(
            transport,
            temperature=float(llm_sec.get("temperature", 0.7)),
            max_rounds=int(llm_sec.get("max_rounds", 3)),
        )
        result = generator.generate(corpus, args.n_per_sample, purpose="train")
        records = [{"text": s.text, "label": s.label} for s in result.samples]
        meta = result.to_dict()
    else:
        records = []
        for s in corpus.samples:
            for variant in perturb(
                s.text, args.n_per_sample, max_edits=args.max_edits, seed=seed
            ):
                records.append({"text": variant, "label": s.label})
        meta = {"produced": len(records)}

    if args.out:
        _write_jsonl(args.out, records)
    else:
        for rec in records:
            print(json.dumps(rec, sort_keys=True))
    print(_dump({"action": "augment", **meta}), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autonlu",
        description="Data-aware training, diagnostics and benchmarking for NLU.",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="global random seed")
    parser.add_argument(
        "--dry-run",
        action="store_true",
        help="validate inputs and print the plan without executing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and save a bundle")
    p.add_argument("--data", help="training data (JSON Lines)")
    p.add_argument("--format", choices=["jsonl", "bracket"], help="NER input format")
    p.add_argument("--task", choices=["classification", "ner"])
    p.add_argument("--method", choices=list(METHOD_CHOICES))
    p.add_argument("--ood-method", choices=list(OOD_METHODS))
    p.add_argument("--threshold-factor", type=float)
    p.add_argument("--hpo", action="store_true", help="tune hyperparameters first")
    p.add_argument("--out", help="bundle output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict with a saved bundle")
    p.add_argument("--bundle", help="bundle directory")
    p.add_argument("--input", required=True, help="texts: .jsonl with 'text' or plain lines")
    p.add_argument("--output", help="write JSONL predictions here instead of stdout")
    p.add_argument("--batch-size", type=int, default=256)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("diagnose", help="run data-quality evaluators")
    p.add_argument("--data", help="training data (JSON Lines)")
    p.add_argument("--evaluators", help="comma-separated evaluator names")
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--out-dir", help="directory for cartography artifacts")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("bench", help="run a benchmark protocol")
    p.add_argument("--dataset")
    p.add_argument(
        "--n-shot",
        type=int,
        nargs="+",
        metavar="N",
        help="per-class training draw: one value, or a lo hi range",
    )
    p.add_argument("--ood-aware", action="store_true")
    p.add_argument(
        "--include-close",
        action="store_true",
        help="add the close-OOD probe type (same-scenario held-out classes)",
    )
    p.add_argument("--method", choices=list(METHOD_CHOICES))
    p.add_argument("--threshold-factor", type=float)
    p.add_argument("--out", help="write metrics JSON here")
    p.add_argument("--manifest-out", help="write the replayable manifest here")
    p.add_argument("--replay", help="re-run a saved manifest instead")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-test", help="generate a held-out test set with an LLM")
    p.add_argument("--data", help="seed corpus (JSON Lines)")
    p.add_argument("--n-per-class", type=int)
    p.add_argument("--transport", choices=["mock", "http"])
    p.add_argument("--out", help="write generated JSONL here")
    p.set_defaults(func=cmd_gen_test)

    p = sub.add_parser("augment", help="expand a corpus with perturbations or an LLM")
    p.add_argument("--data", help="seed corpus (JSON Lines)")
    p.add_argument("--n-per-sample", type=int, default=1)
    p.add_argument("--max-edits", type=int, default=2)
    p.add_argument("--llm", action="store_true", help="use the LLM generator")
    p.add_argument("--transport", choices=["mock", "http"])
    p.add_argument("--out", help="write augmented JSONL here")
    p.set_defaults(func=cmd_augment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AutoNLUError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
