"""Command-line pipeline: gen, split, train, correct, score, fewshot, report.

Every stage reads declared inputs, writes only inside the run directory
(`runs/<name>/{corpus,splits,model,hyps,reports}`), and records its config,
seeds and input/output hashes in the run-level `manifest.json`, so a finished
run documents how each artifact was produced.  `--config FILE` loads a JSON
object whose keys override the corresponding flags.

Exit codes: 0 success, 2 validation error, 3 infeasible data, 4 divergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Sequence

from .data import ERROR_TYPES, Pattern, SentencePair, read_jsonl, write_jsonl
from .decoding import DecodeConfig, beam_decode
from .errors import (
    CapacityExceeded,
    DivergenceDetected,
    GecProbeError,
    InfeasibleSplit,
    InsufficientDonors,
    ValidationError,
)
from .grammar import capacity, default_grammar_path, generate_corpus, load_grammar
from .m2 import read_m2
from .scoring import (
    gap_report,
    gap_table,
    buckets_tsv,
    pct,
    report_to_json,
    score,
    stratified_score,
)
from .splits import (
    SplitSpec,
    build_frequency_split,
    build_known_split,
    build_unknown_split,
    inject_patterns,
    load_bundle,
    save_bundle,
)
from .training import TrainConfig, load_checkpoint, save_checkpoint, train
from .transformer import ModelConfig, Transformer
from .vocab import build_vocab


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _file_entry(run_dir: Path, path: Path, hashed: bool = True) -> dict:
    try:
        shown = path.relative_to(run_dir).as_posix()
    except ValueError:
        shown = str(path)
    entry: dict = {"path": shown}
    # Artifacts carrying wall-clock timings are recorded but not hashed;
    # everything else must be byte-reproducible from this manifest.
    entry["sha256"] = _sha256(path) if hashed else None
    return entry


def _record_stage(
    run_dir: Path,
    stage: str,
    config: dict,
    inputs: dict[str, Path],
    outputs: dict[str, Path],
    unhashed: Sequence[str] = (),
) -> None:
    manifest_path = run_dir / "manifest.json"
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    else:
        manifest = {"run": run_dir.name, "stages": {}}
    manifest["stages"][stage] = {
        "config": config,
        "inputs": {k: _file_entry(run_dir, p) for k, p in inputs.items()},
        "outputs": {
            k: _file_entry(run_dir, p, hashed=k not in unhashed)
            for k, p in outputs.items()
        },
    }
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise ValidationError(f"{what} not found: {path}")
    return path


def _require_dir(path: Path, what: str) -> Path:
    if not path.is_dir():
        raise ValidationError(f"{what} not found: {path}")
    return path


def parse_pattern(text: str) -> Pattern:
    """Parse a `source=>correction` pattern; either side may be empty."""
    if "=>" not in text:
        raise ValidationError(
            f"pattern must look like 'walk=>walks' (got {text!r})"
        )
    src, _, ref = text.partition("=>")
    return (src.strip(), ref.strip())


def format_pattern(pattern: Pattern) -> str:
    return f"{pattern[0]}=>{pattern[1]}"


# ---------------------------------------------------------------------------
# Shared artifact locations


def _corpus_path(run_dir: Path) -> Path:
    return run_dir / "corpus" / "corpus.jsonl"


def _split_dir(run_dir: Path, setting: str) -> Path:
    return run_dir / "splits" / setting


def _model_dir(run_dir: Path, setting: str) -> Path:
    return run_dir / "model" / setting


def _hyp_path(run_dir: Path, setting: str, split: str) -> Path:
    return run_dir / "hyps" / setting / f"{split}.txt"


def _report_dir(run_dir: Path, setting: str) -> Path:
    return run_dir / "reports" / setting


def _model_config(args, vocab) -> ModelConfig:
    return ModelConfig(
        vocab=vocab,
        layers=args.layers,
        model_dim=args.dim,
        ff_dim=args.ff_dim,
        heads=args.heads,
        dropout=args.dropout,
        label_smoothing=args.label_smoothing,
        max_sequence_length=args.max_len,
    )


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        warmup_steps=args.warmup,
        lr_scale=args.lr_scale,
        gradient_clip_norm=args.clip,
        rng_seed=seed,
    )


def _decode_config(args) -> DecodeConfig:
    return DecodeConfig(
        beam_size=args.beam,
        length_normalize=not args.no_length_norm,
        length_exponent=args.length_exponent,
        max_output_length=args.max_output_length,
    )


def _train_vocab(bundle):
    """Vocabulary from the training partition only; test tokens the training
    data never showed the model stay unknown, deliberately."""
    sentences = []
    for pair in bundle.train:
        sentences.append(pair.source)
        sentences.append(pair.reference)
    return build_vocab(sentences)


def _train_on_bundle(args, bundle, seed: int):
    """Vocab + model + training, shared by cmd_train and cmd_fewshot."""
    vocab = _train_vocab(bundle)
    model_config = _model_config(args, vocab)
    train_config = _train_config(args, seed)
    result = train(model_config, train_config, bundle)
    return result, model_config, train_config


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen(args) -> int:
    run_dir = Path(args.run)
    grammar_path = Path(args.grammar) if args.grammar else default_grammar_path()
    _require_file(grammar_path, "grammar file")
    grammar = load_grammar(grammar_path)
    pairs = generate_corpus(grammar, args.etype, args.count, seed=args.seed)

    corpus = _corpus_path(run_dir)
    corpus.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(pairs, corpus)
    gen_manifest = corpus.parent / "gen_manifest.json"
    gen_manifest.write_text(
        json.dumps(
            {
                "error_type": args.etype,
                "count": args.count,
                "seed": args.seed,
                "grammar": str(grammar_path),
                "grammar_sha256": grammar.sha256,
                "capacity": capacity(grammar, args.etype),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    _record_stage(
        run_dir,
        "gen",
        {"etype": args.etype, "count": args.count, "seed": args.seed},
        inputs={"grammar": grammar_path},
        outputs={"corpus": corpus, "gen_manifest": gen_manifest},
    )
    print(f"gen: wrote {len(pairs)} {args.etype} pairs to {corpus}")
    return 0


def cmd_split(args) -> int:
    run_dir = Path(args.run)
    spec = SplitSpec(
        train_size=args.train_size,
        dev_size=args.dev_size,
        test_size=args.test_size,
        seed=args.seed,
    )

    if args.m2:
        source = _require_file(Path(args.m2), "M2 file")
        pairs = read_m2(source)
        bundle = build_frequency_split(pairs, spec)
        out = _split_dir(run_dir, bundle.setting)
        save_bundle(bundle, out)
        _record_stage(
            run_dir,
            "split",
            {
                "m2": str(source),
                "sizes": [args.train_size, args.dev_size, args.test_size],
                "seed": args.seed,
            },
            inputs={"m2": source},
            outputs={
                name: out / name
                for name in ("train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json")
            },
        )
        print(f"split: frequency-based unknown bundle at {out}")
        return 0

    source = Path(args.corpus) if args.corpus else _corpus_path(run_dir)
    _require_file(source, "corpus")
    pairs = read_jsonl(source)
    known = build_known_split(pairs, spec)
    unknown = build_unknown_split(pairs, spec, n_patterns=args.n_patterns)
    outputs: dict[str, Path] = {}
    for bundle in (known, unknown):
        out = _split_dir(run_dir, bundle.setting)
        save_bundle(bundle, out)
        for name in ("train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json"):
            outputs[f"{bundle.setting}/{name}"] = out / name
    _record_stage(
        run_dir,
        "split",
        {
            "corpus": str(source),
            "sizes": [args.train_size, args.dev_size, args.test_size],
            "n_patterns": args.n_patterns,
            "seed": args.seed,
        },
        inputs={"corpus": source},
        outputs=outputs,
    )
    held = ", ".join(format_pattern(p) for p in unknown.held_out_patterns)
    print(f"split: known + unknown bundles under {run_dir / 'splits'}")
    print(f"split: held-out patterns: {held}")
    return 0


def cmd_train(args) -> int:
    run_dir = Path(args.run)
    split_dir = _require_dir(_split_dir(run_dir, args.setting), "split bundle")
    bundle = load_bundle(split_dir)
    result, model_config, train_config = _train_on_bundle(args, bundle, args.seed)

    out = _model_dir(run_dir, args.setting)
    out.mkdir(parents=True, exist_ok=True)
    best_path = out / "best.ckpt"
    final_path = out / "final.ckpt"
    save_checkpoint(result.best, best_path)
    save_checkpoint(result.final, final_path)
    log_path = out / "train_log.jsonl"
    with open(log_path, "w", encoding="utf-8") as fh:
        for entry in result.log:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    _record_stage(
        run_dir,
        f"train:{args.setting}",
        {"model": model_config.to_json(), "train": train_config.to_json()},
        inputs={name: split_dir / f"{name}.jsonl" for name in ("train", "dev")},
        outputs={
            "best": best_path,
            "best_sidecar": Path(str(best_path) + ".json"),
            "final": final_path,
            "final_sidecar": Path(str(final_path) + ".json"),
            "log": log_path,
        },
        unhashed=("log",),
    )
    last = result.log[-1]
    print(
        f"train[{args.setting}]: {last['epoch']} epochs, "
        f"final dev loss {last['dev_loss']:.4f}, "
        f"dev token accuracy {last['dev_token_accuracy']:.4f}"
    )
    return 0


def cmd_correct(args) -> int:
    run_dir = Path(args.run)
    ckpt_path = (
        Path(args.checkpoint)
        if args.checkpoint
        else _model_dir(run_dir, args.setting) / "best.ckpt"
    )
    _require_file(ckpt_path, "checkpoint")
    split_dir = _require_dir(_split_dir(run_dir, args.setting), "split bundle")
    pairs_path = _require_file(split_dir / f"{args.split}.jsonl", f"{args.split} partition")
    pairs = read_jsonl(pairs_path)
    if not pairs:
        raise ValidationError(f"no sentences to correct in {pairs_path}")

    checkpoint = load_checkpoint(ckpt_path)
    model = Transformer(checkpoint.config, params=checkpoint.params)
    decode_config = _decode_config(args)
    hyps = beam_decode(model, [p.source for p in pairs], decode_config)

    hyp_path = _hyp_path(run_dir, args.setting, args.split)
    hyp_path.parent.mkdir(parents=True, exist_ok=True)
    with open(hyp_path, "w", encoding="utf-8") as fh:
        for tokens in hyps:
            fh.write(" ".join(tokens) + "\n")
    _record_stage(
        run_dir,
        f"correct:{args.setting}:{args.split}",
        {
            "beam_size": decode_config.beam_size,
            "length_normalize": decode_config.length_normalize,
            "length_exponent": decode_config.length_exponent,
            "max_output_length": decode_config.max_output_length,
        },
        inputs={"checkpoint": ckpt_path, "sentences": pairs_path},
        outputs={"hypotheses": hyp_path},
    )
    print(f"correct[{args.setting}]: {len(hyps)} hypotheses -> {hyp_path}")
    return 0


def _read_hypotheses(path: Path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n").split() for line in fh]


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_score(args) -> int:
    run_dir = Path(args.run)
    split_dir = _require_dir(_split_dir(run_dir, args.setting), "split bundle")
    pairs_path = _require_file(split_dir / f"{args.split}.jsonl", f"{args.split} partition")
    hyp_path = _require_file(_hyp_path(run_dir, args.setting, args.split), "hypothesis file")
    pairs = read_jsonl(pairs_path)
    hyps = _read_hypotheses(hyp_path)

    out = _report_dir(run_dir, args.setting)
    out.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}
    reports = {}
    for mode in ("correction", "detection"):
        report = stratified_score(hyps, pairs, mode, by="length", exact_span=args.exact_span)
        by_noise = stratified_score(hyps, pairs, mode, by="noise", exact_span=args.exact_span)
        payload = report_to_json(report)
        payload["strata_by_noise"] = report_to_json(by_noise).get("strata", {})
        path = out / f"{mode}.json"
        _write_json(path, payload)
        outputs[mode] = path
        reports[mode] = report
        print(
            f"score[{args.setting}/{mode}]: P={pct(report.precision):.2f} "
            f"R={pct(report.recall):.2f} F0.5={pct(report.f_half):.2f}"
        )
    tsv_path = out / "buckets.tsv"
    tsv_path.write_text(buckets_tsv(reports["correction"]), encoding="utf-8")
    outputs["buckets"] = tsv_path

    # With both settings scored, emit the known/unknown comparison table.
    other = "unknown" if args.setting == "known" else "known"
    other_path = _report_dir(run_dir, other) / "correction.json"
    if other_path.is_file():
        gap_outputs = _emit_gap(run_dir, pairs)
        outputs.update(gap_outputs)
    _record_stage(
        run_dir,
        f"score:{args.setting}:{args.split}",
        {"exact_span": args.exact_span},
        inputs={"sentences": pairs_path, "hypotheses": hyp_path},
        outputs=outputs,
    )
    return 0


def _loaded_gap(run_dir: Path, mode: str) -> dict | None:
    paths = {
        setting: _report_dir(run_dir, setting) / f"{mode}.json"
        for setting in ("known", "unknown")
    }
    if not all(p.is_file() for p in paths.values()):
        return None
    payload = {
        setting: json.loads(path.read_text(encoding="utf-8"))
        for setting, path in paths.items()
    }
    known, unknown = payload["known"], payload["unknown"]
    return {
        "mode": mode,
        "known_f_half": known["f_half"],
        "unknown_f_half": unknown["f_half"],
        "delta": round(unknown["f_half"] - known["f_half"], 2),
    }


def _emit_gap(run_dir: Path, pairs: Sequence[SentencePair]) -> dict[str, Path]:
    etypes = {p.error_type for p in pairs}
    label = etypes.pop() if len(etypes) == 1 else "mixed"
    rows = []
    gaps = {}
    for mode in ("correction", "detection"):
        gap = _loaded_gap(run_dir, mode)
        if gap is not None:
            gaps[mode] = gap
            rows.append((f"{label}/{mode[:3]}", gap))
    if not rows:
        return {}
    table = gap_table(rows)
    table_path = run_dir / "reports" / "gap_table.txt"
    table_path.write_text(table, encoding="utf-8")
    gap_path = run_dir / "reports" / "gap.json"
    _write_json(gap_path, {"error_type": label, "gaps": gaps})
    print(table, end="")
    return {"gap_table": table_path, "gap": gap_path}


def cmd_report(args) -> int:
    run_dir = Path(args.run)
    _require_dir(run_dir / "reports", "reports directory")
    printed = False
    gap_path = run_dir / "reports" / "gap.json"
    if gap_path.is_file():
        payload = json.loads(gap_path.read_text(encoding="utf-8"))
        rows = [
            (f"{payload['error_type']}/{mode[:3]}", gap)
            for mode, gap in sorted(payload["gaps"].items())
        ]
        print(gap_table(rows), end="")
        printed = True
    fewshot_path = run_dir / "reports" / "fewshot.json"
    if fewshot_path.is_file():
        payload = json.loads(fewshot_path.read_text(encoding="utf-8"))
        print(f"few-shot pattern {payload['pattern']}:")
        print(_fewshot_table(payload["rows"]), end="")
        printed = True
    if not printed:
        raise ValidationError(f"no reports found under {run_dir / 'reports'}")
    return 0


def _fewshot_table(rows: Sequence[dict]) -> str:
    header = f"{'k':>4} {'precision':>10} {'recall':>10} {'f_half':>10}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['k']:>4} {row['precision']:>10.2f} {row['recall']:>10.2f} "
            f"{row['f_half']:>10.2f}"
        )
    return "\n".join(lines) + "\n"


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"{what} must be a comma-separated integer list") from exc
    if not values:
        raise ValidationError(f"{what} must name at least one value")
    return values


def cmd_fewshot(args) -> int:
    run_dir = Path(args.run)
    split_dir = _require_dir(_split_dir(run_dir, "unknown"), "unknown bundle")
    bundle = load_bundle(split_dir)
    corpus_path = Path(args.corpus) if args.corpus else _corpus_path(run_dir)
    _require_file(corpus_path, "donor corpus")
    donors = read_jsonl(corpus_path)

    if args.pattern:
        pattern = parse_pattern(args.pattern)
    else:
        pattern = sorted(bundle.held_out_patterns)[0]
    if pattern not in set(bundle.held_out_patterns):
        raise ValidationError(
            f"pattern {format_pattern(pattern)} is not held out in this bundle"
        )
    ks = _parse_int_list(args.k, "--k")
    seeds = _parse_int_list(args.seeds, "--seeds")

    rows = []
    for k in ks:
        injected = inject_patterns(
            bundle, donors, k, seed=args.seed, patterns=[pattern]
        )
        restricted = [p for p in injected.test if pattern in p.patterns()]
        if not restricted:
            raise ValidationError(
                f"no test sentences carry pattern {format_pattern(pattern)}"
            )
        per_seed = []
        for seed in seeds:
            result, model_config, _ = _train_on_bundle(args, injected, seed)
            # decode with the final checkpoint, not the dev-best one: dev
            # carries no injected-pattern sentences, so dev loss is blind to
            # the donor memorization this experiment exists to measure
            model = Transformer(
                model_config, params=result.final.params
            )
            hyps = beam_decode(model, [p.source for p in restricted], _decode_config(args))
            report = score(hyps, restricted, "correction")
            per_seed.append(
                {
                    "seed": seed,
                    "precision": pct(report.precision),
                    "recall": pct(report.recall),
                    "f_half": pct(report.f_half),
                }
            )
        rows.append(
            {
                "k": k,
                "precision": round(sum(r["precision"] for r in per_seed) / len(per_seed), 2),
                "recall": round(sum(r["recall"] for r in per_seed) / len(per_seed), 2),
                "f_half": round(sum(r["f_half"] for r in per_seed) / len(per_seed), 2),
                "per_seed": per_seed,
                "test_sentences": len(restricted),
            }
        )

    out = run_dir / "reports"
    out.mkdir(parents=True, exist_ok=True)
    fewshot_path = out / "fewshot.json"
    _write_json(
        fewshot_path,
        {"pattern": format_pattern(pattern), "seeds": seeds, "rows": rows},
    )
    _record_stage(
        run_dir,
        "fewshot",
        {
            "pattern": format_pattern(pattern),
            "k": ks,
            "seeds": seeds,
            "model": {"layers": args.layers, "dim": args.dim},
            "epochs": args.epochs,
        },
        inputs={"bundle": split_dir / "manifest.json", "corpus": corpus_path},
        outputs={"fewshot": fewshot_path},
    )
    print(f"few-shot pattern {format_pattern(pattern)}:")
    print(_fewshot_table(rows), end="")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model")
    group.add_argument("--layers", type=int, default=2)
    group.add_argument("--dim", type=int, default=128)
    group.add_argument("--ff-dim", type=int, default=256)
    group.add_argument("--heads", type=int, default=4)
    group.add_argument("--dropout", type=float, default=0.3)
    group.add_argument("--label-smoothing", type=float, default=0.1)
    group.add_argument("--max-len", type=int, default=64)
    group = parser.add_argument_group("training")
    group.add_argument("--epochs", type=int, default=30)
    group.add_argument("--batch-size", type=int, default=128)
    group.add_argument("--warmup", type=int, default=400)
    group.add_argument("--lr-scale", type=float, default=1.0)
    group.add_argument("--clip", type=float, default=1.0)


def _add_decode_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("decoding")
    group.add_argument("--beam", type=int, default=5)
    group.add_argument("--no-length-norm", action="store_true")
    group.add_argument("--length-exponent", type=float, default=1.0)
    group.add_argument("--max-output-length", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gecprobe",
        description="Synthetic grammatical-error-correction generalization pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--run", required=True, help="run directory (runs/<name>)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None, help="JSON file overriding flags")

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    common(p)
    p.add_argument("--etype", required=True, choices=ERROR_TYPES)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--grammar", default=None, help="grammar file (default: bundled)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("split", help="build train/dev/test bundles")
    common(p)
    p.add_argument("--corpus", default=None, help="JSONL corpus (default: run corpus)")
    p.add_argument("--m2", default=None, help="M2 file: frequency-based unknown split")
    p.add_argument("--train-size", type=int, required=True)
    p.add_argument("--dev-size", type=int, required=True)
    p.add_argument("--test-size", type=int, required=True)
    p.add_argument("--n-patterns", type=int, default=None, help="held-out pattern count")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model on one setting's bundle")
    common(p)
    p.add_argument("--setting", required=True, choices=("known", "unknown"))
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("correct", help="decode a partition with a trained model")
    common(p)
    p.add_argument("--setting", required=True, choices=("known", "unknown"))
    p.add_argument("--split", default="test", choices=("dev", "test"))
    p.add_argument("--checkpoint", default=None, help="override best checkpoint path")
    _add_decode_flags(p)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("score", help="score hypotheses against gold edits")
    common(p)
    p.add_argument("--setting", required=True, choices=("known", "unknown"))
    p.add_argument("--split", default="test", choices=("dev", "test"))
    p.add_argument("--exact-span", action="store_true", help="strict detection spans")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fewshot", help="inject k examples of one held-out pattern")
    common(p)
    p.add_argument("--pattern", default=None, help="'source=>correction' pattern")
    p.add_argument("--k", default="0,1,2", help="comma-separated injection counts")
    p.add_argument("--seeds", default="0", help="comma-separated training seeds")
    p.add_argument("--corpus", default=None, help="donor corpus (default: run corpus)")
    _add_model_flags(p)
    _add_decode_flags(p)
    p.set_defaults(func=cmd_fewshot)

    p = sub.add_parser("report", help="print the stored comparison tables")
    common(p)
    p.set_defaults(func=cmd_report)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    path = _require_file(Path(args.config), "config file")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"config file {path} must hold a JSON object")
    for key, value in payload.items():
        attr = key.replace("-", "_")
        if attr in ("func", "command", "config") or not hasattr(args, attr):
            raise ValidationError(
                f"config key {key!r} is not a flag of the {args.command} command"
            )
        setattr(args, attr, value)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except DivergenceDetected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (InfeasibleSplit, CapacityExceeded, InsufficientDonors) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GecProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
