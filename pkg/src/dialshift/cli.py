"""Command-line interface.

Subcommands cover the pipeline end to end: expand dialogues into ranking
instances, build vocabulary counts and candidate sets, apply shifts,
score with the toy scorers, fit a temperature, evaluate metric rows, and
render reports. Every output file gets a sibling manifest recording the
command, flags, seeds, and content digests of inputs and outputs.

Exit codes: 0 on success, 1 on validation failures in input data or
configuration, 2 on command-line usage errors.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from . import __version__
from .calibration import apply_temperature, fit_temperature, load_temperature, write_temperature
from .corpus import (
    build_candidate_sets,
    expand_instances,
    filter_by_context_length,
    load_candidate_sets,
    load_dialogues,
    load_instances,
    write_candidate_sets,
    write_instances,
)
from .demo import DemoConfig, run_demo
from .errors import DialshiftError, SchemaError
from .harness import (
    NoisyOverlapScorer,
    OverlapScorer,
    PerturbedOverlapScorer,
    group_predictions,
    load_predictions,
    predict_probs,
    write_predictions,
)
from .importance import fallback_importance_map, load_importance
from .jsonl import derive_seed, write_json
from .lexicon import (
    DEFAULT_KNOWN_THRESHOLD,
    ReplacementMode,
    build_vocab_stats,
    load_lexicon,
    load_vocab_stats,
    write_vocab_stats,
)
from .manifest import build_manifest, manifest_path_for, write_manifest
from .metrics import EceBinning, evaluate, load_metric_rows, write_metric_rows
from .report import write_report
from .shift_ic import build_sr_sets, parse_ic_ratio, shift_dataset_ic
from .shift_uw import BUCKET_RATIO, ShiftStats, UwConfig, shift_dataset_uw


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _snapshot(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"func", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit_manifest(
    args: argparse.Namespace,
    command: str,
    inputs: list[str | Path],
    outputs: list[str | Path],
    manifest_out: str | Path,
    seed: Optional[int] = None,
) -> None:
    manifest = build_manifest(
        command=command,
        config=_snapshot(args),
        input_paths=inputs,
        output_paths=outputs,
        seed=seed,
    )
    write_manifest(manifest_out, manifest)


def _say(path: str | Path) -> None:
    print(f"wrote {path}")


# ===== Subcommands =====


def cmd_expand(args: argparse.Namespace) -> int:
    dialogues = load_dialogues(args.inp)
    instances = expand_instances(dialogues)
    write_instances(args.out, instances)
    _emit_manifest(args, "expand", [args.inp], [args.out], manifest_path_for(args.out))
    _say(args.out)
    print(f"{len(dialogues)} dialogues -> {len(instances)} instances")
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    instances = load_instances(args.inp)
    kept = filter_by_context_length(instances, args.turns)
    write_instances(args.out, kept)
    _emit_manifest(args, "filter", [args.inp], [args.out], manifest_path_for(args.out))
    _say(args.out)
    print(f"kept {len(kept)} of {len(instances)} instances with {args.turns}-turn contexts")
    return 0


def cmd_vocab(args: argparse.Namespace) -> int:
    dialogues = load_dialogues(args.inp)
    stats = build_vocab_stats(dialogues)
    write_vocab_stats(args.out, stats)
    _emit_manifest(args, "vocab", [args.inp], [args.out], manifest_path_for(args.out))
    _say(args.out)
    return 0


def cmd_candidates(args: argparse.Namespace) -> int:
    instances = load_instances(args.inp)
    sets = build_candidate_sets(instances, k=args.k, seed=args.seed)
    write_candidate_sets(args.out, sets)
    _emit_manifest(
        args, "candidates", [args.inp], [args.out], manifest_path_for(args.out), seed=args.seed
    )
    _say(args.out)
    return 0


def _check_shift_flags(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    method = args.method
    if method in ("uw", "kw"):
        if args.lexicon is None or args.vocab is None:
            parser.error(f"--method {method} needs --lexicon and --vocab")
        if (args.ratio is None) == (args.bucket is None):
            parser.error(f"--method {method} needs exactly one of --ratio or --bucket")
        if args.ratio is not None:
            try:
                ratio = float(args.ratio)
            except ValueError:
                parser.error(f"--ratio must be a decimal for --method {method}")
            if not 0.0 < ratio <= 1.0:
                parser.error(f"--ratio must be in (0, 1], got {args.ratio}")
        if args.bucket is not None and not 1 <= args.bucket <= 5:
            parser.error(f"--bucket must be in 1..5, got {args.bucket}")
        if args.bucket is not None and args.importance is None:
            parser.error("--bucket needs --importance (a score file or 'fallback')")
        if args.intersect_buckets and args.bucket is None:
            parser.error("--intersect-buckets only applies with --bucket")
        if args.turns is not None:
            parser.error(f"--turns does not apply to --method {method}")
    elif method == "ic":
        if args.ratio is None:
            parser.error("--method ic needs --ratio (a fraction such as 2/6)")
        for flag, name in (
            (args.bucket, "--bucket"),
            (args.importance, "--importance"),
            (args.turns, "--turns"),
            (args.lexicon, "--lexicon"),
            (args.vocab, "--vocab"),
        ):
            if flag is not None:
                parser.error(f"{name} does not apply to --method ic")
        if args.intersect_buckets:
            parser.error("--intersect-buckets does not apply to --method ic")
    elif method == "sr":
        if args.turns is None:
            parser.error("--method sr needs --turns")
        for flag, name in (
            (args.ratio, "--ratio"),
            (args.bucket, "--bucket"),
            (args.importance, "--importance"),
            (args.lexicon, "--lexicon"),
            (args.vocab, "--vocab"),
        ):
            if flag is not None:
                parser.error(f"{name} does not apply to --method sr")


def cmd_shift(args: argparse.Namespace) -> int:
    instances = load_instances(args.inp)
    inputs: list[str | Path] = [args.inp]

    if args.method in ("uw", "kw"):
        lexicon = load_lexicon(args.lexicon)
        stats = load_vocab_stats(args.vocab)
        inputs += [args.lexicon, args.vocab]
        imap = None
        if args.bucket is not None:
            if args.importance == "fallback":
                imap = fallback_importance_map(instances, stats)
            else:
                imap = load_importance(args.importance)
                inputs.append(args.importance)
        mode = (
            ReplacementMode.UNKNOWN_WORD if args.method == "uw" else ReplacementMode.KNOWN_WORD
        )
        ratio = BUCKET_RATIO if args.bucket is not None else float(args.ratio)
        cfg = UwConfig(
            mode=mode,
            ratio=ratio,
            bucket=args.bucket,
            seed=args.seed,
            known_threshold=args.known_threshold,
        )
        shifted, stats_out = shift_dataset_uw(
            instances,
            cfg,
            lexicon,
            stats,
            importance=imap,
            intersect_buckets=args.intersect_buckets,
        )
        tag = cfg.shift_tag()
    elif args.method == "ic":
        ratio = parse_ic_ratio(args.ratio)
        shifted, stats_out = shift_dataset_ic(instances, ratio)
        tag = shifted[0].provenance.shift_tag if shifted else f"ic:r={args.ratio}"
    else:
        shifted = build_sr_sets(instances, args.turns)
        stats_out = ShiftStats(
            kept=len(shifted), dropped=len(instances) - len(shifted), avg_replacements=0.0
        )
        tag = f"sr:t={args.turns}"

    write_instances(args.out, shifted)
    stats_path = args.stats or f"{args.out}.stats.json"
    write_json(stats_path, {"shift_tag": tag, **stats_out.to_record()})
    _emit_manifest(
        args, "shift", inputs, [args.out, stats_path], manifest_path_for(args.out), seed=args.seed
    )
    _say(args.out)
    print(f"{tag}: kept {stats_out.kept}, dropped {stats_out.dropped}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    instances = load_instances(args.inp)
    sets = load_candidate_sets(args.candidates, k=args.k)
    by_id = {cs.instance_id: cs for cs in sets}
    for inst in instances:
        if inst.id not in by_id:
            raise SchemaError(f"no candidate set for instance {inst.id!r}")

    predictions = []
    if args.mode == "vanilla":
        scorer = OverlapScorer()
        for inst in instances:
            sv = predict_probs(scorer, by_id[inst.id], inst.context)
            sv.method = "vanilla"
            predictions.append(sv)
    elif args.mode == "dropout":
        scorer = NoisyOverlapScorer(noise=args.noise)
        for inst in instances:
            for p in range(args.passes):
                scorer.reseed(derive_seed(args.seed, inst.id, "pass", p))
                sv = predict_probs(scorer, by_id[inst.id], inst.context)
                sv.method = "dropout"
                sv.pass_index = p
                predictions.append(sv)
    else:
        members = [
            PerturbedOverlapScorer(member_seed=derive_seed(args.seed, "member", m), jitter=args.jitter)
            for m in range(args.members)
        ]
        for inst in instances:
            for m, scorer in enumerate(members):
                sv = predict_probs(scorer, by_id[inst.id], inst.context)
                sv.method = "ensemble"
                sv.member = m
                predictions.append(sv)

    write_predictions(args.out, predictions)
    _emit_manifest(
        args,
        "score",
        [args.inp, args.candidates],
        [args.out],
        manifest_path_for(args.out),
        seed=args.seed,
    )
    _say(args.out)
    return 0


def cmd_fit_temp(args: argparse.Namespace) -> int:
    predictions = load_predictions(args.predictions, k=args.k)
    for sv in predictions:
        if sv.member is not None or sv.pass_index is not None:
            raise SchemaError(
                "temperature fitting expects single-pass predictions; "
                f"instance {sv.instance_id!r} has member/pass fields"
            )
    sets = load_candidate_sets(args.candidates)
    gold_by_id = {cs.instance_id: cs.gold_index for cs in sets}
    gold = []
    for sv in predictions:
        if sv.instance_id not in gold_by_id:
            raise SchemaError(f"no candidate set for instance {sv.instance_id!r}")
        gold.append(gold_by_id[sv.instance_id])
    temperature = fit_temperature(predictions, gold)
    write_temperature(args.out, temperature)
    _emit_manifest(
        args,
        "fit-temp",
        [args.predictions, args.candidates],
        [args.out],
        manifest_path_for(args.out),
    )
    _say(args.out)
    print(
        f"temperature {temperature.value:.4f} "
        f"(nll {temperature.nll_at_fit:.6f}, {temperature.fit_iterations} iterations)"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    predictions = load_predictions(args.predictions, k=args.k)
    sets = load_candidate_sets(args.candidates)
    inputs: list[str | Path] = [args.predictions, args.candidates]

    if args.temperature is not None:
        temp = load_temperature(args.temperature)
        inputs.append(args.temperature)
        predictions = [apply_temperature(sv, temp.value) for sv in predictions]

    methods = {sv.method for sv in predictions}
    if args.method is not None:
        method = args.method
    elif len(methods) == 1:
        method = methods.pop() or "vanilla"
    else:
        raise SchemaError(f"predictions mix methods {sorted(methods)}; pass --method")

    if any(sv.member is not None or sv.pass_index is not None for sv in predictions):
        scored = group_predictions(predictions)
    else:
        scored = predictions

    binning = EceBinning(bins=args.ece_bins, mode=args.ece_mode)
    row = evaluate(scored, sets, method, args.shift_tag, binning)
    write_metric_rows(args.out, [row])
    _emit_manifest(args, "eval", inputs, [args.out], manifest_path_for(args.out))
    _say(args.out)
    print(
        f"{row.method} @ {row.shift_tag}: n={row.n} acc={row.acc:.4f} "
        f"brier={row.brier:.4f} ece={row.ece:.4f}"
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    rows = []
    for path in args.inp:
        rows.extend(load_metric_rows(path))
    written = write_report(rows, args.out_dir, fmt=args.format)
    manifest_out = Path(args.out_dir) / "manifest.json"
    _emit_manifest(args, "report", list(args.inp), list(written), manifest_out)
    for path in written:
        _say(path)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    checks = [
        ("dialogues", args.dialogues, load_dialogues),
        ("instances", args.instances, load_instances),
        ("candidates", args.candidates, lambda p: load_candidate_sets(p, k=args.k)),
        ("importance", args.importance, load_importance),
        ("predictions", args.predictions, lambda p: load_predictions(p, k=args.k)),
        ("vocab", args.vocab, load_vocab_stats),
        ("lexicon", args.lexicon, load_lexicon),
        ("rows", args.rows, load_metric_rows),
        ("temperature", args.temperature, load_temperature),
    ]
    if all(path is None for _, path, _ in checks):
        raise SchemaError("nothing to validate; pass at least one file")

    loaded: dict[str, Any] = {}
    failures = 0
    for name, path, loader in checks:
        if path is None:
            continue
        try:
            loaded[name] = loader(path)
            print(f"{name}: {path}: ok")
        except DialshiftError as exc:
            failures += 1
            print(f"{name}: {exc}", file=sys.stderr)

    if "instances" in loaded and "importance" in loaded:
        by_id = {inst.id: inst for inst in loaded["instances"]}
        for iid, scores in loaded["importance"].scores.items():
            inst = by_id.get(iid)
            if inst is None:
                failures += 1
                print(f"importance: no instance {iid!r}", file=sys.stderr)
            elif len(scores) != len(inst.context_tokens()):
                failures += 1
                print(
                    f"importance: instance {iid!r}: {len(scores)} scores for "
                    f"{len(inst.context_tokens())} context tokens",
                    file=sys.stderr,
                )
    if "instances" in loaded and "predictions" in loaded:
        ids = {inst.id for inst in loaded["instances"]}
        for sv in loaded["predictions"]:
            if sv.instance_id not in ids:
                failures += 1
                print(f"predictions: no instance {sv.instance_id!r}", file=sys.stderr)
                break
    if "candidates" in loaded and "predictions" in loaded:
        widths = {len(cs.candidates) for cs in loaded["candidates"]}
        for sv in loaded["predictions"]:
            if len(sv.logits) not in widths:
                failures += 1
                print(
                    f"predictions: instance {sv.instance_id!r} has {len(sv.logits)} "
                    f"logits but candidate sets hold {sorted(widths)}",
                    file=sys.stderr,
                )
                break

    if failures:
        print(f"{failures} validation failure(s)", file=sys.stderr)
        return 1
    print("all files valid")
    return 0


def cmd_demo(args: argparse.Namespace) -> int:
    config = DemoConfig(
        out_dir=Path(args.out_dir),
        seed=args.seed,
        train_dialogues=args.train_dialogues,
        val_dialogues=args.val_dialogues,
        test_dialogues=args.test_dialogues,
        staged_dialogues=args.staged_dialogues,
        k=args.k,
        passes=args.passes,
        members=args.members,
        noise=args.noise,
        known_threshold=args.known_threshold,
        ece_bins=args.ece_bins,
        fmt=args.format,
    )
    result = run_demo(config)
    print(f"fitted temperature: {result.temperature.value:.4f}")
    print(f"metric rows: {len(result.rows)} (+{len(result.member_rows)} member rows)")
    print(f"report under {Path(args.out_dir) / 'report'}")
    return 0


# ===== Parser =====


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialshift",
        description="Gradual distribution shifts for dialogue response ranking.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", help="expand dialogues into ranking instances")
    p.add_argument("--in", dest="inp", required=True, help="dialogue JSONL")
    p.add_argument("--out", required=True, help="instance JSONL to write")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("filter", help="keep instances with an exact context length")
    p.add_argument("--in", dest="inp", required=True, help="instance JSONL")
    p.add_argument("--turns", type=_positive_int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("vocab", help="count tokens over a training corpus")
    p.add_argument("--in", dest="inp", required=True, help="dialogue JSONL")
    p.add_argument("--out", required=True, help="vocab count JSONL to write")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("candidates", help="attach k response candidates per instance")
    p.add_argument("--in", dest="inp", required=True, help="instance JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("shift", help="apply a distribution shift to instances")
    p.add_argument("--in", dest="inp", required=True, help="instance JSONL")
    p.add_argument("--out", required=True, help="shifted instance JSONL")
    p.add_argument("--stats", default=None, help="shift stats JSON (default <out>.stats.json)")
    p.add_argument("--method", choices=("uw", "kw", "ic", "sr"), required=True)
    p.add_argument("--ratio", default=None, help="decimal for uw/kw, fraction like 2/6 for ic")
    p.add_argument("--bucket", type=int, default=None, help="importance quintile 1..5 (uw/kw)")
    p.add_argument(
        "--importance", default=None, help="importance score JSONL, or 'fallback' for rarity scores"
    )
    p.add_argument(
        "--intersect-buckets",
        action="store_true",
        help="keep only instances surviving every bucket",
    )
    p.add_argument("--turns", type=_positive_int, default=None, help="context turns (sr)")
    p.add_argument("--lexicon", default=None, help="synonym JSONL (uw/kw)")
    p.add_argument("--vocab", default=None, help="vocab count JSONL (uw/kw)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--known-threshold", type=int, default=DEFAULT_KNOWN_THRESHOLD)
    p.set_defaults(func=cmd_shift)

    p = sub.add_parser("score", help="score candidates with a toy scorer")
    p.add_argument("--in", dest="inp", required=True, help="instance JSONL")
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", required=True, help="prediction JSONL")
    p.add_argument("--mode", choices=("vanilla", "dropout", "ensemble"), default="vanilla")
    p.add_argument("--noise", type=float, default=0.03, help="noise magnitude (dropout)")
    p.add_argument("--jitter", type=float, default=0.35, help="member weight jitter (ensemble)")
    p.add_argument("--passes", type=_positive_int, default=5)
    p.add_argument("--members", type=_positive_int, default=5)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fit-temp", help="fit a softmax temperature on validation predictions")
    p.add_argument("--predictions", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", required=True, help="temperature JSON")
    p.add_argument("--k", type=_positive_int, default=None)
    p.set_defaults(func=cmd_fit_temp)

    p = sub.add_parser("eval", help="compute accuracy, Brier, and ECE for predictions")
    p.add_argument("--predictions", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", required=True, help="metric row JSONL")
    p.add_argument("--method", default=None, help="method label (default: from the file)")
    p.add_argument("--shift-tag", required=True, help="row label, e.g. uw:r=0.20 or test")
    p.add_argument("--ece-bins", type=_positive_int, default=10)
    p.add_argument("--ece-mode", choices=("top1", "percandidate"), default="top1")
    p.add_argument("--temperature", default=None, help="temperature JSON to apply first")
    p.add_argument("--k", type=_positive_int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render metric tables, curve CSV, and figures")
    p.add_argument("--in", dest="inp", nargs="+", required=True, help="metric row JSONL files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=("md", "csv"), default="md")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="check files against the pipeline schemas")
    p.add_argument("--dialogues", default=None)
    p.add_argument("--instances", default=None)
    p.add_argument("--candidates", default=None)
    p.add_argument("--importance", default=None)
    p.add_argument("--predictions", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--rows", default=None)
    p.add_argument("--temperature", default=None)
    p.add_argument("--k", type=_positive_int, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("demo", help="run the whole pipeline on a synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--train-dialogues", type=_positive_int, default=500)
    p.add_argument("--val-dialogues", type=_positive_int, default=150)
    p.add_argument("--test-dialogues", type=_positive_int, default=320)
    p.add_argument("--staged-dialogues", type=_positive_int, default=900)
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--passes", type=_positive_int, default=5)
    p.add_argument("--members", type=_positive_int, default=5)
    p.add_argument("--noise", type=float, default=0.03)
    p.add_argument("--known-threshold", type=int, default=50)
    p.add_argument("--ece-bins", type=_positive_int, default=10)
    p.add_argument("--format", choices=("md", "csv"), default="md")
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "shift":
        _check_shift_flags(parser, args)
    try:
        return args.func(args)
    except DialshiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
