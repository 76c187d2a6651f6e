"""End-to-end demo pipeline over the bundled synthetic corpus.

One invocation generates train/validation/test corpora, builds the
synonym lexicon and vocabulary counts, shifts the test sets level by
level (unknown-word and known-word ratio sweeps, importance buckets,
context deletion, genuine short contexts), scores every level with the
toy scorers, fits a temperature on the validation split, and renders the
metric tables, curve CSV, and figures. Everything derives from one seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .calibration import Temperature, apply_temperature, fit_temperature, write_temperature
from .corpus import (
    CandidateSet,
    Instance,
    build_candidate_sets,
    expand_instances,
    filter_by_context_length,
    write_candidate_sets,
    write_instances,
)
from .errors import ConfigError
from .harness import (
    NoisyOverlapScorer,
    OverlapScorer,
    PerturbedOverlapScorer,
    ScoreVector,
    aggregate_probability_vectors,
    mc_aggregate,
    predict_probs,
    write_predictions,
)
from .importance import fallback_importance_map
from .jsonl import derive_seed, write_records
from .lexicon import ReplacementMode, build_vocab_stats, write_lexicon, write_vocab_stats
from .manifest import build_manifest, write_manifest
from .metrics import EceBinning, MetricsRow, evaluate, write_metric_rows
from .report import write_report
from .shift_ic import build_sr_sets, shift_dataset_ic
from .shift_uw import ShiftStats, UwConfig, shift_dataset_uw
from .synthetic import SynthSpec, build_synthetic_lexicon, generate_dialogues, generate_staged_dialogues

UW_RATIOS = tuple(round(0.05 * i, 2) for i in range(1, 11))
IC_STEPS = tuple(range(6))
SR_TURNS = tuple(range(6, 0, -1))
BUCKETS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class DemoConfig:
    out_dir: Path
    seed: int = 7
    train_dialogues: int = 500
    val_dialogues: int = 150
    test_dialogues: int = 320
    staged_dialogues: int = 900
    k: int = 10
    passes: int = 5
    members: int = 5
    noise: float = 0.03
    jitter: float = 0.01
    known_threshold: int = 50
    ece_bins: int = 10
    fmt: str = "md"


@dataclass
class DemoResult:
    rows: list[MetricsRow]
    member_rows: list[MetricsRow]
    temperature: Temperature
    shift_stats: dict[str, ShiftStats]
    written: list[Path] = field(default_factory=list)

    def rows_for(self, method: str, tags: Sequence[str]) -> list[MetricsRow]:
        by_key = {(r.method, r.shift_tag): r for r in self.rows + self.member_rows}
        return [by_key[(method, tag)] for tag in tags]


def _tag_filename(tag: str) -> str:
    return tag.replace(":", "_").replace("=", "_").replace("/", "-")


class _Evaluator:
    """Scores one instance block with every method and collects rows."""

    def __init__(self, config: DemoConfig, temperature: Optional[Temperature]) -> None:
        self.config = config
        self.temperature = temperature
        self.vanilla = OverlapScorer()
        self.noisy = NoisyOverlapScorer(noise=config.noise)
        self.members = [
            PerturbedOverlapScorer(
                member_seed=derive_seed(config.seed, "member", m), jitter=config.jitter
            )
            for m in range(config.members)
        ]
        self.mc_seed = derive_seed(config.seed, "mc")
        self.binning = EceBinning(bins=config.ece_bins)
        self.rows: list[MetricsRow] = []
        self.member_rows: list[MetricsRow] = []
        self.sample_predictions: list[ScoreVector] = []

    def run_block(
        self,
        instances: Sequence[Instance],
        cands_by_id: dict[str, CandidateSet],
        tag: str,
        keep_sample: bool = False,
    ) -> None:
        vanilla_preds = []
        dropout_aggs = []
        ensemble_aggs = []
        member_preds: list[list] = [[] for _ in self.members]
        for inst in instances:
            cs = cands_by_id[inst.id]
            vp = predict_probs(self.vanilla, cs, inst.context)
            vanilla_preds.append(vp)
            per_member = [predict_probs(m, cs, inst.context) for m in self.members]
            for m, sv in enumerate(per_member):
                member_preds[m].append(sv)
            ensemble_aggs.append(
                aggregate_probability_vectors(inst.id, [sv.probs for sv in per_member])
            )
            dropout_aggs.append(
                mc_aggregate(self.noisy, cs, inst.context, self.config.passes, seed=self.mc_seed)
            )
            if keep_sample:
                vp.method = "vanilla"
                self.sample_predictions.append(vp)
                for m, sv in enumerate(per_member):
                    sv.method = "ensemble"
                    sv.member = m
                    self.sample_predictions.append(sv)

        candidate_sets = [cands_by_id[inst.id] for inst in instances]
        self.rows.append(
            evaluate(vanilla_preds, candidate_sets, "vanilla", tag, self.binning)
        )
        if self.temperature is not None:
            scaled = [apply_temperature(sv, self.temperature.value) for sv in vanilla_preds]
            self.rows.append(
                evaluate(scaled, candidate_sets, "temp-scaling", tag, self.binning)
            )
        self.rows.append(
            evaluate(dropout_aggs, candidate_sets, "dropout", tag, self.binning)
        )
        self.rows.append(
            evaluate(ensemble_aggs, candidate_sets, "ensemble", tag, self.binning)
        )
        for m, preds in enumerate(member_preds):
            self.member_rows.append(
                evaluate(preds, candidate_sets, f"member-{m}", tag, self.binning)
            )


def run_demo(config: DemoConfig) -> DemoResult:
    if config.members < 1 or config.passes < 1:
        raise ConfigError("demo needs at least one ensemble member and one pass")
    out_dir = Path(config.out_dir)
    work = out_dir / "work"
    work.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def track(path: Path) -> Path:
        written.append(path)
        return path

    # ----- corpora, lexicon, vocabulary -----
    train = generate_dialogues(
        SynthSpec(config.train_dialogues, seed=derive_seed(config.seed, "train"), prefix="tr")
    )
    val = generate_dialogues(
        SynthSpec(config.val_dialogues, seed=derive_seed(config.seed, "val"), prefix="va")
    )
    test = generate_dialogues(
        SynthSpec(config.test_dialogues, seed=derive_seed(config.seed, "test"), prefix="te")
    )
    staged = generate_staged_dialogues(
        config.staged_dialogues, seed=derive_seed(config.seed, "staged"), prefix="ic"
    )
    lexicon = build_synthetic_lexicon([train, val, test, staged])
    stats = build_vocab_stats(train)

    for name, dialogues in (
        ("train", train), ("val", val), ("test", test), ("staged", staged)
    ):
        write_records(
            track(work / f"dialogues_{name}.jsonl"),
            (
                {"id": d.id, "utterances": [u.text for u in d.utterances]}
                for d in dialogues
            ),
        )
    write_lexicon(track(work / "lexicon.jsonl"), lexicon)
    write_vocab_stats(track(work / "vocab.jsonl"), stats)

    val_instances = expand_instances(val)
    test_instances = expand_instances(test)
    staged_instances = filter_by_context_length(expand_instances(staged), 6)
    write_instances(track(work / "instances_val.jsonl"), val_instances)
    write_instances(track(work / "instances_test.jsonl"), test_instances)
    write_instances(track(work / "instances_staged.jsonl"), staged_instances)

    cand_val = build_candidate_sets(val_instances, config.k, seed=derive_seed(config.seed, "cand", "val"))
    cand_test = build_candidate_sets(test_instances, config.k, seed=derive_seed(config.seed, "cand", "test"))
    cand_staged = build_candidate_sets(
        staged_instances, config.k, seed=derive_seed(config.seed, "cand", "staged")
    )
    write_candidate_sets(track(work / "candidates_val.jsonl"), cand_val)
    write_candidate_sets(track(work / "candidates_test.jsonl"), cand_test)
    write_candidate_sets(track(work / "candidates_staged.jsonl"), cand_staged)
    by_id_val = {cs.instance_id: cs for cs in cand_val}
    by_id_test = {cs.instance_id: cs for cs in cand_test}
    by_id_staged = {cs.instance_id: cs for cs in cand_staged}

    # ----- temperature from the validation split -----
    vanilla = OverlapScorer()
    val_preds = [predict_probs(vanilla, by_id_val[i.id], i.context) for i in val_instances]
    val_gold = [by_id_val[i.id].gold_index for i in val_instances]
    temperature = fit_temperature(val_preds, val_gold)
    write_temperature(track(out_dir / "temperature.json"), temperature)

    evaluator = _Evaluator(config, temperature)
    shift_stats: dict[str, ShiftStats] = {}

    # ----- unshifted reference rows -----
    evaluator.run_block(val_instances, by_id_val, "dev")
    evaluator.run_block(test_instances, by_id_test, "test")

    # ----- unknown-word and known-word ratio sweeps -----
    for mode, label in (
        (ReplacementMode.UNKNOWN_WORD, "uw"),
        (ReplacementMode.KNOWN_WORD, "kw"),
    ):
        for ratio in UW_RATIOS:
            cfg = UwConfig(
                mode=mode,
                ratio=ratio,
                seed=derive_seed(config.seed, label),
                known_threshold=config.known_threshold,
            )
            kept, block_stats = shift_dataset_uw(test_instances, cfg, lexicon, stats)
            tag = cfg.shift_tag()
            shift_stats[tag] = block_stats
            write_instances(track(work / f"shifted_{_tag_filename(tag)}.jsonl"), kept)
            if not kept:
                continue
            evaluator.run_block(
                kept, by_id_test, tag, keep_sample=(label == "uw" and ratio == 0.20)
            )

    # ----- importance-bucket sweep (unknown words, fixed ratio) -----
    imap = fallback_importance_map(test_instances, stats)
    for bucket in BUCKETS:
        cfg = UwConfig(
            mode=ReplacementMode.UNKNOWN_WORD,
            ratio=0.20,
            bucket=bucket,
            seed=derive_seed(config.seed, "uw-bucket"),
            known_threshold=config.known_threshold,
        )
        kept, block_stats = shift_dataset_uw(
            test_instances, cfg, lexicon, stats, importance=imap
        )
        tag = cfg.shift_tag()
        shift_stats[tag] = block_stats
        write_instances(track(work / f"shifted_{_tag_filename(tag)}.jsonl"), kept)
        if not kept:
            continue
        evaluator.run_block(kept, by_id_test, tag)

    # ----- context deletion on six-turn contexts -----
    for step in IC_STEPS:
        shifted, block_stats = shift_dataset_ic(staged_instances, Fraction(step, 6))
        tag = f"ic:r={step}/6"
        shift_stats[tag] = block_stats
        write_instances(track(work / f"shifted_{_tag_filename(tag)}.jsonl"), shifted)
        evaluator.run_block(shifted, by_id_staged, tag)

    # ----- genuine short contexts -----
    for turns in SR_TURNS:
        if turns == 6:
            subset = build_sr_sets(staged_instances, turns)
            cands_by_id = by_id_staged
        else:
            subset = build_sr_sets(test_instances, turns)
            cands_by_id = by_id_test
        if not subset:
            # Small corpora may have no contexts of this exact length.
            continue
        evaluator.run_block(subset, cands_by_id, f"sr:t={turns}")

    # ----- persisted results -----
    write_predictions(
        track(work / "predictions_sample_uw_r_0.20.jsonl"), evaluator.sample_predictions
    )
    write_metric_rows(track(out_dir / "rows.jsonl"), evaluator.rows)
    write_metric_rows(track(out_dir / "member_rows.jsonl"), evaluator.member_rows)
    write_records(
        track(out_dir / "stats.jsonl"),
        (
            {"shift_tag": tag, **shift_stats[tag].to_record()}
            for tag in shift_stats
        ),
    )
    report_files = write_report(evaluator.rows, out_dir / "report", fmt=config.fmt)
    written.extend(report_files)

    manifest = build_manifest(
        command="demo",
        config={
            "seed": config.seed,
            "train_dialogues": config.train_dialogues,
            "val_dialogues": config.val_dialogues,
            "test_dialogues": config.test_dialogues,
            "staged_dialogues": config.staged_dialogues,
            "k": config.k,
            "passes": config.passes,
            "members": config.members,
            "noise": config.noise,
            "jitter": config.jitter,
            "known_threshold": config.known_threshold,
            "ece_bins": config.ece_bins,
            "format": config.fmt,
        },
        input_paths=[],
        output_paths=list(written),
        seed=config.seed,
    )
    write_manifest(out_dir / "manifest.json", manifest)
    written.append(out_dir / "manifest.json")

    return DemoResult(
        rows=evaluator.rows,
        member_rows=evaluator.member_rows,
        temperature=temperature,
        shift_stats=shift_stats,
        written=written,
    )
