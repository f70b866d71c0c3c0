"""End-to-end orchestration: split, prompt build, backend completion,
parsing, scoring, and multi-run aggregation.

Every run is driven by a single seeded generator; with ``runs=n`` the
flow repeats under seeds seed..seed+n-1 and the report carries, per
metric, the n run means plus their mean and population variance. Every
report embeds a manifest with input digests, seeds, and per-stage
timings so artifacts are re-derivable.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .corpus import Label, load_corpus, split
from .errors import PipelineStageError, UnparseableError
from .gateway import BackendConfig, parse_prediction
from .lexicon import load_lexicon
from .metrics import (
    EvalReport,
    HashingEmbedder,
    MetricSummary,
    classification_f1,
    coherence,
    readability,
    relevance,
    semantic_similarity,
    span_set_f1,
)
from .prompts import (
    PromptMode,
    build_fewshot,
    build_finetune,
    build_zeroshot,
    select_exemplars,
)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    tool_version: str
    config: dict
    seeds: list[int]
    input_digests: dict[str, str]
    timings: dict[str, float] = field(default_factory=dict)
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "config": self.config,
            "seeds": self.seeds,
            "input_digests": self.input_digests,
            "timings": self.timings,
            "timestamp": self.timestamp,
        }


VOLATILE_METADATA_KEYS = ("timestamp", "timings")


def stable_report_dict(report: EvalReport) -> dict:
    """Report as a dict with volatile fields (timestamps, timings)
    removed, for determinism comparisons."""
    obj = report.to_dict()
    manifest = dict(obj.get("metadata", {}).get("manifest", {}))
    for key in VOLATILE_METADATA_KEYS:
        manifest.pop(key, None)
    metadata = dict(obj.get("metadata", {}))
    if "manifest" in metadata:
        metadata["manifest"] = manifest
    for key in VOLATILE_METADATA_KEYS:
        metadata.pop(key, None)
    obj["metadata"] = metadata
    return obj


def _score_run(
    test_posts, predictions, unparseable_flags, embedder
) -> dict[str, float]:
    """Per-run metric values over aligned (post, prediction) pairs.

    Unparseable completions count as wrong classifications and are
    excluded from span and rationale metrics.
    """
    pred_labels = []
    gold_labels = []
    cm_scores = []
    si_scores = []
    rationale_scores: dict[str, list[float]] = {
        "relevance": [],
        "coherence": [],
        "readability": [],
        "semantic_similarity": [],
    }
    for post, pred, failed in zip(test_posts, predictions, unparseable_flags):
        gold_labels.append(post.label)
        if failed:
            wrong = (
                Label.NON_SELF_HARM
                if post.label is Label.SELF_HARM
                else Label.SELF_HARM
            )
            pred_labels.append(wrong)
            continue
        pred_labels.append(pred.label)
        gold_cm = [s.text for s in post.cm_spans]
        gold_si = [s.text for s in post.si_spans]
        cm_scores.append(span_set_f1(pred.cm_spans, gold_cm))
        si_scores.append(span_set_f1(pred.si_spans, gold_si))
        if pred.rationale.strip():
            rationale_scores["relevance"].append(
                float(relevance(pred.rationale, gold_cm, gold_si))
            )
            rationale_scores["coherence"].append(
                coherence(pred.rationale, gold_cm, gold_si)
            )
            rationale_scores["readability"].append(
                readability(pred.rationale).normalized
            )
            rationale_scores["semantic_similarity"].append(
                semantic_similarity(pred.rationale, gold_cm, gold_si, embedder)
            )

    values = {
        "classification_f1": classification_f1(pred_labels, gold_labels),
    }
    if cm_scores:
        values["cm_span_f1"] = sum(cm_scores) / len(cm_scores)
    if si_scores:
        values["si_span_f1"] = sum(si_scores) / len(si_scores)
    for name, scores in rationale_scores.items():
        if scores:
            values[name] = sum(scores) / len(scores)
    return values


def pipeline_run(
    corpus_path,
    lexicon_path,
    mode: PromptMode,
    backend,
    backend_config: BackendConfig,
    seed: int,
    runs: int = 1,
    test_fraction: float = 0.2,
    fewshot_k: int = 2,
    out_dir=None,
    embedder=None,
) -> EvalReport:
    """Execute split -> prompt build -> complete -> parse -> score.

    Returns the aggregated report; with ``out_dir`` set, also writes
    prompts, raw predictions, and the report to disk.
    """
    embedder = embedder or HashingEmbedder()
    timings: dict[str, float] = {}
    started = time.monotonic()

    def stage(name):
        timings[name] = time.monotonic() - started

    try:
        corpus, _ = load_corpus(corpus_path, strict=True)
    except Exception as exc:
        raise PipelineStageError("load-corpus", exc) from exc
    lexicon = None
    if lexicon_path is not None:
        try:
            lexicon = load_lexicon(lexicon_path)
        except Exception as exc:
            raise PipelineStageError("load-lexicon", exc) from exc
    if mode is PromptMode.FINETUNE and lexicon is None:
        raise PipelineStageError(
            "load-lexicon", ValueError("finetune mode requires a lexicon")
        )
    stage("load")

    seeds = [seed + r for r in range(runs)]
    run_values: list[dict[str, float]] = []
    total_unparseable = 0
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    for run_seed in seeds:
        try:
            train, test = split(corpus, test_fraction, run_seed)
        except Exception as exc:
            raise PipelineStageError("split", exc) from exc

        test_posts = list(test.posts)
        try:
            if mode is PromptMode.FINETUNE:
                prompt_list = [build_finetune(p, lexicon) for p in test_posts]
            elif mode is PromptMode.ZEROSHOT:
                prompt_list = [build_zeroshot(p) for p in test_posts]
            elif mode is PromptMode.FEWSHOT:
                exemplars = select_exemplars(train, fewshot_k, run_seed)
                prompt_list = [build_fewshot(p, exemplars) for p in test_posts]
            else:
                raise ValueError(f"pipeline does not evaluate mode {mode.value}")
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError("prompt-build", exc) from exc

        predictions = []
        unparseable_flags = []
        for prompt in prompt_list:
            try:
                raw = backend.complete(prompt)
            except Exception as exc:
                raise PipelineStageError("complete", exc) from exc
            try:
                predictions.append(parse_prediction(raw))
                unparseable_flags.append(False)
            except UnparseableError:
                predictions.append(None)
                unparseable_flags.append(True)
                total_unparseable += 1

        try:
            run_values.append(
                _score_run(test_posts, predictions, unparseable_flags, embedder)
            )
        except Exception as exc:
            raise PipelineStageError("score", exc) from exc

        if out_dir is not None:
            run_file = out_dir / f"run-{run_seed}.jsonl"
            with run_file.open("w", encoding="utf-8") as fh:
                for post, prompt, pred, failed in zip(
                    test_posts, prompt_list, predictions, unparseable_flags
                ):
                    fh.write(
                        json.dumps(
                            {
                                "id": post.id,
                                "prompt": prompt.to_dict(),
                                "prediction": None
                                if failed
                                else {
                                    "label": pred.label.value,
                                    "cm_spans": list(pred.cm_spans),
                                    "si_spans": list(pred.si_spans),
                                    "rationale": pred.rationale,
                                    "parse_route": pred.meta.get("parse_route"),
                                },
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )
    stage("runs")

    metric_names = sorted({name for values in run_values for name in values})
    metrics = {
        name: MetricSummary.from_samples(
            [values[name] for values in run_values if name in values]
        )
        for name in metric_names
    }

    digests = {"corpus": file_digest(corpus_path)}
    if lexicon_path is not None:
        digests["lexicon"] = file_digest(lexicon_path)
    manifest = RunManifest(
        tool_version=__version__,
        config={
            "mode": mode.value,
            "backend": backend_config.to_dict(),
            "test_fraction": test_fraction,
            "runs": runs,
            "fewshot_k": fewshot_k,
        },
        seeds=seeds,
        input_digests=digests,
        timings=timings,
        timestamp=EvalReport.now_timestamp(),
    )
    report = EvalReport(
        metrics=metrics,
        metadata={
            "manifest": manifest.to_dict(),
            "unparseable": total_unparseable,
            "samples_per_run": len(run_values and test_posts or []),
        },
    )
    if out_dir is not None:
        (out_dir / "report.json").write_text(
            json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    return report
