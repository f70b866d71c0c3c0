"""Command-line entry point exposing every toolkit operation.

Subcommand layout:
  lexicon validate
  corpus validate|stats|emoji-report|split|perturb
  prompt build
  run
  eval classification|spans|rationale|significance
  agreement kappa|spans
  pipeline
"""

from __future__ import annotations

import csv as csv_mod
import json
import sys
from pathlib import Path

import click

from . import __version__, agreement as agreement_mod, corpus as corpus_mod
from . import lexicon as lexicon_mod
from .corpus import Label, PerturbMode
from .errors import CesmError, CorpusLoadError
from .gateway import BackendConfig, make_backend, parse_prediction
from .metrics import (
    HashingEmbedder,
    classification_f1,
    coherence,
    paired_t_test,
    readability,
    relevance,
    semantic_similarity,
    span_set_f1,
    EvalReport,
    MetricSummary,
)
from .pipeline import pipeline_run
from .prompts import (
    PromptInstance,
    PromptMode,
    build_fewshot,
    build_finetune,
    build_synthetic,
    build_zeroshot,
    select_exemplars,
)


def _emit(data: dict, fmt: str):
    if fmt == "json":
        click.echo(json.dumps(data, indent=2, ensure_ascii=False))
    else:
        writer = csv_mod.writer(sys.stdout)
        for key, value in _flatten(data):
            writer.writerow([key, value])


def _flatten(data, prefix=""):
    rows = []
    if isinstance(data, dict):
        for k, v in data.items():
            rows.extend(_flatten(v, f"{prefix}{k}." if prefix else f"{k}."))
    elif isinstance(data, (list, tuple)):
        rows.append((prefix.rstrip("."), json.dumps(data, ensure_ascii=False)))
    else:
        rows.append((prefix.rstrip("."), data))
    return rows


format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
    help="Report output format.",
)


@click.group()
@click.version_option(version=__version__)
def main():
    """Emoji-sensitive self-harm analysis toolkit."""


# --------------------------------------------------------------- lexicon

@main.group()
def lexicon():
    """Sensitivity-matrix operations."""


@lexicon.command("validate")
@click.argument("path", type=click.Path(exists=True))
@format_option
def lexicon_validate(path, fmt):
    """Validate a lexicon file; exits nonzero on violations."""
    try:
        lex = lexicon_mod.load_lexicon(path)
    except CesmError as exc:
        raise click.ClickException(str(exc))
    report = lexicon_mod.validate_lexicon(lex)
    _emit(report.to_dict(), fmt)
    if not report.ok:
        sys.exit(1)


# ---------------------------------------------------------------- corpus

@main.group()
def corpus():
    """Corpus operations."""


@corpus.command("validate")
@click.argument("path", type=click.Path(exists=True))
@click.option("--strict/--lenient", default=True,
              help="Abort on violations or drop offending rows.")
@format_option
def corpus_validate(path, strict, fmt):
    """Validate a JSONL corpus; exits nonzero on violations."""
    try:
        loaded, problems = corpus_mod.load_corpus(path, strict=strict)
    except CorpusLoadError as exc:
        _emit(
            {
                "ok": False,
                "violations": [
                    {"line": ln, "field": f, "reason": r}
                    for ln, f, r in exc.violations
                ],
            },
            fmt,
        )
        sys.exit(1)
    _emit(
        {
            "ok": not problems,
            "posts": len(loaded),
            "dropped": len({ln for ln, _, _ in problems}),
            "violations": [
                {"line": ln, "field": f, "reason": r} for ln, f, r in problems
            ],
        },
        fmt,
    )
    if problems:
        sys.exit(1)


@corpus.command("stats")
@click.argument("path", type=click.Path(exists=True))
@format_option
def corpus_stats_cmd(path, fmt):
    """Dataset statistics."""
    loaded, _ = corpus_mod.load_corpus(path, strict=False)
    _emit(corpus_mod.corpus_stats(loaded).to_dict(), fmt)


@corpus.command("emoji-report")
@click.argument("path", type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True),
              help="Sensitivity matrix for glyph normalization.")
@click.option("--strict-adjacency", is_flag=True,
              help="Whitespace between emoji breaks a composition.")
@format_option
def corpus_emoji_report(path, lexicon_path, strict_adjacency, fmt):
    """Per-emoji context counts and the composition histogram."""
    loaded, _ = corpus_mod.load_corpus(path, strict=False)
    lex = lexicon_mod.load_lexicon(lexicon_path) if lexicon_path else None
    report = corpus_mod.emoji_context_report(loaded, lex)
    histogram = corpus_mod.composition_histogram(
        loaded.posts, strict_adjacency=strict_adjacency
    )
    _emit({**report.to_dict(), "composition_histogram": histogram}, fmt)


@corpus.command("split")
@click.argument("path", type=click.Path(exists=True))
@click.option("--test-fraction", "--fraction", "fraction", type=float, default=0.2)
@click.option("--seed", type=int, default=0)
@click.option("--train-out", type=click.Path(), required=True)
@click.option("--test-out", type=click.Path(), required=True)
def corpus_split(path, fraction, seed, train_out, test_out):
    """Stratified train/test split (synthetic posts stay in train)."""
    loaded, _ = corpus_mod.load_corpus(path, strict=False)
    train, test = corpus_mod.split(loaded, fraction, seed)
    corpus_mod.save_corpus(train, train_out)
    corpus_mod.save_corpus(test, test_out)
    click.echo(f"train: {len(train)} posts -> {train_out}")
    click.echo(f"test: {len(test)} posts -> {test_out}")


@corpus.command("perturb")
@click.argument("path", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice([m.value for m in PerturbMode]),
              required=True)
@click.option("--fraction", type=float, default=0.2)
@click.option("--seed", type=int, default=0)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True),
              help="Required for replace-random.")
@click.option("--out", type=click.Path(), required=True)
def corpus_perturb(path, mode, fraction, seed, lexicon_path, out):
    """Emoji noise injection on a fraction of the emoji-bearing posts."""
    loaded, _ = corpus_mod.load_corpus(path, strict=False)
    lex = lexicon_mod.load_lexicon(lexicon_path) if lexicon_path else None
    try:
        perturbed = corpus_mod.perturb(
            loaded, PerturbMode(mode), seed=seed, fraction=fraction, lexicon=lex
        )
    except (CesmError, ValueError) as exc:
        raise click.ClickException(str(exc))
    corpus_mod.save_corpus(perturbed, out)
    click.echo(f"wrote {len(perturbed)} posts -> {out}")


# ---------------------------------------------------------------- prompt

@main.group()
def prompt():
    """Prompt construction."""


@prompt.command("build")
@click.option("--mode", type=click.Choice([m.value for m in PromptMode]),
              required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True))
@click.option("--k", type=click.Choice(["2", "5"]), default="2",
              help="Few-shot exemplar count.")
@click.option("--seed", type=int, default=0)
@click.option("--label", type=click.Choice(["self-harm", "non-self-harm"]),
              help="Synthetic generation label.")
@click.option("--out", type=click.Path(), required=True)
def prompt_build(mode, corpus_path, lexicon_path, k, seed, label, out):
    """Render prompt instances to a JSONL file."""
    mode = PromptMode(mode)
    instances: list[PromptInstance] = []
    if mode is PromptMode.SYNTHETIC:
        labels = [Label.parse(label)] if label else list(Label)
        instances = [build_synthetic(lbl) for lbl in labels]
    else:
        if not corpus_path:
            raise click.ClickException(f"--corpus is required for mode {mode.value}")
        loaded, _ = corpus_mod.load_corpus(corpus_path, strict=False)
        if mode in (PromptMode.FINETUNE, PromptMode.RATIONALE):
            if not lexicon_path:
                raise click.ClickException(
                    f"--lexicon is required for mode {mode.value}"
                )
            lex = lexicon_mod.load_lexicon(lexicon_path)
            instances = [build_finetune(p, lex) for p in loaded]
        elif mode is PromptMode.ZEROSHOT:
            instances = [build_zeroshot(p) for p in loaded]
        elif mode is PromptMode.FEWSHOT:
            exemplars = select_exemplars(loaded, int(k), seed)
            exemplar_ids = {p.id for p in exemplars}
            instances = [
                build_fewshot(p, exemplars)
                for p in loaded
                if p.id not in exemplar_ids
            ]
    with Path(out).open("w", encoding="utf-8") as fh:
        for instance in instances:
            fh.write(instance.to_json() + "\n")
    click.echo(f"wrote {len(instances)} prompts -> {out}")


# ------------------------------------------------------------------- run

@main.command("run")
@click.option("--backend", type=click.Choice(["mock", "http"]), default="mock")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Backend config JSON.")
@click.option("--prompts", "prompts_path", type=click.Path(exists=True),
              required=True)
@click.option("--out", type=click.Path(), required=True)
def run_cmd(backend, config_path, prompts_path, out):
    """Send prompts to a backend and write parsed predictions."""
    config = (
        BackendConfig.from_json(config_path) if config_path else BackendConfig()
    )
    client = make_backend(backend, config)
    n_ok = n_fail = 0
    with Path(prompts_path).open(encoding="utf-8") as fh, Path(out).open(
        "w", encoding="utf-8"
    ) as out_fh:
        for line in fh:
            if not line.strip():
                continue
            instance = PromptInstance.from_json(line)
            raw = client.complete(instance)
            try:
                pred = parse_prediction(raw)
                record = {
                    "label": pred.label.value,
                    "cm_spans": list(pred.cm_spans),
                    "si_spans": list(pred.si_spans),
                    "rationale": pred.rationale,
                    "parse_route": pred.meta.get("parse_route"),
                }
                n_ok += 1
            except CesmError:
                record = {"unparseable": True, "raw": raw.text}
                n_fail += 1
            out_fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    click.echo(f"parsed {n_ok} predictions ({n_fail} unparseable) -> {out}")


# ------------------------------------------------------------------ eval

@main.group("eval")
def eval_group():
    """Scoring of prediction files against gold files."""


def _load_jsonl(path):
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


@eval_group.command("classification")
@click.option("--pred", "pred_path", type=click.Path(exists=True), required=True)
@click.option("--gold", "gold_path", type=click.Path(exists=True), required=True)
@click.option("--macro", is_flag=True, help="Macro F1 instead of positive-class F1.")
@click.option("--report", "report_path", type=click.Path())
@format_option
def eval_classification(pred_path, gold_path, macro, report_path, fmt):
    """Classification F1 from JSONL files with a 'label' field."""
    preds = [Label.parse(r["label"]) for r in _load_jsonl(pred_path)]
    golds = [Label.parse(r["label"]) for r in _load_jsonl(gold_path)]
    score = classification_f1(preds, golds, macro=macro)
    data = {"classification_f1": score, "macro": macro, "samples": len(golds)}
    _emit(data, fmt)
    if report_path:
        Path(report_path).write_text(json.dumps(data, indent=2) + "\n")


@eval_group.command("spans")
@click.option("--pred", "pred_path", type=click.Path(exists=True), required=True)
@click.option("--gold", "gold_path", type=click.Path(exists=True), required=True)
@click.option("--report", "report_path", type=click.Path())
@format_option
def eval_spans(pred_path, gold_path, report_path, fmt):
    """Span F1 from JSONL files with 'cm_spans'/'si_spans' fields."""
    preds = _load_jsonl(pred_path)
    golds = _load_jsonl(gold_path)
    if len(preds) != len(golds):
        raise click.ClickException(
            f"length mismatch: {len(preds)} predictions vs {len(golds)} golds"
        )

    def texts(row, key):
        return [s["text"] if isinstance(s, dict) else s for s in row.get(key) or []]

    cm = [
        span_set_f1(texts(p, "cm_spans"), texts(g, "cm_spans"))
        for p, g in zip(preds, golds)
    ]
    si = [
        span_set_f1(texts(p, "si_spans"), texts(g, "si_spans"))
        for p, g in zip(preds, golds)
    ]
    data = {
        "cm_span_f1": sum(cm) / len(cm) if cm else 0.0,
        "si_span_f1": sum(si) / len(si) if si else 0.0,
        "samples": len(golds),
    }
    _emit(data, fmt)
    if report_path:
        Path(report_path).write_text(json.dumps(data, indent=2) + "\n")


@eval_group.command("rationale")
@click.option("--pred", "pred_path", type=click.Path(exists=True), required=True)
@click.option("--gold", "gold_path", type=click.Path(exists=True), required=True)
@click.option("--report", "report_path", type=click.Path())
@format_option
def eval_rationale(pred_path, gold_path, report_path, fmt):
    """Rationale quality metrics against gold span lists."""
    preds = _load_jsonl(pred_path)
    golds = _load_jsonl(gold_path)
    if len(preds) != len(golds):
        raise click.ClickException(
            f"length mismatch: {len(preds)} predictions vs {len(golds)} golds"
        )
    embedder = HashingEmbedder()

    def texts(row, key):
        return [s["text"] if isinstance(s, dict) else s for s in row.get(key) or []]

    summaries: dict[str, list[float]] = {
        "relevance": [], "coherence": [], "readability": [],
        "semantic_similarity": [],
    }
    for p, g in zip(preds, golds):
        rationale_text = p.get("rationale", "")
        cm, si = texts(g, "cm_spans"), texts(g, "si_spans")
        summaries["relevance"].append(float(relevance(rationale_text, cm, si)))
        summaries["coherence"].append(coherence(rationale_text, cm, si))
        if rationale_text.strip():
            summaries["readability"].append(readability(rationale_text).normalized)
        summaries["semantic_similarity"].append(
            semantic_similarity(rationale_text, cm, si, embedder)
        )
    report = EvalReport(
        metrics={k: MetricSummary.from_samples(v) for k, v in summaries.items()},
        metadata={"samples": len(golds)},
    )
    _emit(report.to_dict(), fmt)
    if report_path:
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")


@eval_group.command("significance")
@click.option("--a", "a_path", type=click.Path(exists=True), required=True)
@click.option("--b", "b_path", type=click.Path(exists=True), required=True)
@click.option("--metric", default=None,
              help="Metric name when inputs are eval reports.")
@format_option
def eval_significance(a_path, b_path, metric, fmt):
    """Paired t-test between two runs.

    Inputs are either JSON arrays of numbers or eval reports (with
    --metric naming which per-sample series to compare).
    """

    def series(path):
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(obj, list):
            return [float(x) for x in obj]
        if metric is None:
            raise click.ClickException(
                "--metric is required when inputs are eval reports"
            )
        return [float(x) for x in obj["metrics"][metric]["per_sample"]]

    try:
        result = paired_t_test(series(a_path), series(b_path))
    except CesmError as exc:
        raise click.ClickException(str(exc))
    _emit(result.to_dict(), fmt)


# ------------------------------------------------------------- agreement

@main.group()
def agreement():
    """Inter-annotator agreement."""


@agreement.command("kappa")
@click.option("--ratings", "ratings_path", type=click.Path(exists=True),
              required=True,
              help="CSV of per-item category counts (items x categories).")
@format_option
def agreement_kappa(ratings_path, fmt):
    """Fleiss' kappa from an items-by-categories count matrix."""
    rows = []
    with Path(ratings_path).open(encoding="utf-8", newline="") as fh:
        for row in csv_mod.reader(fh):
            if not row or not any(cell.strip() for cell in row):
                continue
            try:
                rows.append([int(cell) for cell in row])
            except ValueError:
                continue  # header row
    if not rows:
        raise click.ClickException("no count rows found")
    n = sum(rows[0])
    try:
        matrix = agreement_mod.RatingMatrix(counts=rows, raters_per_item=n)
        kappa = agreement_mod.fleiss_kappa(matrix)
    except (CesmError, ValueError) as exc:
        raise click.ClickException(str(exc))
    _emit({"fleiss_kappa": kappa, "items": len(rows), "raters": n}, fmt)


@agreement.command("spans")
@click.option("--annotations", "annotations_dir", type=click.Path(exists=True),
              required=True,
              help="Directory of per-annotator JSON files: {post_id: [spans]}.")
@click.option("--category", type=click.Choice(["cm", "si"]), default=None,
              help="When files hold {post_id: {cm: [...], si: [...]}}.")
@format_option
def agreement_spans(annotations_dir, category, fmt):
    """Pairwise span agreement across annotator files."""
    annotations = {}
    for path in sorted(Path(annotations_dir).glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        if category is not None:
            data = {pid: spans.get(category, []) for pid, spans in data.items()}
        annotations[path.stem] = data
    try:
        score = agreement_mod.span_agreement_f1(annotations)
    except (CesmError, ValueError) as exc:
        raise click.ClickException(str(exc))
    _emit(
        {"span_agreement_f1": score, "annotators": sorted(annotations)}, fmt
    )


# -------------------------------------------------------------- pipeline

@main.command("pipeline")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True),
              required=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True))
@click.option("--mode",
              type=click.Choice(["finetune", "zeroshot", "fewshot"]),
              default="zeroshot")
@click.option("--backend", type=click.Choice(["mock", "http"]), default="mock")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=0)
@click.option("--runs", type=int, default=1)
@click.option("--test-fraction", type=float, default=0.2)
@click.option("--k", type=click.Choice(["2", "5"]), default="2")
@click.option("--out-dir", type=click.Path())
@format_option
def pipeline_cmd(corpus_path, lexicon_path, mode, backend, config_path, seed,
                 runs, test_fraction, k, out_dir, fmt):
    """Full flow: split, build prompts, complete, parse, score."""
    config = (
        BackendConfig.from_json(config_path) if config_path else BackendConfig()
    )
    client = make_backend(backend, config)
    try:
        report = pipeline_run(
            corpus_path=corpus_path,
            lexicon_path=lexicon_path,
            mode=PromptMode(mode),
            backend=client,
            backend_config=config,
            seed=seed,
            runs=runs,
            test_fraction=test_fraction,
            fewshot_k=int(k),
            out_dir=out_dir,
        )
    except CesmError as exc:
        raise click.ClickException(str(exc))
    _emit(report.to_dict(), fmt)


if __name__ == "__main__":
    main()
