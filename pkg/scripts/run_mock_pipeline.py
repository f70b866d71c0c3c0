#!/usr/bin/env python3
"""Run the full evaluation pipeline offline against the mock backend.

Builds a demo corpus on the fly, runs split -> prompts -> completion ->
parsing -> scoring for several seeds, and prints the aggregated report.
"""

import argparse
import json
import tempfile
from pathlib import Path

from cesmkit.gateway import BackendConfig, MockBackend
from cesmkit.lexicon import bundled_lexicon_path
from cesmkit.pipeline import pipeline_run
from cesmkit.prompts import PromptMode

from make_demo_corpus import POSTS
from cesmkit.corpus import Corpus, save_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", help="JSONL corpus (defaults to the demo posts)")
    parser.add_argument(
        "--mode", choices=["finetune", "zeroshot", "fewshot"], default="finetune"
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--runs", type=int, default=3)
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()

    if args.corpus:
        corpus_path = args.corpus
    else:
        tmp = Path(tempfile.mkdtemp()) / "demo_corpus.jsonl"
        save_corpus(Corpus(tuple(POSTS)), tmp)
        corpus_path = str(tmp)

    report = pipeline_run(
        corpus_path=corpus_path,
        lexicon_path=bundled_lexicon_path(),
        mode=PromptMode(args.mode),
        backend=MockBackend(),
        backend_config=BackendConfig(),
        seed=args.seed,
        runs=args.runs,
        out_dir=args.out_dir,
    )
    print(json.dumps(report.to_dict(), indent=2))


if __name__ == "__main__":
    main()
