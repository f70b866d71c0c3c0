#!/usr/bin/env python3
"""Emit a small demonstration corpus in the expected JSONL schema."""

import argparse

from cesmkit.corpus import Corpus, Label, Post, Provenance, Span, save_corpus

POSTS = [
    Post(
        id="demo-01",
        title="so tired",
        body="I want to end it all tonight \U0001f494",
        label=Label.SELF_HARM,
        si_spans=(Span(text="want to end it all"),),
    ),
    Post(
        id="demo-02",
        body="thinking about cutting again \U0001f52a\U0001fa78",
        label=Label.SELF_HARM,
        si_spans=(Span(text="thinking about cutting again"),),
    ),
    Post(
        id="demo-03",
        body="my scars remind me of dark times but I keep going \U0001f4aa",
        label=Label.SELF_HARM,
        cm_spans=(Span(text="my scars remind me"),),
    ),
    Post(
        id="demo-04",
        body="ugh monday again, just kill me now \U0001f602 \U0001f602",
        label=Label.NON_SELF_HARM,
        cm_spans=(Span(text="just kill me now"),),
    ),
    Post(
        id="demo-05",
        body="this homework makes me want to jump off a bridge lol",
        label=Label.NON_SELF_HARM,
        cm_spans=(Span(text="jump off a bridge"),),
    ),
    Post(
        id="demo-06",
        body="lovely walk in the park today ☀️",
        label=Label.NON_SELF_HARM,
    ),
    Post(
        id="demo-07",
        body="relapsed last night, blood everywhere, I hate myself \U0001fa78",
        label=Label.SELF_HARM,
        cm_spans=(Span(text="blood everywhere"),),
        si_spans=(Span(text="relapsed last night"), Span(text="I hate myself")),
    ),
    Post(
        id="demo-08",
        body="new coffee place downtown is great",
        label=Label.NON_SELF_HARM,
        cm_spans=(Span(text="coffee place"),),
    ),
    Post(
        id="demo-09",
        body="if my code fails once more I will throw myself out the window \U0001f643",
        label=Label.NON_SELF_HARM,
        cm_spans=(Span(text="throw myself out the window"),),
    ),
    Post(
        id="demo-10",
        body="I bought the blades today. this is goodbye \U0001f52a \U0001f494 \U0001f940",
        label=Label.SELF_HARM,
        si_spans=(Span(text="this is goodbye"),),
    ),
    Post(
        id="demo-11",
        body="synthetic vent post about stress \U0001f62b",
        label=Label.NON_SELF_HARM,
        cm_spans=(Span(text="vent post about stress"),),
        provenance=Provenance.SYNTHETIC,
    ),
    Post(
        id="demo-12",
        body="synthetic reflection on past self-harm urges",
        label=Label.SELF_HARM,
        si_spans=(Span(text="past self-harm urges"),),
        provenance=Provenance.SYNTHETIC,
    ),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_corpus.jsonl")
    args = parser.parse_args()
    save_corpus(Corpus(tuple(POSTS)), args.out)
    print(f"wrote {len(POSTS)} posts -> {args.out}")


if __name__ == "__main__":
    main()
