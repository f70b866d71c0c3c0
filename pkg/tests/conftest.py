import json
import random

import pytest

from cesmkit.corpus import Corpus, Label, Post, Provenance, Span, Strategy
from cesmkit.lexicon import ChanceLevel, EmojiEntry, Lexicon, bundled_lexicon_path
from cesmkit.lexicon import load_lexicon


@pytest.fixture(scope="session")
def cesm100():
    return load_lexicon(bundled_lexicon_path())


@pytest.fixture
def small_lexicon():
    return Lexicon(
        [
            EmojiEntry("\U0001f494", "Broken heart", "Emotional pain",
                       ChanceLevel.MEDIUM, ChanceLevel.HIGH),
            EmojiEntry("\U0001f52a", "Kitchen knife", "Cutting",
                       ChanceLevel.LOW, ChanceLevel.HIGH),
            EmojiEntry("\U0001f602", "Tears of joy", "Masking pain",
                       ChanceLevel.HIGH, ChanceLevel.MEDIUM),
            EmojiEntry("\U0001f4aa", "Flexed biceps", "Strength",
                       ChanceLevel.HIGH, ChanceLevel.LOW),
        ]
    )


def make_post(pid, body, label, title=None, cm=(), si=(), tags=None,
              provenance=Provenance.ORIGINAL):
    return Post(
        id=pid,
        title=title,
        body=body,
        label=Label.parse(label),
        cm_spans=tuple(Span(text=t) for t in cm),
        si_spans=tuple(Span(text=t) for t in si),
        strategy_tags=tuple(Strategy(t) for t in tags) if tags else None,
        provenance=provenance,
    )


@pytest.fixture
def demo_posts():
    return [
        make_post("p01", "I want to end it all tonight \U0001f494",
                  "sh", title="so tired",
                  si=["want to end it all"]),
        make_post("p02", "thinking about cutting again \U0001f52a\U0001fa78",
                  "sh", si=["thinking about cutting again"]),
        make_post("p03", "my scars remind me of dark times but I keep going \U0001f4aa",
                  "sh", cm=["my scars remind me"]),
        make_post("p04", "ugh monday again, just kill me now \U0001f602 \U0001f602",
                  "nsh", cm=["just kill me now"]),
        make_post("p05", "this homework makes me want to jump off a bridge lol",
                  "nsh", cm=["jump off a bridge"], tags=["metaphorical"]),
        make_post("p06", "lovely walk in the park today ☀️",
                  "nsh"),
        make_post("p07", "relapsed last night, blood everywhere, I hate myself \U0001fa78",
                  "sh", si=["relapsed last night", "I hate myself"],
                  cm=["blood everywhere"]),
        make_post("p08", "new coffee place downtown is great",
                  "nsh", cm=["coffee place"]),
        make_post("p09", "if my code fails one more time I will throw myself out the window \U0001f643",
                  "nsh", cm=["throw myself out the window"]),
        make_post("p10", "I bought the blades today. this is goodbye \U0001f52a \U0001f494 \U0001f940",
                  "sh", si=["this is goodbye"]),
        make_post("s01", "synthetic vent post about stress \U0001f62b",
                  "nsh", cm=["vent post about stress"],
                  provenance=Provenance.SYNTHETIC),
        make_post("s02", "synthetic reflection on past self-harm urges",
                  "sh", si=["past self-harm urges"],
                  provenance=Provenance.SYNTHETIC),
    ]


@pytest.fixture
def demo_corpus(demo_posts):
    return Corpus(tuple(demo_posts))


@pytest.fixture
def demo_corpus_path(demo_posts, tmp_path):
    path = tmp_path / "corpus.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        for post in demo_posts:
            fh.write(json.dumps(post.to_dict(), ensure_ascii=False) + "\n")
    return path


_WORDS = (
    "today feels heavy and the night keeps dragging on while I try to hold "
    "everything together somehow even when nothing seems to work and nobody "
    "really notices how close things come to falling apart again"
).split()

_EMOJI = ["\U0001f494", "\U0001f52a", "\U0001f602", "\U0001f4aa",
          "\U0001fa78", "\U0001f940", "\U0001f643", "❤️"]


def generate_posts(n, seed, emoji_fraction=1.0):
    """Random but schema-valid posts for stress tests."""
    rng = random.Random(seed)
    posts = []
    for i in range(n):
        words = [rng.choice(_WORDS) for _ in range(rng.randint(6, 20))]
        if rng.random() < emoji_fraction:
            for _ in range(rng.randint(1, 4)):
                words.insert(rng.randint(0, len(words)), rng.choice(_EMOJI))
        body = " ".join(words)
        label = rng.choice([Label.SELF_HARM, Label.NON_SELF_HARM])

        def pick_span():
            toks = body.split()
            a = rng.randrange(len(toks))
            b = min(len(toks), a + rng.randint(1, 3))
            return " ".join(toks[a:b])

        cm = tuple(Span(text=pick_span()) for _ in range(rng.randint(0, 2)))
        si = ()
        if label is Label.SELF_HARM:
            si = tuple(Span(text=pick_span()) for _ in range(rng.randint(0, 2)))
        posts.append(
            Post(id=f"g{i:05d}", body=body, label=label, cm_spans=cm, si_spans=si)
        )
    return posts
