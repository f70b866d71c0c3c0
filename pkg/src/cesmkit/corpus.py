"""Post corpus: JSONL loading and validation, statistics, emoji-context
reports, train/test splitting, and noise-injection perturbations.

JSONL schema, one post per line:

    {"id": str, "title": str|null, "body": str,
     "label": "self-harm"|"non-self-harm",
     "cm_spans": [{"text": str, "char_start": int?, "char_end": int?}],
     "si_spans": [...same...],
     "strategy_tags": ["direct"|"metaphorical"|"semantic-list", ...]|null,
     "provenance": "original"|"synthetic",
     "split": "train"|"test"|null}

Span offsets index code points of ``body``. When offsets are absent the
span text must occur in the body verbatim. A post has at most three
spans per category, and a non-self-harm post never carries SI spans.
"""

from __future__ import annotations

import enum
import json
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import emojitext
from .emojitext import TokenKind, composition_bucket, COMPOSITION_BUCKETS
from .errors import (
    CorpusLoadError,
    EmptySelectionError,
    InsufficientPostsError,
)
from .lexicon import Lexicon

SCHEMA_VERSION = "1"

MAX_SPANS_PER_CATEGORY = 3


class Label(enum.Enum):
    SELF_HARM = "self-harm"
    NON_SELF_HARM = "non-self-harm"

    @classmethod
    def parse(cls, value: str) -> "Label":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", " ").replace("-", " ")
        key = " ".join(key.split())
        if key in ("self harm", "sh"):
            return cls.SELF_HARM
        if key in ("non self harm", "nonself harm", "nsh"):
            return cls.NON_SELF_HARM
        raise ValueError(f"unknown label {value!r}")


class Provenance(enum.Enum):
    ORIGINAL = "original"
    SYNTHETIC = "synthetic"


class SplitTag(enum.Enum):
    TRAIN = "train"
    TEST = "test"


class Strategy(enum.Enum):
    DIRECT = "direct"
    METAPHORICAL = "metaphorical"
    SEMANTIC_LIST = "semantic-list"


@dataclass(frozen=True)
class Span:
    text: str
    char_start: int | None = None
    char_end: int | None = None

    def problems(self, body: str) -> list[str]:
        if self.char_start is not None and self.char_end is not None:
            if not (0 <= self.char_start <= self.char_end <= len(body)):
                return [f"span offsets [{self.char_start},{self.char_end}) out of range"]
            if body[self.char_start : self.char_end] != self.text:
                return [
                    f"span text {self.text!r} does not match body at "
                    f"[{self.char_start},{self.char_end})"
                ]
            return []
        if self.char_start is not None or self.char_end is not None:
            return ["span has only one of char_start/char_end"]
        if self.text not in body:
            return [f"span text {self.text!r} not found in body"]
        return []

    def resolve(self, body: str) -> tuple[int, int] | None:
        """Character range of this span in the body (first occurrence if
        offsets are absent)."""
        if self.char_start is not None and self.char_end is not None:
            return (self.char_start, self.char_end)
        idx = body.find(self.text)
        if idx < 0:
            return None
        return (idx, idx + len(self.text))

    def to_dict(self) -> dict:
        d: dict = {"text": self.text}
        if self.char_start is not None:
            d["char_start"] = self.char_start
            d["char_end"] = self.char_end
        return d

    @classmethod
    def from_dict(cls, obj) -> "Span":
        if isinstance(obj, str):
            return cls(text=obj)
        return cls(
            text=obj["text"],
            char_start=obj.get("char_start"),
            char_end=obj.get("char_end"),
        )


@dataclass(frozen=True)
class Post:
    id: str
    body: str
    label: Label
    title: str | None = None
    cm_spans: tuple[Span, ...] = ()
    si_spans: tuple[Span, ...] = ()
    strategy_tags: tuple[Strategy, ...] | None = None
    provenance: Provenance = Provenance.ORIGINAL
    split: SplitTag | None = None

    def full_text(self) -> str:
        return f"{self.title}\n{self.body}" if self.title else self.body

    def emoji_graphemes(self) -> list[str]:
        return emojitext.emoji_graphemes(self.full_text())

    def has_emoji(self) -> bool:
        return bool(self.emoji_graphemes())

    def word_count(self) -> int:
        return len(self.full_text().split())

    def problems(self) -> list[tuple[str, str]]:
        """Invariant violations as (field, reason) pairs."""
        out: list[tuple[str, str]] = []
        if not self.id:
            out.append(("id", "empty id"))
        for name, spans in (("cm_spans", self.cm_spans), ("si_spans", self.si_spans)):
            if len(spans) > MAX_SPANS_PER_CATEGORY:
                out.append(
                    (name, f"{len(spans)} spans exceed the limit of "
                           f"{MAX_SPANS_PER_CATEGORY} per category")
                )
            for span in spans:
                for reason in span.problems(self.body):
                    out.append((name, reason))
        if self.label is Label.NON_SELF_HARM and self.si_spans:
            out.append(("si_spans", "non-self-harm post carries SI spans"))
        return out

    def warnings(self) -> list[tuple[str, str]]:
        if self.label is Label.NON_SELF_HARM and not self.cm_spans:
            return [("cm_spans", "non-self-harm post has no CM spans")]
        return []

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "body": self.body,
            "label": self.label.value,
            "cm_spans": [s.to_dict() for s in self.cm_spans],
            "si_spans": [s.to_dict() for s in self.si_spans],
            "strategy_tags": (
                [t.value for t in self.strategy_tags]
                if self.strategy_tags is not None
                else None
            ),
            "provenance": self.provenance.value,
            "split": self.split.value if self.split else None,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Post":
        tags = obj.get("strategy_tags")
        return cls(
            id=str(obj["id"]),
            title=obj.get("title"),
            body=obj["body"],
            label=Label.parse(obj["label"]),
            cm_spans=tuple(Span.from_dict(s) for s in obj.get("cm_spans") or ()),
            si_spans=tuple(Span.from_dict(s) for s in obj.get("si_spans") or ()),
            strategy_tags=(
                tuple(Strategy(t) for t in tags) if tags is not None else None
            ),
            provenance=Provenance(obj.get("provenance", "original")),
            split=SplitTag(obj["split"]) if obj.get("split") else None,
        )


@dataclass(frozen=True)
class Corpus:
    posts: tuple[Post, ...]
    schema_version: str = SCHEMA_VERSION

    def __len__(self):
        return len(self.posts)

    def __iter__(self):
        return iter(self.posts)

    def by_id(self, post_id: str) -> Post | None:
        for p in self.posts:
            if p.id == post_id:
                return p
        return None


def load_corpus(path, strict: bool = True) -> tuple[Corpus, list[tuple[int, str, str]]]:
    """Load a JSONL corpus.

    Returns (corpus, problems) where problems are (line, field, reason)
    triples. In strict mode any violation aborts with CorpusLoadError; in
    lenient mode invalid rows are dropped and reported.
    """
    path = Path(path)
    posts: list[Post] = []
    problems: list[tuple[int, str, str]] = []
    seen_ids: set[str] = set()

    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                problems.append((lineno, "<json>", f"invalid JSON: {exc.msg}"))
                continue
            try:
                post = Post.from_dict(obj)
            except (KeyError, ValueError, TypeError) as exc:
                problems.append((lineno, "<schema>", str(exc)))
                continue
            row_problems = [(lineno, f, r) for f, r in post.problems()]
            if post.id in seen_ids:
                row_problems.append((lineno, "id", f"duplicate id {post.id!r}"))
            if row_problems:
                problems.extend(row_problems)
                continue
            seen_ids.add(post.id)
            posts.append(post)

    if strict and problems:
        raise CorpusLoadError(problems)
    return Corpus(tuple(posts)), problems


def save_corpus(corpus: Corpus, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for post in corpus:
            fh.write(json.dumps(post.to_dict(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class StatsReport:
    total: int
    self_harm: int
    non_self_harm: int
    with_emoji: int
    without_emoji: int
    avg_words: float
    sh_with_cm: int
    sh_with_si: int
    nsh_with_cm: int
    nsh_with_si: int
    empty: bool

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "self_harm": self.self_harm,
            "non_self_harm": self.non_self_harm,
            "with_emoji": self.with_emoji,
            "without_emoji": self.without_emoji,
            "avg_words": self.avg_words,
            "sh_with_cm": self.sh_with_cm,
            "sh_with_si": self.sh_with_si,
            "nsh_with_cm": self.nsh_with_cm,
            "nsh_with_si": self.nsh_with_si,
            "empty": self.empty,
        }


def corpus_stats(corpus: Corpus) -> StatsReport:
    """Per-corpus counts and the average post length in words.

    Word length counts whitespace-delimited tokens over title plus body.
    """
    total = len(corpus)
    sh = sum(1 for p in corpus if p.label is Label.SELF_HARM)
    with_emoji = sum(1 for p in corpus if p.has_emoji())
    words = sum(p.word_count() for p in corpus)
    return StatsReport(
        total=total,
        self_harm=sh,
        non_self_harm=total - sh,
        with_emoji=with_emoji,
        without_emoji=total - with_emoji,
        avg_words=(words / total) if total else 0.0,
        sh_with_cm=sum(
            1 for p in corpus if p.label is Label.SELF_HARM and p.cm_spans
        ),
        sh_with_si=sum(
            1 for p in corpus if p.label is Label.SELF_HARM and p.si_spans
        ),
        nsh_with_cm=sum(
            1 for p in corpus if p.label is Label.NON_SELF_HARM and p.cm_spans
        ),
        nsh_with_si=sum(
            1 for p in corpus if p.label is Label.NON_SELF_HARM and p.si_spans
        ),
        empty=total == 0,
    )


def composition_histogram(
    posts, strict_adjacency: bool = False
) -> dict[str, dict[str, int]]:
    """Bucketed composition counts split by post label.

    Returns {bucket: {"SH": n, "NSH": n}} over buckets 1, 2, 3, 4+.
    Title and body are scanned separately so the title/body boundary never
    joins two runs.
    """
    table = {b: {"SH": 0, "NSH": 0} for b in COMPOSITION_BUCKETS}
    for post in posts:
        col = "SH" if post.label is Label.SELF_HARM else "NSH"
        parts = [post.title, post.body] if post.title else [post.body]
        for part in parts:
            for comp in emojitext.compositions(part, strict_adjacency):
                table[composition_bucket(len(comp))][col] += 1
    return table


def _ranges_intersect(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


@dataclass(frozen=True)
class EmojiContextReport:
    """Per-emoji occurrence counts by span membership and post label,
    plus strategy-by-intent composition counts where tags exist."""

    cm_span_counts: dict[str, int]
    si_span_counts: dict[str, int]
    sh_counts: dict[str, int]
    nsh_counts: dict[str, int]
    strategy_intent: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        return {
            "cm_span_counts": self.cm_span_counts,
            "si_span_counts": self.si_span_counts,
            "sh_counts": self.sh_counts,
            "nsh_counts": self.nsh_counts,
            "strategy_intent": self.strategy_intent,
        }


def emoji_context_report(
    corpus: Corpus, lexicon: Lexicon | None = None
) -> EmojiContextReport:
    """Count emoji occurrences inside CM/SI spans and in SH/NSH posts.

    An emoji is "inside" a span when its character range intersects the
    span's range in the body. Label counts scan title plus body. When a
    lexicon is given, counts are keyed by the lexicon's normalized glyph;
    unknown emoji are keyed by their own glyph.
    """
    cm_counts: Counter = Counter()
    si_counts: Counter = Counter()
    sh_counts: Counter = Counter()
    nsh_counts: Counter = Counter()
    strategy_intent: dict[str, Counter] = {
        "CM": Counter(),
        "SI": Counter(),
    }

    def key_for(glyph: str) -> str:
        if lexicon is not None:
            entry = lexicon.lookup(glyph)
            if entry is not None:
                return entry.glyph
        return glyph

    for post in corpus:
        label_counter = sh_counts if post.label is Label.SELF_HARM else nsh_counts
        for glyph in post.emoji_graphemes():
            label_counter[key_for(glyph)] += 1

        cm_ranges = [r for s in post.cm_spans if (r := s.resolve(post.body))]
        si_ranges = [r for s in post.si_spans if (r := s.resolve(post.body))]
        body_emoji = [
            t for t in emojitext.segment(post.body) if t.kind is TokenKind.EMOJI
        ]
        for tok in body_emoji:
            rng = (tok.char_start, tok.char_end)
            if any(_ranges_intersect(rng, r) for r in cm_ranges):
                cm_counts[key_for(tok.text)] += 1
            if any(_ranges_intersect(rng, r) for r in si_ranges):
                si_counts[key_for(tok.text)] += 1

        if post.strategy_tags:
            comps = emojitext.compositions(post.body)
            for comp, tag in zip(comps, post.strategy_tags):
                rng = (comp.char_start, comp.char_end)
                if any(_ranges_intersect(rng, r) for r in cm_ranges):
                    strategy_intent["CM"][tag.value] += 1
                if any(_ranges_intersect(rng, r) for r in si_ranges):
                    strategy_intent["SI"][tag.value] += 1

    return EmojiContextReport(
        cm_span_counts=dict(cm_counts),
        si_span_counts=dict(si_counts),
        sh_counts=dict(sh_counts),
        nsh_counts=dict(nsh_counts),
        strategy_intent={k: dict(v) for k, v in strategy_intent.items()},
    )


def split(
    corpus: Corpus, test_fraction: float, seed: int
) -> tuple[Corpus, Corpus]:
    """Deterministic stratified train/test split.

    Synthetic posts always land in the training side; ``test_fraction``
    applies to original posts only, stratified by label (test share per
    label is round(fraction * stratum size)).
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must be in (0,1), got {test_fraction}")

    rng = random.Random(seed)
    originals = [p for p in corpus if p.provenance is Provenance.ORIGINAL]
    synthetic = [p for p in corpus if p.provenance is Provenance.SYNTHETIC]

    test_ids: set[str] = set()
    for label in Label:
        stratum = [p.id for p in originals if p.label is label]
        stratum.sort()
        rng.shuffle(stratum)
        n_test = round(test_fraction * len(stratum))
        test_ids.update(stratum[:n_test])

    train_posts = [
        replace(p, split=SplitTag.TRAIN)
        for p in corpus.posts
        if p.id not in test_ids
    ]
    test_posts = [
        replace(p, split=SplitTag.TEST) for p in corpus.posts if p.id in test_ids
    ]
    if not train_posts or not test_posts:
        raise InsufficientPostsError(
            f"split would leave train={len(train_posts)} test={len(test_posts)}"
        )
    assert not any(p.provenance is Provenance.SYNTHETIC for p in test_posts)
    return (
        Corpus(tuple(train_posts), corpus.schema_version),
        Corpus(tuple(test_posts), corpus.schema_version),
    )


class PerturbMode(enum.Enum):
    SHUFFLE_POSITIONS = "shuffle-positions"
    REPLACE_RANDOM = "replace-random"


def _strip_offsets(spans: tuple[Span, ...]) -> tuple[Span, ...]:
    return tuple(Span(text=s.text) for s in spans)


def _shuffle_emoji_positions(text: str, rng: random.Random) -> str:
    """Remove all emoji graphemes and re-insert each at a uniformly
    chosen word boundary. The word sequence is unchanged."""
    glyphs = emojitext.emoji_graphemes(text)
    if not glyphs:
        return text
    stripped = "".join(
        t.text for t in emojitext.segment(text) if t.kind is not TokenKind.EMOJI
    )
    words = stripped.split()
    slots: list[list[str]] = [[] for _ in range(len(words) + 1)]
    for g in glyphs:
        slots[rng.randint(0, len(words))].append(g)
    pieces: list[str] = []
    for i, slot in enumerate(slots):
        pieces.extend(slot)
        if i < len(words):
            pieces.append(words[i])
    return " ".join(pieces)


def _replace_emojis(text: str, rng: random.Random, glyph_pool: list[str]) -> str:
    out: list[str] = []
    for tok in emojitext.segment(text):
        if tok.kind is TokenKind.EMOJI:
            out.append(rng.choice(glyph_pool))
        else:
            out.append(tok.text)
    return "".join(out)


def perturb(
    corpus: Corpus,
    mode: PerturbMode,
    seed: int,
    fraction: float = 0.20,
    lexicon: Lexicon | None = None,
) -> Corpus:
    """Inject emoji noise into a fraction of the emoji-bearing posts.

    Exactly round(fraction * n_emoji_posts) posts are modified (banker's
    rounding), chosen uniformly under the seed. Unselected
    posts pass through untouched. Span offsets of modified posts are
    dropped; span texts are kept.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0,1], got {fraction}")
    if mode is PerturbMode.REPLACE_RANDOM and lexicon is None:
        raise ValueError("replace-random perturbation requires a lexicon")

    emoji_ids = [p.id for p in corpus if p.has_emoji()]
    if not emoji_ids:
        raise EmptySelectionError("no posts contain emoji")

    rng = random.Random(seed)
    n_modify = min(round(fraction * len(emoji_ids)), len(emoji_ids))
    chosen = set(rng.sample(sorted(emoji_ids), n_modify))

    glyph_pool = lexicon.glyphs() if lexicon is not None else []

    new_posts: list[Post] = []
    for post in corpus:
        if post.id not in chosen:
            new_posts.append(post)
            continue
        if mode is PerturbMode.SHUFFLE_POSITIONS:
            new_title = (
                _shuffle_emoji_positions(post.title, rng) if post.title else post.title
            )
            new_body = _shuffle_emoji_positions(post.body, rng)
        else:
            new_title = (
                _replace_emojis(post.title, rng, glyph_pool)
                if post.title
                else post.title
            )
            new_body = _replace_emojis(post.body, rng, glyph_pool)
        new_posts.append(
            replace(
                post,
                title=new_title,
                body=new_body,
                cm_spans=_strip_offsets(post.cm_spans),
                si_spans=_strip_offsets(post.si_spans),
            )
        )
    return Corpus(tuple(new_posts), corpus.schema_version)
