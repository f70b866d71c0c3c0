import json
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from cesmkit import emojitext
from cesmkit.corpus import (
    Corpus,
    Label,
    PerturbMode,
    Post,
    Provenance,
    Span,
    composition_histogram,
    corpus_stats,
    emoji_context_report,
    load_corpus,
    perturb,
    save_corpus,
    split,
)
from cesmkit.errors import CorpusLoadError, EmptySelectionError
from conftest import generate_posts, make_post


def write_jsonl(tmp_path, rows, name="c.jsonl"):
    path = tmp_path / name
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


def row(pid="x1", body="hello world", label="self-harm", **kw):
    base = {"id": pid, "body": body, "label": label}
    base.update(kw)
    return base


# ------------------------------------------------------------- loading

def test_roundtrip(demo_corpus, tmp_path):
    path = tmp_path / "out.jsonl"
    save_corpus(demo_corpus, path)
    again, problems = load_corpus(path)
    assert not problems
    assert [p.to_dict() for p in again] == [p.to_dict() for p in demo_corpus]


def test_span_text_must_occur_in_body(tmp_path):
    path = write_jsonl(tmp_path, [row(cm_spans=[{"text": "absent"}])])
    with pytest.raises(CorpusLoadError) as exc:
        load_corpus(path)
    assert exc.value.violations[0][1] == "cm_spans"


def test_span_offsets_checked_against_body(tmp_path):
    good = {"text": "hello", "char_start": 0, "char_end": 5}
    bad = {"text": "hello", "char_start": 1, "char_end": 6}
    assert not load_corpus(write_jsonl(tmp_path, [row(cm_spans=[good])]))[1]
    path = write_jsonl(tmp_path, [row(cm_spans=[bad])], name="bad.jsonl")
    with pytest.raises(CorpusLoadError):
        load_corpus(path)


def test_more_than_three_spans_rejected(tmp_path):
    spans = [{"text": "hello"}] * 4
    with pytest.raises(CorpusLoadError):
        load_corpus(write_jsonl(tmp_path, [row(cm_spans=spans)]))


def test_nsh_with_si_spans_rejected(tmp_path):
    bad = row(label="non-self-harm", si_spans=[{"text": "hello"}])
    with pytest.raises(CorpusLoadError):
        load_corpus(write_jsonl(tmp_path, [bad]))


def test_nsh_without_cm_spans_is_warning_not_error(tmp_path):
    ok = row(label="non-self-harm")
    corpus, problems = load_corpus(write_jsonl(tmp_path, [ok]))
    assert len(corpus) == 1 and not problems
    assert corpus.posts[0].warnings()


def test_duplicate_ids_rejected(tmp_path):
    path = write_jsonl(tmp_path, [row(), row()])
    with pytest.raises(CorpusLoadError):
        load_corpus(path)


def test_lenient_mode_drops_bad_rows(tmp_path):
    rows = [row(pid="a"), row(pid="b", cm_spans=[{"text": "absent"}])]
    corpus, problems = load_corpus(write_jsonl(tmp_path, rows), strict=False)
    assert [p.id for p in corpus] == ["a"]
    assert problems and problems[0][0] == 2


def test_strict_error_carries_all_line_numbers(tmp_path):
    rows = [
        row(pid="a", cm_spans=[{"text": "absent"}]),
        row(pid="b"),
        row(pid="c", label="maybe"),
    ]
    with pytest.raises(CorpusLoadError) as exc:
        load_corpus(write_jsonl(tmp_path, rows))
    assert sorted({ln for ln, _, _ in exc.value.violations}) == [1, 3]


def test_invalid_json_line_reported(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a"\n', encoding="utf-8")
    corpus, problems = load_corpus(path, strict=False)
    assert len(corpus) == 0 and problems[0][1] == "<json>"


def test_bare_string_spans_accepted(tmp_path):
    path = write_jsonl(tmp_path, [row(cm_spans=["hello"])])
    corpus, _ = load_corpus(path)
    assert corpus.posts[0].cm_spans[0].text == "hello"


# ------------------------------------------------------------ statistics

def test_stats_recount(demo_corpus):
    stats = corpus_stats(demo_corpus)
    posts = list(demo_corpus)
    assert stats.total == len(posts)
    assert stats.self_harm == sum(
        1 for p in posts if p.label is Label.SELF_HARM
    )
    assert stats.self_harm + stats.non_self_harm == stats.total
    assert stats.with_emoji == sum(1 for p in posts if p.has_emoji())
    expected_avg = sum(p.word_count() for p in posts) / len(posts)
    assert stats.avg_words == pytest.approx(expected_avg)
    assert not stats.empty


def test_stats_empty_corpus():
    stats = corpus_stats(Corpus(()))
    assert stats.empty and stats.total == 0 and stats.avg_words == 0.0


def test_title_counts_toward_words_and_emoji():
    post = make_post("t", "body", "nsh", title="hello \U0001f494")
    assert post.word_count() == 3
    assert post.has_emoji()


def test_composition_histogram(demo_posts):
    table = composition_histogram(demo_posts)
    # p10 carries the only length-3 run; p04 a length-2 run (whitespace joined)
    assert table["3"]["SH"] == 1
    assert table["2"]["NSH"] == 1
    total = sum(n for cols in table.values() for n in cols.values())
    by_hand = sum(
        len(emojitext.compositions(part))
        for p in demo_posts
        for part in ([p.title, p.body] if p.title else [p.body])
    )
    assert total == by_hand


def test_title_body_boundary_never_joins_runs():
    post = make_post("t", "\U0001f4aa body", "nsh", title="title \U0001f494")
    table = composition_histogram([post])
    assert table["1"]["NSH"] == 2
    assert table["2"]["NSH"] == 0


def test_emoji_context_report(demo_corpus, cesm100):
    report = emoji_context_report(demo_corpus, cesm100)
    # p02: knife+blood inside the SI span's range? spans cover words only,
    # emoji sit outside every span there.
    assert report.sh_counts["\U0001f494"] == 2  # p01 and p10
    assert report.nsh_counts["\U0001f602"] == 2  # p04
    assert sum(report.si_span_counts.values()) == 0
    # strategy tags exist only on p05 which has no emoji
    assert report.strategy_intent == {"CM": {}, "SI": {}}


def test_emoji_context_span_membership():
    post = make_post("m", "I feel \U0001f494 tonight", "sh",
                     si=["feel \U0001f494"])
    report = emoji_context_report(Corpus((post,)))
    assert report.si_span_counts == {"\U0001f494": 1}
    assert report.cm_span_counts == {}


# ----------------------------------------------------------------- split

def test_split_is_deterministic(demo_corpus):
    a = split(demo_corpus, 0.2, seed=7)
    b = split(demo_corpus, 0.2, seed=7)
    assert [p.id for p in a[0]] == [p.id for p in b[0]]
    assert [p.id for p in a[1]] == [p.id for p in b[1]]


def test_split_seeds_differ():
    posts = generate_posts(60, seed=0)
    ids = set()
    for seed in range(5):
        _, test = split(Corpus(tuple(posts)), 0.2, seed)
        ids.add(tuple(sorted(p.id for p in test)))
    assert len(ids) > 1


def test_split_synthetic_stays_in_train(demo_corpus):
    train, test = split(demo_corpus, 0.3, seed=1)
    assert all(p.provenance is Provenance.ORIGINAL for p in test)
    assert {p.id for p in train} | {p.id for p in test} == {
        p.id for p in demo_corpus
    }
    assert not {p.id for p in train} & {p.id for p in test}


def test_split_stratified_counts():
    posts = generate_posts(100, seed=3)
    corpus = Corpus(tuple(posts))
    _, test = split(corpus, 0.2, seed=0)
    for label in Label:
        stratum = [p for p in posts if p.label is label]
        got = sum(1 for p in test if p.label is label)
        assert got == round(0.2 * len(stratum))


def test_split_rejects_bad_fraction(demo_corpus):
    for f in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            split(demo_corpus, f, seed=0)


def test_split_tags_assigned(demo_corpus):
    train, test = split(demo_corpus, 0.2, seed=0)
    assert all(p.split is not None for p in train)
    assert all(p.split is not None for p in test)


# --------------------------------------------------------- perturbations

def emoji_multiset(post):
    return Counter(post.emoji_graphemes())


def test_perturb_modifies_exact_count():
    posts = generate_posts(50, seed=1, emoji_fraction=0.6)
    corpus = Corpus(tuple(posts))
    n_emoji = sum(1 for p in corpus if p.has_emoji())
    out = perturb(corpus, PerturbMode.SHUFFLE_POSITIONS, seed=0)
    changed = sum(
        1
        for a, b in zip(corpus, out)
        if (a.title, a.body) != (b.title, b.body)
    )
    assert changed == round(0.2 * n_emoji)


def test_shuffle_preserves_emoji_multiset_and_words():
    posts = generate_posts(40, seed=2)
    corpus = Corpus(tuple(posts))
    out = perturb(corpus, PerturbMode.SHUFFLE_POSITIONS, seed=5, fraction=1.0)
    for before, after in zip(corpus, out):
        assert emoji_multiset(before) == emoji_multiset(after)
        stripped = lambda p: [
            t.text
            for t in emojitext.segment(p.full_text())
            if t.kind is emojitext.TokenKind.WORD
        ]
        assert stripped(before) == stripped(after)


def test_replace_draws_from_lexicon(cesm100):
    posts = generate_posts(30, seed=4)
    corpus = Corpus(tuple(posts))
    out = perturb(
        corpus, PerturbMode.REPLACE_RANDOM, seed=9, fraction=1.0, lexicon=cesm100
    )
    pool = {emojitext.nfc(g) for g in cesm100.glyphs()}
    for before, after in zip(corpus, out):
        assert len(before.emoji_graphemes()) == len(after.emoji_graphemes())
        for g in after.emoji_graphemes():
            assert emojitext.nfc(g) in pool


def test_replace_requires_lexicon(demo_corpus):
    with pytest.raises(ValueError):
        perturb(demo_corpus, PerturbMode.REPLACE_RANDOM, seed=0)


def test_perturb_strips_offsets_only_on_modified():
    post = make_post("z", "feeling low \U0001f494", "sh", si=["feeling low"])
    with_offsets = Post(
        id="z",
        body=post.body,
        label=post.label,
        si_spans=(Span(text="feeling low", char_start=0, char_end=11),),
    )
    out = perturb(
        Corpus((with_offsets,)), PerturbMode.SHUFFLE_POSITIONS, seed=0, fraction=1.0
    )
    assert out.posts[0].si_spans[0].char_start is None


def test_perturb_no_emoji_raises():
    post = make_post("q", "plain text only", "nsh")
    with pytest.raises(EmptySelectionError):
        perturb(Corpus((post,)), PerturbMode.SHUFFLE_POSITIONS, seed=0)


def test_perturb_deterministic(cesm100):
    posts = generate_posts(30, seed=8)
    corpus = Corpus(tuple(posts))
    a = perturb(corpus, PerturbMode.REPLACE_RANDOM, seed=3, lexicon=cesm100)
    b = perturb(corpus, PerturbMode.REPLACE_RANDOM, seed=3, lexicon=cesm100)
    assert [p.to_dict() for p in a] == [p.to_dict() for p in b]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_shuffle_multiset_invariant_any_seed(seed):
    posts = generate_posts(10, seed=seed % 17)
    corpus = Corpus(tuple(posts))
    if not any(p.has_emoji() for p in corpus):
        return
    out = perturb(corpus, PerturbMode.SHUFFLE_POSITIONS, seed=seed, fraction=1.0)
    for before, after in zip(corpus, out):
        assert emoji_multiset(before) == emoji_multiset(after)
