from hypothesis import given, strategies as st

from cesmkit import emojitext
from cesmkit.emojitext import (
    TokenKind,
    composition_bucket,
    compositions,
    emoji_graphemes,
    graphemes,
    is_emoji_glyph,
    is_emoji_grapheme,
    segment,
)

FAMILY = "\U0001f468‍\U0001f469‍\U0001f467‍\U0001f466"
FLAG = "\U0001f1fa\U0001f1f8"
KEYCAP = "1️⃣"
TONED = "\U0001f44d\U0001f3fd"
HEART_FIRE = "❤️‍\U0001f525"


def test_graphemes_keep_zwj_sequences_whole():
    assert graphemes(FAMILY) == [FAMILY]
    assert graphemes(FLAG) == [FLAG]
    assert graphemes(KEYCAP) == [KEYCAP]
    assert graphemes(TONED) == [TONED]
    assert graphemes(HEART_FIRE) == [HEART_FIRE]


def test_graphemes_of_plain_text():
    assert graphemes("sad") == ["s", "a", "d"]
    assert graphemes("") == []


def test_is_emoji_grapheme():
    for g in (FAMILY, FLAG, KEYCAP, TONED, HEART_FIRE, "\U0001f494"):
        assert is_emoji_grapheme(g)
    for g in ("a", " ", ".", "1", "#"):
        assert not is_emoji_grapheme(g)


def test_is_emoji_glyph_rejects_multi_grapheme_and_mixed():
    assert is_emoji_glyph(FAMILY)
    assert is_emoji_glyph(FLAG)
    assert not is_emoji_glyph("\U0001f494\U0001f494")
    assert not is_emoji_glyph("a")
    assert not is_emoji_glyph("")


def test_segment_kinds():
    toks = segment("sad \U0001f494!")
    assert [t.kind for t in toks] == [
        TokenKind.WORD,
        TokenKind.WHITESPACE,
        TokenKind.EMOJI,
        TokenKind.PUNCT,
    ]
    assert toks[2].text == "\U0001f494"


def test_segment_tiles_input():
    text = f"hello {FAMILY} world {FLAG}{KEYCAP}... ok"
    toks = segment(text)
    assert "".join(t.text for t in toks) == text
    for tok in toks:
        assert text[tok.char_start : tok.char_end] == tok.text


@given(st.text(max_size=80))
def test_segment_tiles_arbitrary_text(text):
    toks = segment(text)
    assert "".join(t.text for t in toks) == text


def test_adjacent_emoji_are_separate_tokens():
    toks = segment("\U0001f494\U0001f494")
    assert [t.kind for t in toks] == [TokenKind.EMOJI, TokenKind.EMOJI]


def test_compositions_join_across_whitespace_by_default():
    comps = compositions("\U0001f494 \U0001f4aa ✨")
    assert len(comps) == 1
    assert len(comps[0]) == 3


def test_compositions_strict_adjacency():
    comps = compositions("\U0001f494 \U0001f4aa✨", strict_adjacency=True)
    assert [len(c) for c in comps] == [1, 2]


def test_words_break_compositions():
    comps = compositions("\U0001f494 and \U0001f4aa")
    assert [len(c) for c in comps] == [1, 1]


def test_composition_offsets():
    text = "ok \U0001f494\U0001f4aa done"
    (comp,) = compositions(text)
    assert text[comp.char_start : comp.char_end] == "\U0001f494\U0001f4aa"


def test_composition_bucket():
    assert [composition_bucket(n) for n in (1, 2, 3, 4, 9)] == [
        "1", "2", "3", "4+", "4+",
    ]


def test_emoji_graphemes_order():
    assert emoji_graphemes(f"a {FLAG} b \U0001f494 c") == [FLAG, "\U0001f494"]


@given(st.text(max_size=60))
def test_emoji_graphemes_subset_of_graphemes(text):
    clusters = graphemes(text)
    assert all(g in clusters for g in emoji_graphemes(text))
