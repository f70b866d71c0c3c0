"""Unicode-correct tokenization of post text into word and emoji tokens.

Grapheme cluster segmentation follows UAX #29 extended grapheme clusters
via the ``regex`` module (Unicode 17.0 data). A ZWJ family, a flag, a
keycap, or a skin-tone-modified pictograph is always one token.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass

import regex

_GRAPHEME = regex.compile(r"\X")

# Extended_Pictographic covers pictographs; Regional_Indicator covers flags.
_EXT_PICT = regex.compile(r"\p{Extended_Pictographic}")
_REGIONAL = regex.compile(r"\p{Regional_Indicator}")
_KEYCAP = "\u20e3"

# Code points legal inside an emoji glyph besides pictographs: ZWJ,
# variation selectors, skin tone modifiers, regional indicators, tag
# characters, keycap bases and the combining keycap.
_EMOJI_COMPONENT = regex.compile(
    "[\\p{Regional_Indicator}\\p{Emoji_Modifier}"
    "\u200d\ufe0e\ufe0f\u20e3"
    "\U000e0020-\U000e007f"
    "0-9#*]"
)


class TokenKind(enum.Enum):
    WORD = "word"
    EMOJI = "emoji"
    PUNCT = "punct"
    WHITESPACE = "whitespace"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class EmojiComposition:
    """A maximal run of adjacent emoji graphemes."""

    glyphs: tuple[str, ...]
    char_start: int
    char_end: int

    def __len__(self):
        return len(self.glyphs)


def graphemes(text: str) -> list[str]:
    """Split text into extended grapheme clusters."""
    return _GRAPHEME.findall(text)


def is_emoji_grapheme(cluster: str) -> bool:
    """True if a single grapheme cluster renders as an emoji.

    A cluster counts as emoji if it contains a pictograph, a regional
    indicator (flags), or a combining keycap. Bare digits and symbols
    without emoji presentation do not count.
    """
    if not cluster:
        return False
    if _EXT_PICT.search(cluster):
        return True
    if _REGIONAL.search(cluster):
        return True
    if _KEYCAP in cluster:
        return True
    return False


def is_emoji_glyph(cluster: str) -> bool:
    """True if ``cluster`` is one grapheme and every code point in it is
    emoji-related (pictograph or recognized emoji component)."""
    parts = graphemes(cluster)
    if len(parts) != 1:
        return False
    if not is_emoji_grapheme(cluster):
        return False
    for ch in cluster:
        if _EXT_PICT.match(ch) or _EMOJI_COMPONENT.match(ch):
            continue
        return False
    return True


def _classify(cluster: str) -> TokenKind:
    if is_emoji_grapheme(cluster):
        return TokenKind.EMOJI
    if all(ch.isspace() for ch in cluster):
        return TokenKind.WHITESPACE
    if any(ch.isalnum() or ch == "_" for ch in cluster):
        return TokenKind.WORD
    return TokenKind.PUNCT


def segment(text: str) -> list[Token]:
    """Tokenize text into Word / Emoji / Punct / Whitespace tokens.

    Tokens tile the input: concatenating their texts reproduces it
    exactly. Adjacent graphemes of the same non-emoji kind merge into one
    token; every emoji grapheme is its own token.
    """
    tokens: list[Token] = []
    run_kind: TokenKind | None = None
    run_start = 0
    run_text: list[str] = []

    def flush():
        nonlocal run_kind, run_text
        if run_kind is not None:
            joined = "".join(run_text)
            tokens.append(Token(run_kind, joined, run_start, run_start + len(joined)))
        run_kind = None
        run_text = []

    for cluster in _GRAPHEME.finditer(text):
        kind = _classify(cluster.group())
        if kind is TokenKind.EMOJI:
            flush()
            tokens.append(
                Token(kind, cluster.group(), cluster.start(), cluster.end())
            )
            continue
        if kind is not run_kind:
            flush()
            run_kind = kind
            run_start = cluster.start()
        run_text.append(cluster.group())
    flush()
    return tokens


def compositions(text: str, strict_adjacency: bool = False) -> list[EmojiComposition]:
    """Find maximal runs of emoji graphemes.

    By default, emoji separated only by whitespace belong to one run; any
    word or punctuation token breaks it. With ``strict_adjacency`` only
    zero-separator runs are joined.
    """
    out: list[EmojiComposition] = []
    glyphs: list[str] = []
    start = end = 0
    for tok in segment(text):
        if tok.kind is TokenKind.EMOJI:
            if not glyphs:
                start = tok.char_start
            glyphs.append(tok.text)
            end = tok.char_end
        elif tok.kind is TokenKind.WHITESPACE and glyphs and not strict_adjacency:
            continue
        else:
            if glyphs:
                out.append(EmojiComposition(tuple(glyphs), start, end))
                glyphs = []
    if glyphs:
        out.append(EmojiComposition(tuple(glyphs), start, end))
    return out


def composition_bucket(length: int) -> str:
    """Histogram bucket label for a composition length."""
    return str(length) if length <= 3 else "4+"


COMPOSITION_BUCKETS = ("1", "2", "3", "4+")


def emoji_graphemes(text: str) -> list[str]:
    """All emoji graphemes in text, in order of appearance."""
    return [t.text for t in segment(text) if t.kind is TokenKind.EMOJI]


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)
