"""Contextual emoji sensitivity matrix: load, validate, and query.

The canonical matrix (CESM-100) maps 100 emoji glyphs to their usual
meaning, their contextual meaning in self-harm discourse, and ordinal
chance levels for casual-mention and serious-intent usage. Any
user-supplied matrix in the same format is accepted; a count other than
100 is reported as a warning, not an error.

On-disk formats:
  * JSON: array of objects with keys
    ``emoji, usual_meaning, contextual_meaning, cm_chance, si_chance``
  * TSV: five columns with the same names as the header row

Glyph lookup normalizes to NFC and strips one trailing variation
selector (U+FE0F); the stored form is preserved. "Is emoji" checks are
pinned to Unicode 17.0 (the ``regex`` module's data tables).
"""

from __future__ import annotations

import csv
import enum
import functools
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .emojitext import is_emoji_glyph
from .errors import (
    DuplicateGlyphError,
    InvalidChanceError,
    LexiconLoadError,
    MultiGraphemeError,
)
from .emojitext import graphemes

CANONICAL_ENTRY_COUNT = 100

TSV_HEADER = ["emoji", "usual_meaning", "contextual_meaning", "cm_chance", "si_chance"]


@functools.total_ordering
class ChanceLevel(enum.Enum):
    """Ordinal likelihood of an emoji appearing in a given context."""

    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"

    @classmethod
    def parse(cls, value: str) -> "ChanceLevel":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            for member in (cls.LOW, cls.MEDIUM, cls.HIGH):
                if value.strip().lower() == member.value.lower():
                    return member
        raise InvalidChanceError(value)

    def _rank(self) -> int:
        return ("Low", "Medium", "High").index(self.value)

    def __lt__(self, other):
        if not isinstance(other, ChanceLevel):
            return NotImplemented
        return self._rank() < other._rank()

    def __str__(self):
        return self.value


def normalize_glyph(glyph: str) -> str:
    """Lookup key for a glyph: NFC, minus one trailing U+FE0F."""
    g = unicodedata.normalize("NFC", glyph)
    if g.endswith("\ufe0f") and len(g) > 1:
        g = g[:-1]
    return g


@dataclass(frozen=True)
class EmojiEntry:
    glyph: str
    usual_meaning: str
    contextual_meaning: str
    cm_chance: ChanceLevel
    si_chance: ChanceLevel

    def invariant_problems(self) -> list[str]:
        problems = []
        if not is_emoji_glyph(self.glyph):
            problems.append(
                f"glyph {self.glyph!r} is not a single emoji grapheme cluster"
            )
        if not self.usual_meaning.strip():
            problems.append(f"glyph {self.glyph!r}: usual_meaning is empty")
        if not self.contextual_meaning.strip():
            problems.append(f"glyph {self.glyph!r}: contextual_meaning is empty")
        if not isinstance(self.cm_chance, ChanceLevel):
            problems.append(f"glyph {self.glyph!r}: cm_chance is not a chance level")
        if not isinstance(self.si_chance, ChanceLevel):
            problems.append(f"glyph {self.glyph!r}: si_chance is not a chance level")
        return problems

    def to_dict(self) -> dict:
        return {
            "emoji": self.glyph,
            "usual_meaning": self.usual_meaning,
            "contextual_meaning": self.contextual_meaning,
            "cm_chance": str(self.cm_chance),
            "si_chance": str(self.si_chance),
        }


@dataclass(frozen=True)
class ValidationReport:
    entry_count: int
    violations: tuple[str, ...]
    warnings: tuple[str, ...]
    cm_distribution: dict
    si_distribution: dict

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "entry_count": self.entry_count,
            "violations": list(self.violations),
            "warnings": list(self.warnings),
            "cm_distribution": self.cm_distribution,
            "si_distribution": self.si_distribution,
            "ok": self.ok,
        }


class Lexicon:
    """Immutable glyph -> entry mapping; safe for concurrent reads."""

    def __init__(self, entries, source_path: str = "", version: str = ""):
        self.entries: tuple[EmojiEntry, ...] = tuple(entries)
        self.source_path = source_path
        self.version = version
        index: dict[str, EmojiEntry] = {}
        for entry in self.entries:
            key = normalize_glyph(entry.glyph)
            if key in index:
                raise DuplicateGlyphError(entry.glyph)
            index[key] = entry
        self._index = index

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, glyph: str) -> bool:
        return normalize_glyph(glyph) in self._index

    def glyphs(self) -> list[str]:
        return [e.glyph for e in self.entries]

    def lookup(self, glyph: str) -> EmojiEntry | None:
        """Find the entry for one emoji grapheme, or None if absent."""
        if len(graphemes(glyph)) != 1:
            raise MultiGraphemeError(
                f"lookup key must be a single grapheme, got {glyph!r}"
            )
        return self._index.get(normalize_glyph(glyph))


def _entry_from_dict(obj: dict, line: int | None = None) -> EmojiEntry:
    try:
        glyph = obj["emoji"]
        usual = obj["usual_meaning"]
        contextual = obj["contextual_meaning"]
        cm_raw = obj["cm_chance"]
        si_raw = obj["si_chance"]
    except KeyError as exc:
        raise LexiconLoadError(f"missing field {exc.args[0]!r}", line=line) from None
    try:
        cm = ChanceLevel.parse(cm_raw)
    except InvalidChanceError:
        raise InvalidChanceError(cm_raw, line=line) from None
    try:
        si = ChanceLevel.parse(si_raw)
    except InvalidChanceError:
        raise InvalidChanceError(si_raw, line=line) from None
    entry = EmojiEntry(
        glyph=unicodedata.normalize("NFC", str(glyph)),
        usual_meaning=str(usual),
        contextual_meaning=str(contextual),
        cm_chance=cm,
        si_chance=si,
    )
    problems = entry.invariant_problems()
    if problems:
        raise LexiconLoadError("; ".join(problems), line=line)
    return entry


def load_lexicon(path, format: str | None = None) -> Lexicon:
    """Load a sensitivity matrix from JSON or TSV.

    ``format`` defaults to the file suffix. Duplicate glyphs, invalid
    chance levels, or malformed rows abort the load with the offending
    line number.
    """
    path = Path(path)
    if format is None:
        format = "tsv" if path.suffix.lower() in (".tsv", ".txt") else "json"
    if format not in ("json", "tsv"):
        raise LexiconLoadError(f"unknown format {format!r}")
    if not path.exists():
        raise FileNotFoundError(str(path))

    entries: list[EmojiEntry] = []
    seen: dict[str, int] = {}

    if format == "json":
        try:
            data = json.loads(path.read_text(encoding="utf-8") or "[]")
        except json.JSONDecodeError as exc:
            raise LexiconLoadError(f"invalid JSON: {exc}", line=exc.lineno) from None
        if not isinstance(data, list):
            raise LexiconLoadError("expected a JSON array of entry objects")
        for i, obj in enumerate(data, start=1):
            if not isinstance(obj, dict):
                raise LexiconLoadError("entry is not an object", line=i)
            entries.append(_entry_from_dict(obj, line=i))
            _check_duplicate(entries[-1], seen, i)
    else:
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh, delimiter="\t")
            header = next(reader, None)
            if header is None:
                header = []
            if [h.strip() for h in header] != TSV_HEADER:
                raise LexiconLoadError(
                    f"bad TSV header {header!r}, expected {TSV_HEADER!r}", line=1
                )
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 5:
                    raise LexiconLoadError(
                        f"expected 5 columns, got {len(row)}", line=lineno
                    )
                obj = dict(zip(TSV_HEADER, row))
                entries.append(_entry_from_dict(obj, line=lineno))
                _check_duplicate(entries[-1], seen, lineno)

    return Lexicon(entries, source_path=str(path), version="")


def _check_duplicate(entry: EmojiEntry, seen: dict, line: int):
    key = normalize_glyph(entry.glyph)
    if key in seen:
        raise DuplicateGlyphError(entry.glyph, line=line)
    seen[key] = line


def save_lexicon(lexicon: Lexicon, path, format: str | None = None) -> None:
    path = Path(path)
    if format is None:
        format = "tsv" if path.suffix.lower() in (".tsv", ".txt") else "json"
    if format == "json":
        path.write_text(
            json.dumps([e.to_dict() for e in lexicon], ensure_ascii=False, indent=2)
            + "\n",
            encoding="utf-8",
        )
    elif format == "tsv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
            writer.writerow(TSV_HEADER)
            for e in lexicon:
                d = e.to_dict()
                writer.writerow([d[k] for k in TSV_HEADER])
    else:
        raise LexiconLoadError(f"unknown format {format!r}")


def validate_lexicon(lexicon: Lexicon) -> ValidationReport:
    """Re-check every invariant on an in-memory lexicon."""
    violations: list[str] = []
    warnings: list[str] = []
    seen: set[str] = set()
    cm_dist: Counter = Counter()
    si_dist: Counter = Counter()

    for entry in lexicon:
        violations.extend(entry.invariant_problems())
        key = normalize_glyph(entry.glyph)
        if key in seen:
            violations.append(f"duplicate glyph {entry.glyph!r}")
        seen.add(key)
        if isinstance(entry.cm_chance, ChanceLevel):
            cm_dist[str(entry.cm_chance)] += 1
        else:
            violations.append(f"glyph {entry.glyph!r}: invalid cm_chance")
        if isinstance(entry.si_chance, ChanceLevel):
            si_dist[str(entry.si_chance)] += 1
        else:
            violations.append(f"glyph {entry.glyph!r}: invalid si_chance")

    if len(lexicon) != CANONICAL_ENTRY_COUNT:
        warnings.append(
            f"entry count {len(lexicon)} differs from the canonical "
            f"{CANONICAL_ENTRY_COUNT}"
        )

    return ValidationReport(
        entry_count=len(lexicon),
        violations=tuple(violations),
        warnings=tuple(warnings),
        cm_distribution=dict(cm_dist),
        si_distribution=dict(si_dist),
    )


def bundled_lexicon_path() -> Path:
    """Path of the reference 100-entry matrix shipped with the package."""
    return Path(__file__).parent / "data" / "cesm100.json"
