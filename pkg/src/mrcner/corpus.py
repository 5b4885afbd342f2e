"""BIO-labeled corpus handling.

Parses CoNLL-style two-column files into sentences, repairs invalid BIO
sequences (conlleval convention: a dangling I becomes B), and converts
between label sequences and typed entity spans in both directions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

VALID_TAGS = ("B", "I", "O")

# Entity type used when a corpus carries bare B/I tags without a -TYPE suffix.
DEFAULT_ENTITY_TYPE = "ENT"


class CorpusError(ValueError):
    """Malformed corpus input: bad line, unknown tag, or inconsistent spans."""


@dataclass(frozen=True)
class BioLabel:
    """One per-token BIO label. O carries no entity type; B and I always do."""

    tag: str
    entity_type: str | None = None

    def __post_init__(self) -> None:
        if self.tag not in VALID_TAGS:
            raise CorpusError(f"unknown BIO tag {self.tag!r}")
        if self.tag == "O" and self.entity_type is not None:
            raise CorpusError("O label cannot carry an entity type")
        if self.tag != "O" and not self.entity_type:
            raise CorpusError(f"{self.tag} label requires an entity type")

    def to_raw(self, typed: bool = True) -> str:
        if self.tag == "O":
            return "O"
        return f"{self.tag}-{self.entity_type}" if typed else self.tag


@dataclass(frozen=True)
class EntitySpan:
    """Inclusive token-index span [start, end] of one typed entity mention."""

    start: int
    end: int
    entity_type: str
    surface: str = ""

    def __post_init__(self) -> None:
        if not (0 <= self.start <= self.end):
            raise CorpusError(f"invalid span bounds ({self.start}, {self.end})")

    def key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.entity_type)


@dataclass
class Sentence:
    """A tokenized sentence with one BIO label per token."""

    tokens: list[str]
    labels: list[BioLabel]
    doc_id: str = ""
    sent_id: int = 0

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.labels):
            raise CorpusError(
                f"sentence {self.doc_id}/{self.sent_id}: {len(self.tokens)} tokens "
                f"vs {len(self.labels)} labels"
            )
        if not self.tokens:
            raise CorpusError("sentence must contain at least one token")
        for i, tok in enumerate(self.tokens):
            if not tok or tok.split() != [tok]:
                raise CorpusError(f"token {i} ({tok!r}) is empty or contains whitespace")

    def __len__(self) -> int:
        return len(self.tokens)

    def spans(self) -> list[EntitySpan]:
        return bio_to_spans(self.labels, self.tokens)


@dataclass
class ParseReport:
    """Counts accumulated while parsing one input."""

    sentences: int = 0
    tokens: int = 0
    repaired_labels: int = 0


def parse_label(raw: str, index: int, default_entity_type: str = DEFAULT_ENTITY_TYPE) -> BioLabel:
    """Parse a raw label string ("O", "B", "I-Chemical", ...) into a BioLabel.

    Bare B/I tags get `default_entity_type`; a -suffix wins when present.
    """
    if raw == "O":
        return BioLabel("O")
    tag, _, suffix = raw.partition("-")
    if tag not in ("B", "I"):
        raise CorpusError(f"unknown tag {raw!r} at token index {index}")
    return BioLabel(tag, suffix if suffix else default_entity_type)


def repair_bio(
    labels: Sequence[str | BioLabel],
    default_entity_type: str = DEFAULT_ENTITY_TYPE,
) -> tuple[list[BioLabel], int]:
    """Make a label sequence BIO-valid; returns (labels, number of changes).

    Any I whose predecessor (after repair) is not a B or I of the same type
    becomes a B of its own type. Raw strings are parsed first; an unknown
    tag raises naming the offending token index.
    """
    out: list[BioLabel] = []
    repairs = 0
    for i, raw in enumerate(labels):
        lab = raw if isinstance(raw, BioLabel) else parse_label(raw, i, default_entity_type)
        if lab.tag == "I":
            prev = out[i - 1] if i > 0 else None
            if prev is None or prev.tag == "O" or prev.entity_type != lab.entity_type:
                lab = BioLabel("B", lab.entity_type)
                repairs += 1
        out.append(lab)
    return out, repairs


def bio_to_spans(labels: Sequence[BioLabel], tokens: Sequence[str] | None = None) -> list[EntitySpan]:
    """Convert a BIO-valid label sequence into sorted, non-overlapping spans.

    Every maximal B(I)* run of one entity type becomes one span. When
    `tokens` is given, span surfaces are the space-joined token texts.
    """
    spans: list[EntitySpan] = []
    start = None
    etype = None
    for i, lab in enumerate(labels):
        if start is not None and (lab.tag != "I" or lab.entity_type != etype):
            spans.append(_make_span(start, i - 1, etype, tokens))
            start, etype = None, None
        if lab.tag == "B" or (lab.tag == "I" and start is None):
            start, etype = i, lab.entity_type
    if start is not None:
        spans.append(_make_span(start, len(labels) - 1, etype, tokens))
    return spans


def _make_span(start: int, end: int, etype: str, tokens: Sequence[str] | None) -> EntitySpan:
    surface = " ".join(tokens[start : end + 1]) if tokens is not None else ""
    return EntitySpan(start, end, etype, surface)


def spans_to_bio(spans: Sequence[EntitySpan], length: int) -> list[BioLabel]:
    """Exact inverse of bio_to_spans for sorted, non-overlapping span lists."""
    labels: list[BioLabel] = [BioLabel("O")] * length
    prev: EntitySpan | None = None
    for span in spans:
        if span.end >= length:
            raise CorpusError(f"span ({span.start}, {span.end}) exceeds sentence length {length}")
        if prev is not None and span.start <= prev.end:
            raise CorpusError(
                f"overlapping spans ({prev.start}, {prev.end}) and ({span.start}, {span.end})"
            )
        labels[span.start] = BioLabel("B", span.entity_type)
        for i in range(span.start + 1, span.end + 1):
            labels[i] = BioLabel("I", span.entity_type)
        prev = span
    return labels


def parse_conll_with_report(
    lines: Iterable[str],
    column_sep: str | None = None,
    doc_id: str = "",
    default_entity_type: str = DEFAULT_ENTITY_TYPE,
) -> tuple[list[Sentence], ParseReport]:
    """Parse CoNLL-style "token<sep>label" lines into sentences.

    A blank line ends a sentence. With `column_sep=None` each line is split
    on a tab when one is present, otherwise on a whitespace run (the
    released BioNER files vary). Invalid I labels are repaired and counted.
    """
    report = ParseReport()
    sentences: list[Sentence] = []
    tokens: list[str] = []
    raw_labels: list[str] = []

    def flush() -> None:
        if not tokens:
            return
        labels, repairs = repair_bio(raw_labels, default_entity_type)
        report.repaired_labels += repairs
        sentences.append(Sentence(list(tokens), labels, doc_id=doc_id, sent_id=len(sentences)))
        report.sentences += 1
        report.tokens += len(tokens)
        tokens.clear()
        raw_labels.clear()

    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip():
            flush()
            continue
        if column_sep is not None:
            fields = line.split(column_sep)
        elif "\t" in line:
            fields = line.split("\t")
        else:
            fields = line.split()
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise CorpusError(f"line {lineno}: expected two columns (token, label), got {line!r}")
        tokens.append(fields[0])
        raw_labels.append(fields[1])
    flush()
    return sentences, report


def parse_conll(
    lines: Iterable[str],
    column_sep: str | None = None,
    doc_id: str = "",
    default_entity_type: str = DEFAULT_ENTITY_TYPE,
) -> list[Sentence]:
    sentences, _ = parse_conll_with_report(lines, column_sep, doc_id, default_entity_type)
    return sentences


def format_conll(sentences: Sequence[Sentence], column_sep: str = "\t", typed: bool = True) -> str:
    """Serialize sentences back to CoNLL text (inverse of parse_conll)."""
    blocks = []
    for sent in sentences:
        blocks.append(
            "\n".join(
                f"{tok}{column_sep}{lab.to_raw(typed)}"
                for tok, lab in zip(sent.tokens, sent.labels)
            )
        )
    return "\n\n".join(blocks) + "\n"


def entity_inventory(sentences: Iterable[Sentence]) -> dict[str, list[str]]:
    """Distinct entity surfaces per type, case-sensitive, lexicographically sorted."""
    seen: dict[str, set[str]] = {}
    for sent in sentences:
        for span in sent.spans():
            seen.setdefault(span.entity_type, set()).add(span.surface)
    return {etype: sorted(seen[etype]) for etype in sorted(seen)}


def sentence_to_json(sentence: Sentence) -> str:
    """One-sentence canonical JSON line with tokens, labels, and gold spans."""
    record = {
        "doc_id": sentence.doc_id,
        "sent_id": sentence.sent_id,
        "tokens": sentence.tokens,
        "labels": [lab.to_raw() for lab in sentence.labels],
        "spans": [
            {"start": s.start, "end": s.end, "type": s.entity_type, "surface": s.surface}
            for s in sentence.spans()
        ],
    }
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))
