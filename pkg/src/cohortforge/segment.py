"""Lossless sentence segmentation for generated SOAP notes.

Rules, applied per line:

* a line break always ends a sentence;
* blank lines and bare section headers (``Subjective:``) are separators;
* a leading list marker (``-``, ``*``, ``•``, ``1.``, ``2)``) is a separator,
  so each bullet becomes its own unit;
* within a line, ``.``, ``!`` or ``?`` (plus closing quotes/brackets) followed
  by whitespace ends a sentence unless the token is an allowlisted
  abbreviation or a single-letter initial.

Every byte of the input lands either in a sentence or in a separator, and
``Segmentation.join()`` rebuilds the text exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import PreconditionError

ABBREVIATIONS = frozenset({
    "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.", "vs.", "etc.",
    "e.g.", "i.e.", "approx.", "no.", "fig.", "pt.", "pts.", "hx.", "dx.", "tx.",
    "rx.", "sx.", "y.o.", "yo.", "min.", "max.", "mg.", "a.m.", "p.m.",
    "b.i.d.", "t.i.d.", "q.i.d.", "q.d.", "q.h.s.", "h.s.", "p.o.", "p.r.n.",
})

_HEADER = re.compile(r"[A-Za-z][A-Za-z/&()\-]*(?:[ \t]+[A-Za-z/&()\-]+){0,3}:[ \t]*")
_BULLET = re.compile(r"[ \t]*(?:[-*•]|\d{1,3}[.)])[ \t]+")
_LEADING_WS = re.compile(r"[ \t]*")
_BOUNDARY = re.compile(r"([.!?]+[\"')\]]*)(\s+)")
_INITIAL = re.compile(r"[A-Za-z]\.")


@dataclass(frozen=True)
class Segmentation:
    sentences: tuple[str, ...]
    # gaps[i] precedes sentences[i]; gaps[-1] trails the last sentence.
    gaps: tuple[str, ...]

    def join(self) -> str:
        parts = [self.gaps[0]]
        for s, g in zip(self.sentences, self.gaps[1:]):
            parts.append(s)
            parts.append(g)
        return "".join(parts)


def _is_abbreviation(chunk: str, punct_end: int) -> bool:
    start = max(chunk.rfind(" ", 0, punct_end), chunk.rfind("\t", 0, punct_end)) + 1
    token = chunk[start:punct_end].lstrip("([\"'").lower()
    if token in ABBREVIATIONS:
        return True
    return bool(_INITIAL.fullmatch(token))


def segment(text: str) -> Segmentation:
    if not text or not text.strip():
        raise PreconditionError("cannot segment empty text")
    sentences: list[str] = []
    gaps: list[str] = []
    pending = ""  # separator text accumulated since the last sentence

    for line in text.splitlines(keepends=True):
        body = line.rstrip("\r\n")
        newline = line[len(body):]
        if not body.strip() or _HEADER.fullmatch(body):
            pending += line
            continue
        lead = _BULLET.match(body) or _LEADING_WS.match(body)
        pending += body[: lead.end()]
        rest = body[lead.end():]

        start = 0
        for m in _BOUNDARY.finditer(rest):
            if m.group(1).startswith(".") and len(m.group(1).rstrip("\"')]")) == 1 \
                    and _is_abbreviation(rest, m.end(1)):
                continue
            gaps.append(pending)
            sentences.append(rest[start:m.end(1)])
            pending = m.group(2)
            start = m.end()
        tail = rest[start:]
        stripped = tail.rstrip()
        if stripped:
            gaps.append(pending)
            sentences.append(stripped)
            pending = tail[len(stripped):]
        else:
            pending += tail
        pending += newline

    gaps.append(pending)
    return Segmentation(tuple(sentences), tuple(gaps))


def segment_sentences(text: str) -> list[str]:
    return list(segment(text).sentences)
