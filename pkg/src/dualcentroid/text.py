"""Text normalization: tokenization, n-grams, and conservative HTML stripping."""

from __future__ import annotations

import html
import re
from collections import Counter
from html.parser import HTMLParser

# Maximal runs of >=2 alphanumeric characters (underscore excluded).
_TOKEN_RE = re.compile(r"[^\W_]{2,}", re.UNICODE)
_WS_RE = re.compile(r"\s+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens: maximal runs of two or more alphanumerics.
    Single-character runs are dropped."""
    return _TOKEN_RE.findall(text.lower())


def bigrams(tokens: list[str]) -> list[str]:
    """Adjacent token pairs joined by a single space."""
    return [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


def ngram_counts(text: str, ngram_range: tuple[int, int] = (1, 2)) -> Counter:
    """Term counts for all n-gram orders in ``ngram_range`` (inclusive)."""
    tokens = tokenize(text)
    lo, hi = ngram_range
    counts: Counter = Counter()
    for n in range(lo, hi + 1):
        if n == 1:
            counts.update(tokens)
        else:
            counts.update(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return counts


def collapse_whitespace(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


class _TagStripper(HTMLParser):
    """Collects text content, discarding script/style subtrees wholesale."""

    _SKIP = {"script", "style"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self._chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data):
        if self._skip_depth == 0:
            self._chunks.append(data)

    def text(self) -> str:
        return " ".join(self._chunks)


def strip_html(text: str) -> str:
    """Reduce markup to plain text: drop tags, emphasis, links, images and
    tables, keep their textual content; entities are unescaped. Not a layout
    converter."""
    if "<" not in text and "&" not in text:
        return collapse_whitespace(text)
    parser = _TagStripper()
    try:
        parser.feed(text)
        parser.close()
    except Exception:
        # Pathological markup: fall back to a crude tag regex.
        return collapse_whitespace(html.unescape(re.sub(r"<[^>]*>", " ", text)))
    return collapse_whitespace(parser.text())
