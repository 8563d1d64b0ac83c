"""Category taxonomy: a rooted tree built from slash-separated label paths.

Nodes are keyed by their canonical path string ("Seg1/Seg2/..."). The root
is virtual: it exists only as an anchor and is never a prediction target.
A node is *stale* when it carries no directly assigned samples but has
children; stale nodes stay in the tree (they matter for ancestor credit and
centroid inheritance) but are excluded from the candidate ranking.
"""

from __future__ import annotations

import unicodedata
from collections.abc import Iterable, Iterator

from .errors import ValidationError

SEPARATOR = "/"

KIND_LEAF = "leaf"
KIND_INTERNAL = "internal"
KIND_STALE = "stale"


def normalize_segment(raw: str) -> str:
    """NFC-normalize and trim one path segment. No case folding: labels are
    opaque identifiers and must compare byte-exact."""
    return unicodedata.normalize("NFC", raw).strip()


def parse_path(raw: str) -> tuple[str, ...]:
    """Split a raw category string into validated segments.

    Raises ValidationError naming the offending raw string when any segment
    is empty or whitespace-only.
    """
    if not isinstance(raw, str):
        raise ValidationError(f"category path must be a string, got {type(raw).__name__}")
    segments = tuple(normalize_segment(s) for s in raw.split(SEPARATOR))
    if not segments or any(s == "" for s in segments):
        raise ValidationError(f"malformed category path (empty segment): {raw!r}")
    return segments


def render_path(segments: Iterable[str]) -> str:
    return SEPARATOR.join(segments)


def canonical_path(raw: str) -> str:
    """Parse and re-render: the round-trip canonical form of a raw path."""
    return render_path(parse_path(raw))


def path_depth(path: str) -> int:
    return len(parse_path(path))


def ancestor_paths(path: str) -> list[str]:
    """All prefixes of ``path`` from depth 1 up to the path itself,
    excluding the virtual root. "A/B/C" -> ["A", "A/B", "A/B/C"]."""
    segments = parse_path(path)
    return [render_path(segments[: i + 1]) for i in range(len(segments))]


def ancestor_set(path: str) -> set[str]:
    return set(ancestor_paths(path))


class TaxonomyNode:
    """One category node. ``direct_count`` counts samples assigned exactly
    here (not in descendants)."""

    __slots__ = ("segments", "children", "direct_count")

    def __init__(self, segments: tuple[str, ...]):
        self.segments = segments
        self.children: dict[str, TaxonomyNode] = {}
        self.direct_count = 0

    @property
    def path(self) -> str:
        return render_path(self.segments)

    @property
    def depth(self) -> int:
        return len(self.segments)

    @property
    def is_predictable(self) -> bool:
        return self.direct_count > 0

    @property
    def kind(self) -> str:
        if not self.children:
            return KIND_LEAF
        return KIND_STALE if self.direct_count == 0 else KIND_INTERNAL

    def sorted_children(self) -> list[TaxonomyNode]:
        return [self.children[k] for k in sorted(self.children)]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"TaxonomyNode({self.path!r}, kind={self.kind}, n={self.direct_count})"


class TaxonomyTree:
    """Rooted category tree with an index from canonical path to node.

    Construction is single-writer; once training starts the tree is treated
    as immutable by readers, and incremental updates take exclusive access.
    """

    def __init__(self):
        self._top: dict[str, TaxonomyNode] = {}  # depth-1 nodes under the virtual root
        self._index: dict[str, TaxonomyNode] = {}

    def insert(self, raw_path: str, count: int = 1) -> TaxonomyNode:
        """Insert ``count`` samples at ``raw_path``, creating any missing
        ancestors. Returns the terminal node."""
        if count < 0:
            raise ValidationError(f"sample count must be non-negative, got {count}")
        segments = parse_path(raw_path)
        level = self._top
        node: TaxonomyNode | None = None
        for i in range(len(segments)):
            seg = segments[i]
            node = level.get(seg)
            if node is None:
                node = TaxonomyNode(segments[: i + 1])
                level[seg] = node
                self._index[node.path] = node
            level = node.children
        assert node is not None
        node.direct_count += count
        return node

    def get(self, path: str) -> TaxonomyNode | None:
        return self._index.get(path)

    def __contains__(self, path: str) -> bool:
        return path in self._index

    def __len__(self) -> int:
        return len(self._index)

    def nodes(self) -> list[TaxonomyNode]:
        """All nodes in lexicographic order of their canonical path."""
        return [self._index[p] for p in sorted(self._index)]

    def post_order(self) -> Iterator[TaxonomyNode]:
        """Every node after all of its descendants; children visited in
        lexicographic segment order, so the sequence is deterministic."""

        def walk(node: TaxonomyNode) -> Iterator[TaxonomyNode]:
            for child in node.sorted_children():
                yield from walk(child)
            yield node

        for seg in sorted(self._top):
            yield from walk(self._top[seg])

    def predictable_paths(self) -> list[str]:
        """Root-to-node paths of all prediction targets (nodes with direct
        samples), lexicographic by canonical string. Stale nodes never
        appear here."""
        return sorted(p for p, n in self._index.items() if n.is_predictable)

    # -- statistics -------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self._index)

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self._index.values() if n.kind == KIND_LEAF)

    @property
    def n_internal(self) -> int:
        return sum(1 for n in self._index.values() if n.children)

    @property
    def n_stale(self) -> int:
        return sum(1 for n in self._index.values() if n.kind == KIND_STALE)

    @property
    def n_predictable(self) -> int:
        return sum(1 for n in self._index.values() if n.is_predictable)

    @property
    def total_samples(self) -> int:
        return sum(n.direct_count for n in self._index.values())

    def depth_histogram(self) -> dict[int, int]:
        """Sample counts per depth of their assigned category."""
        hist: dict[int, int] = {}
        for node in self._index.values():
            if node.direct_count:
                hist[node.depth] = hist.get(node.depth, 0) + node.direct_count
        return dict(sorted(hist.items()))

    def summary_lines(self) -> list[str]:
        """Line-oriented dump (path, kind, direct count) for debugging."""
        return [f"{n.path}\t{n.kind}\t{n.direct_count}" for n in self.nodes()]

    @classmethod
    def from_paths(cls, paths: Iterable[str]) -> "TaxonomyTree":
        tree = cls()
        for p in paths:
            tree.insert(p)
        return tree
