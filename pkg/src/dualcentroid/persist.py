"""Binary model container.

Layout (all integers little-endian; full byte spec in FORMAT.md):

    magic   4 bytes  b"HTAX"
    version u16      currently 1
    digest  32 bytes sha256 of the canonical config JSON
    sections, each: tag (4 ascii bytes) + length (u64) + payload
        CFG_  canonical config JSON
        MET_  metadata JSON (samples seen, package version)
        TAX_  taxonomy node records
        TFI_  lexical vectorizer (JSON header + idf float64 array)
        EMB_  semantic embedder descriptor JSON
        CEN_  per-node centroid blocks (counts, float64 sums,
              float32 normalized centroids)
    trailer 32 bytes sha256 of everything before it

Serialization is deterministic: node records are ordered lexicographically,
JSON is emitted with sorted keys, and arrays are written with explicit
endianness, so identical models produce identical bytes. Every load verifies
the trailing checksum first; a flipped bit anywhere surfaces as an error,
never as a silently different model.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .centroids import ModelConfig, NodeCentroids, ViewCentroids
from .errors import (
    ChecksumError,
    ModelFormatError,
    TruncatedModelError,
    UnsupportedVersionError,
)
from .taxonomy import TaxonomyTree
from .vectorize import TfidfVectorizer

MAGIC = b"HTAX"
FORMAT_VERSION = 1
_SECTION_ORDER = (b"CFG_", b"MET_", b"TAX_", b"TFI_", b"EMB_", b"CEN_")


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _pack_str(s: str) -> bytes:
    encoded = s.encode("utf-8")
    return struct.pack("<H", len(encoded)) + encoded


class _Reader:
    def __init__(self, buf: bytes, name: str):
        self.buf = buf
        self.pos = 0
        self.name = name

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedModelError(f"{self.name}: section ends prematurely")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u16()).decode("utf-8")

    def f64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").copy()

    def i64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<i8").copy()


def _encode_taxonomy(tree: TaxonomyTree) -> bytes:
    nodes = tree.nodes()
    parts = [struct.pack("<I", len(nodes))]
    for node in nodes:
        parts.append(_pack_str(node.path))
        parts.append(struct.pack("<Q", node.direct_count))
    return b"".join(parts)


def _decode_taxonomy(buf: bytes) -> TaxonomyTree:
    r = _Reader(buf, "TAX_")
    tree = TaxonomyTree()
    for _ in range(r.u32()):
        path = r.string()
        count = r.u64()
        tree.insert(path, count)
    return tree


def _encode_tfidf(vec: TfidfVectorizer) -> bytes:
    state = vec.to_state()
    header = _canonical_json(
        {"params": state["params"], "n_docs": state["n_docs"], "terms": state["terms"]}
    )
    idf = np.asarray(state["idf"], dtype="<f8").tobytes()
    return struct.pack("<Q", len(header)) + header + idf


def _decode_tfidf(buf: bytes) -> TfidfVectorizer:
    r = _Reader(buf, "TFI_")
    header = json.loads(r.take(r.u64()).decode("utf-8"))
    idf = r.f64_array(len(header["terms"]))
    return TfidfVectorizer.from_state(
        {
            "params": header["params"],
            "n_docs": header["n_docs"],
            "terms": header["terms"],
            "idf": idf,
        }
    )


def _encode_view(vc: ViewCentroids) -> bytes:
    k, dim = vc.sums.shape
    return b"".join(
        [
            struct.pack("<II", k, dim),
            np.asarray(vc.counts, dtype="<i8").tobytes(),
            np.asarray(vc.sums, dtype="<f8").tobytes(),
            np.asarray(vc.unit, dtype="<f4").tobytes(),  # interchange copy
        ]
    )


def _decode_view(r: _Reader) -> ViewCentroids:
    k = r.u32()
    dim = r.u32()
    counts = r.i64_array(k)
    sums = r.f64_array(k * dim).reshape(k, dim)
    r.take(4 * k * dim)  # normalized float32 block; re-derived from sums/counts
    return ViewCentroids(sums, counts)


def _encode_centroids(centroids: dict[str, NodeCentroids]) -> bytes:
    parts = [struct.pack("<I", len(centroids))]
    for path in sorted(centroids):
        nc = centroids[path]
        parts.append(_pack_str(path))
        parts.append(_encode_view(nc.lexical))
        parts.append(_encode_view(nc.semantic))
    return b"".join(parts)


def _decode_centroids(buf: bytes) -> dict[str, NodeCentroids]:
    r = _Reader(buf, "CEN_")
    out: dict[str, NodeCentroids] = {}
    for _ in range(r.u32()):
        path = r.string()
        lexical = _decode_view(r)
        semantic = _decode_view(r)
        out[path] = NodeCentroids(lexical=lexical, semantic=semantic)
    return out


def model_bytes(clf) -> bytes:
    """Serialize a fitted DualCentroidClassifier to the container format."""
    config_json = _canonical_json(clf.config_.to_dict())
    sections = {
        b"CFG_": config_json,
        b"MET_": _canonical_json({"n_seen": clf.n_seen_, "writer": "dualcentroid-0.1.0"}),
        b"TAX_": _encode_taxonomy(clf.tree_),
        b"TFI_": _encode_tfidf(clf.tfidf_),
        b"EMB_": _canonical_json(clf.embedder_.descriptor()),
        b"CEN_": _encode_centroids(clf.centroids_),
    }
    parts = [MAGIC, struct.pack("<H", FORMAT_VERSION), hashlib.sha256(config_json).digest()]
    for tag in _SECTION_ORDER:
        payload = sections[tag]
        parts.append(tag + struct.pack("<Q", len(payload)) + payload)
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def save_model(clf, path) -> None:
    """Write atomically: serialize to a sibling temp file, then rename."""
    path = Path(path)
    blob = model_bytes(clf)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def load_model(path):
    from .classifier import DualCentroidClassifier
    from .embedders import embedder_from_descriptor

    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc

    min_len = len(MAGIC) + 2 + 32 + 32
    if len(raw) < min_len:
        raise TruncatedModelError(f"{path}: file too short to be a model ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a dualcentroid model file (bad magic)")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version > FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: format version {version} is newer than supported ({FORMAT_VERSION})"
        )
    body, trailer = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != trailer:
        raise ChecksumError(f"{path}: content checksum mismatch; file is corrupt")
    header_digest = raw[6:38]

    sections: dict[bytes, bytes] = {}
    offset = 38
    while offset < len(body):
        if offset + 12 > len(body):
            raise TruncatedModelError(f"{path}: dangling section header")
        tag = body[offset : offset + 4]
        (length,) = struct.unpack_from("<Q", body, offset + 4)
        offset += 12
        if offset + length > len(body):
            raise TruncatedModelError(f"{path}: section {tag!r} exceeds file size")
        sections[tag] = body[offset : offset + length]
        offset += length
    missing = [t for t in _SECTION_ORDER if t not in sections]
    if missing:
        raise ModelFormatError(f"{path}: missing sections {missing}")

    config_json = sections[b"CFG_"]
    if hashlib.sha256(config_json).digest() != header_digest:
        raise ChecksumError(f"{path}: header config digest does not match CFG_ section")
    config = ModelConfig.from_dict(json.loads(config_json.decode("utf-8")))
    meta = json.loads(sections[b"MET_"].decode("utf-8"))

    clf = DualCentroidClassifier(
        **{f: getattr(config, f) for f in ModelConfig.__dataclass_fields__}
    )
    clf.config_ = config
    clf.tree_ = _decode_taxonomy(sections[b"TAX_"])
    clf.tfidf_ = _decode_tfidf(sections[b"TFI_"])
    clf.embedder_ = embedder_from_descriptor(json.loads(sections[b"EMB_"].decode("utf-8")))
    clf.centroids_ = _decode_centroids(sections[b"CEN_"])
    clf.n_seen_ = int(meta["n_seen"])
    clf.timings_ = {}

    tree_paths = {n.path for n in clf.tree_.nodes()}
    if tree_paths != set(clf.centroids_):
        raise ModelFormatError(f"{path}: taxonomy and centroid sections disagree on nodes")
    orphans = [
        n.path for n in clf.tree_.nodes() if not n.children and n.direct_count == 0
    ]
    if orphans:
        raise ModelFormatError(f"{path}: childless nodes without samples: {orphans[:5]}")

    clf._refresh_classes()
    return clf
