"""Semantic document view: pluggable dense embedders.

Two implementations ship:

* HashingEmbedder - a seeded signed random projection of the unigram count
  vector. Deterministic and dependency-free; meant for tests, benchmarks and
  fully offline operation.
* PrecomputedEmbedder - an exact lookup table loaded from a sidecar file of
  vectors produced offline (e.g. by a sentence-encoder run elsewhere). Keys
  may be document ids or raw texts; a miss is an error, never a silent zero.

Sidecar formats (see FORMAT.md):
  text:   one record per line, ``key<TAB>v1 v2 ... vD`` in UTF-8
  binary: magic ``DCEM``, dim:u32 LE, count:u32 LE, then per record
          key-len:u16 LE, key bytes (UTF-8), D float32 LE values
"""

from __future__ import annotations

import hashlib
import struct
from collections import Counter
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import DataError, EmbeddingNotFoundError, ValidationError
from .text import tokenize

_SIDECAR_MAGIC = b"DCEM"


class SemanticEmbedder(Protocol):
    """Deterministic text -> dense vector map with a fixed dimension."""

    @property
    def dim(self) -> int: ...

    def embed(self, text: str) -> np.ndarray: ...

    def descriptor(self) -> dict: ...


def _token_seed(token: str, seed: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=str(seed).encode("ascii")
    ).digest()
    return int.from_bytes(digest, "little")


class HashingEmbedder:
    """Signed random projection of unigram counts.

    Each token maps to a fixed +/-1 vector derived from a keyed hash of the
    token, so the embedding of a text is the count-weighted sum of its token
    sign vectors. Unrelated texts land nearly orthogonal at dim >= a few
    hundred. Token vectors are cached; the cache never changes results.
    """

    def __init__(self, dim: int = 512, seed: int = 0):
        if dim < 1:
            raise ValidationError(f"embedding dimension must be >= 1, got {dim}")
        self._dim = int(dim)
        self._seed = int(seed)
        self._cache: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self._dim

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            rng = np.random.default_rng(_token_seed(token, self._seed))
            vec = rng.integers(0, 2, size=self._dim).astype(np.float64) * 2.0 - 1.0
            self._cache[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        counts = Counter(tokenize(text))
        out = np.zeros(self._dim, dtype=np.float64)
        for token, count in counts.items():
            out += count * self._token_vector(token)
        return out

    def descriptor(self) -> dict:
        return {"kind": "hash", "dim": self._dim, "seed": self._seed}


class PrecomputedEmbedder:
    """Exact vector lookups from a table keyed by id or text."""

    def __init__(self, table: dict[str, np.ndarray], source: str | None = None):
        if not table:
            raise ValidationError("precomputed embedding table is empty")
        dims = {v.shape[0] for v in table.values()}
        if len(dims) != 1:
            raise ValidationError(f"inconsistent embedding dimensions in table: {sorted(dims)}")
        self._table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
        self._dim = dims.pop()
        self._source = source

    @property
    def dim(self) -> int:
        return self._dim

    def __contains__(self, key: str) -> bool:
        return key in self._table

    def embed(self, key: str) -> np.ndarray:
        vec = self._table.get(key)
        if vec is None:
            raise EmbeddingNotFoundError(key)
        return vec

    def descriptor(self) -> dict:
        return {"kind": "precomputed", "dim": self._dim, "source": self._source}

    @classmethod
    def from_file(cls, path: str | Path) -> "PrecomputedEmbedder":
        return cls(read_embedding_sidecar(path), source=str(path))


# -- sidecar io -------------------------------------------------------------


def read_embedding_sidecar(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read embedding sidecar {path}: {exc}") from exc
    if raw.startswith(_SIDECAR_MAGIC):
        return _read_binary_sidecar(raw, path)
    return _read_text_sidecar(raw, path)


def _read_text_sidecar(raw: bytes, path: Path) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, payload = line.partition("\t")
        if not sep:
            raise DataError(f"{path}:{lineno}: expected 'key<TAB>floats' record")
        try:
            values = np.array([float(x) for x in payload.split()], dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad float in embedding record") from exc
        if values.size == 0:
            raise DataError(f"{path}:{lineno}: empty embedding record")
        table[key] = values
    if not table:
        raise DataError(f"{path}: no embedding records found")
    return table


def _read_binary_sidecar(raw: bytes, path: Path) -> dict[str, np.ndarray]:
    if len(raw) < 12:
        raise DataError(f"{path}: truncated embedding sidecar header")
    dim, count = struct.unpack_from("<II", raw, 4)
    offset = 12
    table: dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + 2 > len(raw):
            raise DataError(f"{path}: truncated embedding sidecar record")
        (key_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        end = offset + key_len + 4 * dim
        if end > len(raw):
            raise DataError(f"{path}: truncated embedding sidecar record")
        key = raw[offset : offset + key_len].decode("utf-8")
        offset += key_len
        values = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += 4 * dim
        table[key] = values
    return table


def write_embedding_sidecar(
    path: str | Path, table: dict[str, np.ndarray], binary: bool = False
) -> None:
    path = Path(path)
    if binary:
        dims = {np.asarray(v).shape[0] for v in table.values()}
        if len(dims) != 1:
            raise ValidationError("all sidecar vectors must share one dimension")
        dim = dims.pop()
        parts = [_SIDECAR_MAGIC, struct.pack("<II", dim, len(table))]
        for key in sorted(table):
            encoded = key.encode("utf-8")
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
            parts.append(np.asarray(table[key], dtype="<f4").tobytes())
        path.write_bytes(b"".join(parts))
        return
    lines = []
    for key in sorted(table):
        payload = " ".join(repr(float(x)) for x in np.asarray(table[key], dtype=np.float64))
        lines.append(f"{key}\t{payload}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def embedder_from_descriptor(desc: dict) -> SemanticEmbedder:
    kind = desc.get("kind")
    if kind == "hash":
        return HashingEmbedder(dim=desc["dim"], seed=desc["seed"])
    if kind == "precomputed":
        source = desc.get("source")
        if not source:
            raise ValidationError("precomputed embedder descriptor lacks a source path")
        return PrecomputedEmbedder.from_file(source)
    raise ValidationError(f"unknown embedder kind: {kind!r}")
