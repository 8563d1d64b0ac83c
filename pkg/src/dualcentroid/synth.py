"""Synthetic ticket corpus generator.

Builds a random taxonomy with a configurable depth profile and stale-node
share, gives each category its own token vocabulary with a configurable
cross-category overlap, and emits documents as seeded mixtures of category
tokens and shared noise tokens. Everything derives from the spec seed, so
identical specs produce identical corpora. The default depth profile mirrors
a production helpdesk taxonomy that concentrates heavily at depth 3.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .data import CleanSample
from .errors import ValidationError
from .taxonomy import TaxonomyTree

DEFAULT_DEPTH_PROFILE = {2: 479, 3: 8145, 4: 332, 5: 12}


@dataclass
class SynthSpec:
    categories: int = 60
    samples_per_category: int | None = 50
    total_samples: int | None = None
    depth_profile: dict[int, float] = field(default_factory=lambda: dict(DEFAULT_DEPTH_PROFILE))
    vocab_per_category: int = 40
    overlap: float = 0.0
    noise_vocab: int = 100
    noise_rate: float = 0.3
    stale_ratio: float = 0.3
    imbalance: float = 0.0
    doc_tokens: tuple[int, int] = (10, 24)
    seed: int = 0

    def validate(self) -> "SynthSpec":
        if self.categories < 1:
            raise ValidationError(f"categories must be >= 1, got {self.categories}")
        if (self.samples_per_category is None) == (self.total_samples is None):
            raise ValidationError(
                "exactly one of samples_per_category / total_samples must be set"
            )
        if self.samples_per_category is not None and self.samples_per_category < 1:
            raise ValidationError("samples_per_category must be >= 1")
        if self.total_samples is not None and self.total_samples < self.categories:
            raise ValidationError(
                f"total_samples ({self.total_samples}) must cover every category "
                f"({self.categories}) at least once"
            )
        if not self.depth_profile:
            raise ValidationError("depth_profile must not be empty")
        for depth, weight in self.depth_profile.items():
            if int(depth) < 2:
                raise ValidationError(
                    f"depth_profile contains depth {depth}; root-level (depth-1) "
                    "categories are excluded, so depths start at 2"
                )
            if weight < 0:
                raise ValidationError(f"depth_profile weight for depth {depth} is negative")
        if sum(self.depth_profile.values()) <= 0:
            raise ValidationError("depth_profile weights must sum to a positive value")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValidationError(f"overlap must lie in [0, 1], got {self.overlap}")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValidationError(f"noise_rate must lie in [0, 1), got {self.noise_rate}")
        if not 0.0 <= self.stale_ratio < 1.0:
            raise ValidationError(f"stale_ratio must lie in [0, 1), got {self.stale_ratio}")
        if self.vocab_per_category < 1:
            raise ValidationError("vocab_per_category must be >= 1")
        if self.imbalance < 0.0:
            raise ValidationError(f"imbalance must be >= 0, got {self.imbalance}")
        lo, hi = self.doc_tokens
        if lo < 4 or hi < lo:
            raise ValidationError(f"doc_tokens must satisfy 4 <= lo <= hi, got {self.doc_tokens}")
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        out["depth_profile"] = {str(k): v for k, v in self.depth_profile.items()}
        out["doc_tokens"] = list(self.doc_tokens)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        data = dict(data)
        if "depth_profile" in data:
            data["depth_profile"] = {int(k): v for k, v in data["depth_profile"].items()}
        if "doc_tokens" in data:
            data["doc_tokens"] = tuple(data["doc_tokens"])
        return cls(**data).validate()


def _allocate(n: int, weights: list[float]) -> list[int]:
    """Largest-remainder integer allocation of n items over weights."""
    total = sum(weights)
    quotas = [n * w / total for w in weights]
    floors = [int(q) for q in quotas]
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in order[: n - sum(floors)]:
        floors[i] += 1
    return floors


def _category_depths(spec: SynthSpec) -> list[int]:
    depths = sorted(int(d) for d in spec.depth_profile)
    weights = [float(spec.depth_profile[d]) for d in depths]
    alloc = _allocate(spec.categories, weights)
    out: list[int] = []
    for d, count in zip(depths, alloc):
        out.extend([d] * count)
    return out


def _build_taxonomy(spec: SynthSpec, rng: np.random.Generator) -> list[str]:
    """Category paths honoring the depth allocation. Parents at each level
    are either existing nodes (stale or labeled) or freshly created scaffold
    nodes; ``stale_ratio`` is the chance a category hangs under scaffolding
    rather than under another labeled category."""
    by_depth: dict[int, list[str]] = {}
    scaffold_serial = 0

    def new_scaffold(depth: int) -> str:
        nonlocal scaffold_serial
        scaffold_serial += 1
        name = f"Group_{scaffold_serial:03d}"
        if depth == 1:
            path = name
        else:
            path = f"{_parent_at(depth - 1, prefer_scaffold=True)}/{name}"
        by_depth.setdefault(depth, []).append(path)
        return path

    def _parent_at(depth: int, prefer_scaffold: bool) -> str:
        pool = by_depth.get(depth, [])
        if depth == 1:
            # keep a handful of top-level branches
            if not pool or (len(pool) < 3 and rng.random() < 0.5):
                return new_scaffold(1)
            return pool[int(rng.integers(len(pool)))]
        if not pool or (prefer_scaffold and rng.random() < 0.5):
            return new_scaffold(depth)
        return pool[int(rng.integers(len(pool)))]

    paths: list[str] = []
    for i, depth in enumerate(_category_depths(spec)):
        use_scaffold = rng.random() < spec.stale_ratio
        parent = _parent_at(depth - 1, prefer_scaffold=use_scaffold)
        path = f"{parent}/Category_{i + 1:03d}"
        by_depth.setdefault(depth, []).append(path)
        paths.append(path)
    return paths


def _per_category_counts(spec: SynthSpec, rng: np.random.Generator) -> list[int]:
    if spec.samples_per_category is not None:
        return [spec.samples_per_category] * spec.categories
    if spec.imbalance == 0.0:
        weights = [1.0] * spec.categories
    else:
        # Zipf-like head/tail skew, shuffled so depth does not correlate with size
        weights = [(r + 1.0) ** -spec.imbalance for r in range(spec.categories)]
        rng.shuffle(weights)
    counts = _allocate(spec.total_samples, weights)
    # every category must stay predictable
    for i in range(spec.categories):
        while counts[i] == 0:
            donor = int(np.argmax(counts))
            counts[donor] -= 1
            counts[i] += 1
    return counts


def generate_synthetic(spec: SynthSpec) -> tuple[list[CleanSample], dict]:
    """Produce (samples, manifest). The manifest echoes the spec and records
    the achieved taxonomy (node kinds, per-depth and per-category sample
    counts) for downstream cross-checks."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    paths = _build_taxonomy(spec, rng)
    counts = _per_category_counts(spec, rng)

    shared_pool = [f"shared{j:04d}" for j in range(max(spec.vocab_per_category * 2, 10))]
    noise_pool = [f"noise{j:04d}" for j in range(max(spec.noise_vocab, 1))]
    vocab: dict[str, list[str]] = {}
    for i, path in enumerate(paths):
        n_shared = round(spec.overlap * spec.vocab_per_category)
        own = [f"cat{i:03d}tok{j:03d}" for j in range(spec.vocab_per_category - n_shared)]
        borrowed = (
            [shared_pool[int(j)] for j in rng.choice(len(shared_pool), n_shared, replace=False)]
            if n_shared
            else []
        )
        vocab[path] = own + borrowed

    samples: list[CleanSample] = []
    serial = 0
    lo, hi = spec.doc_tokens
    for path, n_docs in zip(paths, counts):
        cat_vocab = vocab[path]
        for _ in range(n_docs):
            serial += 1
            length = int(rng.integers(lo, hi + 1))
            tokens = []
            for _ in range(length):
                if spec.noise_rate > 0.0 and rng.random() < spec.noise_rate:
                    tokens.append(noise_pool[int(rng.integers(len(noise_pool)))])
                else:
                    tokens.append(cat_vocab[int(rng.integers(len(cat_vocab)))])
            title = " ".join(tokens[:3])
            body = " ".join(tokens[3:])
            samples.append(
                CleanSample(id=f"synth-{serial:06d}", text=f"{title}. {body}", path=path)
            )

    tree = TaxonomyTree()
    for s in samples:
        tree.insert(s.path)
    manifest = {
        "spec": spec.to_dict(),
        "n_samples": len(samples),
        "n_categories": len(paths),
        "nodes": [[n.path, n.kind, n.direct_count] for n in tree.nodes()],
        "node_counts": {
            "total": tree.n_nodes,
            "leaves": tree.n_leaves,
            "internal": tree.n_internal,
            "stale": tree.n_stale,
            "predictable": tree.n_predictable,
        },
        "depth_histogram": {str(k): v for k, v in tree.depth_histogram().items()},
        "category_counts": {p: c for p, c in zip(paths, counts)},
    }
    return samples, manifest


def write_synthetic(
    samples: list[CleanSample], manifest: dict, dataset_path: str | Path, manifest_path: str | Path
) -> None:
    from .data import write_dataset

    write_dataset(samples, dataset_path)
    Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
