"""Dataset ingestion, cleaning, category-aware preprocessing, and splitting.

Input datasets are UTF-8 delimited files (comma or tab auto-detected,
RFC 4180 quoting) with header columns id, title, description, category, or
JSON records one per line with the same fields. Malformed rows are collected
into a rejects list with a reason, never silently dropped.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError, ValidationError
from .taxonomy import parse_path, render_path
from .text import collapse_whitespace, strip_html

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("id", "title", "description", "category")


@dataclass
class RawTicket:
    id: str
    title: str
    description: str
    category: str


@dataclass
class CleanSample:
    id: str
    text: str
    path: str


@dataclass
class RejectedRow:
    row: int
    reason: str
    raw: dict


@dataclass
class SplitSpec:
    train: float = 0.8
    validation: float = 0.1
    test: float = 0.1
    seed: int = 0
    stratify: bool = True

    def validate(self) -> "SplitSpec":
        fracs = (self.train, self.validation, self.test)
        if any(f <= 0 for f in fracs):
            raise ValidationError(f"split fractions must be positive, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValidationError(f"split fractions must sum to 1, got {sum(fracs)}")
        return self


# -- ingestion ----------------------------------------------------------------


def _detect_format(first_line: str) -> str:
    stripped = first_line.lstrip()
    if stripped.startswith("{"):
        return "jsonl"
    if "\t" in first_line:
        return "tsv"
    return "csv"


def ingest(source: str | Path) -> tuple[list[RawTicket], list[RejectedRow]]:
    """Parse a dataset file into tickets plus a rejects list."""
    path = Path(source)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not valid UTF-8: {exc}") from exc
    if not raw.strip():
        raise DataError(f"{path} is empty")

    first_line = raw.splitlines()[0]
    fmt = _detect_format(first_line)
    if fmt == "jsonl":
        return _ingest_jsonl(raw, path)
    return _ingest_delimited(raw, path, delimiter="\t" if fmt == "tsv" else ",")


def _row_to_ticket(record: dict, row: int, rejects: list[RejectedRow]) -> RawTicket | None:
    for field in REQUIRED_FIELDS:
        if field not in record or record[field] is None:
            rejects.append(RejectedRow(row=row, reason=f"missing field: {field}", raw=record))
            return None
    return RawTicket(
        id=str(record["id"]),
        title=str(record["title"]),
        description=str(record["description"]),
        category=str(record["category"]),
    )


def _ingest_jsonl(raw: str, path: Path) -> tuple[list[RawTicket], list[RejectedRow]]:
    tickets: list[RawTicket] = []
    rejects: list[RejectedRow] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            rejects.append(RejectedRow(row=lineno, reason=f"bad json: {exc.msg}", raw={"line": line}))
            continue
        if not isinstance(record, dict):
            rejects.append(RejectedRow(row=lineno, reason="record is not an object", raw={"line": line}))
            continue
        ticket = _row_to_ticket(record, lineno, rejects)
        if ticket is not None:
            tickets.append(ticket)
    if not tickets and not rejects:
        raise DataError(f"{path}: no records found")
    return tickets, rejects


def _ingest_delimited(
    raw: str, path: Path, delimiter: str
) -> tuple[list[RawTicket], list[RejectedRow]]:
    reader = csv.reader(io.StringIO(raw), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: no header row") from None
    header = [h.strip().lower() for h in header]
    missing = [f for f in REQUIRED_FIELDS if f not in header]
    if missing:
        raise DataError(
            f"{path}: header {header} is missing required columns {missing} "
            f"(expected {list(REQUIRED_FIELDS)})"
        )
    col = {f: header.index(f) for f in REQUIRED_FIELDS}

    tickets: list[RawTicket] = []
    rejects: list[RejectedRow] = []
    for lineno, cells in enumerate(reader, start=2):
        if not cells or all(c == "" for c in cells):
            continue
        if len(cells) < len(header):
            rejects.append(
                RejectedRow(
                    row=lineno,
                    reason=f"expected {len(header)} columns, got {len(cells)}",
                    raw={"cells": cells},
                )
            )
            continue
        record = {f: cells[col[f]] for f in REQUIRED_FIELDS}
        ticket = _row_to_ticket(record, lineno, rejects)
        if ticket is not None:
            tickets.append(ticket)
    return tickets, rejects


# -- cleaning -------------------------------------------------------------------


def clean(tickets: list[RawTicket]) -> tuple[list[CleanSample], dict[str, int]]:
    """Normalize tickets into training samples.

    Rules, applied in order: drop exact duplicate rows (first kept), drop
    duplicate ids (first kept), drop rows missing id, description, or
    category, strip HTML and collapse whitespace, join "title. description"
    (title is optional so that cleaned files re-clean to themselves), drop
    rows whose text ends up empty, drop rows with a malformed category,
    drop root-level (depth-1) categories. Returns the survivors plus
    per-rule drop counts.
    """
    drops: Counter = Counter()
    seen_rows: set[tuple] = set()
    seen_ids: set[str] = set()
    out: list[CleanSample] = []
    for t in tickets:
        row_key = (t.id, t.title, t.description, t.category)
        if row_key in seen_rows:
            drops["duplicate_row"] += 1
            continue
        seen_rows.add(row_key)
        if t.id in seen_ids:
            drops["duplicate_id"] += 1
            continue
        seen_ids.add(t.id)
        if any(not v.strip() for v in (t.id, t.description, t.category)):
            drops["missing_value"] += 1
            continue
        title = strip_html(t.title)
        description = strip_html(t.description)
        text = collapse_whitespace(f"{title}. {description}") if title else description
        if not text.strip(". "):
            drops["empty_text"] += 1
            continue
        try:
            segments = parse_path(t.category)
        except ValidationError:
            drops["invalid_category"] += 1
            continue
        if len(segments) < 2:
            drops["root_level_category"] += 1
            continue
        out.append(CleanSample(id=t.id, text=text, path=render_path(segments)))
    if drops:
        logger.info("clean: dropped %s", dict(drops))
    return out, dict(drops)


# -- category-aware preprocessing ------------------------------------------------


def merge_small_categories(samples: list[CleanSample], min_samples: int) -> list[CleanSample]:
    """Iteratively relabel samples of under-populated categories to their
    immediate parent until every remaining category has >= min_samples.

    Merging proceeds deepest-first with counts recomputed between passes, so
    a parent that absorbs its children is re-judged with the merged mass. A
    small category at depth 2 has nowhere left to go (root-level categories
    are excluded from the label space) and is removed entirely.
    """
    if min_samples < 1:
        raise ValidationError(f"min_samples must be >= 1, got {min_samples}")
    current = [(s.id, s.text, parse_path(s.path)) for s in samples]
    while True:
        counts = Counter(segs for _, _, segs in current)
        small = {segs for segs, c in counts.items() if c < min_samples}
        if not small:
            break
        deepest = max(len(segs) for segs in small)
        merging = {segs for segs in small if len(segs) == deepest}
        moved: list[tuple[str, str, tuple]] = []
        for sid, text, segs in current:
            if segs in merging:
                if len(segs) <= 2:
                    continue  # would land at root level: remove entirely
                moved.append((sid, text, segs[:-1]))
            else:
                moved.append((sid, text, segs))
        current = moved
    return [CleanSample(id=sid, text=text, path=render_path(segs)) for sid, text, segs in current]


def _stable_key(seed: int, *parts: str) -> int:
    digest = hashlib.blake2b(
        "|".join(parts).encode("utf-8"), digest_size=8, key=str(seed).encode("ascii")
    )
    return int.from_bytes(digest.digest(), "little")


def balance_cap(samples: list[CleanSample], max_per_category: int, seed: int = 0) -> list[CleanSample]:
    """Cap each category at ``max_per_category`` samples via a seeded uniform
    subsample (hash-ranked by id, so the selection is independent of input
    order)."""
    if max_per_category < 1:
        raise ValidationError(f"max_per_category must be >= 1, got {max_per_category}")
    by_cat: dict[str, list[CleanSample]] = {}
    for s in samples:
        by_cat.setdefault(s.path, []).append(s)
    keep: set[tuple[str, str]] = set()
    for path, members in by_cat.items():
        if len(members) <= max_per_category:
            keep.update((path, m.id) for m in members)
        else:
            ranked = sorted(members, key=lambda m: (_stable_key(seed, path, m.id), m.id))
            keep.update((path, m.id) for m in ranked[:max_per_category])
    return [s for s in samples if (s.path, s.id) in keep]


def _largest_remainder(n: int, fractions: list[float]) -> list[int]:
    """Integer allocation of n items over fractions, exact total, first
    fraction (train) guaranteed at least one item when n >= 1."""
    quotas = [n * f for f in fractions]
    floors = [int(q) for q in quotas]
    short = n - sum(floors)
    remainders = sorted(
        range(len(fractions)), key=lambda i: (-(quotas[i] - floors[i]), i)
    )
    for i in remainders[:short]:
        floors[i] += 1
    if n >= 1 and floors[0] == 0:
        donor = max(range(1, len(floors)), key=lambda i: floors[i])
        floors[donor] -= 1
        floors[0] += 1
    return floors


def stratified_split(
    samples: list[CleanSample], spec: SplitSpec
) -> tuple[list[CleanSample], list[CleanSample], list[CleanSample]]:
    """Per-category seeded shuffle followed by largest-remainder allocation.

    The three outputs are an exact partition of the input; each category
    contributes at least one sample to train, and its train share stays
    within one sample of the configured fraction. Categories smaller than
    the number of parts fall back to train-priority allocation (warned).
    """
    spec.validate()
    if not samples:
        raise ValidationError("cannot split an empty sample list")
    if not spec.stratify:
        order = sorted(samples, key=lambda s: (_stable_key(spec.seed, "shuffle", s.id), s.id))
        n_train, n_val, n_test = _largest_remainder(
            len(order), [spec.train, spec.validation, spec.test]
        )
        return order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]

    by_cat: dict[str, list[CleanSample]] = {}
    for s in samples:
        by_cat.setdefault(s.path, []).append(s)

    train: list[CleanSample] = []
    val: list[CleanSample] = []
    test: list[CleanSample] = []
    for path in sorted(by_cat):
        members = sorted(
            by_cat[path], key=lambda m: (_stable_key(spec.seed, "split", path, m.id), m.id)
        )
        if len(members) < 3:
            logger.warning(
                "category %s has %d sample(s), fewer than the 3 split parts; "
                "allocating train-first",
                path,
                len(members),
            )
        n_train, n_val, n_test = _largest_remainder(
            len(members), [spec.train, spec.validation, spec.test]
        )
        train.extend(members[:n_train])
        val.extend(members[n_train : n_train + n_val])
        test.extend(members[n_train + n_val :])
    return train, val, test


# -- file output -------------------------------------------------------------------


def write_dataset(samples: list[CleanSample], path: str | Path) -> None:
    """Write cleaned samples back out in the standard csv schema (the whole
    text lands in the description column)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REQUIRED_FIELDS)
        for s in samples:
            writer.writerow([s.id, "", s.text, s.path])


def write_rejects(rejects: list[RejectedRow], path: str | Path) -> None:
    """Rejects report: the dataset schema plus row/reason columns."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(REQUIRED_FIELDS) + ["row", "reason"])
        for r in rejects:
            cells = [str(r.raw.get(f, "")) for f in REQUIRED_FIELDS]
            writer.writerow(cells + [r.row, r.reason])


def tickets_to_texts(samples: list[CleanSample]) -> tuple[list[str], list[str], list[str]]:
    """(ids, texts, paths) columns from cleaned samples."""
    return [s.id for s in samples], [s.text for s in samples], [s.path for s in samples]
