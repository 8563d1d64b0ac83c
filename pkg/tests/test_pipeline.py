"""Ingestion, cleaning, category merging, capping, and stratified splits."""

import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from dualcentroid.data import (
    CleanSample,
    RawTicket,
    SplitSpec,
    balance_cap,
    clean,
    ingest,
    merge_small_categories,
    stratified_split,
    write_dataset,
)
from dualcentroid.errors import DataError, ValidationError


def ticket(i, title="Title", desc="Description text", cat="A/B"):
    return RawTicket(id=f"t{i}", title=title, description=desc, category=cat)


class TestIngest:
    def test_csv_happy_path(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text(
            "id,title,description,category\n"
            "1,VPN down,cannot connect,Net/VPN\n"
            '2,"Email, broken","quoted, field",Apps/Email\n'
            "3,Printer,paper jam,HW/Printer\n",
            encoding="utf-8",
        )
        tickets, rejects = ingest(f)
        assert len(tickets) == 3 and not rejects
        assert tickets[1].title == "Email, broken"

    def test_tsv_auto_detected(self, tmp_path):
        f = tmp_path / "d.tsv"
        f.write_text(
            "id\ttitle\tdescription\tcategory\n1\tA\tB\tX/Y\n", encoding="utf-8"
        )
        tickets, _ = ingest(f)
        assert tickets[0].category == "X/Y"

    def test_jsonl_auto_detected(self, tmp_path):
        f = tmp_path / "d.jsonl"
        f.write_text(
            '{"id": "1", "title": "t", "description": "d", "category": "A/B"}\n'
            '{"id": "2", "title": "t2", "description": "d2", "category": "A/C"}\n',
            encoding="utf-8",
        )
        tickets, rejects = ingest(f)
        assert [t.id for t in tickets] == ["1", "2"] and not rejects

    def test_missing_category_lands_in_rejects(self, tmp_path):
        f = tmp_path / "d.jsonl"
        f.write_text(
            '{"id": "1", "title": "t", "description": "d"}\n'
            '{"id": "2", "title": "t", "description": "d", "category": "A/B"}\n',
            encoding="utf-8",
        )
        tickets, rejects = ingest(f)
        assert len(tickets) == 1
        assert rejects[0].reason == "missing field: category"
        assert rejects[0].row == 1

    def test_short_row_rejected_with_counts(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("id,title,description,category\n1,only-two\n", encoding="utf-8")
        tickets, rejects = ingest(f)
        assert not tickets
        assert "expected 4 columns" in rejects[0].reason

    def test_duplicate_ids_both_ingested(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text(
            "id,title,description,category\n1,a,b,X/Y\n1,a,b,X/Y\n", encoding="utf-8"
        )
        tickets, _ = ingest(f)
        assert len(tickets) == 2  # dedup happens in clean, not ingest

    def test_unknown_header_fatal(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("foo,bar\n1,2\n", encoding="utf-8")
        with pytest.raises(DataError, match="missing required columns"):
            ingest(f)

    def test_unreadable_file_fatal(self, tmp_path):
        with pytest.raises(DataError):
            ingest(tmp_path / "missing.csv")


class TestClean:
    def test_exact_duplicates_first_kept(self):
        tickets = [ticket(1), ticket(1), ticket(2)]
        samples, drops = clean(tickets)
        assert len(samples) == 2
        assert drops["duplicate_row"] == 1

    def test_duplicate_ids_first_kept(self):
        tickets = [ticket(1, title="First"), ticket(1, title="Second")]
        samples, drops = clean(tickets)
        assert len(samples) == 1
        assert samples[0].text.startswith("First")
        assert drops["duplicate_id"] == 1

    def test_missing_description_dropped(self):
        samples, drops = clean([ticket(1, desc="   ")])
        assert not samples and drops["missing_value"] == 1

    def test_html_stripped(self):
        samples, _ = clean([ticket(1, desc="<b>VPN</b> down <img src=x>")])
        assert samples[0].text == "Title. VPN down"

    def test_root_level_category_dropped(self):
        samples, drops = clean([ticket(1, cat="Hardware")])
        assert not samples and drops["root_level_category"] == 1

    def test_invalid_category_dropped(self):
        samples, drops = clean([ticket(1, cat="A//B")])
        assert not samples and drops["invalid_category"] == 1

    def test_title_and_description_joined(self):
        samples, _ = clean([ticket(1, title="VPN down", desc="since 9am")])
        assert samples[0].text == "VPN down. since 9am"

    def test_idempotent(self):
        tickets = [
            ticket(1, title="<i>Net</i>", desc="flap <script>x</script> storm", cat="N/V"),
            ticket(2, title="Mail", desc="stuck &amp; slow", cat="A/E/S"),
        ]
        once, _ = clean(tickets)
        again, drops = clean(
            [RawTicket(id=s.id, title="", description=s.text, category=s.path) for s in once]
        )
        assert [(s.id, s.text, s.path) for s in again] == [
            (s.id, s.text, s.path) for s in once
        ]
        assert not drops


class TestMergeSmallCategories:
    def make(self, spec: dict) -> list:
        out = []
        i = 0
        for path, count in spec.items():
            for _ in range(count):
                out.append(CleanSample(id=f"s{i}", text="text", path=path))
                i += 1
        return out

    def test_small_leaf_merges_into_parent(self):
        samples = self.make({"A/B/C": 2, "A/B": 10})
        merged = merge_small_categories(samples, min_samples=5)
        counts = Counter(s.path for s in merged)
        assert counts == {"A/B": 12}

    def test_depth_two_below_threshold_removed(self):
        samples = self.make({"A/B": 2})
        assert merge_small_categories(samples, min_samples=5) == []

    def test_iterative_cascade_deepest_first(self):
        # A/B/C/D (2) merges into A/B/C (now 4, still small) which merges
        # into A/B (now 7, kept): counts are recomputed between passes
        samples = self.make({"A/B/C/D": 2, "A/B/C": 2, "A/B": 3})
        merged = merge_small_categories(samples, min_samples=5)
        counts = Counter(s.path for s in merged)
        assert counts == {"A/B": 7}

    def test_fixpoint_no_category_below_threshold(self):
        # brute-force post-condition scan over random inputs
        rnd = random.Random(13)
        for _ in range(60):
            spec = {}
            for _ in range(rnd.randint(1, 12)):
                depth = rnd.randint(2, 4)
                path = "/".join(f"g{rnd.randint(0, 2)}" for _ in range(depth))
                spec[path] = rnd.randint(1, 8)
            samples = self.make(spec)
            min_samples = rnd.randint(1, 6)
            merged = merge_small_categories(samples, min_samples)
            counts = Counter(s.path for s in merged)
            assert all(c >= min_samples for c in counts.values()), (spec, min_samples, counts)

    def test_never_deepens_or_invents_labels(self):
        samples = self.make({"A/B/C": 2, "A/B": 1, "X/Y": 9})
        merged = merge_small_categories(samples, min_samples=3)
        original_prefixes = {"A/B/C", "A/B", "A", "X/Y", "X"}
        for s in merged:
            assert s.path in original_prefixes


class TestBalanceCap:
    def make(self, per_cat: dict) -> list:
        out = []
        i = 0
        for path, count in per_cat.items():
            for _ in range(count):
                out.append(CleanSample(id=f"s{i}", text="t", path=path))
                i += 1
        return out

    def test_at_cap_untouched(self):
        samples = self.make({"A/B": 5})
        assert balance_cap(samples, 5) == samples

    def test_over_cap_trimmed_exactly(self):
        samples = self.make({"A/B": 10, "A/C": 3})
        capped = balance_cap(samples, 5, seed=1)
        counts = Counter(s.path for s in capped)
        assert counts == {"A/B": 5, "A/C": 3}

    def test_seeded_and_order_independent(self):
        samples = self.make({"A/B": 12})
        a = {s.id for s in balance_cap(samples, 4, seed=9)}
        b = {s.id for s in balance_cap(samples[::-1], 4, seed=9)}
        assert a == b
        c = {s.id for s in balance_cap(samples, 4, seed=10)}
        assert a != c  # different seed picks a different subset


class TestStratifiedSplit:
    def make(self, per_cat: dict) -> list:
        out = []
        i = 0
        for path, count in per_cat.items():
            for _ in range(count):
                out.append(CleanSample(id=f"s{i}", text="t", path=path))
                i += 1
        return out

    def test_ten_samples_split_8_1_1(self):
        samples = self.make({"A/B": 10})
        train, val, test = stratified_split(samples, SplitSpec(seed=0))
        assert (len(train), len(val), len(test)) == (8, 1, 1)

    def test_exact_partition_random_datasets(self):
        rnd = random.Random(31)
        for trial in range(40):
            per_cat = {f"C/K{j}": rnd.randint(1, 40) for j in range(rnd.randint(1, 10))}
            samples = self.make(per_cat)
            train, val, test = stratified_split(samples, SplitSpec(seed=trial))
            ids = [s.id for s in train + val + test]
            assert sorted(ids) == sorted(s.id for s in samples)  # no loss, no dup
            assert len(set(ids)) == len(ids)

    def test_train_share_within_one_sample_per_category(self):
        rnd = random.Random(5)
        per_cat = {f"T/C{j}": rnd.randint(3, 50) for j in range(12)}
        samples = self.make(per_cat)
        train, _, _ = stratified_split(samples, SplitSpec(seed=2))
        train_counts = Counter(s.path for s in train)
        for path, n in per_cat.items():
            assert abs(train_counts[path] - 0.8 * n) <= 1.0

    def test_every_category_reaches_train(self):
        samples = self.make({"A/B": 1, "A/C": 2, "A/D": 30})
        train, _, _ = stratified_split(samples, SplitSpec(seed=0))
        assert {s.path for s in train} == {"A/B", "A/C", "A/D"}

    def test_seed_changes_assignment(self):
        samples = self.make({"A/B": 30})
        t0 = {s.id for s in stratified_split(samples, SplitSpec(seed=0))[0]}
        t1 = {s.id for s in stratified_split(samples, SplitSpec(seed=1))[0]}
        assert t0 != t1

    def test_bad_fractions_rejected(self):
        with pytest.raises(ValidationError):
            SplitSpec(train=0.5, validation=0.2, test=0.2).validate()
        with pytest.raises(ValidationError):
            SplitSpec(train=0.0, validation=0.5, test=0.5).validate()

    @given(st.integers(min_value=1, max_value=200), st.integers(min_value=0, max_value=999))
    @settings(max_examples=80)
    def test_partition_property(self, n, seed):
        samples = self.make({"H/C": n})
        train, val, test = stratified_split(samples, SplitSpec(seed=seed))
        assert len(train) + len(val) + len(test) == n
        assert len(train) >= 1
        assert abs(len(train) - 0.8 * n) <= 1.0

    def test_unstratified_split_partitions_exactly(self):
        samples = self.make({"A/B": 17, "A/C": 23})
        spec = SplitSpec(seed=4, stratify=False)
        train, val, test = stratified_split(samples, spec)
        ids = sorted(s.id for s in train + val + test)
        assert ids == sorted(s.id for s in samples)
        assert (len(train), len(val), len(test)) == (32, 4, 4)

    def test_global_train_fraction_within_category_count(self):
        # |train|/N stays within 0.8 +/- C/N (per-category error is at most 1)
        rnd = random.Random(91)
        for _ in range(20):
            per_cat = {f"G/C{j}": rnd.randint(1, 60) for j in range(rnd.randint(1, 15))}
            samples = self.make(per_cat)
            train, _, _ = stratified_split(samples, SplitSpec(seed=7))
            n, c = len(samples), len(per_cat)
            assert abs(len(train) - 0.8 * n) <= c


class TestWriteReadRoundTrip:
    def test_dataset_survives_write_ingest_clean(self, tmp_path):
        samples = [
            CleanSample(id="a1", text="vpn tunnel down. since morning", path="Net/VPN"),
            CleanSample(id="a2", text="printer jam, floor 2", path="HW/Print"),
        ]
        f = tmp_path / "out.csv"
        write_dataset(samples, f)
        tickets, rejects = ingest(f)
        assert not rejects
        again, drops = clean(tickets)
        assert not drops
        assert [(s.id, s.text, s.path) for s in again] == [
            (s.id, s.text, s.path) for s in samples
        ]
