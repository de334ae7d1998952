"""Corpus tests: ingestion, URL/language filters, fetching, and the IQR
length filter checked against a numpy quantile oracle.
"""

import hashlib
import json
import random

import numpy as np
import pytest

from blogjury.corpus import (
    BlogPost,
    DirectoryFetcher,
    FetchError,
    FilterConfig,
    SearchRecord,
    compute_quartiles,
    detect_language,
    fetch_contents,
    filter_language,
    filter_urls,
    ingest_search_records,
    iqr_filter,
)


def record(rid, url, title="How we ship the models", snippet="Notes from the team on the rollout."):
    return SearchRecord(id=rid, url=url, title=title, snippet=snippet,
                        source_blog="eng", company="acme")


def raw(url=None, title="How we ship the models", snippet="Notes from the team on the rollout."):
    row = {"title": title, "snippet": snippet, "source_blog": "eng", "company": "acme"}
    if url is not None:
        row["url"] = url
    return row


def post(rid, length):
    return BlogPost(record_id=rid, body="x" * length, content_length=length, fetch_status="ok")


class TestIngest:
    def test_sequential_ids(self):
        out = ingest_search_records([raw(f"https://a.com/p{i}") for i in range(3)])
        assert [r.id for r in out.records] == [0, 1, 2]
        assert out.rejects == 0

    def test_dedup_keeps_first_occurrence(self):
        out = ingest_search_records([raw("https://a.com/u1"), raw("https://a.com/u2"),
                                     raw("https://a.com/u1")])
        assert [r.url for r in out.records] == ["https://a.com/u1", "https://a.com/u2"]
        assert [r.id for r in out.records] == [0, 1]

    def test_trailing_slash_is_same_url(self):
        out = ingest_search_records([raw("https://a.com/u1/"), raw("https://a.com/u1")])
        assert len(out.records) == 1

    def test_missing_url_counted_as_reject(self):
        rows = [raw(f"https://a.com/p{i}") for i in range(4)]
        rows.insert(2, raw(url=None))
        out = ingest_search_records(rows)
        assert len(out.records) == 4
        assert out.rejects == 1

    def test_relative_url_rejected(self):
        out = ingest_search_records([raw("/just/a/path"), raw("https://a.com/ok")])
        assert [r.url for r in out.records] == ["https://a.com/ok"]
        assert out.rejects == 1

    def test_empty_stream(self):
        out = ingest_search_records([])
        assert out.records == []
        assert out.rejects == 0

    def test_dedup_idempotence(self):
        rng = random.Random(5)
        urls = [f"https://b.com/post-{rng.randint(0, 30)}" for _ in range(60)]
        first = ingest_search_records([raw(u) for u in urls])
        again = ingest_search_records([raw(r.url) for r in first.records])
        assert [r.url for r in again.records] == [r.url for r in first.records]


class TestUrlFilter:
    def test_examples(self):
        cfg = FilterConfig()
        kept, excluded = filter_urls([record(0, "https://x.com/blog/post-1")], cfg)
        assert len(kept) == 1 and not excluded

        kept, excluded = filter_urls([record(0, "https://x.com/author/jane")], cfg)
        assert not kept and excluded[0].reason == "url_denylist"

    def test_match_is_case_insensitive(self):
        # oracle: substring scan over the lowercased url
        cfg = FilterConfig()
        url = "https://x.com/INDEX/home"
        assert any(s in url.lower() for s in cfg.url_denylist)
        kept, excluded = filter_urls([record(0, url)], cfg)
        assert not kept and len(excluded) == 1

    def test_partition_preserves_order(self):
        rng = random.Random(9)
        records = []
        for i in range(50):
            stem = rng.choice(["/blog/x", "/author/x", "/index/x", "/posts/y"])
            records.append(record(i, f"https://x.com{stem}{i}"))
        kept, excluded = filter_urls(records, FilterConfig())
        assert len(kept) + len(excluded) == len(records)
        assert [r.id for r in kept] == sorted(r.id for r in kept)
        merged = sorted(kept + [e.item for e in excluded], key=lambda r: r.id)
        assert merged == records


def stub_detector(table):
    def detect(text):
        return table.get(text, ("en", 0.9))
    return detect


class TestLanguageFilter:
    def test_both_english_kept(self):
        kept, excluded = filter_language([record(0, "https://a.com/p")],
                                         stub_detector({}), FilterConfig())
        assert len(kept) == 1 and not excluded

    def test_non_english_snippet_excluded(self):
        rec = record(0, "https://a.com/p", snippet="los modelos en produccion")
        detector = stub_detector({rec.snippet: ("es", 0.9)})
        kept, excluded = filter_language([rec], detector, FilterConfig())
        assert not kept
        assert excluded[0].reason == "language"

    def test_empty_snippet_is_undetermined(self):
        rec = record(0, "https://a.com/p", snippet="")
        kept, excluded = filter_language([rec], detect_language, FilterConfig())
        assert not kept
        assert "undetermined" in excluded[0].detail

    def test_detector_failure_excludes_and_continues(self):
        bad = record(0, "https://a.com/bad", title="boom")

        def detector(text):
            if text == "boom":
                raise RuntimeError("detector crashed")
            return ("en", 0.9)

        kept, excluded = filter_language([bad, record(1, "https://a.com/ok")],
                                         detector, FilterConfig())
        assert [r.id for r in kept] == [1]
        assert excluded[0].reason == "language"
        assert "detector" in excluded[0].detail

    def test_partition_totality(self):
        records = [record(i, f"https://a.com/p{i}",
                          snippet=("" if i % 3 == 0 else "plain notes on the rollout"))
                   for i in range(12)]
        kept, excluded = filter_language(records, detect_language, FilterConfig())
        assert len(kept) + len(excluded) == 12


class TestHeuristicDetector:
    def test_plain_english(self):
        code, conf = detect_language("Deploying models at scale with the platform team")
        assert code == "en"
        assert 0.0 <= conf <= 1.0

    def test_cjk_text(self):
        code, _ = detect_language("大規模モデルの運用について")
        assert code != "en"

    def test_empty_text_undetermined(self):
        assert detect_language("   ")[0] == "und"


class TestFetch:
    def test_directory_fetcher(self, tmp_path):
        url = "https://a.com/post"
        name = hashlib.sha256(url.encode("utf-8")).hexdigest() + ".txt"
        (tmp_path / name).write_text("a" * 1200, encoding="utf-8")
        posts = fetch_contents([record(0, url)], DirectoryFetcher(tmp_path))
        assert posts[0].fetch_status == "ok"
        assert posts[0].content_length == 1200

    def test_missing_fixture_marks_failed(self, tmp_path):
        posts = fetch_contents([record(0, "https://a.com/missing")],
                               DirectoryFetcher(tmp_path))
        assert posts[0].fetch_status == "failed"
        assert posts[0].content_length == 0

    def test_partial_failures_do_not_abort(self, tmp_path):
        records = [record(i, f"https://a.com/p{i}") for i in range(10)]
        for rec in records:
            if rec.id in (3, 7):
                continue
            name = hashlib.sha256(rec.url.encode("utf-8")).hexdigest() + ".txt"
            (tmp_path / name).write_text(f"body {rec.id}", encoding="utf-8")
        posts = fetch_contents(records, DirectoryFetcher(tmp_path), max_in_flight=4)
        assert [p.record_id for p in posts] == list(range(10))
        assert sum(1 for p in posts if p.fetch_status == "ok") == 8
        assert {p.record_id for p in posts if p.fetch_status == "failed"} == {3, 7}

    def test_results_ordered_under_concurrency(self, tmp_path):
        records = [record(i, f"https://a.com/p{i}") for i in range(30)]
        for rec in records:
            name = hashlib.sha256(rec.url.encode("utf-8")).hexdigest() + ".txt"
            (tmp_path / name).write_text("y" * (100 + rec.id), encoding="utf-8")
        posts = fetch_contents(records, DirectoryFetcher(tmp_path), max_in_flight=8)
        assert [p.record_id for p in posts] == list(range(30))
        assert all(p.content_length == 100 + p.record_id for p in posts)

    def test_fetch_error_is_raisable_contract(self, tmp_path):
        with pytest.raises(FetchError):
            DirectoryFetcher(tmp_path)("https://a.com/nope")


class TestQuartiles:
    def test_fixture_example(self):
        # frozen by hand: sorted positions 1.75 and 5.25 interpolate to
        # 10 + 0.75*1 = 10.75 and 14 + 0.25*1 = 14.25
        stats = compute_quartiles([2, 10, 11, 12, 13, 14, 15, 400], multiplier=1.5)
        assert abs(stats.q1 - 10.75) <= 1e-9
        assert abs(stats.q3 - 14.25) <= 1e-9
        assert abs(stats.iqr - 3.5) <= 1e-9
        assert abs(stats.lower_bound - 5.5) <= 1e-9
        assert abs(stats.upper_bound - 19.5) <= 1e-9

    def test_small_example(self):
        stats = compute_quartiles([0, 1, 2, 3])
        assert abs(stats.q1 - 0.75) <= 1e-9
        assert abs(stats.q3 - 2.25) <= 1e-9

    def test_all_equal(self):
        stats = compute_quartiles([7, 7, 7, 7])
        assert stats.iqr == 0
        assert stats.lower_bound == 7 and stats.upper_bound == 7

    def test_insufficient_sample(self):
        with pytest.raises(ValueError) as err:
            compute_quartiles([1, 2, 3])
        assert "insufficient sample" in str(err.value)

    def test_matches_numpy_oracle(self):
        rng = random.Random(20260815)
        for _ in range(100):
            n = rng.randint(4, 200)
            lengths = [rng.randint(0, 5000) for _ in range(n)]
            stats = compute_quartiles(lengths)
            assert abs(stats.q1 - float(np.quantile(lengths, 0.25))) <= 1e-9
            assert abs(stats.q3 - float(np.quantile(lengths, 0.75))) <= 1e-9
            assert stats.iqr >= 0
            assert abs(stats.lower_bound - (stats.q1 - 1.5 * stats.iqr)) <= 1e-9
            assert abs(stats.upper_bound - (stats.q3 + 1.5 * stats.iqr)) <= 1e-9


class TestIqrFilter:
    def test_fixture_example(self):
        lengths = [2, 10, 11, 12, 13, 14, 15, 400]
        posts = [post(i, n) for i, n in enumerate(lengths)]
        stats = compute_quartiles(lengths, multiplier=1.5)
        kept, excluded = iqr_filter(posts, stats)
        assert {e.item.content_length for e in excluded} == {2, 400}
        assert len(kept) == 6
        assert all(e.reason == "length_outlier" for e in excluded)

    def test_bounds_are_inclusive(self):
        lengths = [10, 10, 20, 20]
        stats = compute_quartiles(lengths)  # q1=10, q3=20, bounds [-5, 35]
        boundary = [post(0, 35), post(1, 36)]
        kept, excluded = iqr_filter(boundary, stats)
        assert [p.record_id for p in kept] == [0]
        assert [e.item.record_id for e in excluded] == [1]

    def test_degenerate_iqr_keeps_equal_lengths(self):
        posts = [post(i, 7) for i in range(5)]
        stats = compute_quartiles([7, 7, 7, 7, 7])
        kept, excluded = iqr_filter(posts, stats)
        assert len(kept) == 5 and not excluded

    def test_matches_brute_force_oracle(self):
        rng = random.Random(99)
        for _ in range(100):
            n = rng.randint(4, 120)
            lengths = [rng.randint(0, 8000) for _ in range(n)]
            posts = [post(i, L) for i, L in enumerate(lengths)]
            stats = compute_quartiles(lengths)
            lo = float(np.quantile(lengths, 0.25)) - 1.5 * (
                float(np.quantile(lengths, 0.75)) - float(np.quantile(lengths, 0.25)))
            hi = float(np.quantile(lengths, 0.75)) + 1.5 * (
                float(np.quantile(lengths, 0.75)) - float(np.quantile(lengths, 0.25)))
            expect_kept = [i for i, L in enumerate(lengths) if lo - 1e-9 <= L <= hi + 1e-9]
            kept, excluded = iqr_filter(posts, stats)
            assert [p.record_id for p in kept] == expect_kept
            assert len(kept) + len(excluded) == n

    def test_raising_multiplier_never_shrinks_kept_set(self):
        rng = random.Random(4)
        for _ in range(50):
            lengths = [rng.randint(0, 3000) for _ in range(rng.randint(4, 60))]
            posts = [post(i, L) for i, L in enumerate(lengths)]
            kept_small, _ = iqr_filter(posts, compute_quartiles(lengths, multiplier=1.0))
            kept_big, _ = iqr_filter(posts, compute_quartiles(lengths, multiplier=2.5))
            assert {p.record_id for p in kept_small} <= {p.record_id for p in kept_big}


class TestDeterminism:
    def test_identical_inputs_identical_partitions(self):
        records = [record(i, f"https://a.com/{w}{i}", snippet="notes on the rollout")
                   for i, w in enumerate(["blog/", "author/", "index/", "blog/"] * 5)]

        def run():
            kept, excluded = filter_urls(records, FilterConfig())
            return json.dumps([[r.id for r in kept],
                               [e.item.id for e in excluded]])

        assert run() == run()
