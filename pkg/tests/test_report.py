"""Report tests: per-activity/per-task counting with distinct-company
deduplication, deterministic exports, and the run manifest.
"""

import json
import random

import pytest

from blogjury.report import (
    CountRow,
    LabelledPost,
    count_by_activity,
    count_by_task,
    export_table,
    parse_table,
    render_table,
    run_manifest,
    write_manifest,
)


def lp(post_id, company, area="fm4se", activities=(), tasks=()):
    return LabelledPost(post_id=post_id, company=company, area=area,
                        activities=tuple(activities), tasks=tuple(tasks))


class TestCounting:
    def test_post_and_company_counts(self):
        posts = [lp(1, "x", activities=["dev"]), lp(2, "x", activities=["dev"]),
                 lp(3, "y", activities=["dev"])]
        table = count_by_activity(posts, "fm4se")
        assert table.rows == [CountRow("dev", 3, 2)]

    def test_empty_input(self):
        assert count_by_activity([], "fm4se").rows == []

    def test_post_with_two_activities_counts_in_both(self):
        posts = [lp(1, "x", activities=["dev", "testing"])]
        table = count_by_activity(posts, "fm4se")
        assert {r.name: r.post_count for r in table.rows} == {"dev": 1, "testing": 1}

    def test_scope_filters_area(self):
        posts = [lp(1, "x", area="fm4se", tasks=["t"]),
                 lp(2, "y", area="se4fm", tasks=["t"])]
        fm = count_by_task(posts, "fm4se")
        se = count_by_task(posts, "SE4FM")
        assert fm.rows == [CountRow("t", 1, 1)]
        assert se.rows == [CountRow("t", 1, 1)]

    def test_one_company_many_posts(self):
        posts = [lp(i, "acme", tasks=["code generation"]) for i in range(100)]
        table = count_by_task(posts, "fm4se")
        assert table.rows == [CountRow("code generation", 100, 1)]

    def test_two_companies_one_post_each(self):
        posts = [lp(1, "a", tasks=["t"]), lp(2, "b", tasks=["t"])]
        assert count_by_task(posts, "fm4se").rows == [CountRow("t", 2, 2)]

    def test_sorted_by_count_desc_then_name(self):
        posts = [lp(1, "a", activities=["zeta", "alpha"]),
                 lp(2, "b", activities=["zeta", "beta"]),
                 lp(3, "c", activities=["mid"])]
        names = [r.name for r in count_by_activity(posts, "fm4se").rows]
        assert names == ["zeta", "alpha", "beta", "mid"]

    def test_other_rows_are_excluded(self):
        posts = [lp(1, "a", tasks=["other"]), lp(2, "b", tasks=["t", "other"])]
        table = count_by_task(posts, "fm4se")
        assert [r.name for r in table.rows] == ["t"]

    def test_company_count_matches_brute_force(self):
        rng = random.Random(20260815)
        companies = [f"co{i}" for i in range(6)]
        labels = ["a", "b", "c", "d"]
        posts = [
            lp(i, rng.choice(companies),
               activities=rng.sample(labels, rng.randint(0, 3)))
            for i in range(200)
        ]
        table = count_by_activity(posts, "fm4se")
        for row in table.rows:
            brute = {p.company for p in posts if row.name in p.activities}
            count = sum(1 for p in posts if row.name in p.activities)
            assert row.company_count == len(brute)
            assert row.post_count == count
            assert row.company_count <= row.post_count

    def test_conservation_against_decisions(self):
        # every non-escalated, non-`other` post appears in exactly one scope
        posts = [lp(i, "co", area="fm4se" if i % 2 else "se4fm", tasks=["t"])
                 for i in range(10)]
        total = sum(
            1 for scope in ("fm4se", "se4fm") for p in posts if p.area == scope
        )
        assert total == len(posts)

    def test_bad_area_rejected(self):
        with pytest.raises(ValueError):
            lp(1, "x", area="unrelated")

    def test_bad_scope_rejected(self):
        with pytest.raises(ValueError):
            count_by_activity([], "everything")


class TestExport:
    def table(self):
        posts = [lp(1, "x", activities=["dev"]), lp(2, "y", activities=["dev", "ops"])]
        return count_by_activity(posts, "fm4se")

    def test_csv_shape(self, tmp_path):
        dest = export_table(self.table(), "csv", tmp_path / "t.csv")
        lines = dest.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "name,posts,companies"
        assert lines[1] == "dev,2,2"
        assert lines[2] == "ops,1,1"

    def test_byte_identical_across_runs(self, tmp_path):
        a = export_table(self.table(), "csv", tmp_path / "a.csv")
        b = export_table(self.table(), "csv", tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()
        aj = export_table(self.table(), "json", tmp_path / "a.json")
        bj = export_table(self.table(), "json", tmp_path / "b.json")
        assert aj.read_bytes() == bj.read_bytes()

    def test_trailing_newline(self, tmp_path):
        for fmt in ("csv", "json"):
            dest = export_table(self.table(), fmt, tmp_path / f"t.{fmt}")
            assert dest.read_text(encoding="utf-8").endswith("\n")

    def test_json_round_trip(self, tmp_path):
        table = self.table()
        dest = export_table(table, "json", tmp_path / "t.json")
        loaded = parse_table(dest)
        assert loaded.scope == table.scope
        assert loaded.rows == table.rows

    def test_csv_and_json_agree(self, tmp_path):
        table = self.table()
        csv_lines = render_table(table, "csv").splitlines()[1:]
        json_rows = json.loads(render_table(table, "json"))["rows"]
        assert len(csv_lines) == len(json_rows)
        for line, row in zip(csv_lines, json_rows):
            assert line == f"{row['name']},{row['posts']},{row['companies']}"

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            render_table(self.table(), "xml")

    def test_unwritable_destination(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        with pytest.raises(OSError) as err:
            export_table(self.table(), "csv", blocker / "t.csv")
        assert "t.csv" in str(err.value)


class TestManifest:
    def manifest(self, wall_clock=None):
        return run_manifest(
            corpus_sha256="ab" * 32,
            prompt_versions={"area": "v1", "task": "v3", "activity": "v2"},
            roster=["qwen", "gemini", "gpt"],
            config={"max_in_flight": 4},
            counts={"kept": 20, "escalated_open": 0},
            wall_clock=wall_clock,
        )

    def test_identical_runs_differ_only_in_wall_clock(self):
        a, b = self.manifest(), self.manifest()
        a.pop("wall_clock"), b.pop("wall_clock")
        assert a == b

    def test_fields_present(self):
        m = self.manifest(wall_clock="2026-08-15T00:00:00Z")
        assert m["tool_version"]
        assert m["corpus_sha256"] == "ab" * 32
        assert m["juror_roster"] == ["gemini", "gpt", "qwen"]
        assert list(m["prompt_versions"]) == ["activity", "area", "task"]
        assert m["counts"]["kept"] == 20

    def test_write_is_deterministic(self, tmp_path):
        m = self.manifest(wall_clock="2026-08-15T00:00:00Z")
        a = write_manifest(m, tmp_path / "a.json")
        b = write_manifest(m, tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()
        assert json.loads(a.read_text(encoding="utf-8")) == m
