"""Aggregation into the survey table shapes: posts per activity/task with
distinct-company counts, deterministic exports, and the run manifest.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import __version__
from .taxonomy import OTHER, canonicalize

SCOPES = ("fm4se", "se4fm")


@dataclass(frozen=True)
class LabelledPost:
    """Final per-post assignment after all three stages."""

    post_id: int
    company: str
    area: str
    activities: tuple[str, ...] = ()
    tasks: tuple[str, ...] = ()

    def __post_init__(self):
        if self.area not in SCOPES:
            raise ValueError(f"labelled post area must be one of {SCOPES}, got {self.area!r}")


@dataclass(frozen=True)
class CountRow:
    name: str
    post_count: int
    company_count: int


@dataclass
class CountTable:
    scope: str
    rows: list[CountRow] = field(default_factory=list)


def _count(posts: Iterable[LabelledPost], scope: str, labels_of) -> CountTable:
    scope = canonicalize(scope)
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}, got {scope!r}")
    per_label_posts: dict[str, int] = {}
    per_label_companies: dict[str, set[str]] = {}
    for post in posts:
        if post.area != scope:
            continue
        for label in set(labels_of(post)):
            if label == OTHER:
                continue
            per_label_posts[label] = per_label_posts.get(label, 0) + 1
            per_label_companies.setdefault(label, set()).add(post.company)
    rows = [
        CountRow(name, per_label_posts[name], len(per_label_companies[name]))
        for name in per_label_posts
    ]
    rows.sort(key=lambda r: (-r.post_count, r.name))
    return CountTable(scope=scope, rows=rows)


def count_by_activity(posts: Iterable[LabelledPost], scope: str) -> CountTable:
    """Posts and distinct companies per activity, within one area scope."""
    return _count(posts, scope, lambda p: p.activities)


def count_by_task(posts: Iterable[LabelledPost], scope: str) -> CountTable:
    """Posts and distinct companies per task, within one area scope."""
    return _count(posts, scope, lambda p: p.tasks)


def render_table(table: CountTable, fmt: str) -> str:
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["name", "posts", "companies"])
        for row in table.rows:
            writer.writerow([row.name, row.post_count, row.company_count])
        return buffer.getvalue()
    if fmt == "json":
        payload = {
            "scope": table.scope,
            "rows": [
                {"name": r.name, "posts": r.post_count, "companies": r.company_count}
                for r in table.rows
            ],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown export format {fmt!r}")


def export_table(table: CountTable, fmt: str, dest: str | Path) -> Path:
    """Write the table; byte-identical output for identical inputs."""
    dest = Path(dest)
    text = render_table(table, fmt)
    try:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text, encoding="utf-8")
    except OSError as err:
        raise OSError(f"cannot write table to {dest}: {err}") from err
    return dest


def parse_table(path: str | Path) -> CountTable:
    """Read back a JSON table export (round-trip support for checks)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return CountTable(
        scope=data["scope"],
        rows=[CountRow(r["name"], r["posts"], r["companies"]) for r in data["rows"]],
    )


def corpus_digest(path: str | Path) -> str:
    import hashlib

    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_manifest(
    corpus_sha256: str,
    prompt_versions: dict,
    roster: list[str],
    config: dict,
    counts: dict,
    wall_clock: str | None = None,
) -> dict:
    """Everything needed to recognize a run later; wall_clock is the only
    field two identical runs may differ on."""
    return {
        "tool_version": __version__,
        "corpus_sha256": corpus_sha256,
        "prompt_versions": dict(sorted(prompt_versions.items())),
        "juror_roster": sorted(roster),
        "config": config,
        "counts": counts,
        "wall_clock": wall_clock
        or time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def write_manifest(manifest: dict, dest: str | Path) -> Path:
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return dest
