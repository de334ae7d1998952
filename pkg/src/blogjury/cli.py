"""Command-line orchestration: harvest, label, adjudicate, report.

Exit codes: 0 success, 2 input error, 3 precondition violation (stage order,
unfrozen prompt), 4 provider exhaustion in live mode. Replay is the default;
live providers need an explicit --live and a ``<JUROR_ID>_API_KEY`` variable
per juror.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, agreement, report
from .corpus import (
    BlogPost,
    DirectoryFetcher,
    FilterConfig,
    HttpFetcher,
    compute_quartiles,
    detect_language,
    fetch_contents,
    filter_language,
    filter_urls,
    ingest_search_records,
    iqr_filter,
)
from .jsonl import append_jsonl, read_jsonl, write_jsonl
from .jury import (
    HttpProvider,
    JurorVerdict,
    JuryDecision,
    NormalizedVerdict,
    ReplayProvider,
    api_key_env,
    collect_verdict,
    escalate_unresolved,
    load_prompt_spec,
    normalize_confidences,
    prompt_version,
    resolve_escalation,
    vote_multi,
    vote_single,
)
from .taxonomy import AdjudicationDecision, Taxonomy, canonicalize

logger = logging.getLogger(__name__)

STAGES = ("area", "activity", "task")
AREA_SCOPES = ("fm4se", "se4fm")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_EXHAUSTED = 4


@dataclass(frozen=True)
class JurorConfig:
    id: str
    kind: str = "replay"  # replay | http
    endpoint: str = ""
    model: str = ""


@dataclass
class RunConfig:
    records: Path
    out_dir: Path
    jurors: list[JurorConfig]
    prompts: dict[str, Path]
    vocabularies: dict[str, Path]
    golden: Path | None = None
    replay_dir: Path | None = None
    fixture_bodies: Path | None = None
    filter_cfg: FilterConfig = field(default_factory=FilterConfig)
    gate_cfg: agreement.GateConfig = field(default_factory=agreement.GateConfig)
    max_in_flight: int = 4
    max_prompt_chars: int | None = None
    raw: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.jurors:
            raise ValueError("juror roster is empty")


def load_config(path: str | Path, args=None) -> RunConfig:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def resolve(value):
        return (base / value) if value else None

    filter_data = data.get("filter", {})
    filter_cfg = FilterConfig(
        url_denylist=tuple(filter_data.get("url_denylist", FilterConfig().url_denylist)),
        language_allow=frozenset(filter_data.get("language_allow", ["en"])),
        iqr_multiplier=float(filter_data.get("iqr_multiplier", 1.5)),
    )
    gate_data = data.get("gate", {})
    gate_cfg = agreement.GateConfig(
        excellent_threshold=float(gate_data.get("excellent_threshold", 0.78)),
        substantial_threshold=float(gate_data.get("substantial_threshold", 0.63)),
    )
    cfg = RunConfig(
        records=resolve(data["records"]),
        out_dir=resolve(data.get("out_dir", "out")),
        jurors=[JurorConfig(**j) for j in data.get("jurors", [])],
        prompts={stage: resolve(p) for stage, p in data.get("prompts", {}).items()},
        vocabularies={stage: resolve(p) for stage, p in data.get("vocabularies", {}).items()},
        golden=resolve(data.get("golden")),
        replay_dir=resolve(data.get("replay_dir")),
        fixture_bodies=resolve(data.get("fixture_bodies")),
        filter_cfg=filter_cfg,
        gate_cfg=gate_cfg,
        max_in_flight=int(data.get("max_in_flight", 4)),
        max_prompt_chars=data.get("max_prompt_chars"),
        raw=data,
    )
    if args is not None:
        if getattr(args, "out", None):
            cfg.out_dir = Path(args.out)
        if getattr(args, "replay_dir", None):
            cfg.replay_dir = Path(args.replay_dir)
        if getattr(args, "max_in_flight", None):
            cfg.max_in_flight = args.max_in_flight
    return cfg


# ---------------------------------------------------------------------------
# store paths and loading helpers


def _paths(cfg: RunConfig) -> dict:
    out = cfg.out_dir
    paths = {
        "corpus": out / "corpus.jsonl",
        "audit": out / "audit.jsonl",
        "harvest_stats": out / "harvest_stats.json",
        "adjudications": out / "adjudications.jsonl",
        "resolutions": out / "resolutions.jsonl",
        "report_dir": out / "report",
        "manifest": out / "manifest.json",
    }
    for stage in STAGES:
        paths[f"verdicts_{stage}"] = out / f"verdicts_{stage}.jsonl"
        paths[f"decisions_{stage}"] = out / f"decisions_{stage}.jsonl"
        paths[f"escalations_{stage}"] = out / f"escalations_{stage}.jsonl"
        paths[f"proposals_{stage}"] = out / f"proposals_{stage}.jsonl"
        paths[f"ledger_{stage}"] = out / f"ledger_{stage}.jsonl"
        paths[f"golden_verdicts_{stage}"] = out / f"golden_verdicts_{stage}.jsonl"
        paths[f"golden_decisions_{stage}"] = out / f"golden_decisions_{stage}.jsonl"
    return paths


def _load_taxonomy(cfg: RunConfig) -> Taxonomy:
    taxonomy = Taxonomy()
    for stage in STAGES:
        vocab_path = cfg.vocabularies.get(stage)
        if vocab_path is None:
            raise ValueError(f"config has no vocabulary for stage {stage!r}")
        taxonomy.load_vocabulary(stage, vocab_path)
    log_path = _paths(cfg)["adjudications"]
    if log_path.is_file():
        taxonomy.replay(AdjudicationDecision.from_row(r) for r in read_jsonl(log_path))
    return taxonomy


def stage_vocabulary(taxonomy: Taxonomy, stage: str) -> set[str]:
    """The label set shown to jurors; activity/task include the fallback."""
    return taxonomy.vocabulary(stage, include_other=stage != "area")


def _load_corpus(cfg: RunConfig) -> tuple[list[BlogPost], dict[int, dict]]:
    rows = read_jsonl(_paths(cfg)["corpus"])
    posts = []
    meta = {}
    for row in rows:
        posts.append(
            BlogPost(
                record_id=int(row["record_id"]),
                body=row["body"],
                content_length=int(row["content_length"]),
                fetch_status=row["fetch_status"],
            )
        )
        meta[int(row["record_id"])] = row
    return posts, meta


def _load_decisions(path: Path) -> list[JuryDecision]:
    if not path.is_file():
        return []
    return [JuryDecision.from_row(row) for row in read_jsonl(path)]


def _build_providers(cfg: RunConfig, live: bool):
    import os

    providers = []
    if live:
        missing = [
            api_key_env(j.id) for j in cfg.jurors if not os.environ.get(api_key_env(j.id))
        ]
        if missing:
            raise SystemExit2(f"missing API keys for live run: {', '.join(missing)}")
        for juror in cfg.jurors:
            providers.append(
                HttpProvider(juror.id, juror.endpoint, juror.model or juror.id)
            )
        return providers
    if cfg.replay_dir is None:
        raise SystemExit2("replay mode requires a replay directory (config replay_dir or --replay-dir)")
    return [ReplayProvider(j.id, cfg.replay_dir) for j in cfg.jurors]


class SystemExit2(Exception):
    """Input error surfaced as exit code 2."""


class SystemExit3(Exception):
    """Precondition violation surfaced as exit code 3."""


# ---------------------------------------------------------------------------
# harvest


def cmd_harvest(cfg: RunConfig) -> int:
    paths = _paths(cfg)
    if cfg.records is None or not cfg.records.is_file():
        print(f"error: records file not found: {cfg.records}", file=sys.stderr)
        return EXIT_INPUT
    rows = read_jsonl(cfg.records)
    if not rows:
        print(f"error: records file is empty: {cfg.records}", file=sys.stderr)
        return EXIT_INPUT

    ingested = ingest_search_records(rows)
    kept_urls, excluded_urls = filter_urls(ingested.records, cfg.filter_cfg)
    kept_lang, excluded_lang = filter_language(kept_urls, detect_language, cfg.filter_cfg)

    if cfg.fixture_bodies is not None:
        fetcher = DirectoryFetcher(cfg.fixture_bodies)
    else:
        fetcher = HttpFetcher()
    posts = fetch_contents(kept_lang, fetcher, max_in_flight=cfg.max_in_flight)
    ok_posts = [p for p in posts if p.fetch_status == "ok"]
    failed = [p for p in posts if p.fetch_status != "ok"]

    stats = None
    length_excluded = []
    kept_posts = ok_posts
    if len(ok_posts) >= 4:
        stats = compute_quartiles(
            [p.content_length for p in ok_posts], multiplier=cfg.filter_cfg.iqr_multiplier
        )
        kept_posts, length_excluded = iqr_filter(ok_posts, stats)
    else:
        logger.warning("only %d fetched posts; skipping length filter", len(ok_posts))

    by_id = {rec.id: rec for rec in ingested.records}
    audit_rows = []
    for exc in excluded_urls + excluded_lang:
        audit_rows.append(
            {"record_id": exc.item.id, "url": exc.item.url, "reason": exc.reason,
             "detail": exc.detail}
        )
    for post in failed:
        audit_rows.append(
            {"record_id": post.record_id, "url": by_id[post.record_id].url,
             "reason": "fetch_failed", "detail": "fetcher returned no body"}
        )
    for exc in length_excluded:
        audit_rows.append(
            {"record_id": exc.item.record_id, "url": by_id[exc.item.record_id].url,
             "reason": exc.reason, "detail": exc.detail}
        )
    audit_rows.sort(key=lambda r: r["record_id"])
    write_jsonl(paths["audit"], audit_rows)

    corpus_rows = []
    for post in kept_posts:
        rec = by_id[post.record_id]
        corpus_rows.append(
            {
                "record_id": rec.id,
                "url": rec.url,
                "title": rec.title,
                "snippet": rec.snippet,
                "source_blog": rec.source_blog,
                "company": rec.company,
                "body": post.body,
                "content_length": post.content_length,
                "fetch_status": post.fetch_status,
            }
        )
    write_jsonl(paths["corpus"], corpus_rows)

    summary = {
        "ingested": len(ingested.records),
        "rejects": ingested.rejects,
        "url_excluded": len(excluded_urls),
        "language_excluded": len(excluded_lang),
        "fetch_failed": len(failed),
        "length_excluded": len(length_excluded),
        "kept": len(kept_posts),
        "length_stats": None
        if stats is None
        else {
            "q1": stats.q1, "q3": stats.q3, "iqr": stats.iqr,
            "lower_bound": stats.lower_bound, "upper_bound": stats.upper_bound,
            "multiplier": stats.multiplier,
        },
    }
    paths["harvest_stats"].parent.mkdir(parents=True, exist_ok=True)
    paths["harvest_stats"].write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"harvest: kept {len(kept_posts)} of {len(ingested.records)} records "
        f"({ingested.rejects} rejects, {len(audit_rows)} audited exclusions)"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# label


def _scoped_post_ids(cfg: RunConfig) -> set[int]:
    """Posts whose merged area label is in scope for downstream stages."""
    decisions = _load_decisions(_paths(cfg)["decisions_area"])
    return {
        d.post_id
        for d in decisions
        if not d.escalated and d.labels and d.labels[0] in AREA_SCOPES
    }


def _golden_items(cfg: RunConfig, stage: str) -> dict[int, object]:
    if cfg.golden is None or not cfg.golden.is_file():
        raise SystemExit2(f"golden set file not found: {cfg.golden}")
    items: dict[int, object] = {}
    for row in read_jsonl(cfg.golden):
        if row["stage"] != stage:
            continue
        labels = [canonicalize(x) for x in row["labels"]]
        items[int(row["item_id"])] = labels[0] if stage == "area" else tuple(sorted(labels))
    if not items:
        raise SystemExit2(f"golden set has no items for stage {stage!r}")
    return items


def _collect_all(cfg, providers, posts, spec, vocabulary, taxonomy) -> list[JurorVerdict]:
    jobs = [(provider, post) for post in posts for provider in providers]

    def run(job):
        provider, post = job
        return collect_verdict(
            provider, post, spec, vocabulary, taxonomy,
            max_chars=cfg.max_prompt_chars,
        )

    with ThreadPoolExecutor(max_workers=max(1, cfg.max_in_flight)) as pool:
        verdicts = list(pool.map(run, jobs))
    verdicts.sort(key=lambda v: (v.post_id, v.juror_id))
    return verdicts


def _merge(verdicts: list[JurorVerdict], stage: str) -> list[JuryDecision]:
    by_juror: dict[str, list[JurorVerdict]] = {}
    for verdict in verdicts:
        by_juror.setdefault(verdict.juror_id, []).append(verdict)
    z_by_key = {}
    for juror_verdicts in by_juror.values():
        _stats, normalized = normalize_confidences(juror_verdicts)
        for nv in normalized:
            z_by_key[(nv.verdict.juror_id, nv.verdict.post_id)] = nv

    by_post: dict[int, list] = {}
    for verdict in verdicts:
        nv = z_by_key.get((verdict.juror_id, verdict.post_id))
        if nv is None:
            nv = NormalizedVerdict(verdict, 0.0)
        by_post.setdefault(verdict.post_id, []).append(nv)

    vote = vote_single if stage == "area" else vote_multi
    return [vote(by_post[post_id]) for post_id in sorted(by_post)]


def cmd_label(cfg: RunConfig, stage: str, golden: bool = False, live: bool = False,
              assume_yes: bool = False) -> int:
    paths = _paths(cfg)
    if stage not in STAGES:
        print(f"error: unknown stage {stage!r}", file=sys.stderr)
        return EXIT_INPUT
    if not paths["corpus"].is_file():
        print("error: no corpus; run harvest first", file=sys.stderr)
        return EXIT_INPUT
    previous = {"activity": "area", "task": "activity"}.get(stage)
    if previous and not paths[f"decisions_{previous}"].is_file():
        print(
            f"error: stage order is area -> activity -> task; "
            f"no {previous} decisions found",
            file=sys.stderr,
        )
        return EXIT_PRECONDITION

    taxonomy = _load_taxonomy(cfg)
    vocabulary = sorted(stage_vocabulary(taxonomy, stage))
    spec_path = cfg.prompts.get(stage)
    if spec_path is None or not spec_path.is_file():
        print(f"error: no prompt spec for stage {stage!r}", file=sys.stderr)
        return EXIT_INPUT
    spec = load_prompt_spec(spec_path)
    version = prompt_version(spec, vocabulary)

    posts, meta = _load_corpus(cfg)
    if stage != "area":
        in_scope = _scoped_post_ids(cfg)
        posts = [p for p in posts if p.record_id in in_scope]

    try:
        if golden:
            golden_items = _golden_items(cfg, stage)
            missing = sorted(set(golden_items) - {p.record_id for p in posts})
            if missing:
                raise SystemExit2(f"golden items missing from the corpus/scope: {missing}")
            posts = [p for p in posts if p.record_id in golden_items]
        else:
            ledger = agreement.load_ledger(paths[f"ledger_{stage}"])
            agreement.require_frozen(ledger, version)
        providers = _build_providers(cfg, live)
    except agreement.PromptNotFrozenError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SystemExit2 as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT

    verdicts = _collect_all(cfg, providers, posts, spec, vocabulary, taxonomy)
    decisions = _merge(verdicts, stage)

    prefix = "golden_" if golden else ""
    write_jsonl(paths[f"{prefix}verdicts_{stage}"], [v.to_row() for v in verdicts])
    write_jsonl(paths[f"{prefix}decisions_{stage}"], [d.to_row() for d in decisions])

    if not golden:
        verdicts_by_post: dict[int, list[JurorVerdict]] = {}
        for verdict in verdicts:
            verdicts_by_post.setdefault(verdict.post_id, []).append(verdict)
        queue = [
            escalate_unresolved(d, verdicts_by_post[d.post_id])
            for d in decisions
            if d.escalated
        ]
        write_jsonl(paths[f"escalations_{stage}"], queue)
        proposals = [
            {"name": label.name, "kind": label.kind}
            for label in sorted(taxonomy.pending_proposals(), key=lambda l: (l.kind, l.name))
        ]
        write_jsonl(paths[f"proposals_{stage}"], proposals)
        print(
            f"label {stage}: {len(decisions)} decisions, {len(queue)} escalated, "
            f"{len(proposals)} label proposals, prompt version {version}"
        )
        if live:
            starved = sorted(
                post_id
                for post_id, post_verdicts in verdicts_by_post.items()
                if all(v.status != "ok" for v in post_verdicts)
            )
            if starved:
                print(
                    f"error: all jurors abstained on posts {starved}", file=sys.stderr
                )
                return EXIT_EXHAUSTED
        return EXIT_OK

    # golden mode: per-juror kappa, jury-vs-human kappa, gate outcome
    human = agreement.RatingVector(
        "human", tuple(sorted(golden_items.items()))
    )
    juror_kappas: dict[str, float] = {}
    for juror in sorted({v.juror_id for v in verdicts}):
        ok = {
            v.post_id: (v.labels[0] if stage == "area" else tuple(sorted(v.labels)))
            for v in verdicts
            if v.juror_id == juror and v.status == "ok"
        }
        common = sorted(set(ok) & set(golden_items))
        if not common:
            juror_kappas[juror] = 0.0
            continue
        juror_vector = agreement.RatingVector(
            juror, tuple((i, ok[i]) for i in common)
        )
        human_subset = agreement.RatingVector(
            "human", tuple((i, golden_items[i]) for i in common)
        )
        juror_kappas[juror] = agreement.cohen_kappa(human_subset, juror_vector).kappa

    try:
        jury_report = agreement.evaluate_jury_vs_human(human, decisions)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PRECONDITION

    outcome = agreement.evaluate_gate(juror_kappas, cfg.gate_cfg)
    shown = " ".join(f"{j}={k:.2f}" for j, k in sorted(juror_kappas.items()))
    print(f"golden {stage}: juror kappas {shown}")
    print(f"golden {stage}: jury vs human kappa {jury_report.kappa:.2f}")
    print(f"gate: {'PASS' if outcome.passed else 'FAIL'} ({outcome.reason})")

    ledger = agreement.load_ledger(paths[f"ledger_{stage}"])
    if outcome.passed:
        confirmed = assume_yes
        if not confirmed:
            try:
                confirmed = input(f"freeze prompt version {version}? [y/N] ").strip().lower() in ("y", "yes")
            except EOFError:
                confirmed = False
        if not confirmed:
            print("gate passed but version left unfrozen")
            return EXIT_OK
    if ledger.frozen_version == version:
        print(f"version {version} is already frozen")
        return EXIT_OK
    entry = agreement.record_iteration(version, juror_kappas, outcome, ledger)
    agreement.append_ledger_entry(paths[f"ledger_{stage}"], entry)
    if ledger.frozen_version == version:
        print(f"froze prompt version {version} for stage {stage}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# adjudicate


def _prompt_line(prompt: str) -> str:
    try:
        return input(prompt).strip()
    except EOFError as err:
        raise SystemExit3("adjudication aborted: no input available") from err


def _pending_proposals(cfg: RunConfig, taxonomy: Taxonomy) -> list:
    paths = _paths(cfg)
    for stage in STAGES:
        path = paths[f"proposals_{stage}"]
        if path.is_file():
            for row in read_jsonl(path):
                taxonomy.resolve_label(row["name"], row["kind"])
    return sorted(taxonomy.pending_proposals(), key=lambda l: (l.kind, l.name))


def _rewrite_after_ignore(paths: dict, kind: str, name: str) -> None:
    """Drop an ignored label from stored verdicts and decisions of its stage."""
    verdicts_path = paths[f"verdicts_{kind}"]
    if verdicts_path.is_file():
        rows = read_jsonl(verdicts_path)
        for row in rows:
            if name in row["labels"]:
                row["labels"] = [x for x in row["labels"] if x != name] or ["other"]
        write_jsonl(verdicts_path, rows)
    decisions_path = paths[f"decisions_{kind}"]
    if decisions_path.is_file():
        rows = read_jsonl(decisions_path)
        for row in rows:
            if name in row["labels"]:
                row["labels"] = [x for x in row["labels"] if x != name] or ["other"]
        write_jsonl(decisions_path, rows)


def _rewrite_after_reclassify(paths: dict, kind: str, name: str, target: str) -> None:
    decisions_path = paths[f"decisions_{kind}"]
    if decisions_path.is_file():
        rows = read_jsonl(decisions_path)
        for row in rows:
            if name in row["labels"]:
                remapped = [target if x == name else x for x in row["labels"]]
                row["labels"] = sorted(dict.fromkeys(remapped))
        write_jsonl(decisions_path, rows)


def _pending_escalations(cfg: RunConfig) -> list[tuple[str, dict]]:
    paths = _paths(cfg)
    pending = []
    for stage in STAGES:
        queue_path = paths[f"escalations_{stage}"]
        if not queue_path.is_file():
            continue
        still_open = {
            d.post_id for d in _load_decisions(paths[f"decisions_{stage}"]) if d.escalated
        }
        for entry in read_jsonl(queue_path):
            if entry["post_id"] in still_open:
                pending.append((stage, entry))
    return pending


def cmd_adjudicate(cfg: RunConfig) -> int:
    paths = _paths(cfg)
    taxonomy = _load_taxonomy(cfg)
    proposals = _pending_proposals(cfg, taxonomy)
    escalations = _pending_escalations(cfg)
    if not proposals and not escalations:
        print("nothing to adjudicate")
        return EXIT_OK

    try:
        for label in proposals:
            print(f"proposed {label.kind} label: {label.name!r}")
            while True:
                choice = _prompt_line("[a]ccept / [r]eclassify / [i]gnore: ").lower()
                verdict = {"a": "accept", "r": "reclassify", "i": "ignore"}.get(choice)
                if verdict is None:
                    print("please answer a, r, or i")
                    continue
                target = None
                if verdict == "reclassify":
                    target = _prompt_line("reclassify to which existing label: ")
                try:
                    decision = taxonomy.adjudicate(label.name, label.kind, verdict,
                                                   target=target, actor="human")
                except ValueError as err:
                    print(f"invalid: {err}")
                    continue
                append_jsonl(paths["adjudications"], decision.to_row())
                if verdict == "ignore":
                    _rewrite_after_ignore(paths, label.kind, label.name)
                elif verdict == "reclassify":
                    _rewrite_after_reclassify(paths, label.kind, label.name, decision.target)
                break

        resolved_count = 0
        for stage, entry in escalations:
            print(f"escalated post {entry['post_id']} ({stage} stage); juror verdicts:")
            for verdict in entry["verdicts"]:
                labels = ", ".join(verdict["labels"]) or "(abstained)"
                print(f"  {verdict['juror_id']}: {labels} "
                      f"(confidence {verdict['raw_confidence']:.2f})")
            valid = stage_vocabulary(taxonomy, stage)
            while True:
                answer = _prompt_line("final label(s), comma-separated: ")
                labels = tuple(
                    dict.fromkeys(canonicalize(x) for x in answer.split(",") if x.strip())
                )
                unknown = [x for x in labels if x not in valid]
                if not labels or unknown:
                    print(f"labels must be existing {stage} labels; unknown: {unknown}")
                    continue
                if stage == "area" and len(labels) != 1:
                    print("area stage takes exactly one label")
                    continue
                break
            decisions = _load_decisions(paths[f"decisions_{stage}"])
            rewritten = []
            for decision in decisions:
                if decision.post_id == entry["post_id"] and decision.escalated:
                    resolved, log_row = resolve_escalation(decision, labels, actor="human")
                    log_row["seq"] = (
                        sum(1 for _ in read_jsonl(paths["resolutions"]))
                        if paths["resolutions"].is_file()
                        else 0
                    ) + 1
                    append_jsonl(paths["resolutions"], log_row)
                    rewritten.append(resolved)
                    resolved_count += 1
                else:
                    rewritten.append(decision)
            write_jsonl(paths[f"decisions_{stage}"], [d.to_row() for d in rewritten])
    except SystemExit3 as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PRECONDITION

    print(f"adjudicated {len(proposals)} proposals and {resolved_count} escalations")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def cmd_report(cfg: RunConfig) -> int:
    paths = _paths(cfg)
    area_decisions = _load_decisions(paths["decisions_area"])
    if not area_decisions:
        print("error: no area decisions; run label first", file=sys.stderr)
        return EXIT_INPUT
    activity_decisions = {d.post_id: d for d in _load_decisions(paths["decisions_activity"])}
    task_decisions = {d.post_id: d for d in _load_decisions(paths["decisions_task"])}
    _posts, meta = _load_corpus(cfg)

    labelled: list[report.LabelledPost] = []
    other_activity = 0
    other_task = 0
    escalated_open = 0
    for decision in area_decisions:
        if decision.escalated:
            escalated_open += 1
            continue
        area = decision.labels[0]
        if area not in AREA_SCOPES:
            continue
        activity = activity_decisions.get(decision.post_id)
        task = task_decisions.get(decision.post_id)
        activities = tuple(activity.labels) if activity and not activity.escalated else ()
        tasks = tuple(task.labels) if task and not task.escalated else ()
        if activities == ("other",):
            other_activity += 1
        if tasks == ("other",):
            other_task += 1
        for stage_decision in (activity, task):
            if stage_decision is not None and stage_decision.escalated:
                escalated_open += 1
        labelled.append(
            report.LabelledPost(
                post_id=decision.post_id,
                company=meta.get(decision.post_id, {}).get("company", ""),
                area=area,
                activities=activities,
                tasks=tasks,
            )
        )

    report_dir = paths["report_dir"]
    for scope in AREA_SCOPES:
        activity_table = report.count_by_activity(labelled, scope)
        task_table = report.count_by_task(labelled, scope)
        for fmt in ("csv", "json"):
            report.export_table(activity_table, fmt, report_dir / f"{scope}_activities.{fmt}")
            report.export_table(task_table, fmt, report_dir / f"{scope}_tasks.{fmt}")

    harvest_stats = {}
    if paths["harvest_stats"].is_file():
        harvest_stats = json.loads(paths["harvest_stats"].read_text(encoding="utf-8"))
    prompt_versions = {}
    for stage in STAGES:
        ledger = agreement.load_ledger(paths[f"ledger_{stage}"])
        if ledger.frozen_version:
            prompt_versions[stage] = ledger.frozen_version
    area_counts = {}
    for decision in area_decisions:
        if not decision.escalated:
            area_counts[decision.labels[0]] = area_counts.get(decision.labels[0], 0) + 1
    counts = {
        "harvest": harvest_stats,
        "area_decisions": dict(sorted(area_counts.items())),
        "labelled_posts": len(labelled),
        "escalated_open": escalated_open,
        "other_posts": {"activity": other_activity, "task": other_task},
    }
    manifest = report.run_manifest(
        corpus_sha256=report.corpus_digest(paths["corpus"]),
        prompt_versions=prompt_versions,
        roster=[j.id for j in cfg.jurors],
        config=cfg.raw,
        counts=counts,
    )
    report.write_manifest(manifest, paths["manifest"])
    print(f"report: {len(labelled)} labelled posts -> {report_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blogjury",
        description="Blog-survey pipeline: harvest, jury labelling, adjudication, reporting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to the run config JSON")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--replay-dir", help="override the replay fixture directory")
        p.add_argument("--max-in-flight", type=int, help="concurrent request cap")

    p_harvest = sub.add_parser("harvest", help="ingest, filter, and fetch the corpus")
    common(p_harvest)

    p_label = sub.add_parser("label", help="run the jury for one stage")
    common(p_label)
    p_label.add_argument("--stage", required=True, choices=STAGES)
    p_label.add_argument("--golden", action="store_true",
                         help="evaluate on the golden set and gate the prompt")
    p_label.add_argument("--live", action="store_true",
                         help="use live HTTP providers instead of replay fixtures")
    p_label.add_argument("--yes", action="store_true",
                         help="assume yes at the freeze confirmation")

    p_adj = sub.add_parser("adjudicate", help="review proposals and escalated posts")
    common(p_adj)

    p_report = sub.add_parser("report", help="write count tables and the run manifest")
    common(p_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as err:
        print(f"error: bad config: {err}", file=sys.stderr)
        return EXIT_INPUT

    if args.command == "harvest":
        return cmd_harvest(cfg)
    if args.command == "label":
        return cmd_label(cfg, args.stage, golden=args.golden, live=args.live,
                         assume_yes=args.yes)
    if args.command == "adjudicate":
        return cmd_adjudicate(cfg)
    if args.command == "report":
        return cmd_report(cfg)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
