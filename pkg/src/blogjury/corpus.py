"""Corpus harvesting: ingest search-result records, drop non-post URLs and
non-English entries, fetch page content, and exclude length outliers.

Filters are pure partitions: every input record lands in exactly one of the
returned lists, in input order, so audit files reconcile against ingestion
counts. Network access is confined to the fetcher contract; tests and replay
runs use :class:`DirectoryFetcher` against a fixture directory.
"""

from __future__ import annotations

import hashlib
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable, Mapping
from urllib.parse import urlsplit

logger = logging.getLogger(__name__)

DEFAULT_URL_DENYLIST = ("/index/", "/author/")

# reason codes used in the audit file
REASON_URL = "url_denylist"
REASON_LANGUAGE = "language"
REASON_FETCH = "fetch_failed"
REASON_LENGTH = "length_outlier"

# detector contract: text -> (language code, confidence in [0, 1])
LanguageDetector = Callable[[str], tuple[str, float]]
# fetcher contract: url -> body text; raises FetchError on failure
Fetcher = Callable[[str], str]


class FetchError(Exception):
    """A fetcher could not produce body text for a URL."""


@dataclass(frozen=True)
class SearchRecord:
    """One search hit awaiting filtering."""

    id: int
    url: str
    title: str
    snippet: str
    source_blog: str = ""
    company: str = ""


@dataclass(frozen=True)
class BlogPost:
    """Fetched document; ``content_length`` counts characters of body text."""

    record_id: int
    body: str
    content_length: int
    fetch_status: str  # ok | failed | excluded


@dataclass(frozen=True)
class LengthStats:
    q1: float
    q3: float
    iqr: float
    lower_bound: float
    upper_bound: float
    multiplier: float


@dataclass
class FilterConfig:
    url_denylist: tuple[str, ...] = DEFAULT_URL_DENYLIST
    language_allow: frozenset[str] = frozenset({"en"})
    iqr_multiplier: float = 1.5
    date_range: tuple[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.url_denylist:
            raise ValueError("url_denylist must be non-empty")


@dataclass(frozen=True)
class Exclusion:
    """One filtered-out item together with the audit reason code."""

    item: object
    reason: str
    detail: str = ""


@dataclass
class IngestResult:
    records: list[SearchRecord] = field(default_factory=list)
    rejects: int = 0


def _dedup_key(url: str) -> str:
    return url[:-1] if url.endswith("/") else url


def _is_absolute(url: str) -> bool:
    parts = urlsplit(url)
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def ingest_search_records(source: Iterable[Mapping]) -> IngestResult:
    """Assign sequential ids to well-formed records, first URL occurrence wins.

    Records without a usable absolute URL are skipped and tallied in
    ``rejects``; they never consume an id.
    """
    result = IngestResult()
    seen: set[str] = set()
    for row in source:
        url = str(row.get("url") or "").strip()
        if not url or not _is_absolute(url):
            result.rejects += 1
            logger.warning("skipping record without absolute url: %r", row.get("url"))
            continue
        key = _dedup_key(url)
        if key in seen:
            continue
        seen.add(key)
        result.records.append(
            SearchRecord(
                id=len(result.records),
                url=url,
                title=str(row.get("title") or ""),
                snippet=str(row.get("snippet") or ""),
                source_blog=str(row.get("source_blog") or ""),
                company=str(row.get("company") or ""),
            )
        )
    return result


def filter_urls(
    records: list[SearchRecord], cfg: FilterConfig
) -> tuple[list[SearchRecord], list[Exclusion]]:
    """Drop records whose URL contains any denylist substring, case-insensitively."""
    kept: list[SearchRecord] = []
    excluded: list[Exclusion] = []
    needles = [s.lower() for s in cfg.url_denylist]
    for rec in records:
        url = rec.url.lower()
        hit = next((s for s in needles if s in url), None)
        if hit is None:
            kept.append(rec)
        else:
            excluded.append(Exclusion(rec, REASON_URL, f"url contains {hit!r}"))
    return kept, excluded


def filter_language(
    records: list[SearchRecord],
    detector: LanguageDetector,
    cfg: FilterConfig,
) -> tuple[list[SearchRecord], list[Exclusion]]:
    """Keep records whose title and snippet both read as an allowed language.

    Empty fields are undetermined and excluded; a crashing detector excludes
    the record and the run continues.
    """
    kept: list[SearchRecord] = []
    excluded: list[Exclusion] = []
    for rec in records:
        verdict: Exclusion | None = None
        for name, text in (("title", rec.title), ("snippet", rec.snippet)):
            if not text.strip():
                verdict = Exclusion(rec, REASON_LANGUAGE, f"{name} undetermined (empty)")
                break
            try:
                code, _confidence = detector(text)
            except Exception as err:  # detector failure must not stop the run
                logger.warning("language detector failed on record %d: %s", rec.id, err)
                verdict = Exclusion(rec, REASON_LANGUAGE, f"detector failure on {name}: {err}")
                break
            if code == "und":
                verdict = Exclusion(rec, REASON_LANGUAGE, f"{name} undetermined")
                break
            if code not in cfg.language_allow:
                verdict = Exclusion(rec, REASON_LANGUAGE, f"{name} detected as {code}")
                break
        if verdict is None:
            kept.append(rec)
        else:
            excluded.append(verdict)
    return kept, excluded


_EN_STOPWORDS = frozenset(
    "the a an and of to in is are was were for on with that as this it be from "
    "at by we our you your how what when".split()
)


def detect_language(text: str) -> tuple[str, float]:
    """Default detector: ASCII-ratio plus English stopword heuristic.

    Deliberately coarse; it separates clearly non-Latin text from English
    prose and is pluggable for anything sharper.
    """
    if not text.strip():
        return ("und", 0.0)
    letters = [ch for ch in text if ch.isalpha()]
    if not letters:
        return ("und", 0.0)
    non_ascii = sum(1 for ch in letters if ord(ch) > 127) / len(letters)
    if non_ascii > 0.3:
        return ("other", min(1.0, non_ascii))
    words = re.findall(r"[a-zA-Z']+", text.lower())
    if not words:
        return ("und", 0.0)
    hits = sum(1 for w in words if w in _EN_STOPWORDS)
    if hits:
        return ("en", min(1.0, 0.5 + hits / len(words)))
    # latin script, no stopword evidence either way: short titles often have
    # none, so lean English rather than discard
    if len(words) >= 8:
        return ("other", 0.5)
    return ("en", 0.25)


class _TextExtractor(HTMLParser):
    _SKIP = {"script", "style", "noscript", "template"}

    def __init__(self) -> None:
        super().__init__()
        self._chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1

    def handle_data(self, data):
        if not self._skip_depth:
            self._chunks.append(data)

    def text(self) -> str:
        return re.sub(r"\s+", " ", " ".join(self._chunks)).strip()


def extract_text(html: str) -> str:
    """Strip tags and boilerplate-ish script/style blocks from an HTML page."""
    parser = _TextExtractor()
    parser.feed(html)
    return parser.text()


def url_fixture_name(url: str) -> str:
    return hashlib.sha256(url.encode("utf-8")).hexdigest() + ".txt"


class DirectoryFetcher:
    """Offline fetcher: body text files named by the URL's sha256 digest."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def __call__(self, url: str) -> str:
        path = self.root / url_fixture_name(url)
        if not path.is_file():
            raise FetchError(f"no fixture body for {url} (expected {path.name})")
        return path.read_text(encoding="utf-8")


class HttpFetcher:
    """Live fetcher: GET the page and extract its text content."""

    def __init__(self, timeout: float = 20.0, session=None):
        self.timeout = timeout
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def __call__(self, url: str) -> str:
        try:
            response = self.session.get(url, timeout=self.timeout)
        except Exception as err:
            raise FetchError(f"request failed for {url}: {err}") from err
        if response.status_code != 200:
            raise FetchError(f"HTTP {response.status_code} for {url}")
        return extract_text(response.text)


def fetch_contents(
    records: list[SearchRecord],
    fetcher: Fetcher,
    max_in_flight: int = 8,
) -> list[BlogPost]:
    """Fetch every record's body, one BlogPost per record, ordered by id.

    Fetches run concurrently up to ``max_in_flight``; failures become
    ``fetch_status="failed"`` posts instead of aborting the batch.
    """
    if not records:
        return []

    def fetch_one(rec: SearchRecord) -> BlogPost:
        try:
            body = fetcher(rec.url)
        except Exception as err:
            logger.warning("fetch failed for record %d (%s): %s", rec.id, rec.url, err)
            return BlogPost(rec.id, "", 0, "failed")
        return BlogPost(rec.id, body, len(body), "ok")

    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        posts = list(pool.map(fetch_one, records))
    return sorted(posts, key=lambda p: p.record_id)


def compute_quartiles(lengths: list[int], multiplier: float = 1.5) -> LengthStats:
    """Q1/Q3 by linear interpolation at 0.25*(n-1) and 0.75*(n-1)."""
    if len(lengths) < 4:
        raise ValueError(f"insufficient sample: need at least 4 lengths, got {len(lengths)}")
    ordered = sorted(lengths)

    def at(position: float) -> float:
        low = int(position)
        frac = position - low
        if low + 1 >= len(ordered):
            return float(ordered[low])
        return ordered[low] + frac * (ordered[low + 1] - ordered[low])

    n = len(ordered)
    q1 = at(0.25 * (n - 1))
    q3 = at(0.75 * (n - 1))
    iqr = q3 - q1
    return LengthStats(
        q1=q1,
        q3=q3,
        iqr=iqr,
        lower_bound=q1 - multiplier * iqr,
        upper_bound=q3 + multiplier * iqr,
        multiplier=multiplier,
    )


def iqr_filter(
    posts: list[BlogPost], stats: LengthStats
) -> tuple[list[BlogPost], list[Exclusion]]:
    """Drop posts whose length falls outside the stats bounds (inclusive)."""
    kept: list[BlogPost] = []
    excluded: list[Exclusion] = []
    for post in posts:
        if stats.lower_bound <= post.content_length <= stats.upper_bound:
            kept.append(post)
        else:
            excluded.append(
                Exclusion(
                    post,
                    REASON_LENGTH,
                    f"length {post.content_length} outside "
                    f"[{stats.lower_bound:g}, {stats.upper_bound:g}]",
                )
            )
    return kept, excluded
