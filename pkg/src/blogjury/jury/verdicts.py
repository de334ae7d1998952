"""Collecting and normalizing per-juror verdicts.

A verdict is the parsed, taxonomy-resolved form of one model response. Raw
confidences are never compared across jurors directly; each juror's scores
are z-standardized per stage over the full batch first.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

from ..taxonomy import Taxonomy
from .prompts import PromptSpec, prompt_version, render_prompt
from .providers import PromptRequest, Provider, ProviderError

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 2

STATUS_OK = "ok"
STATUS_ABSTAINED = "abstained"


class VerdictParseError(Exception):
    """The response text did not yield a usable structured verdict."""


@dataclass(frozen=True)
class JurorVerdict:
    juror_id: str
    post_id: int
    stage: str
    labels: tuple[str, ...]
    raw_confidence: float
    rationale: str
    prompt_version: str
    status: str  # ok | abstained

    def to_row(self) -> dict:
        return {
            "juror_id": self.juror_id,
            "post_id": self.post_id,
            "stage": self.stage,
            "labels": list(self.labels),
            "raw_confidence": self.raw_confidence,
            "rationale": self.rationale,
            "prompt_version": self.prompt_version,
            "status": self.status,
        }

    @classmethod
    def from_row(cls, row: dict) -> "JurorVerdict":
        return cls(
            juror_id=row["juror_id"],
            post_id=int(row["post_id"]),
            stage=row["stage"],
            labels=tuple(row["labels"]),
            raw_confidence=float(row["raw_confidence"]),
            rationale=row.get("rationale", ""),
            prompt_version=row["prompt_version"],
            status=row["status"],
        )


@dataclass(frozen=True)
class ConfidenceStats:
    juror_id: str
    stage: str
    mean: float
    std: float  # population standard deviation
    n: int


@dataclass(frozen=True)
class NormalizedVerdict:
    verdict: JurorVerdict
    z: float


def _first_json_object(text: str) -> dict:
    """Extract the first balanced JSON object embedded in free-form text."""
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(text[start : i + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(obj, dict):
                        return obj
                    break
        start = text.find("{", start + 1)
    raise VerdictParseError("no JSON object found in response")


def parse_response(text: str) -> tuple[list[str], float, str]:
    """Pull (labels, confidence, rationale) out of a model response."""
    data = _first_json_object(text)
    labels = data.get("labels", data.get("label"))
    if isinstance(labels, str):
        labels = [labels]
    if not isinstance(labels, list) or not labels or not all(
        isinstance(x, str) and x.strip() for x in labels
    ):
        raise VerdictParseError("response has no usable labels field")
    confidence = data.get("confidence")
    if not isinstance(confidence, (int, float)) or isinstance(confidence, bool) or (
        isinstance(confidence, float) and math.isnan(confidence)
    ):
        raise VerdictParseError("response has no numeric confidence field")
    confidence = float(confidence)
    if not 0.0 <= confidence <= 1.0:
        clamped = min(1.0, max(0.0, confidence))
        logger.warning("confidence %.3f outside [0, 1]; clamped to %.3f", confidence, clamped)
        confidence = clamped
    rationale = data.get("rationale", "")
    if not isinstance(rationale, str):
        rationale = str(rationale)
    return [x.strip() for x in labels], confidence, rationale


def collect_verdict(
    juror: Provider,
    post,
    spec: PromptSpec,
    vocabulary,
    taxonomy: Taxonomy,
    retries: int = DEFAULT_RETRIES,
    max_chars: int | None = None,
) -> JurorVerdict:
    """Ask one juror about one post; retry on failure, then abstain.

    Labels are resolved through the taxonomy, which registers unseen
    activity/task names as proposals. Area verdicts must carry exactly one
    label from the closed area vocabulary.
    """
    text = render_prompt(spec, post, vocabulary, max_chars=max_chars)
    version = prompt_version(spec, vocabulary)
    request = PromptRequest(
        text=text, post_id=post.record_id, stage=spec.stage, prompt_version=version
    )

    attempts = 1 + max(0, retries)
    for attempt in range(1, attempts + 1):
        try:
            response = juror.complete(request)
            raw_labels, confidence, rationale = parse_response(response)
            labels = _resolve_labels(raw_labels, spec.stage, taxonomy)
            return JurorVerdict(
                juror_id=juror.juror_id,
                post_id=post.record_id,
                stage=spec.stage,
                labels=labels,
                raw_confidence=confidence,
                rationale=rationale,
                prompt_version=version,
                status=STATUS_OK,
            )
        except (ProviderError, VerdictParseError) as err:
            logger.warning(
                "juror %s attempt %d/%d failed on post %d (%s stage): %s",
                juror.juror_id, attempt, attempts, post.record_id, spec.stage, err,
            )
    return JurorVerdict(
        juror_id=juror.juror_id,
        post_id=post.record_id,
        stage=spec.stage,
        labels=(),
        raw_confidence=0.0,
        rationale="",
        prompt_version=version,
        status=STATUS_ABSTAINED,
    )


def _resolve_labels(raw_labels: list[str], stage: str, taxonomy: Taxonomy) -> tuple[str, ...]:
    if stage == "area" and len(raw_labels) != 1:
        raise VerdictParseError(
            f"area verdict must carry exactly one label, got {len(raw_labels)}"
        )
    resolved: list[str] = []
    for raw in raw_labels:
        if stage == "area":
            name = taxonomy.resolve_label(raw, "area").name
            if name not in taxonomy.vocabulary("area"):
                raise VerdictParseError(f"label {raw!r} is not an area label")
        else:
            name = taxonomy.resolve_label(raw, stage).name
        if name not in resolved:
            resolved.append(name)
    return tuple(resolved)


def normalize_confidences(
    verdicts: list[JurorVerdict],
    juror_id: str | None = None,
    stage: str | None = None,
) -> tuple[ConfidenceStats, list[NormalizedVerdict]]:
    """z-standardize one juror's ok confidences over a full stage batch.

    Population standard deviation; a zero-spread batch maps every score to
    z = 0 rather than dividing by zero.
    """
    ok = [v for v in verdicts if v.status == STATUS_OK]
    jurors = {v.juror_id for v in ok}
    stages = {v.stage for v in ok}
    if len(jurors) > 1 or len(stages) > 1:
        raise ValueError(
            f"normalization batch must be one juror and one stage, got {jurors}/{stages}"
        )
    if ok:
        juror_id = ok[0].juror_id
        stage = ok[0].stage
    if not ok:
        return ConfidenceStats(juror_id or "", stage or "", 0.0, 0.0, 0), []

    n = len(ok)
    mean = sum(v.raw_confidence for v in ok) / n
    variance = sum((v.raw_confidence - mean) ** 2 for v in ok) / n
    std = math.sqrt(variance)
    normalized = [
        NormalizedVerdict(v, (v.raw_confidence - mean) / std if std > 0 else 0.0)
        for v in ok
    ]
    return ConfidenceStats(juror_id, stage, mean, std, n), normalized
