"""Merging juror verdicts into a per-post decision.

Single-label stages take the strict plurality and break ties with the
highest z among the tied labels' voters. Multi-label stages admit every
label proposed by at least ceil(k/2) of the k voting jurors, falling back to
the whole label set of the single most confident juror when nothing reaches
the threshold. Equal-z ties that leave the outcome ambiguous escalate to a
human instead of guessing.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, replace

from ..taxonomy import OTHER
from .verdicts import STATUS_OK, JurorVerdict, NormalizedVerdict

logger = logging.getLogger(__name__)

Z_EPSILON = 1e-9


@dataclass(frozen=True)
class JuryDecision:
    post_id: int
    stage: str
    labels: tuple[str, ...]
    vote_counts: dict
    tie_broken: bool
    escalated: bool
    contributing: tuple[str, ...]

    def to_row(self) -> dict:
        return {
            "post_id": self.post_id,
            "stage": self.stage,
            "labels": list(self.labels),
            "vote_counts": dict(sorted(self.vote_counts.items())),
            "tie_broken": self.tie_broken,
            "escalated": self.escalated,
            "contributing": list(self.contributing),
        }

    @classmethod
    def from_row(cls, row: dict) -> "JuryDecision":
        return cls(
            post_id=int(row["post_id"]),
            stage=row["stage"],
            labels=tuple(row["labels"]),
            vote_counts={k: int(v) for k, v in row["vote_counts"].items()},
            tie_broken=bool(row["tie_broken"]),
            escalated=bool(row["escalated"]),
            contributing=tuple(row["contributing"]),
        )


def _split_ok(post_verdicts: list[NormalizedVerdict]):
    ok = [nv for nv in post_verdicts if nv.verdict.status == STATUS_OK]
    post_ids = {nv.verdict.post_id for nv in post_verdicts}
    stages = {nv.verdict.stage for nv in post_verdicts}
    if len(post_ids) > 1 or len(stages) > 1:
        raise ValueError(f"votes must target one post and stage, got {post_ids}/{stages}")
    post_id = next(iter(post_ids)) if post_ids else -1
    stage = next(iter(stages)) if stages else ""
    return ok, post_id, stage


def _escalated(post_id: int, stage: str, vote_counts: dict, contributing) -> JuryDecision:
    return JuryDecision(
        post_id=post_id,
        stage=stage,
        labels=(),
        vote_counts=vote_counts,
        tie_broken=False,
        escalated=True,
        contributing=tuple(sorted(contributing)),
    )


def vote_single(post_verdicts: list[NormalizedVerdict]) -> JuryDecision:
    """Strict plurality over single-label verdicts, z tie-break, else escalate."""
    ok, post_id, stage = _split_ok(post_verdicts)
    contributing = sorted(nv.verdict.juror_id for nv in ok)
    if not ok:
        return _escalated(post_id, stage, {}, contributing)
    for nv in ok:
        if len(nv.verdict.labels) != 1:
            raise ValueError(
                f"single-label vote got {len(nv.verdict.labels)} labels from "
                f"juror {nv.verdict.juror_id}"
            )

    counts = Counter(nv.verdict.labels[0] for nv in ok)
    top_count = max(counts.values())
    tied = sorted(label for label, count in counts.items() if count == top_count)
    vote_counts = dict(counts)

    if len(tied) == 1:
        winner, tie_broken = tied[0], False
    else:
        best_z = {
            label: max(nv.z for nv in ok if nv.verdict.labels[0] == label)
            for label in tied
        }
        ranked = sorted(best_z.items(), key=lambda kv: (-kv[1], kv[0]))
        if ranked[0][1] - ranked[1][1] <= Z_EPSILON:
            logger.info("post %d (%s): tie-break z values equal, escalating", post_id, stage)
            return _escalated(post_id, stage, vote_counts, contributing)
        winner, tie_broken = ranked[0][0], True

    return JuryDecision(
        post_id=post_id,
        stage=stage,
        labels=(winner,),
        vote_counts=vote_counts,
        tie_broken=tie_broken,
        escalated=False,
        contributing=tuple(contributing),
    )


def vote_multi(post_verdicts: list[NormalizedVerdict]) -> JuryDecision:
    """Per-label ceil(k/2) threshold with highest-z whole-set fallback."""
    ok, post_id, stage = _split_ok(post_verdicts)
    contributing = sorted(nv.verdict.juror_id for nv in ok)
    if not ok:
        return _escalated(post_id, stage, {}, contributing)

    k = len(ok)
    threshold = math.ceil(k / 2)
    counts = Counter(label for nv in ok for label in set(nv.verdict.labels))
    vote_counts = dict(counts)

    winning = sorted(label for label, count in counts.items() if count >= threshold)
    if len(winning) > 1 and OTHER in winning:
        # the fallback sentinel never rides along with real labels
        winning = [label for label in winning if label != OTHER]
    tie_broken = False

    if not winning:
        ranked = sorted(ok, key=lambda nv: (-nv.z, nv.verdict.juror_id))
        top = [nv for nv in ranked if ranked[0].z - nv.z <= Z_EPSILON]
        top_sets = {tuple(sorted(nv.verdict.labels)) for nv in top}
        if len(top_sets) > 1:
            logger.info("post %d (%s): fallback z values equal, escalating", post_id, stage)
            return _escalated(post_id, stage, vote_counts, contributing)
        winning = sorted(top_sets.pop())
        tie_broken = True

    if not winning:
        winning = [OTHER]

    return JuryDecision(
        post_id=post_id,
        stage=stage,
        labels=tuple(winning),
        vote_counts=vote_counts,
        tie_broken=tie_broken,
        escalated=False,
        contributing=tuple(contributing),
    )


def escalate_unresolved(decision: JuryDecision, verdicts: list[JurorVerdict]) -> dict:
    """Build the HITL queue entry for an escalated decision."""
    if not decision.escalated:
        raise ValueError(f"decision for post {decision.post_id} is not escalated")
    return {
        "post_id": decision.post_id,
        "stage": decision.stage,
        "verdicts": [v.to_row() for v in verdicts],
    }


def resolve_escalation(
    decision: JuryDecision, labels: tuple[str, ...], actor: str = "human"
) -> tuple[JuryDecision, dict]:
    """Replace an escalated decision with an adjudicated label set."""
    if not decision.escalated:
        raise ValueError(f"decision for post {decision.post_id} is not escalated")
    if not labels:
        raise ValueError("resolution needs at least one label")
    resolved = replace(decision, labels=tuple(labels), escalated=False)
    log_entry = {
        "post_id": decision.post_id,
        "stage": decision.stage,
        "labels": list(labels),
        "actor": actor,
    }
    return resolved, log_entry
