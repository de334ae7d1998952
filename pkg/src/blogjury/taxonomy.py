"""Label vocabularies and the new-label adjudication lifecycle.

Labels are matched exactly after canonicalization; anything unknown becomes a
``proposed`` label that waits for an accept / reclassify / ignore decision.
Decisions append to a log whose replay reproduces the same taxonomy.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)

KINDS = ("area", "activity", "task")
AREA_VOCABULARY = frozenset({"fm4se", "se4fm", "unrelated"})
# fallback label for posts matching nothing in the activity/task vocabularies
OTHER = "other"

STATUS_PREDEFINED = "predefined"
STATUS_PROPOSED = "proposed"
STATUS_ACCEPTED = "accepted"
STATUS_IGNORED = "ignored"

VERDICTS = ("accept", "reclassify", "ignore")


def canonicalize(name: str) -> str:
    """Case-fold, trim, and collapse internal whitespace."""
    return " ".join(name.split()).casefold()


@dataclass(frozen=True)
class Label:
    name: str
    kind: str
    status: str
    maps_to: str | None = None


@dataclass(frozen=True)
class AdjudicationDecision:
    proposal: str
    kind: str
    verdict: str
    target: str | None
    actor: str  # human | jury
    seq: int

    def to_row(self) -> dict:
        return {
            "proposal": self.proposal,
            "kind": self.kind,
            "verdict": self.verdict,
            "target": self.target,
            "actor": self.actor,
            "seq": self.seq,
        }

    @classmethod
    def from_row(cls, row: dict) -> "AdjudicationDecision":
        return cls(
            proposal=row["proposal"],
            kind=row["kind"],
            verdict=row["verdict"],
            target=row.get("target"),
            actor=row["actor"],
            seq=int(row["seq"]),
        )


class Taxonomy:
    """Per-kind label registries plus the append-only adjudication log."""

    def __init__(self) -> None:
        self._labels: dict[str, dict[str, Label]] = {kind: {} for kind in KINDS}
        self._ignored: list[Label] = []
        self.decisions: list[AdjudicationDecision] = []
        # verdict collection runs concurrently and may register proposals
        self._lock = threading.RLock()

    def load_vocabulary(self, kind: str, source: str | Path | Iterable[str]) -> set[str]:
        """Register one canonical label per non-empty line; returns the set."""
        if kind not in KINDS:
            raise ValueError(f"unknown label kind {kind!r}")
        if isinstance(source, (str, Path)):
            lines = Path(source).read_text(encoding="utf-8").splitlines()
        else:
            lines = list(source)
        names: list[str] = []
        for line in lines:
            name = canonicalize(line)
            if name and name not in names:
                names.append(name)
        if not names:
            raise ValueError(f"empty vocabulary for kind {kind!r}")
        if kind == "area" and set(names) != AREA_VOCABULARY:
            raise ValueError(
                f"area vocabulary must be exactly {sorted(AREA_VOCABULARY)}, got {sorted(names)}"
            )
        for name in names:
            self._labels[kind][name] = Label(name, kind, STATUS_PREDEFINED)
        return set(names)

    def vocabulary(self, kind: str, include_other: bool = False) -> set[str]:
        names = {
            label.name
            for label in self._labels[kind].values()
            if label.status in (STATUS_PREDEFINED, STATUS_ACCEPTED) and label.maps_to is None
        }
        if include_other and kind != "area":
            names.add(OTHER)
        return names

    def resolve_label(self, raw: str, kind: str) -> Label:
        """Canonical label on exact match, else a registered proposal.

        Reclassified names chase their ``maps_to`` target; the ``other``
        sentinel is always recognized outside the area stage.
        """
        if kind not in KINDS:
            raise ValueError(f"unknown label kind {kind!r}")
        name = canonicalize(raw)
        if not name:
            raise ValueError("empty label")
        if name == OTHER and kind != "area":
            return Label(OTHER, kind, STATUS_PREDEFINED)
        with self._lock:
            known = self._labels[kind].get(name)
            if known is not None:
                if known.maps_to is not None:
                    return self._labels[kind][known.maps_to]
                return known
            proposal = Label(name, kind, STATUS_PROPOSED)
            self._labels[kind][name] = proposal
            logger.info("new %s label proposed: %r", kind, name)
            return proposal

    def pending_proposals(self, kind: str | None = None) -> list[Label]:
        kinds = KINDS if kind is None else (kind,)
        return [
            label
            for k in kinds
            for label in self._labels[k].values()
            if label.status == STATUS_PROPOSED
        ]

    def adjudicate(
        self,
        proposal: str,
        kind: str,
        verdict: str,
        target: str | None = None,
        actor: str = "human",
    ) -> AdjudicationDecision:
        """Apply one decision to a proposed label and append it to the log."""
        with self._lock:
            decision = AdjudicationDecision(
                proposal=canonicalize(proposal),
                kind=kind,
                verdict=verdict,
                target=canonicalize(target) if target else None,
                actor=actor,
                seq=len(self.decisions) + 1,
            )
            self._apply(decision)
            self.decisions.append(decision)
            return decision

    def replay(self, decisions: Iterable[AdjudicationDecision]) -> None:
        """Re-apply a logged decision sequence onto the loaded vocabularies."""
        for decision in decisions:
            # replayed proposals may not have been re-registered yet
            if decision.proposal not in self._labels[decision.kind]:
                self._labels[decision.kind][decision.proposal] = Label(
                    decision.proposal, decision.kind, STATUS_PROPOSED
                )
            self._apply(decision)
            self.decisions.append(decision)

    def _apply(self, decision: AdjudicationDecision) -> None:
        if decision.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {decision.verdict!r}")
        registry = self._labels[decision.kind]
        label = registry.get(decision.proposal)
        if label is None or label.status != STATUS_PROPOSED:
            raise ValueError(
                f"cannot adjudicate {decision.proposal!r}: not a proposed {decision.kind} label"
            )
        if decision.verdict == "accept":
            registry[label.name] = replace(label, status=STATUS_ACCEPTED)
        elif decision.verdict == "reclassify":
            target = registry.get(decision.target or "")
            if target is None or target.status not in (STATUS_PREDEFINED, STATUS_ACCEPTED):
                raise ValueError(
                    f"reclassify target {decision.target!r} is not an existing "
                    f"canonical {decision.kind} label"
                )
            registry[label.name] = replace(label, status=STATUS_ACCEPTED, maps_to=target.name)
        else:  # ignore: archive so the same raw name starts fresh next time
            self._ignored.append(replace(label, status=STATUS_IGNORED))
            del registry[label.name]

    def ignored(self) -> list[Label]:
        return list(self._ignored)
