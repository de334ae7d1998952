"""Inter-rater agreement: Cohen's kappa, the prompt acceptance gate, and the
iterate-then-freeze ledger for prompt versions.

Kappa is the unweighted categorical coefficient (p_o - p_e) / (1 - p_e) with
expected agreement from the product of per-label marginals. Multi-label items
are compared on exact set equality, encoded as one categorical token per set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .jsonl import append_jsonl, read_jsonl

logger = logging.getLogger(__name__)


class PromptNotFrozenError(Exception):
    """A full-dataset run was attempted with a version the gate never froze."""


@dataclass(frozen=True)
class RatingVector:
    """One rater's labels over a fixed item set, as (item_id, label) pairs.

    A label may be a string or, for multi-label stages, a sequence of strings
    compared as a set.
    """

    rater_id: str
    ratings: tuple

    def as_dict(self) -> dict:
        return {item: _token(label) for item, label in self.ratings}


@dataclass(frozen=True)
class AgreementReport:
    rater_a: str
    rater_b: str
    observed_agreement: float
    expected_agreement: float
    kappa: float
    n_items: int
    degenerate: bool = False


@dataclass(frozen=True)
class GateConfig:
    excellent_threshold: float = 0.78  # strict: at least one juror must exceed it
    substantial_threshold: float = 0.63  # inclusive floor for every juror

    def __post_init__(self) -> None:
        if not (0.0 < self.substantial_threshold <= self.excellent_threshold < 1.0):
            raise ValueError(
                "thresholds must satisfy 0 < substantial <= excellent < 1, got "
                f"{self.substantial_threshold}/{self.excellent_threshold}"
            )


@dataclass(frozen=True)
class GateOutcome:
    passed: bool
    reason: str


@dataclass(frozen=True)
class LedgerEntry:
    version: str
    kappas: dict
    passed: bool
    reason: str
    seq: int

    def to_row(self) -> dict:
        return {
            "version": self.version,
            "kappas": self.kappas,
            "passed": self.passed,
            "reason": self.reason,
            "seq": self.seq,
        }


@dataclass
class IterationLedger:
    entries: list[LedgerEntry] = field(default_factory=list)
    frozen_version: str | None = None


def _token(label) -> str:
    """Canonical categorical token: multi-label sets collapse order."""
    if isinstance(label, str):
        return label
    return "|".join(sorted(label))


def cohen_kappa(a: RatingVector, b: RatingVector) -> AgreementReport:
    """Chance-corrected agreement between two raters over the same items."""
    ratings_a = a.as_dict()
    ratings_b = b.as_dict()
    if not ratings_a:
        raise ValueError("cannot compute kappa over an empty item set")
    if set(ratings_a) != set(ratings_b):
        diff = sorted(set(ratings_a) ^ set(ratings_b), key=repr)
        raise ValueError(f"item sets differ between {a.rater_id} and {b.rater_id}: {diff}")

    n = len(ratings_a)
    matches = 0
    marginal_a: dict[str, int] = {}
    marginal_b: dict[str, int] = {}
    for item, label_a in ratings_a.items():
        label_b = ratings_b[item]
        if label_a == label_b:
            matches += 1
        marginal_a[label_a] = marginal_a.get(label_a, 0) + 1
        marginal_b[label_b] = marginal_b.get(label_b, 0) + 1

    p_o = matches / n
    # summed in sorted label order so kappa(a, b) == kappa(b, a) exactly
    p_e = sum(
        (marginal_a.get(label, 0) / n) * (marginal_b.get(label, 0) / n)
        for label in sorted(set(marginal_a) | set(marginal_b))
    )
    if p_e >= 1.0:
        # both raters constant on the same label; agreement is trivially total
        kappa = 1.0 if p_o >= 1.0 else 0.0
        return AgreementReport(a.rater_id, b.rater_id, p_o, p_e, kappa, n, degenerate=True)
    kappa = (p_o - p_e) / (1.0 - p_e)
    return AgreementReport(a.rater_id, b.rater_id, p_o, p_e, kappa, n)


def pairwise_kappa_matrix(raters: Sequence[RatingVector]) -> list[list[float]]:
    """Symmetric kappa matrix with 1.0 on the diagonal, one computation per pair."""
    if len(raters) < 2:
        raise ValueError("need at least 2 raters")
    size = len(raters)
    matrix = [[1.0] * size for _ in range(size)]
    for i in range(size):
        for j in range(i + 1, size):
            kappa = cohen_kappa(raters[i], raters[j]).kappa
            matrix[i][j] = kappa
            matrix[j][i] = kappa
    return matrix


def evaluate_gate(juror_kappas: Mapping[str, float], cfg: GateConfig | None = None) -> GateOutcome:
    """Pass iff some juror exceeds the excellent threshold and none falls
    below the substantial floor."""
    if not juror_kappas:
        raise ValueError("juror kappa map is empty")
    cfg = cfg or GateConfig()
    best = max(juror_kappas.values())
    problems = []
    if best <= cfg.excellent_threshold:
        problems.append(f"no juror exceeds {cfg.excellent_threshold:g}")
    low = sorted(
        juror
        for juror, kappa in juror_kappas.items()
        if kappa < cfg.substantial_threshold
    )
    if low:
        shown = ", ".join(f"{j} ({juror_kappas[j]:.2f})" for j in low)
        problems.append(f"below the {cfg.substantial_threshold:g} floor: {shown}")
    if problems:
        return GateOutcome(False, "; ".join(problems))
    top = max(juror_kappas, key=lambda j: juror_kappas[j])
    return GateOutcome(
        True,
        f"{top} reaches {juror_kappas[top]:.2f} > {cfg.excellent_threshold:g} and "
        f"all jurors >= {cfg.substantial_threshold:g}",
    )


def evaluate_jury_vs_human(golden: RatingVector, decisions: Iterable) -> AgreementReport:
    """Kappa between merged jury labels and the golden human labels.

    ``decisions`` are merged jury decisions carrying ``post_id``, ``labels``,
    and ``escalated``; every golden item must have a non-escalated decision.
    """
    by_post = {}
    escalated = []
    for decision in decisions:
        if decision.escalated:
            escalated.append(decision.post_id)
        by_post[decision.post_id] = decision

    golden_items = [item for item, _ in golden.ratings]
    missing = sorted(set(golden_items) - set(by_post), key=repr)
    bad = sorted(set(escalated) & set(golden_items), key=repr)
    if bad:
        raise ValueError(f"golden items with escalated decisions: {bad}")
    if missing:
        raise ValueError(f"golden items without decisions: {missing}")

    jury = RatingVector(
        "jury", tuple((item, by_post[item].labels) for item in golden_items)
    )
    return cohen_kappa(golden, jury)


def record_iteration(
    version: str,
    kappas: Mapping[str, float],
    outcome: GateOutcome,
    ledger: IterationLedger,
) -> LedgerEntry:
    """Append one gate evaluation; the first passing version freezes the ledger."""
    if ledger.frozen_version is not None and version == ledger.frozen_version:
        raise ValueError(f"version {version} is already frozen; open a new run to supersede it")
    entry = LedgerEntry(
        version=version,
        kappas=dict(kappas),
        passed=outcome.passed,
        reason=outcome.reason,
        seq=len(ledger.entries) + 1,
    )
    ledger.entries.append(entry)
    if outcome.passed and ledger.frozen_version is None:
        ledger.frozen_version = version
        logger.info("prompt version %s frozen", version)
    return entry


def require_frozen(ledger: IterationLedger, version: str) -> None:
    """Gate for full-dataset runs: only the frozen version may label."""
    if ledger.frozen_version is None:
        raise PromptNotFrozenError(
            "prompt not frozen: no version has passed the agreement gate"
        )
    if version != ledger.frozen_version:
        raise PromptNotFrozenError(
            f"prompt not frozen: {version} differs from frozen version "
            f"{ledger.frozen_version}"
        )


def load_ledger(path: str | Path) -> IterationLedger:
    ledger = IterationLedger()
    path = Path(path)
    if not path.is_file():
        return ledger
    for row in read_jsonl(path):
        entry = LedgerEntry(
            version=row["version"],
            kappas=dict(row["kappas"]),
            passed=bool(row["passed"]),
            reason=row.get("reason", ""),
            seq=int(row["seq"]),
        )
        ledger.entries.append(entry)
        if entry.passed and ledger.frozen_version is None:
            ledger.frozen_version = entry.version
    return ledger


def append_ledger_entry(path: str | Path, entry: LedgerEntry) -> None:
    append_jsonl(path, entry.to_row())
