"""Stage prompt templates, rendering, and content-addressed versioning.

Templates use ``string.Template`` placeholders ($vocabulary, $few_shot,
$chain_of_thought, $body) so that JSON braces in the format instructions need
no escaping. A prompt version is the digest of everything that changes model
behaviour: the template text, the few-shot examples, and the vocabulary.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from string import Template
from typing import Iterable

CHAIN_OF_THOUGHT = "Think through the post step by step before committing to labels."

RESPONSE_FORMAT = (
    'Respond with a single JSON object of the form '
    '{"labels": ["<label>", ...], "confidence": <number between 0 and 1>, '
    '"rationale": "<one short paragraph>"}.'
)

VERSION_DIGEST_CHARS = 16


class PromptTooLongError(Exception):
    """The post body exceeds the provider's context budget."""


@dataclass(frozen=True)
class PromptSpec:
    """Immutable prompt definition for one labelling stage."""

    id: str
    stage: str
    template: str
    few_shot: tuple[tuple[str, str], ...] = ()
    frozen: bool = False

    def freeze(self) -> "PromptSpec":
        return replace(self, frozen=True)


def load_prompt_spec(path: str | Path) -> PromptSpec:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return PromptSpec(
        id=data["id"],
        stage=data["stage"],
        template=data["template"],
        few_shot=tuple((ex[0], ex[1]) for ex in data.get("few_shot", [])),
        frozen=bool(data.get("frozen", False)),
    )


def prompt_version(spec: PromptSpec, vocabulary: Iterable[str]) -> str:
    """Digest of template + few-shot + vocabulary; stable across runs."""
    payload = json.dumps(
        {
            "template": spec.template,
            "few_shot": [list(pair) for pair in spec.few_shot],
            "vocabulary": sorted(vocabulary),
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:VERSION_DIGEST_CHARS]


def _vocabulary_block(vocabulary: Iterable[str]) -> str:
    return "\n".join(f"- {name}" for name in sorted(vocabulary))


def _few_shot_block(few_shot: tuple[tuple[str, str], ...]) -> str:
    blocks = []
    for excerpt, labelled in few_shot:
        blocks.append(f"Example post:\n{excerpt}\nExample response:\n{labelled}")
    return "\n\n".join(blocks)


def render_prompt(
    spec: PromptSpec,
    post,
    vocabulary: Iterable[str],
    max_chars: int | None = None,
) -> str:
    """Fill the template slots; deterministic for identical inputs."""
    vocabulary = list(vocabulary)
    if not vocabulary:
        raise ValueError("vocabulary is empty")
    body = post.body
    if max_chars is not None and len(body) > max_chars:
        raise PromptTooLongError(
            f"post too long: body is {len(body)} chars, budget is {max_chars}"
        )
    return Template(spec.template).substitute(
        vocabulary=_vocabulary_block(vocabulary),
        few_shot=_few_shot_block(spec.few_shot),
        chain_of_thought=CHAIN_OF_THOUGHT,
        body=body,
        response_format=RESPONSE_FORMAT,
    )
