"""Jury labelling: prompts, providers, verdict collection, and voting."""

from .prompts import (
    CHAIN_OF_THOUGHT,
    RESPONSE_FORMAT,
    PromptSpec,
    PromptTooLongError,
    load_prompt_spec,
    prompt_version,
    render_prompt,
)
from .providers import (
    HttpProvider,
    PromptRequest,
    Provider,
    ProviderError,
    RecordingProvider,
    ReplayProvider,
    api_key_env,
    response_fixture_name,
)
from .verdicts import (
    ConfidenceStats,
    JurorVerdict,
    NormalizedVerdict,
    VerdictParseError,
    collect_verdict,
    normalize_confidences,
    parse_response,
)
from .voting import (
    Z_EPSILON,
    JuryDecision,
    escalate_unresolved,
    resolve_escalation,
    vote_multi,
    vote_single,
)

__all__ = [
    "CHAIN_OF_THOUGHT",
    "RESPONSE_FORMAT",
    "PromptSpec",
    "PromptTooLongError",
    "load_prompt_spec",
    "prompt_version",
    "render_prompt",
    "HttpProvider",
    "PromptRequest",
    "Provider",
    "ProviderError",
    "RecordingProvider",
    "ReplayProvider",
    "api_key_env",
    "response_fixture_name",
    "ConfidenceStats",
    "JurorVerdict",
    "NormalizedVerdict",
    "VerdictParseError",
    "collect_verdict",
    "normalize_confidences",
    "parse_response",
    "Z_EPSILON",
    "JuryDecision",
    "escalate_unresolved",
    "resolve_escalation",
    "vote_multi",
    "vote_single",
]
