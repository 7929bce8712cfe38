"""Guidance and expert adapters.

The guidance side (term alignment, question rendering, answer parsing) and
the expert side (final diagnosis text, update hints) are rule-based and fully
deterministic by default. Remote chat-completion adapters can be dropped in
for either role; they are plumbing only and nothing in the test suite needs
them or the network.
"""

import json
import os
import re
import time
from dataclasses import dataclass, field
from importlib import resources

import requests

from .errors import DataError, TransportError
from .kg import KnowledgeGraph

_WORD_RE = re.compile(r"[^a-z0-9]+")


def normalize_text(text: str) -> str:
    """Lowercase, fold every non-alphanumeric run into one space."""
    return _WORD_RE.sub(" ", text.lower()).strip()


@dataclass
class TermAliasTable:
    """Colloquial phrase -> symptom id, plus optional question phrasing.

    Keys are stored normalized. Identity aliases for the bound graph's own
    ids are added by for_graph(), so canonical tokens always align.
    """

    aliases: dict[str, str] = field(default_factory=dict)
    question_templates: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.aliases = {normalize_text(k): v for k, v in self.aliases.items()}
        # Anything the renderer can say must parse back to the same symptom,
        # so each question template doubles as an alias. Explicit aliases win
        # on collision.
        for symptom, phrase in self.question_templates.items():
            self.aliases.setdefault(normalize_text(phrase), symptom)

    @classmethod
    def for_graph(
        cls,
        g: KnowledgeGraph,
        aliases: dict[str, str] | None = None,
        question_templates: dict[str, str] | None = None,
    ) -> "TermAliasTable":
        table = cls(aliases=dict(aliases or {}), question_templates=dict(question_templates or {}))
        for s in g.symptoms:
            table.aliases.setdefault(normalize_text(s), s)
        table.validate(g)
        return table

    @classmethod
    def from_json(cls, path, g: KnowledgeGraph | None = None) -> "TermAliasTable":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if g is not None:
            return cls.for_graph(
                g,
                aliases=raw.get("aliases", {}),
                question_templates=raw.get("question_templates", {}),
            )
        return cls(
            aliases=raw.get("aliases", {}),
            question_templates=raw.get("question_templates", {}),
        )

    def validate(self, g: KnowledgeGraph) -> None:
        for phrase, target in self.aliases.items():
            if not g.has_symptom(target):
                raise DataError(f"alias {phrase!r} targets unknown symptom {target!r}")
        for target in self.question_templates:
            if not g.has_symptom(target):
                raise DataError(f"question template for unknown symptom {target!r}")

    def phrase_for(self, symptom: str) -> str:
        return self.question_templates.get(symptom, symptom)

    def phrases_of(self, symptom: str) -> list[str]:
        """Every normalized phrase that maps to this symptom, longest first."""
        phrases = {p for p, t in self.aliases.items() if t == symptom}
        phrases.add(normalize_text(self.phrase_for(symptom)))
        return sorted(phrases, key=lambda p: (-len(p), p))


def _find_spans(haystack: str, phrase: str) -> list[tuple[int, int]]:
    # Whole-word matches only; haystack and phrase are both normalized.
    spans = []
    start = 0
    while True:
        idx = haystack.find(phrase, start)
        if idx < 0:
            return spans
        end = idx + len(phrase)
        left_ok = idx == 0 or haystack[idx - 1] == " "
        right_ok = end == len(haystack) or haystack[end] == " "
        if left_ok and right_ok:
            spans.append((idx, end))
        start = idx + 1


def align_terms(table: TermAliasTable, text: str) -> set[str]:
    """Extract symptom ids from free text by longest-match alias lookup.

    Matched spans are consumed so a shorter alias never fires inside a longer
    one ("stomach ache" wins over "ache"). Unknown phrases are ignored.
    """
    norm = normalize_text(text)
    if not norm:
        return set()
    consumed = [False] * len(norm)
    found: set[str] = set()
    for phrase in sorted(table.aliases, key=lambda p: (-len(p), p)):
        if not phrase:
            continue
        for start, end in _find_spans(norm, phrase):
            if any(consumed[start:end]):
                continue
            found.add(table.aliases[phrase])
            for i in range(start, end):
                consumed[i] = True
    return found


def render_question(batch, table: TermAliasTable) -> str:
    """One natural-language question enumerating the batch, in batch order."""
    symptoms = list(batch.symptoms)
    if not symptoms:
        raise DataError("cannot render an empty batch")
    phrases = [table.phrase_for(s) for s in symptoms]
    listing = "; ".join(phrases)
    return f"Do you currently experience any of the following: {listing}? Please answer for each."


@dataclass
class CueLexicon:
    """Affirmation/negation vocabulary for the rule-based answer parser.

    Shipped as a JSON data file so it can be swapped per language without
    touching code.
    """

    affirm: list[str]
    negate: list[str]
    affirm_all: list[str]
    negate_all: list[str]

    def __post_init__(self):
        self.affirm = [normalize_text(c) for c in self.affirm]
        self.negate = [normalize_text(c) for c in self.negate]
        self.affirm_all = [normalize_text(c) for c in self.affirm_all]
        self.negate_all = [normalize_text(c) for c in self.negate_all]

    @classmethod
    def default(cls) -> "CueLexicon":
        raw = json.loads(resources.files("dopi.data").joinpath("cues.json").read_text())
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "CueLexicon":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(**json.load(fh))


_CLAUSE_SPLIT = re.compile(r"[.,;!?]| but | and also ")


def _contains_cue(clause_norm: str, cues: list[str]) -> bool:
    return any(_find_spans(clause_norm, cue) for cue in cues if cue)


def parse_answer(text: str, batch, table: TermAliasTable, cues: CueLexicon | None = None) -> dict:
    """Map a free-text reply onto the outstanding batch.

    Per-symptom polarity comes from negation/affirmation cues in the clause
    that mentions the symptom; all-scope cues ("yes to all", "none") cover
    unmentioned symptoms; anything undecidable is Unsure. Output keys are
    always a subset of the batch.
    """
    from .engine import Answer

    cues = cues or CueLexicon.default()
    clauses = [normalize_text(c) for c in _CLAUSE_SPLIT.split(text) if normalize_text(c)]
    whole = normalize_text(text)

    all_polarity = None
    if _contains_cue(whole, cues.negate_all):
        all_polarity = Answer.ABSENT
    elif _contains_cue(whole, cues.affirm_all):
        all_polarity = Answer.PRESENT

    scoped: dict[str, "Answer"] = {}
    for symptom in batch.symptoms:
        for clause in clauses:
            hit = None
            for phrase in table.phrases_of(symptom):
                if phrase and _find_spans(clause, phrase):
                    hit = phrase
                    break
            if hit is None:
                continue
            if _contains_cue(clause, cues.negate):
                scoped[symptom] = Answer.ABSENT
            else:
                scoped[symptom] = Answer.PRESENT
            break

    if all_polarity is None and not scoped and whole:
        # A reply that is nothing but a bare cue ("yes", "nope") scopes to
        # the whole batch.
        if whole in cues.negate:
            all_polarity = Answer.ABSENT
        elif whole in cues.affirm:
            all_polarity = Answer.PRESENT

    result = {}
    for symptom in batch.symptoms:
        if symptom in scoped:
            result[symptom] = scoped[symptom]
        elif all_polarity is not None:
            result[symptom] = all_polarity
        else:
            result[symptom] = Answer.UNSURE
    return result


@dataclass(frozen=True)
class ExpertReply:
    disease: str
    advice_text: str
    update_hints: tuple | None = None  # ((symptom, +1 | -1), ...) or None


_GENERIC_ADVICE = (
    "Findings are most consistent with {disease} (confidence {confidence:.2f}). "
    "Reported symptoms: {present}. Ruled out: {absent}. "
    "Please seek a qualified practitioner to confirm this assessment."
)


def rule_based_diagnose(recorder, ranking, advice_templates: dict[str, str] | None = None) -> ExpertReply:
    """Deterministic default expert: top-ranked disease plus templated advice."""
    if not ranking:
        raise DataError("cannot diagnose against an empty ranking")
    disease, confidence = ranking[0]
    template = (advice_templates or {}).get(disease, _GENERIC_ADVICE)
    advice = template.format(
        disease=disease,
        confidence=confidence,
        present=", ".join(sorted(recorder.present)) or "none",
        absent=", ".join(sorted(recorder.absent)) or "none",
    )
    return ExpertReply(disease=disease, advice_text=advice)


class RuleBasedGuidance:
    """Default guidance adapter: alignment, rendering, parsing. Stateless."""

    provenance = "rule_based"

    def __init__(self, table: TermAliasTable, cues: CueLexicon | None = None):
        self.table = table
        self.cues = cues or CueLexicon.default()

    def align(self, text: str) -> set[str]:
        return align_terms(self.table, text)

    def render_question(self, batch) -> str:
        return render_question(batch, self.table)

    def parse_answer(self, text: str, batch) -> dict:
        return parse_answer(text, batch, self.table, self.cues)


class RuleBasedExpert:
    provenance = "rule_based"

    def __init__(self, advice_templates: dict[str, str] | None = None):
        self.advice_templates = advice_templates

    def diagnose(self, recorder, ranking) -> ExpertReply:
        return rule_based_diagnose(recorder, ranking, self.advice_templates)


@dataclass(frozen=True)
class RemoteAdapterConfig:
    endpoint: str
    timeout_ms: int = 5000
    credential_env: str | None = None
    retries: int = 1
    model: str = "default"

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise DataError(f"timeout_ms must be positive, got {self.timeout_ms}")
        if self.retries < 0:
            raise DataError(f"retries must be >= 0, got {self.retries}")


def remote_complete(config: RemoteAdapterConfig, role_prompt: str, payload: str) -> str:
    """Single chat-completion round trip: {model, messages[]} -> {text}.

    Retries up to config.retries extra attempts; any exhaustion surfaces as
    TransportError so callers can fall back to the rule-based path. The
    credential is read from the environment at call time, never stored.
    """
    headers = {"Content-Type": "application/json"}
    if config.credential_env:
        token = os.environ.get(config.credential_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": config.model,
        "messages": [
            {"role": "system", "content": role_prompt},
            {"role": "user", "content": payload},
        ],
    }
    last_error: Exception | None = None
    for attempt in range(config.retries + 1):
        try:
            resp = requests.post(
                config.endpoint,
                json=body,
                headers=headers,
                timeout=config.timeout_ms / 1000.0,
            )
            resp.raise_for_status()
            return resp.json()["text"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            last_error = exc
            if attempt < config.retries:
                time.sleep(min(0.05 * (attempt + 1), 0.5))
    raise TransportError(
        f"remote completion failed after {config.retries + 1} attempts: {last_error}"
    )


class RemoteExpert:
    """Expert adapter backed by a chat-completion endpoint.

    The remote reply must be a JSON object naming a ranked disease; anything
    else raises so the engine degrades to the rule-based fallback.
    """

    provenance = "remote"

    ROLE_PROMPT = (
        "You are a diagnostic assistant. Reply with a JSON object "
        '{"disease": <id from the candidate list>, "advice": <short text>}.'
    )

    def __init__(self, config: RemoteAdapterConfig):
        self.config = config

    def diagnose(self, recorder, ranking) -> ExpertReply:
        payload = json.dumps(
            {
                "present": sorted(recorder.present),
                "absent": sorted(recorder.absent),
                "candidates": [{"disease": d, "similarity": s} for d, s in ranking[:5]],
            },
            sort_keys=True,
        )
        text = remote_complete(self.config, self.ROLE_PROMPT, payload)
        reply = json.loads(text)
        disease = reply["disease"]
        if not any(d == disease for d, _ in ranking):
            raise DataError(f"remote expert named unranked disease {disease!r}")
        return ExpertReply(disease=disease, advice_text=reply.get("advice", ""))
