"""Pairwise quality judging with permutation averaging, plus perplexity.

A judge backend answers a single question: given a context and two
candidate texts presented as A and B, how likely is A the better one?
The core never trusts a single presentation order; every comparison is
averaged over both permutations, which forces identical texts to score
exactly 0.5 and makes the comparison antisymmetric.

Backends: a likelihood judge built on the toy LM (deterministic, offline),
plus external clients speaking the wire protocol (HTTP POST /judge or
newline-delimited JSON over a subprocess pipe).
"""

from __future__ import annotations

import itertools
import json
import math
import subprocess
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import DomainError, ProtocolError, TransportError
from .toy_lm import NGramLM, log_likelihood

TASK_TAGS = ("summary", "translation", "generic")


@dataclass(frozen=True)
class ComparisonRequest:
    context: str
    candidate_a: str
    candidate_b: str
    task_tag: str = "generic"

    def __post_init__(self):
        if not self.candidate_a or not self.candidate_b:
            raise DomainError("comparison candidates must be non-empty")
        if self.task_tag not in TASK_TAGS:
            raise DomainError(f"unknown task tag {self.task_tag!r}")


@dataclass(frozen=True)
class QualityScore:
    s_q: float
    n_samples: int
    per_sample: tuple

    def to_json(self) -> dict:
        return {
            "s_q": self.s_q,
            "n_samples": self.n_samples,
            "per_sample": list(self.per_sample),
        }


class JudgeBackend(ABC):
    """Contract: raw_preference returns P(A better | presented order).

    Implementations own any internal normalization; the value returned
    must already be a probability in [0, 1]. max_in_flight declares how
    many concurrent requests the backend tolerates (1 = serial only).
    """

    supported_tasks: frozenset = frozenset(TASK_TAGS)
    max_in_flight: int = 1

    @abstractmethod
    def raw_preference(self, request: ComparisonRequest) -> float:
        ...

    def supports(self, task_tag: str) -> bool:
        return task_tag in self.supported_tasks


def _checked_pref(backend: JudgeBackend, req: ComparisonRequest) -> float:
    p = backend.raw_preference(req)
    if not 0.0 <= p <= 1.0:
        raise ProtocolError(f"backend preference {p} outside [0, 1]")
    return p


def pairwise_prob(
    backend: JudgeBackend, context: str, y1: str, y2: str,
    task_tag: str = "generic",
) -> float:
    """P(quality(y1) > quality(y2) | context), averaged over both orders."""
    if not backend.supports(task_tag):
        raise DomainError(f"backend does not support task {task_tag!r}")
    p_fwd = _checked_pref(backend, ComparisonRequest(context, y1, y2, task_tag))
    p_rev = _checked_pref(backend, ComparisonRequest(context, y2, y1, task_tag))
    return 0.5 * (p_fwd + (1.0 - p_rev))


@dataclass
class PartialResults(Exception):
    """Raised when a backend fails mid-corpus; carries what completed."""

    completed: list
    failed_index: int
    cause: Exception

    def __str__(self):
        return (
            f"judge backend failed on pair {self.failed_index} "
            f"after {len(self.completed)} comparisons: {self.cause}"
        )


def corpus_quality(
    backend: JudgeBackend,
    pairs: Sequence[tuple],
    task_tag: str = "generic",
) -> QualityScore:
    """Mean pairwise probability that the watermarked text wins.

    pairs are (context, y_wm, y_base); the watermarked text is always the
    y1 argument, so s_q > 0.5 means the judge prefers watermarked output.
    """
    pairs = list(pairs)
    if not pairs:
        raise DomainError("corpus_quality requires at least one pair")
    per_sample = []
    for i, (context, y_wm, y_base) in enumerate(pairs):
        try:
            per_sample.append(pairwise_prob(backend, context, y_wm, y_base, task_tag))
        except (TransportError, DomainError) as exc:
            raise PartialResults(completed=per_sample, failed_index=i, cause=exc)
    return QualityScore(
        s_q=sum(per_sample) / len(per_sample),
        n_samples=len(per_sample),
        per_sample=tuple(per_sample),
    )


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def default_tokenizer(text: str) -> list:
    """Parse whitespace-separated token ids; the toy pipeline's 'text'."""
    try:
        return [int(tok) for tok in text.split()]
    except ValueError as exc:
        raise DomainError(f"cannot tokenize {text!r}: {exc}") from exc


@dataclass
class LikelihoodJudge(JudgeBackend):
    """Prefers the candidate with higher per-token LM log-likelihood.

    Length normalization avoids rewarding or punishing output length; the
    preference is a logistic of the scaled per-token likelihood gap, so it
    depends only on the unordered pair and is permutation-consistent by
    construction.
    """

    lm: NGramLM
    tokenizer: Callable = default_tokenizer
    scale: float = 1.0
    supported_tasks: frozenset = frozenset(TASK_TAGS)
    max_in_flight: int = 64  # pure function of inputs; fully reentrant

    def __post_init__(self):
        if self.scale <= 0:
            raise DomainError(f"scale={self.scale} must be > 0")

    def _ll_per_token(self, context: str, text: str) -> float:
        tokens = self.tokenizer(text)
        if not tokens:
            raise DomainError("candidate tokenized to an empty sequence")
        prompt = self.tokenizer(context) if context else []
        return log_likelihood(self.lm, tokens, prompt) / len(tokens)

    def raw_preference(self, request: ComparisonRequest) -> float:
        gap = self._ll_per_token(request.context, request.candidate_a) \
            - self._ll_per_token(request.context, request.candidate_b)
        return _logistic(self.scale * gap)


def likelihood_judge(
    lm: NGramLM, tokenizer: Callable = default_tokenizer, scale: float = 1.0
) -> LikelihoodJudge:
    return LikelihoodJudge(lm=lm, tokenizer=tokenizer, scale=scale)


def perplexity_metric(
    lm: NGramLM,
    texts: Sequence[Sequence[int]],
    prompts: Optional[Sequence[Sequence[int]]] = None,
) -> float:
    """Corpus perplexity: exp of pooled negative log-likelihood per token.

    prompts, when given, condition each text (one prompt per text) without
    contributing to the token count.
    """
    texts = [list(t) for t in texts]
    if not texts or all(len(t) == 0 for t in texts):
        raise DomainError("perplexity of an empty corpus is undefined")
    if prompts is None:
        prompts = [()] * len(texts)
    total_ll = 0.0
    total_tokens = 0
    for text, prompt in zip(texts, prompts):
        total_ll += log_likelihood(lm, text, prompt)
        total_tokens += len(text)
    return math.exp(-total_ll / total_tokens)


# --- external backends (wire protocol shared with the bridge) ---------------

_request_ids = itertools.count(1)


def _judge_payload(req: ComparisonRequest, rid: str) -> dict:
    return {
        "id": rid,
        "type": "judge",
        "task": req.task_tag,
        "context": req.context,
        "a": req.candidate_a,
        "b": req.candidate_b,
    }


def _parse_judge_response(obj: dict, rid: str) -> float:
    if obj.get("id") != rid:
        raise ProtocolError(f"response id {obj.get('id')!r} != request id", rid)
    if "error" in obj:
        raise TransportError(f"backend error: {obj['error']}", rid)
    try:
        p = float(obj["p_a"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed judge response: {exc}", rid) from exc
    if not 0.0 <= p <= 1.0:
        raise ProtocolError(f"p_a={p} outside [0, 1]", rid)
    return p


class HttpJudgeClient(JudgeBackend):
    """Judge backend over HTTP POST; requests retried idempotently."""

    def __init__(self, url: str, retries: int = 3, timeout: float = 30.0):
        self.url = url
        self.retries = retries
        self.timeout = timeout

    def raw_preference(self, request: ComparisonRequest) -> float:
        import requests

        rid = f"req-{next(_request_ids)}"
        payload = _judge_payload(request, rid)
        last = None
        for _ in range(max(1, self.retries)):
            try:
                resp = requests.post(self.url, json=payload, timeout=self.timeout)
                resp.raise_for_status()
                return _parse_judge_response(resp.json(), rid)
            except ProtocolError:
                raise
            except Exception as exc:  # connection/timeouts/HTTP errors
                last = exc
        raise TransportError(f"judge endpoint unreachable: {last}", rid)


class StdioJudgeClient(JudgeBackend):
    """Backend spoken to over newline-delimited JSON on a subprocess pipe.

    Also exposes the wire protocol's generate request for callers that
    drive an external generator. Serial: one request in flight.
    """

    max_in_flight = 1

    def __init__(self, argv: Sequence[str], timeout: float = 60.0):
        self.argv = list(argv)
        self.timeout = timeout
        self._proc = None
        self.capabilities = None

    def _ensure_proc(self):
        if self._proc is not None and self._proc.poll() is None:
            return
        self._proc = subprocess.Popen(
            self.argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
        )

    def _roundtrip(self, payload: dict) -> dict:
        rid = payload["id"]
        self._ensure_proc()
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
            while True:
                line = self._proc.stdout.readline()
                if not line:
                    raise TransportError("backend closed the stream", rid)
                obj = json.loads(line)
                if obj.get("type") == "hello":
                    self.capabilities = obj
                    continue  # handshake, not a response
                return obj
        except (BrokenPipeError, json.JSONDecodeError) as exc:
            raise TransportError(f"stdio backend failure: {exc}", rid) from exc

    def raw_preference(self, request: ComparisonRequest) -> float:
        rid = f"req-{next(_request_ids)}"
        return _parse_judge_response(
            self._roundtrip(_judge_payload(request, rid)), rid
        )

    def generate(self, prompt: str, wm: Optional[dict], max_tokens: int) -> dict:
        """Send a generate request; returns {"token_ids": [...], "text": ...}."""
        rid = f"req-{next(_request_ids)}"
        obj = self._roundtrip({
            "id": rid,
            "type": "generate",
            "prompt": prompt,
            "wm": wm,
            "max_tokens": max_tokens,
        })
        if obj.get("id") != rid:
            raise ProtocolError(f"response id {obj.get('id')!r} != request id", rid)
        if "error" in obj:
            raise TransportError(f"backend error: {obj['error']}", rid)
        if "token_ids" not in obj:
            raise ProtocolError("generate response missing token_ids", rid)
        return obj

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)


def external_judge_client(endpoint) -> JudgeBackend:
    """Build a wire-protocol backend from an endpoint descriptor.

    Accepts an http(s) URL, a {"kind": "http", "url": ...} dict, or a
    {"kind": "stdio", "argv": [...]} dict.
    """
    if isinstance(endpoint, str):
        if endpoint.startswith(("http://", "https://")):
            return HttpJudgeClient(endpoint)
        raise DomainError(f"unrecognized endpoint {endpoint!r}")
    kind = endpoint.get("kind")
    if kind == "http":
        return HttpJudgeClient(
            endpoint["url"],
            retries=int(endpoint.get("retries", 3)),
            timeout=float(endpoint.get("timeout", 30.0)),
        )
    if kind == "stdio":
        return StdioJudgeClient(endpoint["argv"],
                                timeout=float(endpoint.get("timeout", 60.0)))
    raise DomainError(f"unrecognized endpoint kind {kind!r}")
