"""Eliciting spatial labels from a chat-completion style LLM endpoint.

The prompt asks the model to act as a native speaker of the target language,
shows it reference labels from another language, and asks for one spatial
term per scene as a numbered list. Requests go through a provider profile
(JSON) describing URL, model, credential variable and body template, so a new
provider is a config file rather than code.

Raw responses are cached under ``<cache_dir>/<key>.response`` next to the
request body ``<key>.request``. Cache writes go to a temp file and are then
renamed, so concurrent writers never leave a torn file.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .labels import Highlight, LabelTable, SceneManifest, normalize_label

log = logging.getLogger(__name__)

LANGUAGE_NAMES = {
    "en": "English",
    "zh": "Chinese",
    "yue": "Cantonese",
    "nl": "Dutch",
    "fr": "French",
    "ja": "Japanese",
    "ko": "Korean",
    "es": "Spanish",
    "pt": "Portuguese",
    "ro": "Romanian",
    "de": "German",
    "it": "Italian",
    "hi": "Hindi",
    "ru": "Russian",
    "tr": "Turkish",
    "ar": "Arabic",
    "he": "Hebrew",
    "fi": "Finnish",
    "hu": "Hungarian",
    "pl": "Polish",
    "sv": "Swedish",
    "da": "Danish",
    "no": "Norwegian",
    "th": "Thai",
    "vi": "Vietnamese",
    "id": "Indonesian",
    "el": "Greek",
    "cs": "Czech",
}

DOCUMENT_NAME = "scenes.pdf"
MAX_ATTEMPTS = 5


class ElicitationError(RuntimeError):
    pass


class CredentialError(ElicitationError):
    pass


class TransportError(ElicitationError):
    pass


class ResponseParseError(ElicitationError):
    def __init__(self, message: str, line: int | None = None, raw: str | None = None, path: Path | None = None):
        self.line = line
        self.raw = raw
        self.path = path
        if line is not None:
            message = f"line {line}: {message}: {raw!r}"
        super().__init__(message)


def language_name(code: str) -> str:
    try:
        return LANGUAGE_NAMES[code]
    except KeyError:
        raise ValueError(f"no display name known for language {code!r}; pass one explicitly") from None


def reference_policy(target: str) -> str:
    """Reference language for a target: Chinese for English, English otherwise."""
    return "zh" if target == "en" else "en"


# ---------------------------------------------------------------------------
# provider profile


@dataclass(frozen=True)
class ProviderProfile:
    name: str
    base_url: str
    model: str
    api_key_env: str
    body: Mapping[str, Any]
    response_path: tuple = ("choices", 0, "message", "content")
    headers: Mapping[str, str] = field(
        default_factory=lambda: {"Authorization": "Bearer {{api_key}}", "Content-Type": "application/json"}
    )

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ProviderProfile":
        try:
            return cls(
                name=d.get("name", d["model"]),
                base_url=d["base_url"],
                model=d["model"],
                api_key_env=d["api_key_env"],
                body=d["body"],
                response_path=tuple(d.get("response_path", cls.response_path)),
                headers=d.get("headers") or {"Authorization": "Bearer {{api_key}}", "Content-Type": "application/json"},
            )
        except KeyError as e:
            raise ValueError(f"provider profile is missing {e.args[0]!r}") from None

    @classmethod
    def load(cls, path: str | Path) -> "ProviderProfile":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_profile(model: str = "gemini-3-flash", base_url: str = "https://llm.invalid/v1/chat/completions") -> ProviderProfile:
    return ProviderProfile(
        name="chat-completions",
        base_url=base_url,
        model=model,
        api_key_env="LLM_API_KEY",
        body={
            "model": "{{model}}",
            "temperature": "{{temperature}}",
            "messages": [{"role": "user", "content": "{{prompt}}"}],
            "attachments": "{{attachments}}",
        },
    )


def _fill(template: Any, values: Mapping[str, Any]) -> Any:
    if isinstance(template, dict):
        return {k: _fill(v, values) for k, v in template.items()}
    if isinstance(template, list):
        return [_fill(v, values) for v in template]
    if isinstance(template, str):
        m = re.fullmatch(r"\{\{(\w+)\}\}", template)
        if m and m.group(1) in values:
            return values[m.group(1)]
        return re.sub(r"\{\{(\w+)\}\}", lambda mm: str(values.get(mm.group(1), mm.group(0))), template)
    return template


# ---------------------------------------------------------------------------
# prompt


@dataclass(frozen=True)
class ElicitationSpec:
    target_language: str
    reference_labels: tuple[str, ...]
    manifest: SceneManifest
    provider: ProviderProfile
    target_name: str | None = None
    reference_language: str | None = None
    reference_name: str | None = None
    text_only: bool = False
    temperature: float = 0.0
    document: str = DOCUMENT_NAME

    def __post_init__(self):
        object.__setattr__(self, "reference_labels", tuple(self.reference_labels))
        if self.reference_language is None:
            object.__setattr__(self, "reference_language", reference_policy(self.target_language))
        if self.target_name is None:
            object.__setattr__(self, "target_name", language_name(self.target_language))
        if self.reference_name is None:
            object.__setattr__(self, "reference_name", language_name(self.reference_language))


@dataclass(frozen=True)
class PromptDoc:
    text: str
    attachment: str | None
    digest: str

    def canonical_bytes(self) -> bytes:
        return _canonical_prompt(self.text, self.attachment)


def _canonical_prompt(text: str, attachment: str | None) -> bytes:
    return json.dumps({"attachment": attachment, "text": text}, ensure_ascii=False, sort_keys=True).encode("utf-8")


_HIGHLIGHT_SENTENCE = {
    Highlight.GOLD: "From image {a} to image {b}, the focal object is gold and the background object is black.",
    Highlight.YELLOW_ARROW: (
        "From image {a} to image {b}, the focal object is yellow and indicated by an arrow, "
        "and the background object is black or blue."
    ),
    Highlight.RED_ARROW: "From image {a} to image {b}, the focal object is indicated by a red arrow.",
}


def _article(word: str) -> str:
    return "An" if word[:1].upper() in "AEIOU" else "A"


def build_prompt(spec: ElicitationSpec) -> PromptDoc:
    manifest = spec.manifest
    if len(spec.reference_labels) != len(manifest):
        raise ValueError(
            f"{len(spec.reference_labels)} reference labels for a {len(manifest)}-scene manifest"
        )
    for k, lab in enumerate(spec.reference_labels):
        if not lab or not lab.strip():
            raise ValueError(f"missing reference label for image {manifest.records[k].page_number}")
    if spec.target_language == spec.reference_language:
        raise ValueError("target and reference language are the same")

    target, ref, doc = spec.target_name, spec.reference_name, spec.document
    highlights = " ".join(_HIGHLIGHT_SENTENCE[hl].format(a=a, b=b) for a, b, hl in manifest.highlight_runs())
    refs = "; ".join(f'{r.page_number}) "{lab.strip()}"' for r, lab in zip(manifest.records, spec.reference_labels))
    text = (
        f"You are a native speaker of {target} and I'd like you to respond in {target}. "
        f"Your task is to label the spatial relationships shown in a set of images. "
        f"Here is a set of images that I'll call {doc}. "
        f"Each image shows a focal object and a background object. "
        f"{highlights} "
        f"{_article(ref)} {ref} speaker used the following spatial terms to describe the relationship "
        f"between the focal object and the background object in each image: {refs}. "
        f"I'd like you to label the same images in {doc}. "
        f"For each image in {doc}, please give me the spatial term in {target} that best describes "
        f"the relationship between the focal object and the background object. "
        f"For each image, please respond using a single spatial term instead of a full sentence. "
        f"And please do not translate the responses I gave you in {ref}! "
        f"Instead, I'd like you to respond as a native {target} speaker would. "
        f"Your responses (one for each image in {doc}) should be organized into a numbered list."
    )
    attachment: str | None = doc
    if spec.text_only:
        attachment = None
        lines = [
            f"image {r.page_number} — focal object: {r.focal_object}; background object: {r.background_object}"
            for r in manifest.records
        ]
        text = text + f"\n\nContents of {doc}:\n" + "\n".join(lines)
    return PromptDoc(text, attachment, hashlib.sha256(_canonical_prompt(text, attachment)).hexdigest())


# ---------------------------------------------------------------------------
# numbered lists

_LINE = re.compile(r"^\s*(\d+)\s*[).:]\s*(.*?)\s*$")
_QUOTES = {'"': '"', "“": "”", "'": "'", "「": "」", "‘": "’"}


def format_numbered_list(labels: Sequence[str]) -> str:
    return "\n".join(f'{k}) "{lab}"' for k, lab in enumerate(labels, 1))


def _unquote(s: str) -> str:
    if len(s) >= 2 and s[0] in _QUOTES and s[-1] == _QUOTES[s[0]]:
        return s[1:-1]
    return s


def parse_numbered_response(text: str, expected_n: int) -> list[str]:
    """Parse ``N) label`` / ``N. label`` / ``N: label`` lines into normalized labels."""
    if expected_n < 1:
        raise ValueError("expected_n must be >= 1")
    labels = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        m = _LINE.match(line)
        if not m:
            raise ResponseParseError("unparseable line", lineno, line)
        num = int(m.group(1))
        if num != len(labels) + 1:
            raise ResponseParseError(f"expected item {len(labels) + 1}, found {num}", lineno, line)
        body = _unquote(m.group(2).strip())
        if not body.strip():
            raise ResponseParseError("empty label", lineno, line)
        labels.append(normalize_label(body))
    if len(labels) != expected_n:
        raise ResponseParseError(f"expected {expected_n} items, found {len(labels)}")
    return labels


# ---------------------------------------------------------------------------
# cache and transport


def cache_key(spec: ElicitationSpec, prompt: PromptDoc) -> str:
    payload = {
        "base_url": spec.provider.base_url,
        "model": spec.provider.model,
        "temperature": repr(float(spec.temperature)),
        "prompt_digest": prompt.digest,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


Transport = Callable[[str, Mapping[str, str], bytes], bytes]


def urllib_transport(url: str, headers: Mapping[str, str], body: bytes, timeout: float = 300.0) -> bytes:
    req = urllib.request.Request(url, data=body, headers=dict(headers), method="POST")
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.read()
    except (urllib.error.URLError, TimeoutError, ConnectionError) as e:
        raise TransportError(f"request to {url} failed: {e}") from e


def request_body(spec: ElicitationSpec, prompt: PromptDoc) -> bytes:
    values = {
        "model": spec.provider.model,
        "temperature": float(spec.temperature),
        "prompt": prompt.text,
        "attachments": [prompt.attachment] if prompt.attachment else [],
    }
    return json.dumps(_fill(dict(spec.provider.body), values), ensure_ascii=False, sort_keys=True).encode("utf-8")


def extract_content(raw: bytes, path: Sequence) -> str:
    try:
        node: Any = json.loads(raw.decode("utf-8"))
        for step in path:
            node = node[step]
    except (ValueError, KeyError, IndexError, TypeError) as e:
        raise ResponseParseError(f"response does not contain {list(path)}: {e!r}") from None
    if not isinstance(node, str):
        raise ResponseParseError(f"response field {list(path)} is not text")
    return node


def _submit(url, headers, body, transport: Transport, sleep, attempts=MAX_ATTEMPTS, backoff=1.0) -> bytes:
    delay = backoff
    for attempt in range(1, attempts + 1):
        try:
            return transport(url, headers, body)
        except (TransportError, OSError) as e:
            if attempt == attempts:
                raise TransportError(f"giving up after {attempts} attempts: {e}") from e
            log.warning("attempt %d/%d failed (%s); retrying in %.1fs", attempt, attempts, e, delay)
            sleep(delay)
            delay *= 2
    raise AssertionError("unreachable")


class RateLimiter:
    """Minimum interval between request starts, shared across threads."""

    def __init__(self, interval: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = interval
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self):
        with self._lock:
            now = self._clock()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            self._sleep(start - now)


def run_elicitation(
    spec: ElicitationSpec,
    cache_dir: str | Path,
    dry_run: bool = False,
    transport: Transport | None = None,
    environ: Mapping[str, str] | None = None,
    sleep: Callable[[float], None] = time.sleep,
    limiter: RateLimiter | None = None,
) -> LabelTable | None:
    """Label every manifest scene in the target language with one model call.

    ``dry_run`` writes the prompt and request body to the cache directory and
    returns None without touching the network. A cached response is reused
    as-is. A response that fails to parse is kept as ``<key>.response.failed``.
    """
    cache_dir = Path(cache_dir)
    prompt = build_prompt(spec)
    key = cache_key(spec, prompt)
    body = request_body(spec, prompt)
    req_path = cache_dir / f"{key}.request"
    resp_path = cache_dir / f"{key}.response"

    if dry_run:
        _atomic_write(req_path, body)
        _atomic_write(cache_dir / f"{key}.prompt.txt", prompt.text.encode("utf-8"))
        log.info("dry run: prompt %s written to %s", prompt.digest[:12], cache_dir)
        return None

    if resp_path.exists():
        raw = resp_path.read_bytes()
        log.info("cache hit %s", key[:12])
    else:
        environ = os.environ if environ is None else environ
        api_key = environ.get(spec.provider.api_key_env)
        if not api_key:
            raise CredentialError(f"environment variable {spec.provider.api_key_env} is not set")
        headers = _fill(dict(spec.provider.headers), {"api_key": api_key})
        _atomic_write(req_path, body)
        if limiter is not None:
            limiter.wait()
        raw = _submit(spec.provider.base_url, headers, body, transport or urllib_transport, sleep)
        _atomic_write(resp_path, raw)

    try:
        labels = parse_numbered_response(extract_content(raw, spec.provider.response_path), len(spec.manifest))
    except ResponseParseError as e:
        failed = cache_dir / f"{key}.response.failed"
        _atomic_write(failed, raw)
        if resp_path.exists():
            resp_path.unlink()
        e.path = failed
        raise
    return LabelTable.from_records(
        (r.scene_id, spec.target_language, spec.provider.model, lab) for r, lab in zip(spec.manifest.records, labels)
    )


def run_many(
    specs: Sequence[ElicitationSpec],
    cache_dir: str | Path,
    max_in_flight: int = 4,
    min_interval: float = 0.5,
    **kwargs,
) -> list[LabelTable | None]:
    """Run several elicitations with bounded concurrency and a per-provider request interval."""
    limiters: dict[str, RateLimiter] = {}
    for s in specs:
        limiters.setdefault(s.provider.base_url, RateLimiter(min_interval))
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        futures = [
            pool.submit(run_elicitation, s, cache_dir, limiter=limiters[s.provider.base_url], **kwargs) for s in specs
        ]
        return [f.result() for f in futures]
