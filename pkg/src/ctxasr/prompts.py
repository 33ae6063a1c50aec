"""Language-specific and context-enhanced text prompts.

Each language has four templates. Which one is used depends only on which
neighbors exist: a middle turn gets the bidirectional template, the first
and last turns get the matching half template, and a lone turn gets the
plain instruction.

The shipped non-English templates are translations of the English ones and
live in ``data/default_catalog.json``; pass a catalog file to override any
of them.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Mapping

from .corpus import LANGUAGES, ContextWindow, Language, LanguageCode
from .errors import CatalogError
from .text import graphemes


class PromptVariant(str, Enum):
    NO_CONTEXT = "no_context"
    HISTORY_ONLY = "history_only"
    FUTURE_ONLY = "future_only"
    BIDIRECTIONAL = "bidirectional"


_REQUIRED_PLACEHOLDERS = {
    PromptVariant.NO_CONTEXT: (0, 0),
    PromptVariant.HISTORY_ONLY: (1, 0),
    PromptVariant.FUTURE_ONLY: (0, 1),
    PromptVariant.BIDIRECTIONAL: (1, 1),
}

_PLACEHOLDER = re.compile(r"\{(history|future)\}")


def select_variant(window: ContextWindow) -> PromptVariant:
    has_history = window.history is not None
    has_future = window.future is not None
    if has_history and has_future:
        return PromptVariant.BIDIRECTIONAL
    if has_history:
        return PromptVariant.HISTORY_ONLY
    if has_future:
        return PromptVariant.FUTURE_ONLY
    return PromptVariant.NO_CONTEXT


def _check_template(lang: str, variant: PromptVariant, template: object) -> str:
    if not isinstance(template, str):
        raise CatalogError(f"{lang}/{variant.value}: template must be a string")
    want_h, want_f = _REQUIRED_PLACEHOLDERS[variant]
    got_h = template.count("{history}")
    got_f = template.count("{future}")
    if (got_h, got_f) != (want_h, want_f):
        raise CatalogError(
            f"{lang}/{variant.value}: expected {want_h} '{{history}}' and {want_f} '{{future}}' "
            f"placeholders, found {got_h} and {got_f}"
        )
    return template


@dataclass(frozen=True)
class PromptCatalog:
    templates: Mapping[str, Mapping[PromptVariant, str]]

    def __post_init__(self):
        for lang, variants in self.templates.items():
            for variant in PromptVariant:
                if variant not in variants:
                    raise CatalogError(f"{lang}: missing variant {variant.value!r}")
                _check_template(lang, variant, variants[variant])

    def template(self, language: LanguageCode | Language | str, variant: PromptVariant) -> str:
        code = _code_of(language)
        try:
            return self.templates[code][variant]
        except KeyError:
            raise CatalogError(f"language {code!r} missing from catalog") from None

    def to_json(self) -> dict:
        return {lang: {v.value: t[v] for v in PromptVariant} for lang, t in self.templates.items()}


def _code_of(language: LanguageCode | Language | str) -> str:
    if isinstance(language, LanguageCode):
        return language.code.value
    if isinstance(language, Language):
        return language.value
    return language


def _parse_catalog_object(data: object, base: Mapping[str, Mapping[PromptVariant, str]]) -> PromptCatalog:
    if not isinstance(data, dict):
        raise CatalogError("catalog must be a JSON object mapping language code to templates")
    merged = {lang: dict(variants) for lang, variants in base.items()}
    for lang, entry in data.items():
        if lang not in LANGUAGES:
            raise CatalogError(f"unknown language code {lang!r}")
        if not isinstance(entry, dict):
            raise CatalogError(f"{lang}: entry must be an object")
        for key, template in entry.items():
            try:
                variant = PromptVariant(key)
            except ValueError:
                raise CatalogError(f"{lang}: unknown variant key {key!r}") from None
            merged.setdefault(lang, {})[variant] = _check_template(lang, variant, template)
    return PromptCatalog(merged)


_DEFAULT: PromptCatalog | None = None


def default_catalog() -> PromptCatalog:
    global _DEFAULT
    if _DEFAULT is None:
        raw = resources.files("ctxasr").joinpath("data/default_catalog.json").read_text(encoding="utf-8")
        _DEFAULT = _parse_catalog_object(json.loads(raw), {})
    return _DEFAULT


def load_catalog(path: str | os.PathLike | None = None) -> PromptCatalog:
    """Load a catalog file, falling back to the built-in template for anything it omits."""
    base = default_catalog()
    if path is None:
        return base
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    if not raw.strip():
        return base
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return _parse_catalog_object(data, base.templates)


def _clip(text: str, limit: int | None, keep_tail: bool) -> str:
    if limit is None:
        return text
    units = graphemes(text)
    if len(units) <= limit:
        return text
    return "".join(units[-limit:] if keep_tail else units[:limit]) if limit else ""


def render(
    catalog: PromptCatalog,
    language: LanguageCode | Language | str,
    window: ContextWindow,
    max_context_chars: int | None = None,
) -> str:
    """Fill the template chosen by :func:`select_variant` with the window's text.

    Context strings are stripped of surrounding whitespace and otherwise
    inserted verbatim. With ``max_context_chars`` set, history keeps its last
    characters and future its first ones (the parts nearest the segment).
    """
    template = catalog.template(language, select_variant(window))
    values = {}
    if window.history is not None:
        values["history"] = _clip(window.history.strip(), max_context_chars, keep_tail=True)
    if window.future is not None:
        values["future"] = _clip(window.future.strip(), max_context_chars, keep_tail=False)
    # Single pass so context text that itself contains "{future}" is not re-substituted.
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)
