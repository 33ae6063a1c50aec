"""Unicode helpers: user-perceived characters (extended grapheme clusters)."""

from __future__ import annotations

import regex

_GRAPHEME = regex.compile(r"\X")


def graphemes(text: str) -> list[str]:
    """Split ``text`` into extended grapheme clusters.

    Thai vowel signs and Vietnamese combining tone marks stay attached to
    their base letter, so deleting or counting units never orphans a mark.

    >>> graphemes("tiếng")
    ['t', 'i', 'ế', 'n', 'g']
    >>> len(graphemes("é"))
    1
    """
    return _GRAPHEME.findall(text)
