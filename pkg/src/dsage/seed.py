"""Access to the seed knowledge base shipped with the package."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .dsl import parse_kb
from .kb import KnowledgeBase

__all__ = ["seed_kb", "seed_text"]


def seed_text() -> str:
    """The shipped seed knowledge base as ``.dkb`` text."""
    return resources.files("dsage.data").joinpath("seed.dkb").read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def seed_kb() -> KnowledgeBase:
    """The parsed seed knowledge base (32 indicators, 9 rules)."""
    result = parse_kb(seed_text(), filename="seed.dkb")
    if result.kb is None:
        raise RuntimeError(
            "shipped seed knowledge base failed to parse: "
            + "; ".join(str(e) for e in result.errors)
        )
    return result.kb
