"""Structured verdicts shared by every checker."""

from __future__ import annotations

from dataclasses import dataclass, field

from .dist import jsonable


@dataclass
class CheckReport:
    """Verdict of one checker run.

    ``holds`` is the overall verdict; ``witnesses`` carries the first failing
    tuples in enumeration order (present whenever the verdict is violated);
    ``details`` holds per-vertex or per-pair sub-verdicts; ``skipped`` counts
    undefined conditional rows that were excluded from comparison.
    """

    check: str
    holds: bool
    witnesses: list = field(default_factory=list)
    details: list = field(default_factory=list)
    skipped: int = 0
    notes: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "violated"

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "verdict": self.verdict,
            "holds": self.holds,
            "skipped": self.skipped,
            "witnesses": jsonable(self.witnesses),
            "details": jsonable(self.details),
            "notes": list(self.notes),
        }
