"""Verdict and witness types shared by every checker.

A checker either passes or fails with a witness locating the first violated
instance in a fixed lexicographic enumeration, so identical inputs always
produce identical reports.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, TypeVar


@dataclass(frozen=True)
class Witness:
    """Location and residual of the first violated identity instance.

    law:      short name of the violated identity
    site:     lexicographic location (basis tuple indices, generator names, ...)
    residual: exact printable residual (never rounded)
    detail:   free-form amplification for human reports
    """

    law: str
    site: tuple
    residual: str
    detail: str = ""

    def describe(self) -> str:
        text = f"{self.law} violated at {self.site}: residual {self.residual}"
        if self.detail:
            text += f" ({self.detail})"
        return text


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one checker run.

    notes carries coverage caveats (probe sets, degree bounds, sign
    conventions); payload optionally carries a constructed object such as an
    induced structure.
    """

    ok: bool
    witness: Optional[Witness] = None
    notes: tuple[str, ...] = ()
    payload: object = None

    def __post_init__(self):
        if not self.ok and self.witness is None:
            raise ValueError("failing results must carry a witness")

    def with_notes(self, *extra: str) -> "CheckResult":
        return CheckResult(self.ok, self.witness, self.notes + tuple(extra),
                           self.payload)


def passed(notes: Sequence[str] = (), payload: object = None) -> CheckResult:
    return CheckResult(True, None, tuple(notes), payload)


def failed(law: str, site: tuple, residual: str, detail: str = "",
           notes: Sequence[str] = ()) -> CheckResult:
    return CheckResult(False, Witness(law, site, residual, detail), tuple(notes))


class PreconditionError(ValueError):
    """An operation's stated precondition failed; carries the violating site."""

    def __init__(self, message: str, site: tuple = ()):
        super().__init__(message)
        self.site = site


class CrossCheckError(RuntimeError):
    """Two routes that must agree returned different verdicts.

    Raised by the duality checkers when their independently computed sides
    disagree; this signals an implementation defect, never a property of the
    input, so it surfaces as an error rather than a verdict.
    """


T = TypeVar("T")


def first_witness(items: Sequence[T], check: Callable[[T], Optional[Witness]],
                  jobs: int = 1) -> Optional[Witness]:
    """Earliest witness over an ordered work list.

    jobs > 1 fans evaluation out over a thread pool in fixed-size batches and
    keeps the lexicographically first witness, so the verdict is identical to
    the sequential scan.
    """
    if jobs <= 1 or len(items) < 2:
        for item in items:
            w = check(item)
            if w is not None:
                return w
        return None
    batch = max(4 * jobs, 16)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for start in range(0, len(items), batch):
            chunk = items[start:start + batch]
            for w in pool.map(check, chunk):
                if w is not None:
                    return w
    return None
