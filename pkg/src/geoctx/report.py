from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    """Outcome of one decision procedure.

    Truthy exactly when the check passed. ``witness`` is a JSON-ready dict
    (ids and rendered tokens only); a failing verdict always has one.
    """

    check: str
    status: str
    witness: dict[str, Any] | None = None
    detail: str = ""
    data: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.status not in (PASS, FAIL, INCONCLUSIVE):
            raise ValueError(f"bad status {self.status!r}")
        if self.status == FAIL and self.witness is None:
            raise ValueError(f"failing verdict {self.check!r} needs a witness")

    def __bool__(self) -> bool:
        return self.status == PASS

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @classmethod
    def ok(cls, check: str, witness=None, detail: str = "", data=None) -> "Verdict":
        return cls(check, PASS, witness, detail, data)

    @classmethod
    def fail(cls, check: str, witness, detail: str = "", data=None) -> "Verdict":
        return cls(check, FAIL, witness, detail, data)

    @classmethod
    def unknown(cls, check: str, detail: str, witness=None) -> "Verdict":
        return cls(check, INCONCLUSIVE, witness, detail)


def token_str(token: Any) -> str:
    """Render a section token; derived tokens are nested tuples."""
    if isinstance(token, str):
        return token
    if isinstance(token, tuple):
        return "(" + ",".join(token_str(t) for t in token) + ")"
    if isinstance(token, frozenset):
        return "{" + ",".join(sorted(token_str(t) for t in token)) + "}"
    return str(token)
