"""Small pass/fail report containers shared by the validation entry points."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: object = None   # offending sample / margin, when there is one
    detail: str = ""

    def __str__(self):
        tag = "ok  " if self.passed else "FAIL"
        msg = f"[{tag}] {self.name}"
        if self.detail:
            msg += f": {self.detail}"
        if self.witness is not None and not self.passed:
            msg += f" (witness: {self.witness})"
        return msg


@dataclass
class ValidationReport:
    subject: str
    checks: list = field(default_factory=list)

    def add(self, name, passed, witness=None, detail=""):
        self.checks.append(CheckResult(name, bool(passed), witness, detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = [f"validation report for {self.subject}:"]
        lines += [f"  {c}" for c in self.checks]
        return "\n".join(lines)
