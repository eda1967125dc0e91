"""Small report containers shared by the validators."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    """One named predicate with its signed margin (negative = violated)."""

    name: str
    ok: bool
    margin: float | None = None
    message: str = ""
    status: str | None = None  # "holds" / "fails" / "unknown" for schedule flags

    def as_dict(self):
        return {
            "name": self.name,
            "ok": self.ok,
            "margin": self.margin,
            "message": self.message,
            "status": self.status,
        }


@dataclass
class Report:
    subject: str
    checks: list[Check] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, name, ok, margin=None, message="", status=None):
        self.checks.append(Check(name, bool(ok), margin, message, status))
        return self

    def warn(self, message):
        self.warnings.append(message)
        return self

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name) -> bool:
        return any(c.name == name for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def as_dict(self):
        return {
            "subject": self.subject,
            "ok": self.ok,
            "checks": [c.as_dict() for c in self.checks],
            "warnings": list(self.warnings),
            "data": dict(self.data),
        }

    def __str__(self):
        lines = [f"{self.subject}: {'ok' if self.ok else 'FAILED'}"]
        for c in self.checks:
            tag = "ok " if c.ok else "BAD"
            extra = f" margin={c.margin:.3e}" if c.margin is not None else ""
            lines.append(f"  [{tag}] {c.name}{extra} {c.message}".rstrip())
        lines.extend(f"  warning: {w}" for w in self.warnings)
        return "\n".join(lines)
