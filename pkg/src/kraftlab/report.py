"""Inequality records and reports with a stable JSON rendering."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .dyadic import Dyadic, DyadicMatrix

FLOAT_DIGITS = 12


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, f".{FLOAT_DIGITS}g")


def to_jsonable(value: Any) -> Any:
    """Map report values onto JSON: floats become 12-significant-digit strings,
    dyadics become {"m", "e"} pairs."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Dyadic):
        return value.to_json()
    if isinstance(value, DyadicMatrix):
        return value.to_json()
    if isinstance(value, Fraction):
        return {"num": value.numerator, "den": value.denominator}
    if isinstance(value, float):
        return fmt_float(value)
    if hasattr(value, "tolist"):
        return to_jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if hasattr(value, "item"):
        return to_jsonable(value.item())
    raise TypeError(f"cannot serialise {type(value).__name__}")


def exact_le(lhs, rhs) -> bool:
    """lhs <= rhs with no rounding when both sides are rational (floats are
    converted exactly)."""
    if isinstance(lhs, float) and math.isinf(lhs):
        return lhs < 0 or (isinstance(rhs, float) and rhs == math.inf)
    if isinstance(rhs, float) and math.isinf(rhs):
        return rhs > 0
    to_q = lambda v: v.to_fraction() if isinstance(v, Dyadic) else Fraction(v)
    return to_q(lhs) <= to_q(rhs)


@dataclass
class Check:
    name: str
    lhs: Any
    rhs: Any
    holds: bool
    witness: Any = None
    regime: str = "exact"
    note: str | None = None

    def to_dict(self) -> dict:
        d = {
            "inequality": self.name,
            "lhs": to_jsonable(self.lhs),
            "rhs": to_jsonable(self.rhs),
            "holds": bool(self.holds),
            "witness": to_jsonable(self.witness),
            "regime": self.regime,
        }
        if self.note:
            d["note"] = self.note
        return d


def compare(name: str, lhs, rhs, witness=None, tol: float = 0.0, note: str | None = None) -> Check:
    """Build a Check; exact when both sides are rational and ``tol`` is 0."""
    if tol:
        holds = float(lhs) <= float(rhs) * (1 + tol) + tol
        return Check(name, lhs, rhs, holds, witness, regime=f"float (rel tol {tol:g})", note=note)
    regime = "exact" if not isinstance(lhs, float) and not isinstance(rhs, float) else "exact-vs-float"
    return Check(name, lhs, rhs, exact_le(lhs, rhs), witness, regime=regime, note=note)


@dataclass
class Report:
    verb: str
    info: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.holds]

    @property
    def exit_code(self) -> int:
        return 0 if self.all_hold else 1

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    def to_dict(self) -> dict:
        return {
            "verb": self.verb,
            "info": to_jsonable(self.info),
            "checks": [c.to_dict() for c in self.checks],
            "all_hold": self.all_hold,
            "exit_code": self.exit_code,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"== {self.verb} =="]
        for key, val in self.info.items():
            lines.append(f"  {key}: {_text_value(val)}")
        if self.checks:
            width = max(len(c.name) for c in self.checks)
            lines.append("")
            for c in self.checks:
                mark = "ok  " if c.holds else "FAIL"
                sides = "" if c.lhs is None and c.rhs is None else f"{_text_value(c.lhs)} <= {_text_value(c.rhs)}"
                extra = f"  witness={_text_value(c.witness)}" if c.witness is not None else ""
                lines.append(f"  [{mark}] {c.name:<{width}}  {sides}{extra}")
                if c.note:
                    lines.append(f"         ({c.note})")
        lines.append("")
        lines.append(f"  result: {'all checks hold' if self.all_hold else f'{len(self.failures)} check(s) failed'}")
        return "\n".join(lines)


def _text_value(v) -> str:
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, Dyadic):
        return f"{v} (~{fmt_float(float(v))})" if v.exponent else str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_text_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_text_value(x)}" for k, x in v.items()) + "}"
    return str(v)
