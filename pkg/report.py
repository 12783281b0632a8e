"""
Command reports and their text/json rendering.
"""

import json
from dataclasses import asdict, dataclass, field, is_dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List

import pandas as pd

from errors import InvalidInputError

FLOAT_DIGITS = 12


def jsonable(value: Any) -> Any:
    """Exact rationals become "p/q" strings; floats (Gauss sums only) are rounded."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return round(value, FLOAT_DIGITS)
    if isinstance(value, complex):
        return {"re": round(value.real, FLOAT_DIGITS), "im": round(value.imag, FLOAT_DIGITS)}
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value) and not isinstance(value, type):
        return jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return str(value)


@dataclass
class Report:
    """Everything one CLI command produced, already in JSON-compatible form."""
    command: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    verdicts: Dict[str, Any] = field(default_factory=dict)
    provenance: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.inputs = jsonable(self.inputs)
        self.results = jsonable(self.results)
        self.verdicts = jsonable(self.verdicts)
        self.provenance = [str(p) for p in self.provenance]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "verdicts": self.verdicts,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Report":
        if "command" not in data:
            raise InvalidInputError("report is missing 'command'")
        return cls(
            command=data["command"],
            inputs=dict(data.get("inputs", {})),
            results=dict(data.get("results", {})),
            verdicts=dict(data.get("verdicts", {})),
            provenance=list(data.get("provenance", [])),
        )


def _is_table(value: Any) -> bool:
    return isinstance(value, list) and bool(value) and all(isinstance(row, dict) for row in value)


def _cell(value: Any) -> str:
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        return f"{value['re']:+.12f}{value['im']:+.12f}i"
    if isinstance(value, list):
        return "[" + ", ".join(_cell(v) for v in value) + "]"
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def _section(title: str, values: Dict[str, Any]) -> List[str]:
    if not values:
        return []
    lines = [title]
    scalars = {k: v for k, v in values.items() if not _is_table(v)}
    if scalars:
        frame = pd.DataFrame({"field": list(scalars), "value": [_cell(v) for v in scalars.values()]})
        lines.append(frame.to_string(index=False))
    for key, rows in values.items():
        if _is_table(rows):
            frame = pd.DataFrame([{k: _cell(v) for k, v in row.items()} for row in rows])
            lines.append(f"  {key}:")
            lines.append(frame.to_string(index=False))
    lines.append("")
    return lines


def emit(report: Report, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    if fmt != "text":
        raise InvalidInputError(f"unknown output format {fmt!r}")
    lines = [f"📊 {report.command}", ""]
    lines += _section("📥 Inputs", report.inputs)
    lines += _section("📈 Results", report.results)
    lines += _section("⚖️  Verdicts", report.verdicts)
    if report.provenance:
        lines.append("📚 Provenance: " + "; ".join(report.provenance))
    return "\n".join(lines).rstrip() + "\n"
