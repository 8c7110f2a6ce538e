"""System-definition files: bracketed sections with DSL matrix bodies.

A file looks like::

    [system]
    name = example13
    n = 2
    interval = (-inf, inf)
    x0 = 0

    [J]
    [[0, 1], [-1, 0]]

    [B]
    [[0, 0], [0, 0]]

    [H]
    [[1, 0], [0, 0]]

    [defaults]
    truncations = 1, 2, 4, 8, 16, 32

Sections ``A``, ``V``, ``q`` turn the file into a square-system spec
(``V`` defaults to zero and ``q`` to 1 when ``A`` is present); ``f1`` holds a
column vector for energy-bound checks.  Text after '#' is a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .dsl import (
    ExpressionField,
    Interval,
    constant_field,
    parse_matrix_function,
    parse_scalar,
    parse_vector_function,
)
from .system import SquareSystemSpec, SymmetricSystem

__all__ = ["SystemFileError", "SystemFile", "parse_system_file", "parse_complex", "render_system_file"]

_MATRIX_SECTIONS = ("J", "B", "H", "A", "V", "q", "f1")
_SECTIONS = ("system", "defaults") + _MATRIX_SECTIONS


class SystemFileError(ValueError):
    """Malformed system-definition file."""


def parse_complex(text: str) -> complex:
    """Parse a complex literal like '1+2i', 'i', '-2.5i' or '3'."""
    s = text.strip().replace(" ", "").replace("i", "j")
    s = re.sub(r"(?<![0-9.])j", "1j", s)
    try:
        return complex(s)
    except ValueError:
        raise SystemFileError(f"cannot parse complex literal {text!r}") from None


@dataclass
class SystemFile:
    name: str
    n: int
    interval: Interval
    x0: float | None
    matrices: dict
    defaults: dict
    f1: list | None = None

    def has_square_data(self) -> bool:
        return "A" in self.matrices

    def to_system(self) -> SymmetricSystem:
        for key in ("J", "B", "H"):
            if key not in self.matrices:
                raise SystemFileError(f"missing required section [{key}]")
        return SymmetricSystem(
            self.matrices["J"], self.matrices["B"], self.matrices["H"],
            self.interval, self.x0,
        )

    def to_square_spec(self) -> SquareSystemSpec:
        if not self.has_square_data():
            raise SystemFileError("no [A] section: the file does not define a square-system spec")
        base = self.to_system()
        n = self.n
        V = self.matrices.get("V", constant_field(np.zeros((n, n))))
        q = self.matrices.get("q", constant_field([[1.0]]))
        return SquareSystemSpec(base, self.matrices["A"], V, q)

    def sl_fields(self):
        for key in ("A", "V", "H"):
            if key not in self.matrices:
                raise SystemFileError(f"the Sturm-Liouville embedding needs section [{key}]")
        return self.matrices["A"], self.matrices["V"], self.matrices["H"]


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def parse_system_file(text: str, filename: str = "<input>") -> SystemFile:
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        m = re.fullmatch(r"\[([A-Za-z0-9_]+)\]", stripped)
        if m:
            name = m.group(1)
            if name not in _SECTIONS:
                raise SystemFileError(f"{filename}:{lineno}: unknown section [{name}]")
            if name in sections:
                raise SystemFileError(f"{filename}:{lineno}: duplicate section [{name}]")
            sections[name] = []
            current = name
            continue
        if current is None:
            raise SystemFileError(f"{filename}:{lineno}: content before any section header")
        sections[current].append((lineno, line))

    if "system" not in sections:
        raise SystemFileError(f"{filename}: missing [system] section")

    meta = {}
    for lineno, line in sections["system"]:
        if "=" not in line:
            raise SystemFileError(f"{filename}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        meta[key.strip().lower()] = value.strip()
    try:
        n = int(meta["n"])
    except KeyError:
        raise SystemFileError(f"{filename}: [system] must declare n") from None
    except ValueError:
        raise SystemFileError(f"{filename}: bad dimension n = {meta['n']!r}") from None
    try:
        interval = Interval.parse(meta.get("interval", "(-inf, inf)"))
    except ValueError as exc:
        raise SystemFileError(f"{filename}: {exc}") from None
    x0 = float(meta["x0"]) if "x0" in meta else None
    name = meta.get("name", "unnamed")

    matrices = {}
    f1 = None
    for key in _MATRIX_SECTIONS:
        if key not in sections:
            continue
        body = "\n".join(line for _, line in sections[key])
        if not body.strip():
            raise SystemFileError(f"{filename}: section [{key}] is empty")
        try:
            if key == "q":
                matrices[key] = parse_scalar(body)
            elif key == "f1":
                f1 = parse_vector_function(body, n)
            else:
                matrices[key] = parse_matrix_function(body, n)
        except ValueError as exc:
            raise SystemFileError(f"{filename}: section [{key}]: {exc}") from None

    defaults = {}
    if "defaults" in sections:
        for lineno, line in sections["defaults"]:
            if "=" not in line:
                raise SystemFileError(f"{filename}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().lower()
            value = value.strip()
            try:
                if key == "truncations":
                    defaults[key] = tuple(float(v) for v in value.split(","))
                elif key in ("tol", "reltol"):
                    defaults[key] = float(value)
                elif key == "grid":
                    defaults[key] = int(value)
                elif key == "lambda":
                    defaults[key] = parse_complex(value)
                else:
                    defaults[key] = value
            except ValueError:
                raise SystemFileError(f"{filename}:{lineno}: bad value for {key}: {value!r}") from None

    return SystemFile(name, n, interval, x0, matrices, defaults, f1)


def load_system_file(path) -> SystemFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_system_file(fh.read(), filename=str(path))


def render_system_file(name: str, n: int, interval: Interval, fields: dict,
                       x0: float | None = None) -> str:
    """Serialize symbolic fields back into system-file text."""
    lines = ["[system]", f"name = {name}", f"n = {n}", f"interval = {interval}"]
    if x0 is not None:
        lines.append(f"x0 = {x0!r}")
    for key, f in fields.items():
        if f is None:
            continue
        if not isinstance(f, ExpressionField):
            raise SystemFileError(f"section [{key}] is not symbolic and cannot be rendered")
        lines.append("")
        lines.append(f"[{key}]")
        lines.append(f.to_text())
    return "\n".join(lines) + "\n"
