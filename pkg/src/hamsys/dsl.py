"""Matrix-valued coefficient functions of one real variable.

Coefficients enter every analysis as matrix functions ``x -> M(x)``, given
either symbolically (parsed from a small expression language and
differentiable in closed form) or numerically (a callable path such as a
propagated gauge frame).  The expression language:

    field     := piecewise | matrix
    piecewise := ('on' interval ':' matrix ';')+        (last ';' optional)
    interval  := ('['|'(') bound ',' bound (']'|')')    bounds: numbers, 'inf', '-inf'
    matrix    := '[' row (',' row)* ']'
    row       := '[' expr (',' expr)* ']'
    expr      := arithmetic over +, -, *, /, ^ (integer exponents only),
                 unary minus, parentheses, the variable 'x', the imaginary
                 unit 'i', and sin, cos, exp, log, sqrt, abs, tanh, sign

Whitespace, including newlines, is insignificant.  Piecewise definitions are
left-closed: a piece owns ``[lo, hi)``, except that the final piece also owns
its right endpoint.  Pieces must tile their span without gaps or overlaps.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Interval",
    "DslSyntaxError",
    "EvaluationSingularity",
    "MatrixField",
    "ExpressionField",
    "CallableMatrixField",
    "parse_matrix_function",
    "parse_scalar",
    "constant_field",
]


# ---------------------------------------------------------------------------
# Intervals

@dataclass(frozen=True)
class Interval:
    """An interval of the real line, possibly unbounded on either side."""

    left: float
    right: float
    left_closed: bool = True
    right_closed: bool = False

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError(f"empty interval: left={self.left} right={self.right}")
        if math.isinf(self.left) and self.left_closed:
            object.__setattr__(self, "left_closed", False)
        if math.isinf(self.right) and self.right_closed:
            object.__setattr__(self, "right_closed", False)

    @classmethod
    def real_line(cls) -> "Interval":
        return cls(-math.inf, math.inf, False, False)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        s = text.strip()
        if len(s) < 5 or s[0] not in "[(" or s[-1] not in "])":
            raise ValueError(f"cannot parse interval {text!r}")
        try:
            lo_s, hi_s = s[1:-1].split(",")
        except ValueError:
            raise ValueError(f"cannot parse interval {text!r}") from None
        return cls(_parse_bound(lo_s), _parse_bound(hi_s), s[0] == "[", s[-1] == "]")

    def contains(self, x: float) -> bool:
        if x < self.left or (x == self.left and not self.left_closed):
            return False
        if x > self.right or (x == self.right and not self.right_closed):
            return False
        return True

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.left) and math.isfinite(self.right)

    @property
    def is_real_line(self) -> bool:
        return math.isinf(self.left) and math.isinf(self.right)

    @property
    def is_half_closed(self) -> bool:
        return self.left_closed != self.right_closed

    def default_base_point(self) -> float:
        """The closed endpoint when half-closed; the midpoint when bounded; else 0."""
        if self.is_half_closed:
            return self.left if self.left_closed else self.right
        if self.is_bounded:
            return 0.5 * (self.left + self.right)
        if math.isfinite(self.left):
            return self.left + 1.0
        if math.isfinite(self.right):
            return self.right - 1.0
        return 0.0

    def __str__(self) -> str:
        lo = "[" if self.left_closed else "("
        hi = "]" if self.right_closed else ")"
        return f"{lo}{_fmt_bound(self.left)}, {_fmt_bound(self.right)}{hi}"


def _parse_bound(s: str) -> float:
    s = s.strip()
    if s in ("inf", "+inf"):
        return math.inf
    if s == "-inf":
        return -math.inf
    return float(s)


def _fmt_bound(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(v)


# ---------------------------------------------------------------------------
# Expression AST

@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Div:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs", "tanh", "sign")

_X = Var()


class _EvalError(Exception):
    """Internal: evaluation hit a singularity; re-raised with location info."""


def _eval(e, x: complex) -> complex:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Add):
        return _eval(e.left, x) + _eval(e.right, x)
    if isinstance(e, Sub):
        return _eval(e.left, x) - _eval(e.right, x)
    if isinstance(e, Mul):
        return _eval(e.left, x) * _eval(e.right, x)
    if isinstance(e, Div):
        den = _eval(e.right, x)
        if den == 0:
            raise _EvalError("division by zero")
        return _eval(e.left, x) / den
    if isinstance(e, Pow):
        base = _eval(e.base, x)
        if base == 0 and e.exponent < 0:
            raise _EvalError("zero raised to a negative power")
        return base ** e.exponent
    if isinstance(e, Neg):
        return -_eval(e.operand, x)
    if isinstance(e, Call):
        return _eval_call(e.func, _eval(e.arg, x))
    raise TypeError(f"not an expression node: {e!r}")


def _eval_call(func: str, z: complex) -> complex:
    try:
        if func == "sin":
            return cmath.sin(z)
        if func == "cos":
            return cmath.cos(z)
        if func == "exp":
            return cmath.exp(z)
        if func == "tanh":
            return cmath.tanh(z)
        if func == "sqrt":
            return cmath.sqrt(z)
        if func == "abs":
            return complex(abs(z))
        if func == "log":
            if z == 0 or (z.imag == 0 and z.real < 0):
                raise _EvalError(f"log of nonpositive value {z}")
            return cmath.log(z)
        if func == "sign":
            if abs(z.imag) > 1e-14 * (1.0 + abs(z.real)):
                raise _EvalError(f"sign of non-real value {z}")
            r = float(z.real)
            return complex((r > 0) - (r < 0))
    except (OverflowError, ValueError) as exc:
        raise _EvalError(f"{func} overflow/domain error: {exc}") from None
    raise TypeError(f"unknown function {func!r}")


def _is_const(e, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _add(a, b):
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def _sub(a, b):
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(a, 0):
        return Neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is_const(a, 0) or _is_const(b, 0):
        return Const(0)
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def _diff(e):
    """Symbolic derivative.  Returns (expr, has_kink)."""
    if isinstance(e, (Const,)):
        return Const(0), False
    if isinstance(e, Var):
        return Const(1), False
    if isinstance(e, Add):
        da, ka = _diff(e.left)
        db, kb = _diff(e.right)
        return _add(da, db), ka or kb
    if isinstance(e, Sub):
        da, ka = _diff(e.left)
        db, kb = _diff(e.right)
        return _sub(da, db), ka or kb
    if isinstance(e, Mul):
        da, ka = _diff(e.left)
        db, kb = _diff(e.right)
        return _add(_mul(da, e.right), _mul(e.left, db)), ka or kb
    if isinstance(e, Div):
        da, ka = _diff(e.left)
        db, kb = _diff(e.right)
        num = _sub(_mul(da, e.right), _mul(e.left, db))
        return Div(num, Pow(e.right, 2)), ka or kb
    if isinstance(e, Pow):
        db, kb = _diff(e.base)
        if e.exponent == 0:
            return Const(0), False
        inner = e.base if e.exponent == 2 else Pow(e.base, e.exponent - 1)
        return _mul(_mul(Const(e.exponent), inner), db), kb
    if isinstance(e, Neg):
        da, ka = _diff(e.operand)
        return Neg(da) if not _is_const(da, 0) else Const(0), ka
    if isinstance(e, Call):
        da, ka = _diff(e.arg)
        u = e.arg
        if e.func == "sin":
            outer = Call("cos", u)
        elif e.func == "cos":
            outer = Neg(Call("sin", u))
        elif e.func == "exp":
            outer = Call("exp", u)
        elif e.func == "tanh":
            outer = _sub(Const(1), Pow(Call("tanh", u), 2))
        elif e.func == "log":
            return _mul(Div(Const(1), u), da), ka
        elif e.func == "sqrt":
            return _mul(Div(Const(1), _mul(Const(2), Call("sqrt", u))), da), ka
        elif e.func == "abs":
            # d|u|/dx = sign(u) u' for real u; the x=0 kink is flagged upstream.
            return _mul(Call("sign", u), da), True
        elif e.func == "sign":
            return Const(0), True
        else:
            raise TypeError(f"unknown function {e.func!r}")
        return _mul(outer, da), ka
    raise TypeError(f"not an expression node: {e!r}")


def _depends_on_x(e) -> bool:
    if isinstance(e, Const):
        return False
    if isinstance(e, Var):
        return True
    if isinstance(e, (Add, Sub, Mul, Div)):
        return _depends_on_x(e.left) or _depends_on_x(e.right)
    if isinstance(e, Pow):
        return _depends_on_x(e.base)
    if isinstance(e, Neg):
        return _depends_on_x(e.operand)
    if isinstance(e, Call):
        return _depends_on_x(e.arg)
    raise TypeError(f"not an expression node: {e!r}")


# precedence levels for printing: add=1, mul=2, unary=3, pow=4, atom=5
def _to_text(e, parent_prec: int = 0) -> str:
    if isinstance(e, Const):
        s = _fmt_const(e.value)
        prec = 5 if not s.startswith("-") else 3
    elif isinstance(e, Var):
        s, prec = "x", 5
    elif isinstance(e, Add):
        s, prec = f"{_to_text(e.left, 1)} + {_to_text(e.right, 1)}", 1
    elif isinstance(e, Sub):
        s, prec = f"{_to_text(e.left, 1)} - {_to_text(e.right, 2)}", 1
    elif isinstance(e, Mul):
        s, prec = f"{_to_text(e.left, 2)}*{_to_text(e.right, 2)}", 2
    elif isinstance(e, Div):
        s, prec = f"{_to_text(e.left, 2)}/{_to_text(e.right, 3)}", 2
    elif isinstance(e, Neg):
        s, prec = f"-{_to_text(e.operand, 3)}", 3
    elif isinstance(e, Pow):
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        s, prec = f"{_to_text(e.base, 5)}^{exp}", 4
    elif isinstance(e, Call):
        s, prec = f"{e.func}({_to_text(e.arg, 0)})", 5
    else:
        raise TypeError(f"not an expression node: {e!r}")
    return f"({s})" if prec < parent_prec else s


def _fmt_const(z: complex) -> str:
    if z.imag == 0:
        r = z.real
        return repr(int(r)) if r == int(r) and abs(r) < 1e15 else repr(r)
    if z.real == 0:
        if z.imag == 1:
            return "i"
        return f"({_fmt_const(complex(z.imag))}*i)"
    return f"({_fmt_const(complex(z.real))} + {_fmt_const(complex(z.imag))}*i)"


# ---------------------------------------------------------------------------
# Errors with source locations

class DslSyntaxError(ValueError):
    """Syntax or shape error in coefficient-function source text."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class EvaluationSingularity(ArithmeticError):
    """Evaluation of a coefficient entry hit a singular point."""

    def __init__(self, reason: str, x: float, entry=None):
        loc = f" in entry {entry}" if entry is not None else ""
        super().__init__(f"{reason} at x={x!r}{loc}")
        self.reason = reason
        self.x = x
        self.entry = entry


# ---------------------------------------------------------------------------
# Tokenizer / parser

_PUNCT = "+-*/^()[],;:"


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num', 'ident', or a punctuation character
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    toks = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        start_col = col
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_exp = False
            while j < n:
                c = text[j]
                if c.isdigit() or c == ".":
                    j += 1
                elif c in "eE" and not seen_exp and j + 1 < n and (
                    text[j + 1].isdigit() or (text[j + 1] in "+-" and j + 2 < n and text[j + 2].isdigit())
                ):
                    seen_exp = True
                    j += 2 if text[j + 1] in "+-" else 1
                else:
                    break
            lit = text[i:j]
            try:
                float(lit)
            except ValueError:
                raise DslSyntaxError(f"bad numeric literal {lit!r}", line, start_col)
            toks.append(_Token("num", lit, line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Token("ident", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch in _PUNCT:
            toks.append(_Token(ch, ch, line, start_col))
            i += 1
            col += 1
            continue
        raise DslSyntaxError(f"unexpected character {ch!r}", line, start_col)
    toks.append(_Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Token:
        t = self.peek()
        if t.kind != kind:
            raise DslSyntaxError(f"expected {kind!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def error(self, msg: str):
        t = self.peek()
        raise DslSyntaxError(msg, t.line, t.col)

    # expression grammar -----------------------------------------------
    def parse_expr(self):
        e = self.parse_term()
        while self.peek().kind in "+-":
            op = self.next().kind
            rhs = self.parse_term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def parse_term(self):
        e = self.parse_unary()
        while self.peek().kind in "*/":
            op = self.next().kind
            rhs = self.parse_unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def parse_unary(self):
        if self.peek().kind == "-":
            self.next()
            return Neg(self.parse_unary())
        if self.peek().kind == "+":
            self.next()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek().kind == "^":
            caret = self.next()
            exp_expr = self.parse_unary()
            exp_val = _const_value(exp_expr)
            if exp_val is None or exp_val.imag != 0 or exp_val.real != int(exp_val.real):
                raise DslSyntaxError("exponent must be an integer literal", caret.line, caret.col)
            return Pow(base, int(exp_val.real))
        return base

    def parse_atom(self):
        t = self.peek()
        if t.kind == "num":
            self.next()
            return Const(complex(float(t.text)))
        if t.kind == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            if t.text == "x":
                self.next()
                return _X
            if t.text == "i":
                self.next()
                return Const(1j)
            if t.text in _FUNCTIONS:
                self.next()
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Call(t.text, arg)
            raise DslSyntaxError(f"unknown identifier {t.text!r}", t.line, t.col)
        self.error(f"expected an expression, found {t.text or 'end of input'!r}")

    # matrix / piecewise grammar ----------------------------------------
    def parse_matrix(self) -> list[list[object]]:
        open_tok = self.expect("[")
        rows = [self.parse_row()]
        while self.peek().kind == ",":
            self.next()
            rows.append(self.parse_row())
        self.expect("]")
        width = len(rows[0])
        for r in rows:
            if len(r) != width:
                raise DslSyntaxError("ragged matrix rows", open_tok.line, open_tok.col)
        return rows

    def parse_row(self) -> list[object]:
        self.expect("[")
        entries = [self.parse_expr()]
        while self.peek().kind == ",":
            self.next()
            entries.append(self.parse_expr())
        self.expect("]")
        return entries

    def parse_piece_interval(self) -> tuple[float, float]:
        t = self.peek()
        if t.kind not in "([":
            self.error("expected an interval after 'on'")
        self.next()
        lo = self.parse_signed_bound()
        self.expect(",")
        hi = self.parse_signed_bound()
        t2 = self.peek()
        if t2.kind not in ")]":
            self.error("expected ')' or ']' closing the interval")
        self.next()
        if not lo < hi:
            raise DslSyntaxError(f"empty piece interval [{lo}, {hi})", t.line, t.col)
        return lo, hi

    def parse_signed_bound(self) -> float:
        sign = 1.0
        while self.peek().kind in "+-":
            if self.next().kind == "-":
                sign = -sign
        t = self.peek()
        if t.kind == "num":
            self.next()
            return sign * float(t.text)
        if t.kind == "ident" and t.text == "inf":
            self.next()
            return sign * math.inf
        self.error("expected a numeric interval bound or 'inf'")

    def parse_field_source(self):
        """Returns a list of (lo, hi, rows); a bare matrix yields one unbounded piece."""
        t = self.peek()
        if t.kind == "ident" and t.text == "on":
            pieces = []
            while self.peek().kind == "ident" and self.peek().text == "on":
                self.next()
                lo, hi = self.parse_piece_interval()
                self.expect(":")
                rows = self.parse_matrix()
                pieces.append((lo, hi, rows))
                if self.peek().kind == ";":
                    self.next()
            return pieces
        rows = self.parse_matrix()
        return [(-math.inf, math.inf, rows)]


def _const_value(e):
    """Value of a constant expression, or None if it depends on x."""
    if _depends_on_x(e):
        return None
    try:
        return _eval(e, 0.0)
    except _EvalError:
        return None


# ---------------------------------------------------------------------------
# Fields

@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    entries: tuple  # tuple of tuples of Expr
    const: object = None  # ndarray when every entry is constant


def _make_piece(lo: float, hi: float, rows) -> Piece:
    entries = tuple(tuple(row) for row in rows)
    const = None
    if all(not _depends_on_x(e) for row in entries for e in row):
        try:
            const = np.array(
                [[_eval(e, 0.0) for e in row] for row in entries], dtype=complex
            )
        except _EvalError:
            const = None
    return Piece(lo, hi, entries, const)


class MatrixField:
    """Common surface of symbolic and callable coefficient functions."""

    n: int
    domain: Interval

    def evaluate(self, x: float) -> np.ndarray:
        raise NotImplementedError

    def differentiate(self) -> "MatrixField":
        raise NotImplementedError

    def breakpoints(self) -> tuple[float, ...]:
        """Finite piece boundaries interior to the domain."""
        return ()

    def __call__(self, x: float) -> np.ndarray:
        return self.evaluate(x)


class ExpressionField(MatrixField):
    """A piecewise symbolic matrix function of ``x``.

    Immutable after construction; evaluation is pure and thread-safe.
    """

    def __init__(self, pieces: list[Piece], kinks: tuple = ()):
        if not pieces:
            raise ValueError("a field needs at least one piece")
        pieces = sorted(pieces, key=lambda p: p.lo)
        shape0 = (len(pieces[0].entries), len(pieces[0].entries[0]))
        if shape0[0] != shape0[1]:
            raise ValueError(f"coefficient matrices must be square, got {shape0[0]}x{shape0[1]}")
        for p in pieces:
            if (len(p.entries), len(p.entries[0])) != shape0:
                raise ValueError("pieces have inconsistent matrix dimensions")
        for a, b in zip(pieces, pieces[1:]):
            if b.lo < a.hi:
                raise ValueError(f"overlapping pieces at x={b.lo}")
            if b.lo > a.hi:
                raise ValueError(f"gap between pieces on [{a.hi}, {b.lo})")
        self.pieces = tuple(pieces)
        self.n = shape0[0]
        self.kinks = kinks
        lo, hi = pieces[0].lo, pieces[-1].hi
        self.domain = Interval(lo, hi, math.isfinite(lo), math.isfinite(hi))

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(p.lo for p in self.pieces[1:])

    def _piece_at(self, x: float) -> Piece:
        x = float(x)
        for p in self.pieces:
            if p.lo <= x < p.hi:
                return p
        last = self.pieces[-1]
        if x == last.hi:
            return last
        raise EvaluationSingularity("x outside the field's domain", x)

    def evaluate(self, x: float) -> np.ndarray:
        x = float(x)
        p = self._piece_at(x)
        if p.const is not None:
            return p.const.copy()
        out = np.empty((self.n, self.n), dtype=complex)
        for idx_i, row in enumerate(p.entries):
            for idx_j, e in enumerate(row):
                try:
                    out[idx_i, idx_j] = _eval(e, x)
                except _EvalError as exc:
                    raise EvaluationSingularity(str(exc), x, (idx_i, idx_j)) from None
        return out

    def differentiate(self) -> "ExpressionField":
        new_pieces = []
        kinks = []
        for p in self.pieces:
            rows = []
            for i, row in enumerate(p.entries):
                new_row = []
                for j, e in enumerate(row):
                    de, kink = _diff(e)
                    if kink:
                        kinks.append((i, j))
                    new_row.append(de)
                rows.append(new_row)
            new_pieces.append(_make_piece(p.lo, p.hi, rows))
        return ExpressionField(new_pieces, kinks=tuple(sorted(set(kinks))))

    def to_text(self) -> str:
        def matrix_text(p: Piece) -> str:
            rows = ", ".join(
                "[" + ", ".join(_to_text(e) for e in row) + "]" for row in p.entries
            )
            return f"[{rows}]"

        if len(self.pieces) == 1 and not self.domain.is_bounded and self.domain.is_real_line:
            return matrix_text(self.pieces[0])
        parts = [
            f"on [{_fmt_bound(p.lo)}, {_fmt_bound(p.hi)}): {matrix_text(p)}"
            for p in self.pieces
        ]
        return "; ".join(parts)

    def __repr__(self):
        return f"ExpressionField(n={self.n}, pieces={len(self.pieces)}, domain={self.domain})"


class CallableMatrixField(MatrixField):
    """A matrix function backed by a callable, e.g. a propagated gauge path."""

    def __init__(self, n: int, fn, dfn=None, breakpoints=(), domain: Interval | None = None):
        self.n = n
        self._fn = fn
        self._dfn = dfn
        self._breaks = tuple(sorted(breakpoints))
        self.domain = domain if domain is not None else Interval.real_line()

    def breakpoints(self) -> tuple[float, ...]:
        return self._breaks

    def evaluate(self, x: float) -> np.ndarray:
        return np.asarray(self._fn(x), dtype=complex)

    def differentiate(self) -> "CallableMatrixField":
        if self._dfn is None:
            raise NotImplementedError("no derivative is available for this callable field")
        return CallableMatrixField(self.n, self._dfn, None, self._breaks, self.domain)

    def __repr__(self):
        return f"CallableMatrixField(n={self.n}, domain={self.domain})"


# ---------------------------------------------------------------------------
# Public constructors

def parse_matrix_function(text: str, n: int | None = None) -> ExpressionField:
    """Parse coefficient-function source text into an :class:`ExpressionField`.

    Args:
        text: source in the module grammar (a bare matrix or 'on ...' pieces).
        n: expected dimension; mismatch raises :class:`DslSyntaxError`.
    """
    parser = _Parser(text)
    raw = parser.parse_field_source()
    tail = parser.peek()
    if tail.kind != "eof":
        raise DslSyntaxError(f"unexpected trailing input {tail.text!r}", tail.line, tail.col)
    pieces = [_make_piece(lo, hi, rows) for lo, hi, rows in raw]
    try:
        field = ExpressionField(pieces)
    except ValueError as exc:
        raise DslSyntaxError(str(exc), 1, 1) from None
    if n is not None and field.n != n:
        raise DslSyntaxError(f"expected a {n}x{n} matrix, got {field.n}x{field.n}", 1, 1)
    return field


def parse_scalar(text: str) -> ExpressionField:
    """Parse a scalar function; accepts bare expressions as well as [[...]]."""
    stripped = text.strip()
    if not stripped.startswith("[") and not stripped.startswith("on"):
        text = f"[[{text}]]"
    return parse_matrix_function(text, n=1)


def parse_vector_function(text: str, n: int | None = None) -> list[ExpressionField]:
    """Parse a column vector ``[[e1], [e2], ...]`` into scalar fields.

    Each component becomes its own 1x1 field; piecewise sources apply
    piece-by-piece to every component.
    """
    parser = _Parser(text)
    raw = parser.parse_field_source()
    tail = parser.peek()
    if tail.kind != "eof":
        raise DslSyntaxError(f"unexpected trailing input {tail.text!r}", tail.line, tail.col)
    rows0 = raw[0][2]
    if len(rows0[0]) != 1:
        raise DslSyntaxError("a vector needs one entry per row ([[e1], [e2], ...])", 1, 1)
    size = len(rows0)
    if n is not None and size != n:
        raise DslSyntaxError(f"expected {n} components, got {size}", 1, 1)
    comps = []
    for i in range(size):
        pieces = []
        for lo, hi, rows in raw:
            if len(rows) != size or any(len(r) != 1 for r in rows):
                raise DslSyntaxError("vector pieces have inconsistent shapes", 1, 1)
            pieces.append(_make_piece(lo, hi, [[rows[i][0]]]))
        comps.append(ExpressionField(pieces))
    return comps


def constant_field(matrix) -> ExpressionField:
    """A field equal to ``matrix`` at every x on the whole line."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    rows = [[Const(complex(v)) for v in row] for row in m]
    return ExpressionField([_make_piece(-math.inf, math.inf, rows)])

