"""Text form of envelope expressions.

Grammar (shared by the printer and the parser)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' INT)?
    atom   := NUMBER | 'I' | NAME "'"* | '(' expr ')'

Division is only allowed by constant subexpressions.  ``I`` is the imaginary
unit.  Names followed by ticks are envelope derivatives; untagged names are
envelopes when listed in ``envelopes`` and parameters otherwise.
"""

from __future__ import annotations

from collections.abc import Iterable

from .coeff import ONE, GaussQ, to_gauss
from .expr import PARAM, EnvelopeExpr, atom_str, envelope, param

__all__ = [
    "format_expr",
    "format_coeff",
    "format_physical",
    "parse_expr",
    "ExpressionSyntaxError",
]


class ExpressionSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at column {pos + 1}: {text!r}")
        self.text = text
        self.pos = pos


def _fmt_rat(q) -> str:
    return str(q)


def format_coeff(c: GaussQ) -> str:
    if not c.im:
        return _fmt_rat(c.re)
    if not c.re:
        if c.im == 1:
            return "I"
        if c.im == -1:
            return "-I"
        return f"{_fmt_rat(c.im)}*I"
    sign = "+" if c.im > 0 else "-"
    mag = abs(c.im)
    im = "I" if mag == 1 else f"{_fmt_rat(mag)}*I"
    return f"({_fmt_rat(c.re)}{sign}{im})"


def _format_monomial(m) -> str:
    parts = []
    i = 0
    while i < len(m):
        j = i
        while j < len(m) and m[j] == m[i]:
            j += 1
        p = j - i
        s = atom_str(m[i])
        parts.append(s if p == 1 else f"{s}^{p}")
        i = j
    return "*".join(parts)


def _format_term(m, c: GaussQ, first: bool) -> str:
    neg = False
    if not c.im and c.re < 0:
        neg, c = True, -c
    elif not c.re and c.im < 0:
        neg, c = True, -c
    mono = _format_monomial(m)
    if not mono:
        body = format_coeff(c)
    elif c == ONE:
        body = mono
    else:
        body = f"{format_coeff(c)}*{mono}"
    if first:
        return f"-{body}" if neg else body
    return f" - {body}" if neg else f" + {body}"


def format_expr(e: EnvelopeExpr) -> str:
    """Deterministic text form; ``parse_expr(format_expr(e)) == e``."""
    terms = e.sorted_terms()
    if not terms:
        return "0"
    return "".join(_format_term(m, c, i == 0) for i, (m, c) in enumerate(terms))


def format_physical(e: EnvelopeExpr, order: int) -> str:
    """Print an order-``order`` coefficient with hbar and omega restored.

    Every time derivative carries one factor of hbar, and the whole term is
    divided by ``(hbar*omega)**order``.
    """
    if e.is_zero():
        return "0"
    acc = {}
    for m, c in e.terms.items():
        nder = sum(k for _, k in m if k > 0)
        key = tuple(sorted(m + (("hbar", PARAM),) * nder))
        acc[key] = c
    body = format_expr(EnvelopeExpr(acc))
    if order == 0:
        return body
    den = "(hbar*omega)" if order == 1 else f"(hbar*omega)^{order}"
    return f"({body})/{den}"


# parser


def _tokenize(text: str):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            toks.append(("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            k = j
            while k < n and text[k] == "'":
                k += 1
            toks.append(("name", text[i:k], i))
            i = k
            continue
        if ch in "+-*/^()":
            toks.append((ch, ch, i))
            i += 1
            continue
        raise ExpressionSyntaxError(f"unexpected character {ch!r}", text, i)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, envelopes: set[str]):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0
        self.envelopes = envelopes

    def peek(self):
        return self.toks[self.pos]

    def take(self, kind=None):
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            want = "end of input" if kind == "end" else repr(kind)
            raise ExpressionSyntaxError(f"expected {want}", self.text, tok[2])
        self.pos += 1
        return tok

    def expr(self) -> EnvelopeExpr:
        out = self.term()
        while self.peek()[0] in "+-" and self.peek()[0] != "end":
            op = self.take()[0]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> EnvelopeExpr:
        out = self.unary()
        while self.peek()[0] in ("*", "/"):
            op, _, at = self.take()
            rhs = self.unary()
            if op == "*":
                out = out * rhs
            else:
                c = rhs.constant_value()
                if c is None:
                    raise ExpressionSyntaxError("division by a non-constant expression", self.text, at)
                if not c:
                    raise ExpressionSyntaxError("division by zero", self.text, at)
                out = out * (ONE / c)
        return out

    def unary(self) -> EnvelopeExpr:
        if self.peek()[0] == "-":
            self.take()
            return -self.unary()
        if self.peek()[0] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> EnvelopeExpr:
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                raise ExpressionSyntaxError("expected a nonnegative integer exponent", self.text, tok[2])
            return base ** int(tok[1])
        return base

    def atom(self) -> EnvelopeExpr:
        kind, val, at = self.take()
        if kind == "num":
            try:
                return EnvelopeExpr.coerce(to_gauss(val))
            except (ValueError, ZeroDivisionError):
                raise ExpressionSyntaxError(f"bad number {val!r}", self.text, at) from None
        if kind == "name":
            k = len(val) - len(val.rstrip("'"))
            name = val[: len(val) - k] if k else val
            if name == "I":
                if k:
                    raise ExpressionSyntaxError("the imaginary unit cannot be differentiated", self.text, at)
                return EnvelopeExpr.coerce(GaussQ(0, 1))
            if k or name in self.envelopes:
                return envelope(name, k)
            return param(name)
        if kind == "(":
            inner = self.expr()
            self.take(")")
            return inner
        what = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {what}", self.text, at)


def parse_expr(text: str, envelopes: Iterable[str] = ()) -> EnvelopeExpr:
    """Parse the expression grammar described in the module docstring."""
    p = _Parser(str(text), set(envelopes))
    out = p.expr()
    p.take("end")
    return out
