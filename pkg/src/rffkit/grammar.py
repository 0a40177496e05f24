"""Text syntax for kernel expressions.

    expr    := name [ '(' args ')' ]
    args    := arg (',' arg)*
    arg     := [ident '='] (expr | number)
    number  := real | real ('+'|'-') real 'j' | real 'j'

Names: gaussian, laplacian, poly, dot, sqdist, l1dist, sinc, const, scale,
sum, prod, exp, schoenberg, cnd2pd, tensor. Whitespace is ignored. The
``anchor`` of ``cnd2pd`` is a row index into the dataset the expression is
parsed against.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import kernels as K


class KernelSyntaxError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.text = text


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),=])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[_Tok]:
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise KernelSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


Value = Union[K.KernelExpr, complex, float, int]


class _Parser:
    def __init__(self, text: str, points: Optional[np.ndarray]):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.points = points

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        raise KernelSyntaxError(msg, tok.pos, self.text)

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def parse(self) -> K.KernelExpr:
        expr = self.kernel()
        if self.tok.kind != "end":
            self.error(f"unexpected trailing {self.tok.text!r}")
        return expr

    def number(self) -> complex:
        tok = self.tok
        if tok.kind != "number":
            self.error("expected a number")
        self.i += 1
        if tok.text.endswith("j"):
            return complex(0.0, float(tok.text[:-1]))
        val = float(tok.text)
        nxt = self.tok
        # real part followed by a signed imaginary literal, e.g. 1+2j
        if nxt.kind == "number" and nxt.text[0] in "+-" and nxt.text.endswith("j"):
            self.i += 1
            return complex(val, float(nxt.text[:-1]))
        return val

    def value(self) -> Value:
        if self.tok.kind == "number":
            return self.number()
        return self.kernel()

    def args(self) -> tuple[list, dict, dict]:
        pos, kw, where = [], {}, {}
        if self.tok.text != "(":
            return pos, kw, where
        self.expect("(")
        if self.tok.text == ")":
            self.i += 1
            return pos, kw, where
        while True:
            start = self.tok
            if self.tok.kind == "ident" and self.toks[self.i + 1].text == "=":
                name = self.tok.text
                self.i += 2
                if name in kw:
                    self.error(f"duplicate argument {name!r}", start)
                where[name] = self.tok
                kw[name] = self.value()
            else:
                if kw:
                    self.error("positional argument after keyword argument")
                where[len(pos)] = self.tok
                pos.append(self.value())
            if self.tok.text == ",":
                self.i += 1
                continue
            self.expect(")")
            return pos, kw, where

    def kernel(self) -> K.KernelExpr:
        head = self.tok
        if head.kind != "ident":
            self.error("expected a kernel name")
        self.i += 1
        name = head.text.lower()
        pos, kw, where = self.args()
        builder = _BUILDERS.get(name)
        if builder is None:
            self.error(f"unknown kernel {head.text!r}", head)
        spec = builder[0]
        bound: dict = {}
        for slot, val in zip(spec, pos):
            bound[slot] = val
        if len(pos) > len(spec):
            self.error(f"{name} takes at most {len(spec)} arguments", head)
        for key, val in kw.items():
            if key not in spec:
                self.error(f"{name} has no argument {key!r}", where[key])
            if key in bound:
                self.error(f"argument {key!r} given twice", where[key])
            bound[key] = val
        try:
            return builder[1](self, bound)
        except KernelSyntaxError:
            raise
        except (ValueError, TypeError) as exc:
            self.error(f"{name}: {exc}", head)


def _real(v, what: str) -> float:
    if isinstance(v, K.KernelExpr):
        raise ValueError(f"{what} must be a number")
    c = complex(v)
    if c.imag != 0:
        raise ValueError(f"{what} must be real")
    return c.real


def _kern(v, what: str) -> K.KernelExpr:
    if not isinstance(v, K.KernelExpr):
        raise ValueError(f"{what} must be a kernel expression")
    return v


def _req(bound: dict, key: str, default=None):
    if key in bound:
        return bound[key]
    if default is None:
        raise ValueError(f"missing argument {key!r}")
    return default


def _int(v, what: str) -> int:
    r = _real(v, what)
    if r != int(r):
        raise ValueError(f"{what} must be an integer")
    return int(r)


def _anchor(p: _Parser, bound: dict) -> K.KernelExpr:
    child = _kern(_req(bound, "K"), "cnd2pd argument")
    idx = _int(_req(bound, "anchor"), "anchor")
    if p.points is None:
        raise ValueError("anchor=<row> needs a dataset")
    if not 0 <= idx < len(p.points):
        raise ValueError(f"anchor row {idx} out of range for {len(p.points)} points")
    return K.CndToPd(child, tuple(p.points[idx]), anchor_label=str(idx))


def _const(v) -> K.KernelExpr:
    if isinstance(v, K.KernelExpr):
        raise ValueError("constant must be a number")
    return K.ConstantKernel(v if isinstance(v, complex) else float(v))


def _variadic(cls):
    def build(p, bound):
        kids = [_kern(bound[k], "argument") for k in sorted(bound, key=lambda s: int(s[1:]))]
        if not kids:
            raise ValueError("needs at least one kernel")
        return cls(tuple(kids))

    return build


_VARIADIC_SLOTS = tuple(f"K{i}" for i in range(1, 33))

_BUILDERS = {
    "gaussian": (("sigma",), lambda p, b: K.Gaussian(_real(_req(b, "sigma", 1.0), "sigma"))),
    "laplacian": (("sigma",), lambda p, b: K.Laplacian(_real(_req(b, "sigma", 1.0), "sigma"))),
    "poly": (
        ("c", "p"),
        lambda p, b: K.Polynomial(_real(_req(b, "c", 1.0), "c"), _int(_req(b, "p", 2), "p")),
    ),
    "dot": ((), lambda p, b: K.DotProduct()),
    "sqdist": ((), lambda p, b: K.SquaredDistance()),
    "l1dist": ((), lambda p, b: K.L1Distance()),
    "sinc": (("a",), lambda p, b: K.Sinc(_real(_req(b, "a", 1.0), "a"))),
    "const": (("v",), lambda p, b: _const(_req(b, "v"))),
    "scale": (("a", "K"), lambda p, b: K.Scale(_real(_req(b, "a"), "scale factor"), _kern(_req(b, "K"), "scale argument"))),
    "sum": (_VARIADIC_SLOTS, _variadic(K.Sum)),
    "prod": (_VARIADIC_SLOTS, _variadic(K.SchurProduct)),
    "exp": (("K",), lambda p, b: K.ExpCompose(_kern(_req(b, "K"), "exp argument"))),
    "schoenberg": (("t", "K"), lambda p, b: K.Schoenberg(_real(_req(b, "t"), "t"), _kern(_req(b, "K"), "schoenberg argument"))),
    "cnd2pd": (("K", "anchor"), _anchor),
    "tensor": (
        ("K1", "K2", "split"),
        lambda p, b: K.TensorProduct(
            _kern(_req(b, "K1"), "tensor argument"),
            _kern(_req(b, "K2"), "tensor argument"),
            _int(_req(b, "split"), "split"),
        ),
    ),
}


def parse_kernel(text: str, points=None) -> K.KernelExpr:
    """Parse a kernel expression; ``points`` resolves ``cnd2pd(..., anchor=row)``."""
    pts = None if points is None else K.as_points(points)
    return _Parser(text, pts).parse()
