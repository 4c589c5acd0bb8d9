"""Term language over exp, log, restricted-analytic primitives, and the
super-logarithm.

Terms are immutable trees with structural equality.  The module provides a
parser and printer for the concrete grammar

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := NUMBER | IDENT | '(' expr ')' | '-' factor | FUNC '(' expr ')'

where FUNC is one of exp, log, phi, dphi or a restricted-analytic catalog
name, and IDENT is a variable (x1, x2, ... by convention).  On top of the
tree it implements point evaluation, forward-mode gradients, symbolic
differentiation, the phi-nesting complexity measure, and the structural
iterated-exponential growth analysis.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import (
    DifferentiationError,
    DomainError,
    GrowthAnalysisError,
    TermSyntaxError,
)

__all__ = [
    "RAPrimitive",
    "TermNode",
    "GrowthExponent",
    "default_catalog",
    "var",
    "const",
    "add",
    "sub",
    "mul",
    "neg",
    "exp",
    "log",
    "phi",
    "dphi",
    "ra",
    "add_all",
    "mul_all",
    "parse_term",
    "to_text",
    "compile_terms",
    "eval_compiled",
    "gradient_compiled",
    "eval_term",
    "gradient",
    "fcpx",
    "growth_exponent",
    "differentiate",
    "substitute",
    "collect_phi_monomials",
    "free_variables",
]


# ---------------------------------------------------------------------------
# restricted-analytic primitives


@dataclass(frozen=True, eq=False)
class RAPrimitive:
    """A smooth function restricted to a compact interval [lo, hi].

    ``fn`` evaluates pointwise (scalars or numpy arrays), ``range_fn(a, b)``
    returns a mathematical enclosure of the range over [a, b] (the interval
    layer adds directed-rounding slack on top), ``deriv`` is the derivative
    as another primitive, and ``sup_abs`` bounds |fn| over the domain.
    """

    name: str
    lo: float
    hi: float
    fn: Callable
    range_fn: Callable
    sup_abs: float
    deriv: Optional["RAPrimitive"] = None

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"RAPrimitive({self.name!r}, [{self.lo}, {self.hi}])"

    @property
    def growth_level(self) -> int:
        return _level_for_bound(self.sup_abs)


# exp composed s times at 0: exp_0(0)=0, exp_1(0)=1, exp_2(0)=e, ...
_EXP_AT_ZERO = (0.0, 1.0, math.e, math.exp(math.e), math.exp(math.exp(math.e)))


def _level_for_bound(m: float) -> int:
    for s, v in enumerate(_EXP_AT_ZERO):
        if m <= v:
            return s
    return len(_EXP_AT_ZERO)  # exp_5(0) overflows any double


_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi
# slack when testing whether a trig extremum lies inside an interval; only
# ever widens the reported range, never narrows it
_PHASE_SLACK = 1e-9


def _contains_phase(a: float, b: float, offset: float) -> bool:
    # is offset + 2*pi*k in [a, b] for some integer k?
    k_lo = math.ceil((a - offset - _PHASE_SLACK) / _TWO_PI)
    k_hi = math.floor((b - offset + _PHASE_SLACK) / _TWO_PI)
    return k_lo <= k_hi


def _sin_range(a: float, b: float):
    if b - a >= _TWO_PI:
        return -1.0, 1.0
    hi = 1.0 if _contains_phase(a, b, _HALF_PI) else max(math.sin(a), math.sin(b))
    lo = -1.0 if _contains_phase(a, b, -_HALF_PI) else min(math.sin(a), math.sin(b))
    return lo, hi


def _cos_range(a: float, b: float):
    if b - a >= _TWO_PI:
        return -1.0, 1.0
    hi = 1.0 if _contains_phase(a, b, 0.0) else max(math.cos(a), math.cos(b))
    lo = -1.0 if _contains_phase(a, b, math.pi) else min(math.cos(a), math.cos(b))
    return lo, hi


def _neg_range(range_fn):
    def rng(a: float, b: float):
        lo, hi = range_fn(a, b)
        return -hi, -lo

    return rng


def _atan_range(a: float, b: float):
    return math.atan(a), math.atan(b)


def _datan(x):
    return 1.0 / (1.0 + x * x)


def _datan_range(a: float, b: float):
    far = max(abs(a), abs(b))
    near = 0.0 if a <= 0.0 <= b else min(abs(a), abs(b))
    return _datan(far), _datan(near)


def _d2atan(x):
    t = 1.0 + x * x
    return -2.0 * x / (t * t)


def _d3atan(x):
    t = 1.0 + x * x
    return (6.0 * x * x - 2.0) / (t * t * t)


def _critical_point_range(fn, crits):
    # range of fn over [a, b] when fn is monotone between consecutive crits
    def rng(a: float, b: float):
        vals = [fn(a), fn(b)]
        vals.extend(fn(c) for c in crits if a <= c <= b)
        return min(vals), max(vals)

    return rng


def default_catalog(restriction: float = 100.0) -> dict[str, RAPrimitive]:
    """Catalog of restricted-analytic primitives on [-restriction, restriction].

    Contains sin, cos, atan and enough derivative levels for symbolic
    differentiation followed by interval Jacobians.
    """
    import numpy as np

    c = float(restriction)
    if not (c > 0.0 and math.isfinite(c)):
        raise ValueError("restriction must be positive and finite")

    # sin/cos family closes under differentiation, so the chain is a cycle
    sin_p = RAPrimitive("sin", -c, c, np.sin, _sin_range, 1.0)
    dsin_p = RAPrimitive("dsin", -c, c, np.cos, _cos_range, 1.0)
    d2sin_p = RAPrimitive("d2sin", -c, c, lambda x: -np.sin(x), _neg_range(_sin_range), 1.0)
    d3sin_p = RAPrimitive("d3sin", -c, c, lambda x: -np.cos(x), _neg_range(_cos_range), 1.0)
    cos_p = RAPrimitive("cos", -c, c, np.cos, _cos_range, 1.0)
    dcos_p = RAPrimitive("dcos", -c, c, lambda x: -np.sin(x), _neg_range(_sin_range), 1.0)
    d2cos_p = RAPrimitive("d2cos", -c, c, lambda x: -np.cos(x), _neg_range(_cos_range), 1.0)
    d3cos_p = RAPrimitive("d3cos", -c, c, np.sin, _sin_range, 1.0)
    for a, b in ((sin_p, dsin_p), (dsin_p, d2sin_p), (d2sin_p, d3sin_p), (d3sin_p, sin_p),
                 (cos_p, dcos_p), (dcos_p, d2cos_p), (d2cos_p, d3cos_p), (d3cos_p, cos_p)):
        object.__setattr__(a, "deriv", b)

    inv_sqrt3 = 1.0 / math.sqrt(3.0)
    d3atan_p = RAPrimitive(
        "d3atan", -c, c, _d3atan,
        _critical_point_range(_d3atan, (-1.0, 0.0, 1.0)),
        2.0,
    )
    d2atan_p = RAPrimitive(
        "d2atan", -c, c, _d2atan,
        _critical_point_range(_d2atan, (-inv_sqrt3, inv_sqrt3)),
        _d2atan(-inv_sqrt3),
        deriv=d3atan_p,
    )
    datan_p = RAPrimitive("datan", -c, c, _datan, _datan_range, 1.0, deriv=d2atan_p)
    atan_p = RAPrimitive("atan", -c, c, np.arctan, _atan_range, math.atan(c), deriv=datan_p)

    prims = [sin_p, dsin_p, d2sin_p, d3sin_p, cos_p, dcos_p, d2cos_p, d3cos_p,
             atan_p, datan_p, d2atan_p, d3atan_p]
    return {p.name: p for p in prims}


_DEFAULT_CATALOG: dict[str, RAPrimitive] | None = None


def _catalog() -> dict[str, RAPrimitive]:
    global _DEFAULT_CATALOG
    if _DEFAULT_CATALOG is None:
        _DEFAULT_CATALOG = default_catalog()
    return _DEFAULT_CATALOG


# ---------------------------------------------------------------------------
# term nodes

_KINDS = ("var", "const", "add", "mul", "neg", "exp", "log", "ra", "phi", "dphi")
_ARITY = {"var": 0, "const": 0, "add": 2, "mul": 2, "neg": 1, "exp": 1,
          "log": 1, "ra": 1, "phi": 1, "dphi": 1}


@dataclass(frozen=True, eq=False)
class TermNode:
    """Immutable term tree node with cached structural hash."""

    kind: str
    children: tuple = ()
    index: int = -1
    value: float = 0.0
    prim: RAPrimitive | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if len(self.children) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} node takes {_ARITY[self.kind]} children")
        h = hash((self.kind, self.index, self.value,
                  id(self.prim) if self.prim is not None else 0,
                  tuple(c._hash for c in self.children)))
        object.__setattr__(self, "_hash", h)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, TermNode):
            return NotImplemented
        if self._hash != other._hash or self.kind != other.kind:
            return False
        return (self.index == other.index and self.value == other.value
                and self.prim is other.prim and self.children == other.children)

    def __repr__(self):
        return f"<term {to_text(self)}>"


def var(i: int) -> TermNode:
    if i < 0:
        raise ValueError("variable index must be >= 0")
    return TermNode("var", index=i)


def const(v: float) -> TermNode:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError("constants must be finite")
    return TermNode("const", value=v)


def add(a: TermNode, b: TermNode) -> TermNode:
    return TermNode("add", (a, b))


def mul(a: TermNode, b: TermNode) -> TermNode:
    return TermNode("mul", (a, b))


def neg(a: TermNode) -> TermNode:
    return TermNode("neg", (a,))


def sub(a: TermNode, b: TermNode) -> TermNode:
    return add(a, neg(b))


def exp(a: TermNode) -> TermNode:
    return TermNode("exp", (a,))


def log(a: TermNode) -> TermNode:
    return TermNode("log", (a,))


def phi(a: TermNode) -> TermNode:
    return TermNode("phi", (a,))


def dphi(a: TermNode) -> TermNode:
    return TermNode("dphi", (a,))


def ra(prim: RAPrimitive, a: TermNode) -> TermNode:
    return TermNode("ra", (a,), prim=prim)


def add_all(ts: Sequence[TermNode]) -> TermNode:
    if not ts:
        return const(0.0)
    out = ts[0]
    for t in ts[1:]:
        out = add(out, t)
    return out


def mul_all(ts: Sequence[TermNode]) -> TermNode:
    if not ts:
        return const(1.0)
    out = ts[0]
    for t in ts[1:]:
        out = mul(out, t)
    return out


# ---------------------------------------------------------------------------
# parser

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>[-+*()])"
)

_FUNC_BUILTINS = {"exp": exp, "log": log, "phi": phi, "dphi": dphi}
_VAR_RE = re.compile(r"^x([0-9]+)$")


class _Parser:
    def __init__(self, text: str, var_names, catalog, extra):
        self.text = text
        self.var_names = list(var_names) if var_names is not None else None
        self.catalog = catalog if catalog is not None else _catalog()
        self.extra = dict(extra) if extra else {}
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise TermSyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
            pos = m.end()
            if m.lastgroup != "ws":
                self.tokens.append((m.lastgroup, m.group(), m.start() + 1))
        self.i = 0

    def _peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("eof", "", len(self.text) + 1)

    def _next(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _expect_sym(self, s: str):
        kind, val, col = self._next()
        if kind != "sym" or val != s:
            raise TermSyntaxError(f"expected {s!r}", col)

    def parse(self) -> TermNode:
        t = self.expr()
        kind, val, col = self._peek()
        if kind != "eof":
            raise TermSyntaxError(f"unexpected token {val!r}", col)
        return t

    def expr(self) -> TermNode:
        t = self.term()
        while True:
            kind, val, _ = self._peek()
            if kind == "sym" and val in "+-":
                self._next()
                rhs = self.term()
                t = add(t, rhs) if val == "+" else add(t, neg(rhs))
            else:
                return t

    def term(self) -> TermNode:
        t = self.factor()
        while True:
            kind, val, _ = self._peek()
            if kind == "sym" and val == "*":
                self._next()
                t = mul(t, self.factor())
            else:
                return t

    def factor(self) -> TermNode:
        kind, val, col = self._next()
        if kind == "num":
            return const(float(val))
        if kind == "sym" and val == "-":
            return neg(self.factor())
        if kind == "sym" and val == "(":
            t = self.expr()
            self._expect_sym(")")
            return t
        if kind == "ident":
            nkind, nval, _ = self._peek()
            if nkind == "sym" and nval == "(":
                ctor = _FUNC_BUILTINS.get(val)
                prim = self.catalog.get(val)
                if ctor is None and prim is None:
                    raise TermSyntaxError(f"unknown function {val!r}", col)
                self._next()
                arg = self.expr()
                self._expect_sym(")")
                return ctor(arg) if ctor is not None else ra(prim, arg)
            return self._ident(val, col)
        raise TermSyntaxError(f"unexpected token {val!r}", col)

    def _ident(self, name: str, col: int) -> TermNode:
        if name in self.extra:
            return self.extra[name]
        if self.var_names is not None:
            if name in self.var_names:
                return var(self.var_names.index(name))
            raise TermSyntaxError(f"unknown identifier {name!r}", col)
        m = _VAR_RE.match(name)
        if m:
            k = int(m.group(1))
            if k >= 1:
                return var(k - 1)
        raise TermSyntaxError(f"unknown identifier {name!r}", col)


def parse_term(text: str, var_names: Sequence[str] | None = None,
               catalog: Mapping[str, RAPrimitive] | None = None,
               extra: Mapping[str, TermNode] | None = None) -> TermNode:
    """Parse source text into a term.

    ``var_names`` fixes the surface names and their indices; without it,
    identifiers must match x<k> with k >= 1 and map to index k-1.  ``extra``
    maps additional identifiers (parameter placeholders) to ready-made nodes.
    """
    return _Parser(text, var_names, catalog, extra).parse()


# ---------------------------------------------------------------------------
# printer

def _var_name(i: int, var_names) -> str:
    if var_names is not None and i < len(var_names):
        return var_names[i]
    return f"x{i + 1}"


def to_text(t: TermNode, var_names: Sequence[str] | None = None) -> str:
    """Render a term; parse_term(to_text(t)) is structurally equal to t for
    parser-producible trees."""

    def go(node: TermNode, level: int) -> str:
        # level: 0 expr, 1 term, 2 factor
        k = node.kind
        if k == "var":
            s, mine = _var_name(node.index, var_names), 2
        elif k == "const":
            s, mine = repr(node.value), 2
        elif k == "add":
            a, b = node.children
            if b.kind == "neg":
                s = f"{go(a, 0)} - {go(b.children[0], 1)}"
            else:
                s = f"{go(a, 0)} + {go(b, 1)}"
            mine = 0
        elif k == "mul":
            a, b = node.children
            s, mine = f"{go(a, 1)}*{go(b, 2)}", 1
        elif k == "neg":
            s, mine = f"-{go(node.children[0], 2)}", 2
        elif k == "ra":
            s, mine = f"{node.prim.name}({go(node.children[0], 0)})", 2
        else:
            s, mine = f"{k}({go(node.children[0], 0)})", 2
        if mine < level:
            return f"({s})"
        return s

    return go(t, 0)


# ---------------------------------------------------------------------------
# tape compilation: postorder over the term DAG with shared subterms
# evaluated once

VAR, CONST, ADD, MUL, SQR, NEG, EXP, LOG, RA, PHI, DPHI = range(11)

_CODE = {"var": VAR, "const": CONST, "add": ADD, "mul": MUL, "neg": NEG,
         "exp": EXP, "log": LOG, "ra": RA, "phi": PHI, "dphi": DPHI}


@dataclass
class CompiledTerms:
    ops: list          # (code, a, b, payload) per slot
    roots: list        # slot index per root term
    n_vars: int


def compile_terms(roots: Sequence[TermNode]) -> CompiledTerms:
    """Flatten terms into a shared evaluation tape.

    Structurally equal subterms land in one slot; mul nodes with equal
    children compile to a dedicated square op so downstream interval
    evaluation avoids the dependency loss of [a,b]*[a,b].
    """
    slot: dict[TermNode, int] = {}
    ops: list = []
    n_vars = 0

    def visit(node: TermNode) -> int:
        got = slot.get(node)
        if got is not None:
            return got
        code = _CODE[node.kind]
        a = b = -1
        payload = None
        if node.kind == "var":
            nonlocal n_vars
            n_vars = max(n_vars, node.index + 1)
            payload = node.index
        elif node.kind == "const":
            payload = node.value
        elif node.kind == "ra":
            payload = node.prim
            a = visit(node.children[0])
        elif node.kind == "mul" and node.children[0] == node.children[1]:
            code = SQR
            a = visit(node.children[0])
        elif len(node.children) == 2:
            a = visit(node.children[0])
            b = visit(node.children[1])
        elif len(node.children) == 1:
            a = visit(node.children[0])
        idx = len(ops)
        ops.append((code, a, b, payload))
        slot[node] = idx
        return idx

    root_idx = [visit(r) for r in roots]
    return CompiledTerms(ops, root_idx, n_vars)


def eval_compiled(ct: CompiledTerms, point: Sequence[float], abel) -> list[float]:
    vals = [0.0] * len(ct.ops)
    for i, (code, a, b, payload) in enumerate(ct.ops):
        if code == VAR:
            vals[i] = float(point[payload])
        elif code == CONST:
            vals[i] = payload
        elif code == ADD:
            vals[i] = vals[a] + vals[b]
        elif code == MUL:
            vals[i] = vals[a] * vals[b]
        elif code == SQR:
            vals[i] = vals[a] * vals[a]
        elif code == NEG:
            vals[i] = -vals[a]
        elif code == EXP:
            vals[i] = math.exp(vals[a]) if vals[a] < 709.8 else math.inf
        elif code == LOG:
            if vals[a] <= 0.0:
                raise DomainError(f"log of non-positive value {vals[a]}")
            vals[i] = math.log(vals[a])
        elif code == RA:
            x = vals[a]
            if not (payload.lo <= x <= payload.hi):
                raise DomainError(
                    f"{payload.name} evaluated at {x} outside [{payload.lo}, {payload.hi}]")
            vals[i] = float(payload.fn(x))
        elif code == PHI:
            vals[i] = abel.eval_phi(vals[a])
        else:  # DPHI
            vals[i] = abel.eval_dphi(vals[a])
    return [vals[r] for r in ct.roots]


def gradient_compiled(ct: CompiledTerms, point: Sequence[float], abel,
                      n_vars: int | None = None):
    """Forward-mode values and gradients for every root term.

    Returns (values, gradients) with gradients[r][j] = d root_r / d x_j.
    """
    n = ct.n_vars if n_vars is None else n_vars
    vals = [0.0] * len(ct.ops)
    grads = [None] * len(ct.ops)
    zero = [0.0] * n
    for i, (code, a, b, payload) in enumerate(ct.ops):
        if code == VAR:
            vals[i] = float(point[payload])
            g = list(zero)
            g[payload] = 1.0
            grads[i] = g
        elif code == CONST:
            vals[i] = payload
            grads[i] = zero
        elif code == ADD:
            vals[i] = vals[a] + vals[b]
            ga, gb = grads[a], grads[b]
            grads[i] = [ga[j] + gb[j] for j in range(n)]
        elif code == MUL:
            va, vb = vals[a], vals[b]
            vals[i] = va * vb
            ga, gb = grads[a], grads[b]
            grads[i] = [va * gb[j] + vb * ga[j] for j in range(n)]
        elif code == SQR:
            va = vals[a]
            vals[i] = va * va
            ga = grads[a]
            grads[i] = [2.0 * va * ga[j] for j in range(n)]
        elif code == NEG:
            vals[i] = -vals[a]
            grads[i] = [-g for g in grads[a]]
        elif code == EXP:
            v = math.exp(vals[a]) if vals[a] < 709.8 else math.inf
            vals[i] = v
            grads[i] = [v * g for g in grads[a]]
        elif code == LOG:
            if vals[a] <= 0.0:
                raise DomainError(f"log of non-positive value {vals[a]}")
            vals[i] = math.log(vals[a])
            inv = 1.0 / vals[a]
            grads[i] = [inv * g for g in grads[a]]
        elif code == RA:
            x = vals[a]
            if not (payload.lo <= x <= payload.hi):
                raise DomainError(
                    f"{payload.name} evaluated at {x} outside [{payload.lo}, {payload.hi}]")
            if payload.deriv is None:
                raise DifferentiationError(
                    f"primitive {payload.name!r} has no derivative")
            vals[i] = float(payload.fn(x))
            d = float(payload.deriv.fn(x))
            grads[i] = [d * g for g in grads[a]]
        elif code == PHI:
            vals[i] = abel.eval_phi(vals[a])
            d = abel.eval_dphi(vals[a])
            grads[i] = [d * g for g in grads[a]]
        else:  # DPHI
            vals[i] = abel.eval_dphi(vals[a])
            d = abel.eval_d2phi(vals[a])
            grads[i] = [d * g for g in grads[a]]
    return [vals[r] for r in ct.roots], [grads[r] for r in ct.roots]


def eval_term(t: TermNode, point: Sequence[float], abel=None) -> float:
    """Evaluate a term at a point (tuple/list of coordinates)."""
    if abel is None:
        abel = _default_abel()
    return eval_compiled(compile_terms([t]), point, abel)[0]


def gradient(t: TermNode, point: Sequence[float], abel=None) -> list[float]:
    """Forward-mode gradient of a term at an interior point of its domain."""
    if abel is None:
        abel = _default_abel()
    ct = compile_terms([t])
    _, grads = gradient_compiled(ct, point, abel)
    return grads[0]


def _default_abel():
    from .abel import get_default_abel

    return get_default_abel()


# ---------------------------------------------------------------------------
# static analyses


def fcpx(t: TermNode) -> int:
    """Nesting depth of phi/dphi applications: 0 for phi-free terms,
    composite nodes take the max over arguments, each phi/dphi adds 1."""
    memo: dict[TermNode, int] = {}

    def go(node: TermNode) -> int:
        got = memo.get(node)
        if got is not None:
            return got
        if node.kind in ("var", "const"):
            v = 0
        else:
            v = max(go(c) for c in node.children)
            if node.kind in ("phi", "dphi"):
                v += 1
        memo[node] = v
        return v

    return go(t)


@dataclass(frozen=True)
class GrowthExponent:
    """Certified growth level: |eval(t, x)| <= exp_s(||x||) wherever the
    right-hand side is representable."""

    s: int


def growth_exponent(t: TermNode) -> GrowthExponent:
    """Structural iterated-exponential growth bound.

    Raises GrowthAnalysisError when no bound of the exp_s form can be
    certified (log applied to anything but a positive constant).
    """
    memo: dict[TermNode, int] = {}

    def go(node: TermNode) -> int:
        got = memo.get(node)
        if got is not None:
            return got
        k = node.kind
        if k == "var":
            v = 0
        elif k == "const":
            v = 0 if node.value == 0.0 else max(1, _level_for_bound(abs(node.value)))
        elif k in ("add", "mul", "neg"):
            v = max(go(c) for c in node.children) + 1
        elif k == "exp":
            v = go(node.children[0]) + 1
        elif k == "log":
            c = node.children[0]
            if c.kind == "const" and c.value > 0.0:
                lv = abs(math.log(c.value))
                v = 0 if lv == 0.0 else max(1, _level_for_bound(lv))
            else:
                raise GrowthAnalysisError(
                    "unbounded pathway: log argument may approach the domain boundary")
        elif k == "ra":
            go(node.children[0])  # argument must itself be analyzable
            v = node.prim.growth_level
        elif k == "phi":
            child = node.children[0]
            c = go(child)
            if child.kind == "exp":
                # e^g is positive, and on t > 0 we have -1 <= phi(t) <= t,
                # so |phi(e^g)| <= max(1, exp_c(u)) = exp_c(u) for c >= 1
                v = c
            elif c == 0:
                # |t| <= u: right of 0 use -1 <= phi(t) <= t, left of 0 use
                # |phi(t)| <= 1 + u since phi' < 1 there (asserted at build);
                # both sides stay under e^u
                v = 1
            else:
                # phi approaches -2 far left, so the level must satisfy
                # exp_v(0) >= 2
                v = max(c, 2)
        else:  # dphi: |phi'| is globally bounded by a constant slightly
            # above 1, so level 2 covers it at every norm
            go(node.children[0])
            v = 2
        memo[node] = v
        return v

    return GrowthExponent(go(t))


# ---------------------------------------------------------------------------
# symbolic differentiation and substitution


def _is_const(t: TermNode, v: float | None = None) -> bool:
    return t.kind == "const" and (v is None or t.value == v)


def _fadd(a: TermNode, b: TermNode) -> TermNode:
    if _is_const(a) and _is_const(b):
        return const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return add(a, b)


def _fmul(a: TermNode, b: TermNode) -> TermNode:
    if _is_const(a) and _is_const(b):
        return const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return mul(a, b)


def _fneg(a: TermNode) -> TermNode:
    if _is_const(a):
        return const(-a.value)
    if a.kind == "neg":
        return a.children[0]
    return neg(a)


def differentiate(t: TermNode, i: int) -> TermNode:
    """Symbolic partial derivative with respect to variable i.

    Stays inside the term language: d(log g) uses 1/g = exp(-log g) (valid on
    log's domain), d(phi g) introduces dphi, and RA primitives chain to their
    derivative primitives.  dphi nodes are rejected: their derivative would
    need phi'', which the language does not have.
    """
    memo: dict[TermNode, TermNode] = {}

    def go(node: TermNode) -> TermNode:
        got = memo.get(node)
        if got is not None:
            return got
        k = node.kind
        if k == "var":
            d = const(1.0 if node.index == i else 0.0)
        elif k == "const":
            d = const(0.0)
        elif k == "add":
            d = _fadd(go(node.children[0]), go(node.children[1]))
        elif k == "neg":
            d = _fneg(go(node.children[0]))
        elif k == "mul":
            a, b = node.children
            d = _fadd(_fmul(go(a), b), _fmul(a, go(b)))
        elif k == "exp":
            d = _fmul(go(node.children[0]), node)
        elif k == "log":
            d = _fmul(go(node.children[0]), exp(neg(node)))
        elif k == "ra":
            if node.prim.deriv is None:
                raise DifferentiationError(
                    f"primitive {node.prim.name!r} has no derivative")
            d = _fmul(go(node.children[0]), ra(node.prim.deriv, node.children[0]))
        elif k == "phi":
            d = _fmul(go(node.children[0]), dphi(node.children[0]))
        else:  # dphi
            raise DifferentiationError(
                "derivative of dphi is outside the term language")
        memo[node] = d
        return d

    return go(t)


def substitute(t: TermNode, mapping: Mapping[int, TermNode]) -> TermNode:
    """Replace variables by terms (simultaneously)."""
    memo: dict[TermNode, TermNode] = {}

    def go(node: TermNode) -> TermNode:
        got = memo.get(node)
        if got is not None:
            return got
        if node.kind == "var":
            out = mapping.get(node.index, node)
        elif not node.children:
            out = node
        else:
            kids = tuple(go(c) for c in node.children)
            if all(k is c for k, c in zip(kids, node.children)):
                out = node
            else:
                out = TermNode(node.kind, kids, node.index, node.value, node.prim)
        memo[node] = out
        return out

    return go(t)


def collect_phi_monomials(ts: Iterable[TermNode]):
    """Unique phi and dphi argument subterms, in first-occurrence order."""
    phi_args: list[TermNode] = []
    dphi_args: list[TermNode] = []
    seen_phi: set = set()
    seen_dphi: set = set()
    visited: set = set()

    def go(node: TermNode):
        if node in visited:
            return
        visited.add(node)
        if node.kind == "phi" and node.children[0] not in seen_phi:
            seen_phi.add(node.children[0])
            phi_args.append(node.children[0])
        elif node.kind == "dphi" and node.children[0] not in seen_dphi:
            seen_dphi.add(node.children[0])
            dphi_args.append(node.children[0])
        for c in node.children:
            go(c)

    for t in ts:
        go(t)
    return tuple(phi_args), tuple(dphi_args)


def free_variables(t: TermNode) -> set[int]:
    out: set[int] = set()
    stack = [t]
    seen = set()
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        if node.kind == "var":
            out.add(node.index)
        stack.extend(node.children)
    return out
