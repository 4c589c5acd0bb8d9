"""Outward-rounded interval arithmetic and the Krawczyk test.

Every arithmetic helper widens its result by one ulp per operation, so a
computed interval always contains the exact real-number result. Enclosures
of the super-logarithm and its derivatives come from the AbelFunction,
which already folds in its own seed evaluation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .terms import (ADD, CONST, DPHI, EXP, LOG, MUL, NEG, PHI, RA, SQR, VAR,
                    CompiledTerms, TermNode, compile_terms, eval_compiled)

_INF = math.inf


def _dn(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _mul0(a: float, b: float) -> float:
    # containment-safe corner product: a factor that is exactly 0 pins the
    # product to 0 even against an infinite partner
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with lo <= hi."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise DomainError(f"invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    @property
    def mid(self) -> float:
        if self.lo == -_INF or self.hi == _INF:
            return 0.0 if self.lo == -_INF and self.hi == _INF else (
                min(self.hi, 0.0) if self.lo == -_INF else max(self.lo, 0.0))
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def strictly_inside(self, other: "Interval") -> bool:
        return other.lo < self.lo and self.hi < other.hi

    def __repr__(self):
        return f"[{self.lo}, {self.hi}]"


def iadd(x: Interval, y: Interval) -> Interval:
    lo, hi = x.lo + y.lo, x.hi + y.hi
    if math.isnan(lo):
        lo = -_INF
    if math.isnan(hi):
        hi = _INF
    return Interval(_dn(lo), _up(hi))


def ineg(x: Interval) -> Interval:
    return Interval(-x.hi, -x.lo)


def isub(x: Interval, y: Interval) -> Interval:
    return iadd(x, ineg(y))


def imul(x: Interval, y: Interval) -> Interval:
    c = (_mul0(x.lo, y.lo), _mul0(x.lo, y.hi),
         _mul0(x.hi, y.lo), _mul0(x.hi, y.hi))
    return Interval(_dn(min(c)), _up(max(c)))


def isqr(x: Interval) -> Interval:
    a, b = _mul0(x.lo, x.lo), _mul0(x.hi, x.hi)
    if x.contains_zero():
        return Interval(0.0, _up(max(a, b)))
    return Interval(_dn(min(a, b)), _up(max(a, b)))


def iscale(x: Interval, c: float) -> Interval:
    if c >= 0.0:
        return Interval(_dn(_mul0(c, x.lo)), _up(_mul0(c, x.hi)))
    return Interval(_dn(_mul0(c, x.hi)), _up(_mul0(c, x.lo)))


def iexp(x: Interval) -> Interval:
    lo = _dn(math.exp(x.lo)) if x.lo < 709.8 else _INF
    hi = _up(math.exp(x.hi)) if x.hi < 709.8 else _INF
    return Interval(max(lo, 0.0), hi)


def ilog(x: Interval) -> Interval:
    if x.lo <= 0.0:
        raise DomainError(f"log over interval reaching {x.lo} <= 0")
    hi = _up(math.log(x.hi)) if x.hi < _INF else _INF
    return Interval(_dn(math.log(x.lo)), hi)


def iinv_pos(x: Interval) -> Interval:
    # reciprocal of an interval bounded away from 0 on the positive side
    if x.lo <= 0.0:
        raise DomainError("reciprocal of interval reaching 0")
    hi_part = 0.0 if x.lo == _INF else _up(1.0 / x.lo)
    lo_part = 0.0 if x.hi == _INF else _dn(1.0 / x.hi)
    return Interval(lo_part, hi_part)


@dataclass(frozen=True)
class Box:
    """Axis-aligned product of intervals."""

    coords: tuple

    def __post_init__(self):
        if not self.coords:
            raise DomainError("box needs at least one coordinate")

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence[float]]) -> "Box":
        return cls(tuple(Interval(float(a), float(b)) for a, b in bounds))

    @classmethod
    def cube(cls, radius: float, n: int) -> "Box":
        return cls(tuple(Interval(-radius, radius) for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def widths(self) -> tuple:
        return tuple(c.width for c in self.coords)

    @property
    def max_width(self) -> float:
        return max(self.widths)

    def midpoint(self) -> list[float]:
        return [c.mid for c in self.coords]

    def contains(self, point: Sequence[float]) -> bool:
        return all(c.contains(float(v)) for c, v in zip(self.coords, point))

    def bounds(self) -> list[tuple[float, float]]:
        return [(c.lo, c.hi) for c in self.coords]

    def __repr__(self):
        return " x ".join(repr(c) for c in self.coords)


def subdivide(box: Box) -> tuple[Box, Box]:
    """Bisect the widest coordinate; ties go to the lowest index."""
    widths = box.widths
    w = max(widths)
    if w <= 0.0:
        raise DomainError("cannot subdivide a point box")
    i = widths.index(w)
    c = box.coords[i]
    m = c.mid
    left = list(box.coords)
    right = list(box.coords)
    left[i] = Interval(c.lo, m)
    right[i] = Interval(m, c.hi)
    return Box(tuple(left)), Box(tuple(right))


# ---------------------------------------------------------------------------
# interval evaluation over compiled tapes

def interval_eval_compiled(ct: CompiledTerms, box: Box, abel) -> list[Interval]:
    vals: list = [None] * len(ct.ops)
    for i, (code, a, b, payload) in enumerate(ct.ops):
        if code == VAR:
            vals[i] = box.coords[payload]
        elif code == CONST:
            vals[i] = Interval.point(payload)
        elif code == ADD:
            vals[i] = iadd(vals[a], vals[b])
        elif code == MUL:
            vals[i] = imul(vals[a], vals[b])
        elif code == SQR:
            vals[i] = isqr(vals[a])
        elif code == NEG:
            vals[i] = ineg(vals[a])
        elif code == EXP:
            vals[i] = iexp(vals[a])
        elif code == LOG:
            vals[i] = ilog(vals[a])
        elif code == RA:
            x = vals[a]
            if x.lo < payload.lo or x.hi > payload.hi:
                raise DomainError(
                    f"{payload.name} argument range {x} leaves "
                    f"[{payload.lo}, {payload.hi}]")
            lo, hi = payload.range_fn(x.lo, x.hi)
            vals[i] = Interval(_dn(_dn(lo)), _up(_up(hi)))
        elif code == PHI:
            lo, hi = abel.interval_phi(vals[a].lo, vals[a].hi)
            vals[i] = Interval(lo, hi)
        else:  # DPHI
            lo, hi = abel.interval_dphi(vals[a].lo, vals[a].hi)
            vals[i] = Interval(lo, hi)
    return [vals[r] for r in ct.roots]


def interval_eval(term: TermNode, box: Box, abel=None) -> Interval:
    """Range enclosure of a term over a box."""
    if abel is None:
        from .abel import get_default_abel

        abel = get_default_abel()
    return interval_eval_compiled(compile_terms([term]), box, abel)[0]


def interval_jacobian_compiled(ct: CompiledTerms, box: Box, abel):
    """Interval forward mode: values plus per-root interval gradients."""
    n = ct.n_vars
    nb = box.n
    if nb < n:
        raise DomainError(f"box dimension {nb} below term arity {n}")
    zero = tuple(Interval.point(0.0) for _ in range(nb))
    vals: list = [None] * len(ct.ops)
    grads: list = [None] * len(ct.ops)
    for i, (code, a, b, payload) in enumerate(ct.ops):
        if code == VAR:
            vals[i] = box.coords[payload]
            g = list(zero)
            g[payload] = Interval.point(1.0)
            grads[i] = tuple(g)
        elif code == CONST:
            vals[i] = Interval.point(payload)
            grads[i] = zero
        elif code == ADD:
            vals[i] = iadd(vals[a], vals[b])
            grads[i] = tuple(iadd(p, q) for p, q in zip(grads[a], grads[b]))
        elif code == MUL:
            va, vb = vals[a], vals[b]
            vals[i] = imul(va, vb)
            grads[i] = tuple(iadd(imul(va, q), imul(vb, p))
                             for p, q in zip(grads[a], grads[b]))
        elif code == SQR:
            va = vals[a]
            vals[i] = isqr(va)
            f = iscale(va, 2.0)
            grads[i] = tuple(imul(f, p) for p in grads[a])
        elif code == NEG:
            vals[i] = ineg(vals[a])
            grads[i] = tuple(ineg(p) for p in grads[a])
        elif code == EXP:
            v = iexp(vals[a])
            vals[i] = v
            grads[i] = tuple(imul(v, p) for p in grads[a])
        elif code == LOG:
            vals[i] = ilog(vals[a])
            f = iinv_pos(vals[a])
            grads[i] = tuple(imul(f, p) for p in grads[a])
        elif code == RA:
            x = vals[a]
            if x.lo < payload.lo or x.hi > payload.hi:
                raise DomainError(
                    f"{payload.name} argument range {x} leaves "
                    f"[{payload.lo}, {payload.hi}]")
            if payload.deriv is None:
                raise DomainError(
                    f"primitive {payload.name!r} has no derivative")
            lo, hi = payload.range_fn(x.lo, x.hi)
            vals[i] = Interval(_dn(_dn(lo)), _up(_up(hi)))
            dlo, dhi = payload.deriv.range_fn(x.lo, x.hi)
            f = Interval(_dn(_dn(dlo)), _up(_up(dhi)))
            grads[i] = tuple(imul(f, p) for p in grads[a])
        elif code == PHI:
            lo, hi = abel.interval_phi(vals[a].lo, vals[a].hi)
            vals[i] = Interval(lo, hi)
            dlo, dhi = abel.interval_dphi(vals[a].lo, vals[a].hi)
            f = Interval(dlo, dhi)
            grads[i] = tuple(imul(f, p) for p in grads[a])
        else:  # DPHI
            lo, hi = abel.interval_dphi(vals[a].lo, vals[a].hi)
            vals[i] = Interval(lo, hi)
            dlo, dhi = abel.interval_d2phi(vals[a].lo, vals[a].hi)
            f = Interval(dlo, dhi)
            grads[i] = tuple(imul(f, p) for p in grads[a])
    return [vals[r] for r in ct.roots], [grads[r] for r in ct.roots]


# ---------------------------------------------------------------------------
# Krawczyk existence / uniqueness test

@dataclass(frozen=True)
class KrawczykResult:
    """verdict is one of "UniqueZero", "NoZero", "Unknown"; contracted is
    the Krawczyk image intersected with the box when the verdict is
    UniqueZero, else None."""

    verdict: str
    contracted: Box | None = None


_SING_COND = 1e12


def krawczyk_test(system, box: Box) -> KrawczykResult:
    """Certify zero existence/uniqueness for a square system on a box.

    UniqueZero additionally certifies non-singularity: the contraction
    K(X) inside the interior forces every Jacobian in the enclosure to be
    invertible. NoZero comes from the range pretest (inclusion isotone,
    so it can never flip under box shrinking) or from K(X) missing X.
    """
    ct = system.compiled
    abel = system.abel
    n = box.n
    if len(ct.roots) != n:
        raise DomainError(
            f"system has {len(ct.roots)} equations, box dimension {n}")

    ranges = interval_eval_compiled(ct, box, abel)
    if any(not r.contains_zero() for r in ranges):
        return KrawczykResult("NoZero")
    if box.max_width == 0.0:
        return KrawczykResult("Unknown")

    m = box.midpoint()
    fm = eval_compiled(ct, m, abel)
    _, jac_iv = interval_jacobian_compiled(ct, box, abel)
    mid_jac = np.array([[g.mid for g in row] for row in jac_iv])
    if not np.all(np.isfinite(mid_jac)):
        return KrawczykResult("Unknown")
    try:
        if np.linalg.cond(mid_jac) > _SING_COND:
            return KrawczykResult("Unknown")
        C = np.linalg.inv(mid_jac)
    except np.linalg.LinAlgError:
        return KrawczykResult("Unknown")

    # K = m - C f(m) + (I - C J)(X - m), evaluated row by row in intervals
    shifted = [isub(box.coords[j], Interval.point(m[j])) for j in range(n)]
    k_rows: list[Interval] = []
    for i in range(n):
        acc = Interval.point(m[i])
        for j in range(n):
            acc = isub(acc, iscale(Interval.point(fm[j]), C[i, j]))
        for j in range(n):
            entry = Interval.point(1.0 if i == j else 0.0)
            for k in range(n):
                entry = isub(entry, iscale(jac_iv[k][j], C[i, k]))
            acc = iadd(acc, imul(entry, shifted[j]))
        k_rows.append(acc)

    if all(k.strictly_inside(c) for k, c in zip(k_rows, box.coords)):
        contracted = Box(tuple(k.intersect(c)
                               for k, c in zip(k_rows, box.coords)))
        return KrawczykResult("UniqueZero", contracted)
    if any(not k.intersects(c) for k, c in zip(k_rows, box.coords)):
        return KrawczykResult("NoZero")
    return KrawczykResult("Unknown")
