"""Certified zero counting for square systems built from the term language.

A census run is a branch-and-prune search over a box: the Krawczyk test
certifies or excludes zeros per box, undecided boxes are bisected until a
depth cap, and whatever remains undecided is reported rather than guessed.
Zeros exactly on a bisection face are caught by inflating each child box a
little before testing and deduplicating the certified points afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import BuildError, CertificationError, DomainError, PathError
from .intervals import (Box, Interval, interval_eval_compiled, krawczyk_test,
                        subdivide)
from .terms import (RAPrimitive, TermNode, add_all, collect_phi_monomials,
                    compile_terms, const, free_variables, gradient_compiled,
                    growth_exponent, mul_all, parse_term, ra, substitute,
                    to_text, var)

DEFAULT_RADIUS = 8.0
DEFAULT_DEPTH = 40

_INFLATE = 0.05          # relative child-box inflation against face zeros
_DET_FLOOR = 1e-6
_ZERO_MERGE_TOL = 1e-7


@dataclass(frozen=True)
class SystemParams:
    """Parameter block (l_0..l_n, eps_1..eps_n, delta), all in [-1, 1]."""

    l: tuple
    eps: tuple
    delta: float

    def __post_init__(self):
        vals = list(self.l) + list(self.eps) + [self.delta]
        if any(not (-1.0 <= v <= 1.0) for v in vals):
            raise BuildError("parameters must lie in [-1, 1]")

    @classmethod
    def zeros(cls, n: int) -> "SystemParams":
        return cls(tuple([0.0] * (n + 1)), tuple([0.0] * n), 0.0)

    @classmethod
    def from_dict(cls, d: dict, n: int) -> "SystemParams":
        l = tuple(float(v) for v in d.get("l", [0.0] * (n + 1)))
        eps = tuple(float(v) for v in d.get("eps", [0.0] * n))
        delta = float(d.get("delta", 0.0))
        if len(l) != n + 1 or len(eps) != n:
            raise BuildError(f"expected {n + 1} l-entries and {n} eps-entries")
        return cls(l, eps, delta)

    def to_dict(self) -> dict:
        return {"l": list(self.l), "eps": list(self.eps), "delta": self.delta}


class SquareSystem:
    """n equations in n unknowns with numeric parameters substituted."""

    def __init__(self, equations: Sequence[TermNode], params: SystemParams,
                 abel, sources: Sequence[str] | None = None,
                 var_names: Sequence[str] | None = None):
        self.equations = tuple(equations)
        self.n = len(self.equations)
        self.params = params
        self.abel = abel
        self.sources = tuple(sources) if sources is not None else None
        self.var_names = tuple(var_names) if var_names is not None else None
        used = set()
        for eq in self.equations:
            used |= free_variables(eq)
        if used and max(used) >= self.n:
            raise BuildError(
                f"equation uses variable index {max(used)} but the system "
                f"has {self.n} unknowns")
        self.phi_args, self.dphi_args = collect_phi_monomials(self.equations)
        self.compiled = compile_terms(self.equations)

    def shifted(self, eta: Sequence[float]) -> "SquareSystem":
        """System with target vector subtracted: equations - eta."""
        eqs = [add_all([eq, const(-float(e))]) if e != 0.0 else eq
               for eq, e in zip(self.equations, eta)]
        return SquareSystem(eqs, self.params, self.abel)

    def tilted(self, matrix) -> "SquareSystem":
        """System composed with a linear map: equations evaluated at A x."""
        a = np.asarray(matrix, dtype=float)
        if a.shape != (self.n, self.n):
            raise BuildError(f"matrix shape {a.shape} does not match n={self.n}")
        mapping = {}
        for i in range(self.n):
            parts = []
            for j in range(self.n):
                c = float(a[i, j])
                if c == 0.0:
                    continue
                parts.append(var(j) if c == 1.0 else mul_all([const(c), var(j)]))
            mapping[i] = add_all(parts) if parts else const(0.0)
        eqs = [substitute(eq, mapping) for eq in self.equations]
        return SquareSystem(eqs, self.params, self.abel)

    def __repr__(self):
        eqs = ", ".join(to_text(eq, self.var_names) for eq in self.equations)
        return f"SquareSystem({eqs})"


def _param_bindings(params: SystemParams, n: int) -> dict:
    extra = {"delta": const(params.delta)}
    for i, v in enumerate(params.l):
        extra[f"l{i}"] = const(v)
    for i, v in enumerate(params.eps):
        extra[f"eps{i + 1}"] = const(v)
    return extra


def build_system(equations: Sequence, params=None, abel=None,
                 var_names: Sequence[str] | None = None) -> SquareSystem:
    """Build a square system from term nodes or source strings.

    Source strings may reference the parameter names l0..ln, eps1..epsn
    and delta; these are substituted as constants from ``params``.
    """
    if abel is None:
        from .abel import get_default_abel

        abel = get_default_abel()
    n = len(equations)
    if n == 0:
        raise BuildError("empty system")
    if var_names is None and any(isinstance(e, str) for e in equations):
        var_names = [f"x{i + 1}" for i in range(n)]
    if params is None:
        sp = SystemParams.zeros(n)
    elif isinstance(params, SystemParams):
        sp = params
    else:
        sp = SystemParams.from_dict(dict(params), n)
    extra = _param_bindings(sp, n)
    nodes = []
    sources = []
    for e in equations:
        if isinstance(e, str):
            sources.append(e)
            nodes.append(parse_term(e, var_names, extra=extra))
        else:
            sources.append(None)
            nodes.append(e)
    srcs = sources if all(s is not None for s in sources) else None
    return SquareSystem(nodes, sp, abel, sources=srcs, var_names=var_names)


# ---------------------------------------------------------------------------
# search radius from the growth argument

@dataclass(frozen=True)
class RadiusReport:
    radius: float
    heuristic: bool
    growth_level: int = 0
    cutoff: float = 0.0
    phi_count: int = 0
    dphi_count: int = 0

    def to_dict(self) -> dict:
        return {"radius": self.radius, "heuristic": self.heuristic,
                "growth_level": self.growth_level, "cutoff": self.cutoff,
                "phi_count": self.phi_count, "dphi_count": self.dphi_count}


def _chain_cutoff(k: int, s: int, abel) -> float:
    """Least sampled d with k*|phi(z) + 2s| < z/2 for all z >= d.

    phi(exp_2s(z)) = phi(z) + 2s by the functional equation, and phi is
    bounded by its value at the largest float, so the condition is
    automatic past 2*k*(phi_top + 2s). The scan certifies gaps between
    samples: phi + 2s is increasing, so |phi + 2s| on a gap is maximized
    at one of its endpoints, while z/2 is minimized at the left one.
    """
    bound = 2.0 * k * (abel.phi_top + 2.0 * s) + 1.0
    zs = np.linspace(1e-6, bound, 20001)
    lhs = k * np.abs(abel.eval_phi_array(zs) + 2.0 * s)
    ok = np.empty(len(zs), dtype=bool)
    ok[:-1] = np.maximum(lhs[:-1], lhs[1:]) < zs[:-1] / 2.0
    ok[-1] = lhs[-1] < zs[-1] / 2.0
    bad = np.nonzero(~ok)[0]
    if bad.size == 0:
        return float(zs[0])
    if bad[-1] == len(zs) - 1:
        raise CertificationError("chain inequality did not settle in range")
    return float(zs[bad[-1] + 1])


def search_radius(system: SquareSystem, default_radius: float = DEFAULT_RADIUS
                  ) -> RadiusReport:
    """Ball radius beyond which zeros are ruled out by the growth bound.

    phi-free systems carry no such bound; they get the default radius
    and an explicit heuristic flag.
    """
    args = list(system.phi_args) + list(system.dphi_args)
    if not args:
        return RadiusReport(default_radius, True)
    s = max(growth_exponent(a).s for a in args)
    k = len(system.phi_args)
    u = len(system.dphi_args)
    d_chain = _chain_cutoff(max(k, 1), s, system.abel)
    d_norm = 2.0 * (2.0 * system.n + 2.0 + u * system.abel.sup_dphi_global)
    d = max(d_chain, d_norm * (1.0 + 1e-12))
    from .abel import exp_n

    r = exp_n(d, s)
    return RadiusReport(float(r), False, s, float(d), k, u)


# ---------------------------------------------------------------------------
# branch and prune

@dataclass
class CensusReport:
    certified_count: int
    unknown_boxes: list
    search_radius: float
    depth_used: int
    zeros: list = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return not self.unknown_boxes

    def to_dict(self) -> dict:
        return {
            "certified_count": self.certified_count,
            "exact": self.exact,
            "unknown_boxes": [b.bounds() for b in self.unknown_boxes],
            "search_radius": self.search_radius,
            "depth_used": self.depth_used,
            "zeros": [list(z) for z in self.zeros],
        }


def _inflate(box: Box, outer: Box) -> Box:
    coords = []
    for c, o in zip(box.coords, outer.coords):
        pad = _INFLATE * max(c.width, 1e-300)
        coords.append(Interval(max(c.lo - pad, o.lo), min(c.hi + pad, o.hi)))
    return Box(tuple(coords))


def _polish(system: SquareSystem, point: Sequence[float]) -> list[float]:
    x = np.array(point, dtype=float)
    for _ in range(20):
        vals, grads = gradient_compiled(system.compiled, x, system.abel)
        j = np.array(grads, dtype=float)
        f = np.array(vals, dtype=float)
        try:
            step = np.linalg.solve(j, f)
        except np.linalg.LinAlgError:
            break
        x = x - step
        if float(np.max(np.abs(step))) < 1e-14 * (1.0 + float(np.max(np.abs(x)))):
            break
    return [float(v) for v in x]


def _count_over_box(system: SquareSystem, root: Box, max_depth: int,
                    radius_label: float) -> CensusReport:
    stack = [(root, 0)]
    zeros: list[list[float]] = []
    unknown: list[Box] = []
    depth_used = 0
    while stack:
        box, depth = stack.pop()
        depth_used = max(depth_used, depth)
        result = krawczyk_test(system, _inflate(box, root))
        if result.verdict == "NoZero":
            continue
        if result.verdict == "UniqueZero":
            z = _polish(system, result.contracted.midpoint())
            tol = _ZERO_MERGE_TOL * (1.0 + max(abs(v) for v in z))
            if not any(max(abs(a - b) for a, b in zip(z, w)) <= tol
                       for w in zeros):
                zeros.append(z)
            continue
        if depth >= max_depth or box.max_width == 0.0:
            unknown.append(box)
            continue
        left, right = subdivide(box)
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    zeros.sort(key=lambda z: tuple(round(v, 9) for v in z))
    unknown.sort(key=lambda b: tuple(b.bounds()))
    return CensusReport(len(zeros), unknown, radius_label, depth_used, zeros)


def count_nonsingular_zeros(system: SquareSystem, radius: float,
                            max_depth: int = DEFAULT_DEPTH) -> CensusReport:
    """Certified census over the box of the given radius around 0.

    Singular zeros are never counted; they persist as unknown boxes so
    the report shows exactly where certification gave up.
    """
    if not (radius > 0.0) or not math.isfinite(radius):
        raise DomainError("radius must be positive and finite")
    root = Box.cube(float(radius), system.n)
    return _count_over_box(system, root, max_depth, float(radius))


def count_over_box(system: SquareSystem, box: Box,
                   max_depth: int = DEFAULT_DEPTH) -> CensusReport:
    """Census over an explicit box instead of an origin-centered cube."""
    label = max(max(abs(c.lo), abs(c.hi)) for c in box.coords)
    return _count_over_box(system, box, max_depth, float(label))


# ---------------------------------------------------------------------------
# regular values and generic tilts

def is_regular_value(system: SquareSystem, box: Box, eta: Sequence[float],
                     max_depth: int = DEFAULT_DEPTH) -> bool:
    """True when every zero of (system - eta) over the box is certified."""
    report = count_over_box(system.shifted(eta), box, max_depth)
    return report.exact


def sample_regular_value(system: SquareSystem, box: Box, seed: int,
                         budget: int = 25, max_depth: int = DEFAULT_DEPTH):
    """Sample target vectors in [-1,1]^n until one is certified regular.

    Returns (eta, attempts). The zero vector is tried first so systems
    that are already regular report eta = 0 deterministically.
    """
    rng = np.random.default_rng(seed)
    for attempt in range(1, budget + 1):
        if attempt == 1:
            eta = [0.0] * system.n
        else:
            eta = [float(v) for v in rng.uniform(-1.0, 1.0, system.n)]
        if is_regular_value(system, box, eta, max_depth):
            return eta, attempt
    raise CertificationError(f"no regular value found in {budget} attempts")


def sample_generic_tilt(n: int, scale: float, seed: int, budget: int = 100):
    """Identity plus a small random matrix, redrawn until well-conditioned."""
    if not (0.0 < scale < 1.0):
        raise DomainError("scale must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        a = np.eye(n) + scale * rng.uniform(-1.0, 1.0, (n, n))
        if abs(float(np.linalg.det(a))) > _DET_FLOOR:
            return a
    raise CertificationError(f"no invertible tilt found in {budget} draws")


# ---------------------------------------------------------------------------
# deformation paths

@dataclass(frozen=True)
class DeformationPath:
    """Piecewise-linear path of (matrix, target, params) over t in [0, 1]."""

    breakpoints: tuple
    matrices: tuple
    targets: tuple
    params: tuple | None = None

    def __post_init__(self):
        ts = self.breakpoints
        if len(ts) < 2 or ts[0] != 0.0 or ts[-1] != 1.0:
            raise PathError("breakpoints must run from 0.0 to 1.0")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise PathError("breakpoints must increase")
        if not (len(self.matrices) == len(self.targets) == len(ts)):
            raise PathError("one matrix and target per breakpoint")
        if self.params is not None and len(self.params) != len(ts):
            raise PathError("one param block per breakpoint when given")
        for m in self.matrices:
            if abs(float(np.linalg.det(np.asarray(m, dtype=float)))) < 1e-9:
                raise PathError("singular matrix at a breakpoint")

    @classmethod
    def constant(cls, n: int) -> "DeformationPath":
        eye = np.eye(n)
        z = tuple([0.0] * n)
        return cls((0.0, 1.0), (eye, eye), (z, z))

    @classmethod
    def target_ramp(cls, n: int, eta_final: Sequence[float]) -> "DeformationPath":
        eye = np.eye(n)
        return cls((0.0, 1.0), (eye, eye),
                   (tuple([0.0] * n), tuple(float(v) for v in eta_final)))

    def at(self, t: float):
        ts = self.breakpoints
        if not (0.0 <= t <= 1.0):
            raise PathError(f"t={t} outside [0, 1]")
        j = max(0, min(len(ts) - 2, int(np.searchsorted(ts, t, "right")) - 1))
        w = (t - ts[j]) / (ts[j + 1] - ts[j])
        a0 = np.asarray(self.matrices[j], dtype=float)
        a1 = np.asarray(self.matrices[j + 1], dtype=float)
        e0 = np.asarray(self.targets[j], dtype=float)
        e1 = np.asarray(self.targets[j + 1], dtype=float)
        a = (1.0 - w) * a0 + w * a1
        eta = (1.0 - w) * e0 + w * e1
        params = None
        if self.params is not None:
            p0, p1 = self.params[j], self.params[j + 1]
            params = SystemParams(
                tuple((1 - w) * x + w * y for x, y in zip(p0.l, p1.l)),
                tuple((1 - w) * x + w * y for x, y in zip(p0.eps, p1.eps)),
                (1 - w) * p0.delta + w * p1.delta)
        return a, eta, params


@dataclass
class TrackReport:
    counts: list
    certified: list
    verdict: str
    first_issue_step: Optional[int]
    transitions: list

    def to_dict(self) -> dict:
        return {"counts": self.counts, "certified": self.certified,
                "verdict": self.verdict,
                "first_issue_step": self.first_issue_step,
                "transitions": self.transitions}


def _instantiate(system: SquareSystem, a, eta, params) -> SquareSystem:
    if params is not None:
        if system.sources is None:
            raise PathError(
                "parameter paths need a system built from source text")
        base = build_system(list(system.sources), params, system.abel,
                            system.var_names)
    else:
        base = system
    inst = base if a is None else base.tilted(a)
    if eta is not None and any(v != 0.0 for v in eta):
        inst = inst.shifted(eta)
    return inst


def track_path(system: SquareSystem, path: DeformationPath, steps: int,
               radius: float, max_depth: int = DEFAULT_DEPTH) -> TrackReport:
    """Count zeros along the deformation and report constancy.

    The verdict is "constant" only when every step is fully certified and
    all counts agree; otherwise the first offending step is reported,
    whether the problem is an uncertified box or a count change.
    """
    if steps < 2:
        raise PathError("steps must be at least 2")
    a_sing = None
    counts: list[int] = []
    certified: list[bool] = []
    for j in range(steps + 1):
        t = j / steps
        a, eta, params = path.at(t)
        if abs(float(np.linalg.det(a))) < 1e-9:
            raise PathError(f"singular matrix at step {j} (t={t})")
        inst = _instantiate(system, a, eta, params)
        rep = count_nonsingular_zeros(inst, radius, max_depth)
        counts.append(rep.certified_count)
        certified.append(rep.exact)
    transitions = [(j, counts[j - 1], counts[j])
                   for j in range(1, len(counts)) if counts[j] != counts[j - 1]]
    bad_steps = [j for j, c in enumerate(certified) if not c]
    issues = bad_steps + [t[0] for t in transitions]
    if not issues:
        verdict = "constant"
        first = None
    else:
        first = min(issues)
        verdict = "uncertified" if bad_steps and min(bad_steps) == first \
            else "varies"
    return TrackReport(counts, certified, verdict, first, transitions)


@dataclass
class StabilityReport:
    radii: list
    counts: list
    certified: list
    zero_sets: list
    stable: bool

    def to_dict(self) -> dict:
        return {"radii": self.radii, "counts": self.counts,
                "certified": self.certified, "stable": self.stable,
                "zero_sets": self.zero_sets}


def probe_boundedness(system: SquareSystem, radii: Sequence[float],
                      matrix=None, eta=None,
                      max_depth: int = DEFAULT_DEPTH) -> StabilityReport:
    """Census at increasing radii; stable when the last two agree.

    Heuristic by construction: a zero outside every probed radius stays
    invisible. Agreement means equal counts, certified reports, and
    matching zero locations within 1e-6.
    """
    rs = [float(r) for r in radii]
    if any(b <= a for a, b in zip(rs, rs[1:])) or not rs:
        raise DomainError("radius schedule must increase")
    inst = _instantiate(system, matrix, eta, None)
    counts, certs, zsets = [], [], []
    for r in rs:
        rep = count_nonsingular_zeros(inst, r, max_depth)
        counts.append(rep.certified_count)
        certs.append(rep.exact)
        zsets.append(rep.zeros)
    stable = False
    if len(rs) >= 2 and certs[-1] and certs[-2] and counts[-1] == counts[-2]:
        za, zb = zsets[-2], zsets[-1]
        stable = all(
            max(abs(p - q) for p, q in zip(u, v)) <= 1e-6
            for u, v in zip(za, zb))
    return StabilityReport(rs, counts, certs, zsets, stable)


# ---------------------------------------------------------------------------
# complexity reduction: replace phi nodes by spline primitives on the ball

_SPLINE_STEP = 0.004


def _spline_primitive(abel, lo: float, hi: float, use_dphi: bool,
                      label: str) -> RAPrimitive:
    pad = 0.5 + 0.05 * (hi - lo)
    a, b = lo - pad, hi + pad
    count = max(65, int(math.ceil((b - a) / _SPLINE_STEP)) + 1)
    xs = np.linspace(a, b, count)
    ys = abel.eval_dphi_array(xs) if use_dphi else abel.eval_phi_array(xs)
    sp = CubicSpline(xs, ys)
    d1 = sp.derivative()
    d2 = sp.derivative(2)

    def make_range(pp):
        droots = pp.derivative().roots(extrapolate=False)

        def range_fn(p, q, _pp=pp, _droots=droots):
            cand = [float(_pp(p)), float(_pp(q))]
            inside = _droots[(_droots >= p) & (_droots <= q)]
            cand.extend(float(v) for v in np.atleast_1d(_pp(inside)))
            slack = 1e-8
            return min(cand) - slack, max(cand) + slack

        return range_fn

    def sup_of(pp):
        xs_chk = np.linspace(a, b, 4 * count)
        return float(np.max(np.abs(pp(xs_chk)))) + 1e-8

    p2 = RAPrimitive(f"{label}_d2", a, b, d2, make_range(d2), sup_of(d2))
    p1 = RAPrimitive(f"{label}_d1", a, b, d1, make_range(d1), sup_of(d1),
                     deriv=p2)
    return RAPrimitive(label, a, b, sp, make_range(sp), sup_of(sp), deriv=p1)


def reduce_phi_complexity(system: SquareSystem, radius: float) -> SquareSystem:
    """Replace each phi/dphi node by a spline primitive valid on the ball.

    The argument of every phi/dphi occurrence must have a finite range
    enclosure over the search box; the replacement matches the exact
    function to far better than seed accuracy there, so certified counts
    on the ball are expected to agree (and are tested to).
    """
    if not system.phi_args and not system.dphi_args:
        return system
    box = Box.cube(float(radius), system.n)
    abel = system.abel
    cache: dict = {}
    counter = [0]

    def prim_for(arg: TermNode, use_dphi: bool) -> RAPrimitive:
        key = (arg, use_dphi)
        got = cache.get(key)
        if got is not None:
            return got
        rng = interval_eval_compiled(compile_terms([arg]), box, abel)[0]
        if not (math.isfinite(rng.lo) and math.isfinite(rng.hi)):
            raise DomainError(
                f"phi argument {to_text(arg)} has unbounded range over "
                f"the radius-{radius} box")
        counter[0] += 1
        label = f"slog_patch{counter[0]}" + ("_d" if use_dphi else "")
        prim = _spline_primitive(abel, rng.lo, rng.hi, use_dphi, label)
        cache[key] = prim
        return prim

    memo: dict = {}

    def rewrite(node: TermNode) -> TermNode:
        got = memo.get(node)
        if got is not None:
            return got
        if node.children:
            kids = tuple(rewrite(c) for c in node.children)
            out = node if all(k is c for k, c in zip(kids, node.children)) \
                else TermNode(node.kind, kids, node.index, node.value, node.prim)
        else:
            out = node
        if out.kind in ("phi", "dphi"):
            out = ra(prim_for(out.children[0], out.kind == "dphi"),
                     out.children[0])
        memo[node] = out
        return out

    eqs = [rewrite(eq) for eq in system.equations]
    return SquareSystem(eqs, system.params, abel, var_names=system.var_names)


# ---------------------------------------------------------------------------
# system description files

def load_system_file(path: str, abel=None):
    """Read a JSON system description; returns (system, radius or None)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return system_from_dict(doc, abel)


def system_from_dict(doc: dict, abel=None):
    try:
        vars_field = doc["vars"]
        equations = doc["equations"]
    except KeyError as exc:
        raise BuildError(f"system file missing field {exc}") from exc
    if isinstance(vars_field, int):
        var_names = [f"x{i + 1}" for i in range(vars_field)]
    else:
        var_names = [str(v) for v in vars_field]
    if len(equations) != len(var_names):
        raise BuildError(
            f"{len(equations)} equations for {len(var_names)} variables")
    params = doc.get("params", None)
    radius = doc.get("radius", None)
    system = build_system(list(equations), params, abel, var_names)
    return system, (float(radius) if radius is not None else None)
