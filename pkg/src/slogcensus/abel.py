"""Super-logarithm: the strictly increasing solution phi of phi(e^x) = phi(x) + 1.

The function is represented by a polynomial seed on the fundamental domain
[1, e], normalized so phi(1) = 0 and phi(e) = 1, and extended everywhere by
the functional equation: phi(x) = phi(log x) + 1 above e, phi(x) = phi(e^x) - 1
below 1.  The seed has degree 2k+1 and satisfies C^k matching at the domain
junctions; the remaining degrees of freedom minimize the weighted jumps of
orders k+1 .. 2k+1, so the junction is numerically much smoother than the
certified order.

Derivatives follow the chain identities
    phi'(x)  = phi'(log x) / x                     (x > e)
    phi'(x)  = phi'(e^x) * e^x                     (x < 1)
    phi''(x) = (phi''(y) - phi'(y)) / x^2,  y = log x
    phi''(x) = phi''(y) * y^2 + phi'(y) * y, y = e^x
and the inverse (a trans-exponential function) is obtained by monotone
inversion of the seed plus integer exp/log steps.
"""

from __future__ import annotations

import json
import math
import sys
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import BuildError, DomainError

__all__ = [
    "AbelFunction",
    "DominationReport",
    "build_abel",
    "get_default_abel",
    "exp_n",
    "log_n",
]

_E = math.e
_EPS = 2.0 ** -53

# default construction parameters
DEFAULT_ORDER = 3
DEFAULT_TOL = 1e-8
RECURSION_CAP = 64

# evaluation-error allowances folded into every interval enclosure; they
# dominate the accumulated rounding of the short log/exp recursion because
# |phi'| < 1 makes the recursion contractive in its argument
_PHI_SLACK_FLOOR = 1e-13
_DPHI_SLACK = 1e-11
_D2PHI_SLACK = 1e-10


def exp_n(x: float, n: int) -> float:
    """n-fold exponential; saturates to +inf on overflow."""
    for _ in range(n):
        x = math.exp(x) if x < 709.8 else math.inf
    return x


def log_n(x: float, n: int) -> float:
    """n-fold logarithm; requires every intermediate value positive."""
    for _ in range(n):
        if x <= 0.0:
            raise DomainError(f"iterated log needs positive intermediate, got {x}")
        x = math.log(x)
    return x


def _log_series_coeffs(deg: int) -> np.ndarray:
    # log(e + h) = 1 + sum_{i>=1} t_i h^i with t_i = (-1)^(i+1) / (i e^i)
    t = np.zeros(deg + 1)
    for i in range(1, deg + 1):
        t[i] = (-1.0) ** (i + 1) / (i * _E ** i)
    return t


def _jet_matrices(deg: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices B, P with rows indexed by Taylor order j at y = e.

    For seed p(y) = sum_m a_m (y-1)^m:
      B[j] @ a = j-th Taylor coefficient of p at e,
      P[j] @ a = j-th Taylor coefficient of p(log y) at e.
    """
    em1 = _E - 1.0
    B = np.zeros((deg + 1, deg))
    for j in range(deg + 1):
        for m in range(1, deg + 1):
            if m >= j:
                B[j, m - 1] = math.comb(m, j) * em1 ** (m - j)
    t = _log_series_coeffs(deg)
    P = np.zeros((deg + 1, deg))
    upow = np.zeros(deg + 1)
    upow[0] = 1.0
    for m in range(1, deg + 1):
        full = np.convolve(upow, t)
        upow = full[: deg + 1]
        P[:, m - 1] = upow
    return B, P


def _poly_real_roots(coeffs_desc: Sequence[float], lo: float, hi: float) -> list[float]:
    c = np.trim_zeros(np.asarray(coeffs_desc, dtype=float), "f")
    if c.size <= 1:
        return []
    roots = np.roots(c)
    out = []
    for r in roots:
        if abs(r.imag) < 1e-9 and lo - 1e-12 <= r.real <= hi + 1e-12:
            out.append(min(max(float(r.real), lo), hi))
    return sorted(out)


class AbelFunction:
    """Immutable super-logarithm with seed polynomial on [1, e].

    All evaluation methods are reentrant; the object holds only read-only
    state after construction.
    """

    def __init__(self, coeffs: Sequence[float], order: int, tol: float,
                 validate: bool = True):
        if order not in (1, 2, 3):
            raise BuildError(f"order must be 1, 2 or 3, got {order}")
        if not tol > 0.0:
            raise BuildError("tol must be positive")
        self.coeffs = tuple(float(c) for c in coeffs)
        if len(self.coeffs) != 2 * order + 1:
            raise BuildError(
                f"seed of order {order} needs {2 * order + 1} coefficients")
        self.order = order
        self.tol = float(tol)
        self.recursion_cap = RECURSION_CAP

        # powers-of-(y-1) coefficient vectors, descending for polyval
        a = np.array(self.coeffs)
        deg = len(a)
        self._p_desc = np.concatenate([a[::-1], [0.0]])
        d1 = a * np.arange(1, deg + 1)
        self._dp_desc = d1[::-1].copy()
        d2 = d1[1:] * np.arange(1, deg)
        self._d2p_desc = d2[::-1].copy()
        d3 = d2[1:] * np.arange(1, deg - 1)
        self._d3p_desc = d3[::-1].copy()
        d4 = d3[1:] * np.arange(1, deg - 2)
        self._d4p_desc = d4[::-1].copy()

        # critical-point tables on [1, e]: where p', p'', p''' change direction
        self._dp_crit = self._roots_in_band(self._d2p_desc)
        self._d2p_crit = self._roots_in_band(self._d3p_desc)
        self._d3p_crit = self._roots_in_band(self._d4p_desc)

        # certified uniform bound on the float Horner error of the seed
        gam = 2 * deg * _EPS / (1.0 - 2 * deg * _EPS)
        mag = sum(abs(c) * (_E - 1.0) ** (m + 1) for m, c in enumerate(self.coeffs))
        self.seed_error = gam * mag + _PHI_SLACK_FLOOR

        # published derivative bounds
        self.sup_dphi_fundamental = self._band_max(self._dp_desc, self._dp_crit)
        self.sup_dphi_global = self._sup_dphi_global()
        self.sup_dphi_nonpos = self._sup_dphi_nonpos()
        self.inf_dphi_fundamental = self._band_min(self._dp_desc, self._dp_crit)
        self.sup_d2phi_fundamental = max(
            abs(self._band_max(self._d2p_desc, self._d2p_crit)),
            abs(self._band_min(self._d2p_desc, self._d2p_crit)))

        self._phi_top = None  # filled lazily: phi at the largest double

        if validate:
            self.validate()

    # -- seed polynomial helpers ------------------------------------------

    def _roots_in_band(self, desc) -> list[float]:
        # roots are of polynomials in u = y-1, so band is u in [0, e-1]
        return [r + 1.0 for r in _poly_real_roots(desc, 0.0, _E - 1.0)]

    def _polyval(self, desc, y: float) -> float:
        return float(np.polyval(desc, y - 1.0))

    def _band_candidates(self, desc, crits, lo: float, hi: float):
        vals = [self._polyval(desc, lo), self._polyval(desc, hi)]
        vals.extend(self._polyval(desc, r) for r in crits if lo <= r <= hi)
        return vals

    def _band_max(self, desc, crits, lo: float = 1.0, hi: float = _E) -> float:
        return max(self._band_candidates(desc, crits, lo, hi))

    def _band_min(self, desc, crits, lo: float = 1.0, hi: float = _E) -> float:
        return min(self._band_candidates(desc, crits, lo, hi))

    def _sup_dphi_global(self) -> float:
        # the global sup of |phi'| is sup over [1,e] of y*p'(y): on (0,1) the
        # chain gives phi'(x) = p'(e^x) e^x, deeper bands contract by e^x < 1,
        # and above e the chain divides by x > e; note this sup always
        # exceeds 1 because phi' averages to 1 over [0,1]
        yd = np.polymul(self._dp_desc, [1.0, 1.0])  # p'(y) * (u + 1) = y p'(y)
        crits = self._roots_in_band(np.polyder(yd))
        return self._band_max(yd, crits)

    def _sup_dphi_nonpos(self) -> float:
        # sup of phi' over (-inf, 0]: there phi'(x) = p'(w) * w * log(w) with
        # w = exp(exp(x)) ranging over (1, e]; dense scan of that band
        ws = np.linspace(1.0, _E, 32769)
        h = np.polyval(self._dp_desc, ws - 1.0) * ws * np.log(ws)
        i = int(np.argmax(h))
        lo = ws[max(i - 1, 0)]
        hi = ws[min(i + 1, len(ws) - 1)]
        fine = np.linspace(lo, hi, 4097)
        hf = np.polyval(self._dp_desc, fine - 1.0) * fine * np.log(fine)
        return float(max(h[i], hf.max()))

    def seed(self, y: float) -> float:
        return self._polyval(self._p_desc, y)

    def seed_d(self, y: float) -> float:
        return self._polyval(self._dp_desc, y)

    def seed_d2(self, y: float) -> float:
        return self._polyval(self._d2p_desc, y)

    # -- scalar evaluation -------------------------------------------------

    def eval_phi(self, x: float) -> float:
        x = float(x)
        if not math.isfinite(x):
            raise DomainError(f"phi argument must be finite, got {x}")
        shift = 0
        steps = 0
        while x > _E:
            x = math.log(x)
            shift += 1
            steps += 1
            if steps > self.recursion_cap:
                raise DomainError("recursion cap exceeded in phi")
        while x < 1.0:
            x = math.exp(x)
            shift -= 1
            steps += 1
            if steps > self.recursion_cap:
                raise DomainError("recursion cap exceeded in phi")
        return float(np.polyval(self._p_desc, x - 1.0)) + shift

    def eval_dphi(self, x: float) -> float:
        x = float(x)
        if not math.isfinite(x):
            raise DomainError(f"phi' argument must be finite, got {x}")
        fac = 1.0
        steps = 0
        while x > _E:
            fac /= x
            x = math.log(x)
            steps += 1
            if steps > self.recursion_cap:
                raise DomainError("recursion cap exceeded in phi'")
        while x < 1.0:
            x = math.exp(x)
            fac *= x
            steps += 1
            if steps > self.recursion_cap:
                raise DomainError("recursion cap exceeded in phi'")
        return fac * float(np.polyval(self._dp_desc, x - 1.0))

    def eval_d2phi(self, x: float) -> float:
        x = float(x)
        if not math.isfinite(x):
            raise DomainError(f"phi'' argument must be finite, got {x}")
        # accumulate the linear map (d2_band, d1_band) -> d2 at x
        c2, c1 = 1.0, 0.0
        steps = 0
        while x > _E:
            # d2_x = (d2_y - d1_y)/x^2, d1_x = d1_y/x
            inv = 1.0 / x
            c1 = (c1 - c2 * inv) * inv
            c2 = c2 * inv * inv
            x = math.log(x)
            steps += 1
            if steps > self.recursion_cap:
                raise DomainError("recursion cap exceeded in phi''")
        while x < 1.0:
            y = math.exp(x)
            # d2_x = d2_y y^2 + d1_y y, d1_x = d1_y y
            c1 = c2 * y + c1 * y
            c2 = c2 * y * y
            x = y
            steps += 1
            if steps > self.recursion_cap:
                raise DomainError("recursion cap exceeded in phi''")
        return c2 * float(np.polyval(self._d2p_desc, x - 1.0)) \
            + c1 * float(np.polyval(self._dp_desc, x - 1.0))

    # -- vectorized evaluation (oracle/scan hot path) -----------------------

    def eval_phi_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("phi argument must be finite")
        work = x.copy()
        shift = np.zeros(x.shape)
        for _ in range(self.recursion_cap):
            hi = work > _E
            if not hi.any():
                break
            work[hi] = np.log(work[hi])
            shift[hi] += 1.0
        for _ in range(self.recursion_cap):
            lo = work < 1.0
            if not lo.any():
                break
            work[lo] = np.exp(work[lo])
            shift[lo] -= 1.0
        return np.polyval(self._p_desc, work - 1.0) + shift

    def eval_dphi_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("phi' argument must be finite")
        work = x.copy()
        fac = np.ones(x.shape)
        for _ in range(self.recursion_cap):
            hi = work > _E
            if not hi.any():
                break
            fac[hi] /= work[hi]
            work[hi] = np.log(work[hi])
        for _ in range(self.recursion_cap):
            lo = work < 1.0
            if not lo.any():
                break
            work[lo] = np.exp(work[lo])
            fac[lo] *= work[lo]
        return fac * np.polyval(self._dp_desc, work - 1.0)

    # -- interval enclosures -------------------------------------------------

    def interval_phi(self, lo: float, hi: float) -> tuple[float, float]:
        """Enclosure of {phi(x) : x in [lo, hi]}; phi is increasing."""
        if lo > hi:
            raise DomainError("empty interval")
        w = self.seed_error
        return (math.nextafter(self.eval_phi(lo) - w, -math.inf),
                math.nextafter(self.eval_phi(hi) + w, math.inf))

    def interval_dphi(self, lo: float, hi: float) -> tuple[float, float]:
        """Enclosure of {phi'(x) : x in [lo, hi]} by band splitting."""
        if lo > hi:
            raise DomainError("empty interval")
        a, b = self._interval_dphi(lo, hi, 0)
        return (math.nextafter(a - _DPHI_SLACK, -math.inf),
                math.nextafter(b + _DPHI_SLACK, math.inf))

    def _interval_dphi(self, lo, hi, depth) -> tuple[float, float]:
        if depth > self.recursion_cap:
            raise DomainError("recursion cap exceeded in interval phi'")
        if lo >= 1.0 and hi <= _E:
            c = self._band_candidates(self._dp_desc, self._dp_crit, lo, hi)
            return min(c), max(c)
        if lo > _E:
            ra, rb = self._interval_dphi(math.log(lo), math.log(hi), depth + 1)
            # multiply by 1/x over [lo, hi]; enclosure of phi' is >= 0
            pieces = [ra / lo, ra / hi, rb / lo, rb / hi]
            return min(pieces), max(pieces)
        if hi < 1.0:
            ea, eb = math.exp(lo), math.exp(hi)
            ra, rb = self._interval_dphi(ea, eb, depth + 1)
            pieces = [ra * ea, ra * eb, rb * ea, rb * eb]
            return min(pieces), max(pieces)
        # straddles a junction: split
        if lo < 1.0:
            a1, b1 = self._interval_dphi(lo, math.nextafter(1.0, 0.0), depth + 1)
            a2, b2 = self._interval_dphi(1.0, hi, depth + 1)
            return min(a1, a2), max(b1, b2)
        a1, b1 = self._interval_dphi(lo, _E, depth + 1)
        a2, b2 = self._interval_dphi(math.nextafter(_E, math.inf), hi, depth + 1)
        return min(a1, a2), max(b1, b2)

    def interval_d2phi(self, lo: float, hi: float) -> tuple[float, float]:
        """Enclosure of {phi''(x) : x in [lo, hi]} by band splitting."""
        if lo > hi:
            raise DomainError("empty interval")
        a, b = self._interval_d2phi(lo, hi, 0)
        return (math.nextafter(a - _D2PHI_SLACK, -math.inf),
                math.nextafter(b + _D2PHI_SLACK, math.inf))

    def _interval_d2phi(self, lo, hi, depth) -> tuple[float, float]:
        if depth > self.recursion_cap:
            raise DomainError("recursion cap exceeded in interval phi''")
        if lo >= 1.0 and hi <= _E:
            c = self._band_candidates(self._d2p_desc, self._d2p_crit, lo, hi)
            return min(c), max(c)
        if lo > _E:
            y0, y1 = math.log(lo), math.log(hi)
            d2a, d2b = self._interval_d2phi(y0, y1, depth + 1)
            d1a, d1b = self._interval_dphi(y0, y1, depth + 1)
            na, nb = d2a - d1b, d2b - d1a  # phi''(y) - phi'(y)
            # times 1/x^2 with x in [lo, hi], positive factor
            fa, fb = 1.0 / (hi * hi), 1.0 / (lo * lo)
            pieces = [na * fa, na * fb, nb * fa, nb * fb]
            return min(pieces), max(pieces)
        if hi < 1.0:
            ya, yb = math.exp(lo), math.exp(hi)
            d2a, d2b = self._interval_d2phi(ya, yb, depth + 1)
            d1a, d1b = self._interval_dphi(ya, yb, depth + 1)
            # phi''(y) y^2 + phi'(y) y with y in [ya, yb] > 0
            q2 = [d2a * ya * ya, d2a * yb * yb, d2b * ya * ya, d2b * yb * yb]
            q1 = [d1a * ya, d1a * yb, d1b * ya, d1b * yb]
            return min(q2) + min(q1), max(q2) + max(q1)
        if lo < 1.0:
            a1, b1 = self._interval_d2phi(lo, math.nextafter(1.0, 0.0), depth + 1)
            a2, b2 = self._interval_d2phi(1.0, hi, depth + 1)
            return min(a1, a2), max(b1, b2)
        a1, b1 = self._interval_d2phi(lo, _E, depth + 1)
        a2, b2 = self._interval_d2phi(math.nextafter(_E, math.inf), hi, depth + 1)
        return min(a1, a2), max(b1, b2)

    # -- inverse ---------------------------------------------------------------

    @property
    def phi_top(self) -> float:
        if self._phi_top is None:
            self._phi_top = self.eval_phi(sys.float_info.max)
        return self._phi_top

    def trans_exp(self, y: float) -> float:
        """Monotone inverse of phi; defined on (-2, phi_top]."""
        y = float(y)
        if not math.isfinite(y):
            raise DomainError(f"inverse argument must be finite, got {y}")
        if y <= -2.0:
            raise DomainError("phi never reaches values <= -2")
        if y > self.phi_top:
            raise DomainError("inverse exceeds double range")
        m = math.floor(y)
        f = y - m
        x = self._seed_inverse(f)
        if m >= 0:
            for _ in range(m):
                if x >= 709.8:
                    raise DomainError("inverse exceeds double range")
                x = math.exp(x)
        else:
            for _ in range(-m):
                if x <= 0.0:
                    raise DomainError("inverse undefined: log of non-positive")
                x = math.log(x)
        return x

    def _seed_inverse(self, f: float) -> float:
        # solve p(x) = f on [1, e]; p increasing with p(1)=0, p(e)=1
        from scipy.optimize import brentq

        if f <= 0.0:
            return 1.0
        if f >= 1.0:
            return _E
        return float(brentq(lambda x: float(np.polyval(self._p_desc, x - 1.0)) - f,
                            1.0, _E, xtol=1e-15, rtol=8.9e-16))

    def check_transexp(self, i: int, x: float) -> bool:
        """True iff the inverse exceeds the i-fold exponential at x, tested in
        log domain as x - phi(x) > i (equivalent by monotonicity of phi)."""
        if i < 0:
            raise DomainError("tower height must be >= 0")
        return x - self.eval_phi(x) > float(i)

    # -- scans and checks --------------------------------------------------------

    def abel_residual(self, xs) -> float:
        xs = np.asarray(xs, dtype=float)
        lhs = self.eval_phi_array(np.exp(xs))
        rhs = self.eval_phi_array(xs) + 1.0
        return float(np.max(np.abs(lhs - rhs)))

    def residual_grid(self, lo: float = -5.0, hi: float = 5.0,
                      count: int = 10_000) -> np.ndarray:
        # junction points 0 and 1 are the only places value-level corruption
        # of the seed can show, so they are always included
        g = np.linspace(lo, hi, count)
        extra = [x for x in (0.0, 1.0) if lo <= x <= hi]
        return np.unique(np.concatenate([g, extra]))

    def check_domination(self, n: int, x_lo: float, x_hi: float,
                         samples: int = 4096) -> "DominationReport":
        """Least sampled X with |phi(x)| <= log_n(x) for all sampled x >= X."""
        if n not in (1, 2):
            raise DomainError("domination scan supports n in {1, 2}")
        # log_n must stay finite and nonnegative over the sampled range
        if not (exp_n(1.0, n - 1) <= x_lo < x_hi):
            raise DomainError("need exp_{n-1}(1) <= x_lo < x_hi")
        xs = np.geomspace(x_lo, x_hi, samples)
        ln = xs.copy()
        for _ in range(n):
            ln = np.log(ln)
        ok = np.abs(self.eval_phi_array(xs)) <= ln
        threshold: Optional[float] = None
        if ok[-1]:
            bad = np.nonzero(~ok)[0]
            idx = 0 if bad.size == 0 else int(bad[-1]) + 1
            threshold = float(xs[idx])
        return DominationReport(n=n, x_lo=float(x_lo), x_hi=float(x_hi),
                                samples=samples, threshold=threshold)

    # -- validation ------------------------------------------------------------

    def junction_jumps(self) -> list[float]:
        """Taylor-coefficient mismatches at y = e for orders 0 .. 2k+1."""
        deg = 2 * self.order + 1
        B, P = _jet_matrices(deg)
        a = np.array(self.coeffs)
        jumps = (B - P) @ a
        jumps[0] -= 1.0  # value matching is p(e) = p(1) + 1 = 1
        return [float(j) for j in jumps]

    def validate(self) -> None:
        """Raise BuildError unless the seed defines a usable super-logarithm."""
        jumps = self.junction_jumps()
        for j in range(self.order + 1):
            if abs(jumps[j]) > self.tol:
                raise BuildError(
                    f"junction mismatch at order {j}: {jumps[j]:.3e} > {self.tol:.1e}")
        if self.inf_dphi_fundamental <= 0.0:
            raise BuildError(
                f"seed not strictly increasing: min p' = {self.inf_dphi_fundamental:.3e}")
        if abs(self.seed(1.0)) > self.tol or abs(self.seed(_E) - 1.0) > self.tol:
            raise BuildError("seed normalization violated")
        if not self.sup_dphi_nonpos < 1.0:
            # the growth-exponent rule for phi over level-0 arguments relies
            # on |phi(-u)| <= 1 + u; that needs phi' <= 1 left of the origin
            raise BuildError(
                f"sup of phi' on (-inf, 0] is {self.sup_dphi_nonpos:.6f}, "
                "not < 1; growth certification would be unsound")
        res = self.abel_residual(self.residual_grid())
        if res > self.tol:
            raise BuildError(
                f"Abel residual {res:.3e} exceeds tolerance {self.tol:.1e}")

    # -- serialization -----------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "format_version": 1,
            "kind": "abel-seed",
            "order": self.order,
            "tol": self.tol,
            "coeffs": list(self.coeffs),
        }, sort_keys=True, indent=2)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def from_json(cls, text: str, validate: bool = True) -> "AbelFunction":
        try:
            data = json.loads(text)
            coeffs = data["coeffs"]
            order = int(data["order"])
            tol = float(data["tol"])
        except (ValueError, KeyError, TypeError) as exc:
            raise BuildError(f"malformed seed file: {exc}") from exc
        if data.get("format_version") != 1:
            raise BuildError("unsupported seed file version")
        return cls(coeffs, order, tol, validate=validate)

    @classmethod
    def load(cls, path: str, validate: bool = True) -> "AbelFunction":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read(), validate=validate)


def build_abel(order: int = DEFAULT_ORDER, tol: float = DEFAULT_TOL) -> AbelFunction:
    """Construct the seed polynomial and wrap it as an AbelFunction.

    The degree-(2k+1) seed satisfies the k+1 junction constraints exactly
    (value plus C^k matching of p(log y) + 1 at y = e) and uses the k
    remaining degrees of freedom to minimize the weighted Taylor-coefficient
    jumps at orders k+1 .. 2k+1.
    """
    if order not in (1, 2, 3):
        raise BuildError(f"order must be 1, 2 or 3, got {order}")
    if not tol > 0.0:
        raise BuildError("tol must be positive")
    k = order
    deg = 2 * k + 1
    B, P = _jet_matrices(deg)
    D = B - P

    cons = D[: k + 1]
    rhs = np.zeros(k + 1)
    rhs[0] = 1.0

    a_part, *_ = np.linalg.lstsq(cons, rhs, rcond=None)
    _, sv, vt = np.linalg.svd(cons)
    rank = int(np.sum(sv > 1e-12 * sv[0]))
    null = vt[rank:].T  # deg x (deg - rank)

    w = (_E - 1.0) ** np.arange(k + 1, deg + 1)
    obj = D[k + 1:] * w[:, None]
    z, *_ = np.linalg.lstsq(obj @ null, -obj @ a_part, rcond=None)
    a = a_part + null @ z
    return AbelFunction(a, order, tol)


@lru_cache(maxsize=None)
def _default_abel_cached() -> AbelFunction:
    return build_abel(DEFAULT_ORDER, DEFAULT_TOL)


def get_default_abel() -> AbelFunction:
    """Process-wide default super-logarithm (order 3, tol 1e-8)."""
    return _default_abel_cached()


class DominationReport:
    """Result of a log_n-domination threshold scan."""

    def __init__(self, n: int, x_lo: float, x_hi: float, samples: int,
                 threshold: Optional[float]):
        self.n = n
        self.x_lo = x_lo
        self.x_hi = x_hi
        self.samples = samples
        self.threshold = threshold

    @property
    def found(self) -> bool:
        return self.threshold is not None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "x_lo": self.x_lo,
            "x_hi": self.x_hi,
            "samples": self.samples,
            "found": self.found,
            "threshold": self.threshold,
        }

    def __repr__(self):  # pragma: no cover
        state = f"threshold={self.threshold}" if self.found else "not found in range"
        return f"DominationReport(n={self.n}, {state})"
