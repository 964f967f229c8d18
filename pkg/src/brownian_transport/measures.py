"""One-dimensional measures given by evaluable densities.

Provides cumulative distribution functions, the CDF primitive used as the
transport cost, Cantor sets with exact rational endpoints, and the
centering / truncation transforms that prepare measures for discretization.

Measures built from the constructors in this module (``gaussian``,
``uniform``, ``triangle``, ``from_pieces``) carry closed-form interval
moments, so downstream integrals are exact to rounding.  ``from_density``
accepts an arbitrary density on a bounded support and falls back to
adaptive Simpson quadrature.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import ndtr

from .errors import NumericToleranceError, PreconditionError

# Tolerance for "equal means": inputs are analytically centered, this only
# absorbs round-off.
MEAN_TOL = 1e-9

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Quadrature:
    """Adaptive Simpson settings for numerically backed measures."""

    tol: float = 1e-10
    max_depth: int = 48


# ---------------------------------------------------------------------------
# Closed-form piece moments


def _gauss_pdf(x, var):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x / var) / (_SQRT_2PI * math.sqrt(var))


def _gauss_piece_moments(p, q, coef, var):
    """(m0, m1, m2) of coef * N(0, var) density over [p, q]; p, q may be inf."""
    s = math.sqrt(var)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    Fp, Fq = ndtr(p / s), ndtr(q / s)
    fp = np.where(np.isfinite(p), _gauss_pdf(p, var), 0.0)
    fq = np.where(np.isfinite(q), _gauss_pdf(q, var), 0.0)
    pfp = np.where(np.isfinite(p), p, 0.0) * fp
    qfq = np.where(np.isfinite(q), q, 0.0) * fq
    m0 = coef * (Fq - Fp)
    m1 = coef * var * (fp - fq)
    m2 = coef * var * ((Fq - Fp) + (pfp - qfq))
    return m0, m1, m2


def _affine_piece_moments(p, q, c0, c1):
    # factored through (q - p) to stay stable for narrow pieces with
    # steep slopes
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    w = q - p
    s1 = p + q
    s2 = p * p + p * q + q * q
    m0 = w * (c0 + 0.5 * c1 * s1)
    m1 = w * (0.5 * c0 * s1 + c1 * s2 / 3.0)
    m2 = w * (c0 * s2 / 3.0 + 0.25 * c1 * s1 * (p * p + q * q))
    return m0, m1, m2


@dataclass(frozen=True)
class _Piece:
    lo: float
    hi: float
    affine: tuple[float, float]  # density contribution c0 + c1*x
    gauss: tuple[tuple[float, float], ...]  # (coef, var) pairs

    def moments(self, p, q):
        m0 = np.zeros(np.shape(p)) if np.ndim(p) else 0.0
        m1, m2 = m0, m0
        c0, c1 = self.affine
        if c0 != 0.0 or c1 != 0.0:
            a0, a1, a2 = _affine_piece_moments(p, q, c0, c1)
            m0, m1, m2 = m0 + a0, m1 + a1, m2 + a2
        for coef, var in self.gauss:
            g0, g1, g2 = _gauss_piece_moments(p, q, coef, var)
            m0, m1, m2 = m0 + g0, m1 + g1, m2 + g2
        return m0, m1, m2

    def density(self, x):
        c0, c1 = self.affine
        out = c0 + c1 * np.asarray(x, dtype=float)
        for coef, var in self.gauss:
            out = out + coef * _gauss_pdf(x, var)
        return out


class _Segments:
    """Sorted disjoint pieces with closed-form interval moments."""

    def __init__(self, pieces):
        pieces = tuple(pieces)
        for a, b in zip(pieces, pieces[1:]):
            if not a.hi == b.lo:
                raise ValueError("pieces must be contiguous and sorted")
        for pc in pieces:
            if not pc.lo < pc.hi:
                raise ValueError("empty piece")
            if (pc.affine != (0.0, 0.0)) and not (
                math.isfinite(pc.lo) and math.isfinite(pc.hi)
            ):
                raise ValueError("affine terms need finite piece bounds")
        self.pieces = pieces
        self.edges = np.array([pieces[0].lo] + [pc.hi for pc in pieces])
        full = [pc.moments(max(pc.lo, -np.inf), pc.hi) for pc in pieces]
        self._full = np.array(full)  # (P, 3)
        self._prefix = np.vstack(
            [np.zeros(3), np.cumsum(self._full, axis=0)]
        )  # (P+1, 3)

    def moments(self, a, b):
        """(m0, m1, m2) of the density over [a, b], scalars."""
        if b <= a:
            return 0.0, 0.0, 0.0
        out = np.zeros(3)
        lo_idx = max(bisect_right(self.edges, a) - 1, 0)
        for pc in self.pieces[lo_idx:]:
            if pc.lo >= b:
                break
            p, q = max(pc.lo, a), min(pc.hi, b)
            if q > p:
                out += pc.moments(p, q)
        return float(out[0]), float(out[1]), float(out[2])

    def moments_batch(self, p, q):
        """(m0, m1) over many [p_i, q_i]; intervals must not straddle edges."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        mid = np.where(np.isfinite(p), p, q) * 0.5 + np.where(
            np.isfinite(q), q, p
        ) * 0.5
        idx = np.clip(np.searchsorted(self.edges, mid, side="right") - 1, 0,
                      len(self.pieces) - 1)
        m0 = np.zeros_like(p)
        m1 = np.zeros_like(p)
        for j in np.unique(idx):
            sel = idx == j
            g0, g1, _ = self.pieces[j].moments(p[sel], q[sel])
            m0[sel], m1[sel] = g0, g1
        return m0, m1

    def cumulative(self, x):
        """(M0, M1) of the density over (-inf, x], vectorized."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0,
                      len(self.pieces) - 1)
        M0 = self._prefix[idx, 0].copy()
        M1 = self._prefix[idx, 1].copy()
        for j in np.unique(idx):
            sel = idx == j
            pc = self.pieces[j]
            xx = np.clip(x[sel], pc.lo, pc.hi)
            g0, g1, _ = pc.moments(np.full_like(xx, pc.lo), xx)
            M0[sel] += g0
            M1[sel] += g1
        if scalar:
            return float(M0[0]), float(M1[0])
        return M0, M1

    def density(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0,
                      len(self.pieces) - 1)
        out = np.zeros_like(x, dtype=float)
        for j in np.unique(idx):
            sel = idx == j
            out[sel] = self.pieces[j].density(x[sel])
        inside = (x >= self.edges[0]) & (x <= self.edges[-1])
        out = np.where(inside, out, 0.0)
        return float(out[0]) if scalar else out

    def clipped_scaled(self, lo, hi, factor):
        pieces = []
        for pc in self.pieces:
            p, q = max(pc.lo, lo), min(pc.hi, hi)
            if q <= p:
                continue
            aff = (pc.affine[0] * factor, pc.affine[1] * factor)
            gauss = tuple((c * factor, v) for c, v in pc.gauss)
            pieces.append(_Piece(p, q, aff, gauss))
        return _Segments(pieces)

    def reweighted_sides(self, c, d):
        pieces = []
        for pc in self.pieces:
            parts = []
            if pc.lo < 0.0 < pc.hi:
                parts = [(pc.lo, 0.0, c), (0.0, pc.hi, d)]
            else:
                parts = [(pc.lo, pc.hi, c if pc.hi <= 0.0 else d)]
            for p, q, w in parts:
                aff = (pc.affine[0] * w, pc.affine[1] * w)
                gauss = tuple((cf * w, v) for cf, v in pc.gauss)
                pieces.append(_Piece(p, q, aff, gauss))
        return _Segments(pieces)


# ---------------------------------------------------------------------------
# Adaptive Simpson fallback


def _adaptive_simpson(f, a, b, tol, max_depth):
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        if depth <= 0:
            raise NumericToleranceError(
                f"Simpson refinement did not converge on [{a}, {b}]"
            )
        return rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(
            m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
        )

    if b <= a:
        return 0.0
    return rec(a, b, fa, fm, fb, whole, tol, max_depth)


# ---------------------------------------------------------------------------
# DensityMeasure


@dataclass(frozen=True)
class DensityMeasure:
    """A measure on the line given by a nonnegative density.

    ``support`` is the closed hull of the density (endpoints may be
    infinite).  ``total_mass`` is 1 for probability measures and below 1
    for sub-probability restrictions.  When ``segments`` is present all
    interval moments are closed-form; otherwise integrals run through
    adaptive Simpson quadrature and the support must be bounded.
    """

    density: object
    support: tuple[float, float]
    total_mass: float = 1.0
    breakpoints: tuple[float, ...] = ()
    quadrature: Quadrature = Quadrature()
    segments: _Segments | None = None

    # -- integration backends ------------------------------------------------

    def _numeric_moment(self, a, b, k):
        lo, hi = self.support
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise PreconditionError(
                "numerically backed measures need a bounded support; "
                "truncate first"
            )
        a, b = max(a, lo), min(b, hi)
        if b <= a:
            return 0.0
        cuts = [a] + [c for c in self.breakpoints if a < c < b] + [b]
        tol = self.quadrature.tol / max(len(cuts) - 1, 1)
        f = self.density if k == 0 else (lambda x: x**k * self.density(x))
        return sum(
            _adaptive_simpson(f, p, q, tol, self.quadrature.max_depth)
            for p, q in zip(cuts, cuts[1:])
        )

    def moments(self, a, b):
        """(mass, first moment, second moment) of the density over [a, b]."""
        if self.segments is not None:
            return self.segments.moments(a, b)
        return tuple(self._numeric_moment(a, b, k) for k in range(3))

    def moments_batch(self, p, q):
        """(mass, first moment) over many intervals, for discretization."""
        if self.segments is not None:
            return self.segments.moments_batch(p, q)
        m0 = np.array([self._numeric_moment(a, b, 0) for a, b in zip(p, q)])
        m1 = np.array([self._numeric_moment(a, b, 1) for a, b in zip(p, q)])
        return m0, m1

    # -- measure operations --------------------------------------------------

    def cdf(self, x):
        """F(x) = mass of (-inf, x]; nondecreasing, in [0, total_mass]."""
        if self.segments is not None:
            out = self.segments.cumulative(x)[0]
            return float(out) if np.ndim(x) == 0 else out
        if np.ndim(x) > 0:
            return np.array([self.cdf(float(v)) for v in np.asarray(x)])
        return self._numeric_moment(self.support[0], float(x), 0)

    def mean_var(self):
        """(mean, variance); requires a finite second moment."""
        m0, m1, m2 = self.moments(-math.inf, math.inf)
        if m0 <= 0.0:
            raise PreconditionError("measure has no mass")
        mean = m1 / m0
        var = max(m2 / m0 - mean * mean, 0.0)
        return mean, var

    def phi(self, x):
        """Primitive of the CDF: integral of F over (-inf, x].

        Evaluated through the equivalent first-moment form
        integral of (x - y) over y <= x, which is exact for measures with
        closed-form moments.
        """
        if self.segments is not None:
            M0, M1 = self.segments.cumulative(x)
            out = np.asarray(x, dtype=float) * M0 - M1
            return float(out) if np.ndim(x) == 0 else out
        if np.ndim(x) > 0:
            return np.array([self.phi(float(v)) for v in np.asarray(x)])
        x = float(x)
        m0 = self._numeric_moment(self.support[0], x, 0)
        m1 = self._numeric_moment(self.support[0], x, 1)
        return x * m0 - m1

    def phi_from_cdf(self, x, tol=None):
        """Phi recomputed by integrating the CDF; cross-check path."""
        lo = self.support[0]
        if not math.isfinite(lo):
            lo = min(-40.0, float(x) - 40.0)
        tol = tol if tol is not None else self.quadrature.tol
        if x <= lo:
            return 0.0
        return _adaptive_simpson(
            lambda s: np.float64(self.cdf(float(s))), lo, float(x), tol,
            self.quadrature.max_depth,
        )

    def quantile(self, u):
        """Generalized inverse of the normalized CDF, by bisection."""
        u = np.asarray(u, dtype=float)
        target = u * self.total_mass
        lo, hi = self.support
        if not math.isfinite(lo) or not math.isfinite(hi):
            lo = -1.0 if not math.isfinite(lo) else lo
            hi = 1.0 if not math.isfinite(hi) else hi
            while self.cdf(lo) > 1e-15:
                lo *= 2.0
            while self.cdf(hi) < self.total_mass - 1e-15:
                hi *= 2.0
        a = np.full_like(target, lo)
        b = np.full_like(target, hi)
        for _ in range(80):
            m = 0.5 * (a + b)
            below = self.cdf(m) < target
            a = np.where(below, m, a)
            b = np.where(below, b, m)
        out = 0.5 * (a + b)
        return float(out) if np.ndim(u) == 0 else out

    def to_csv(self, path, grid=None):
        """Write (x, density) rows for plotting."""
        if grid is None:
            lo, hi = self.support
            if not (math.isfinite(lo) and math.isfinite(hi)):
                lo, hi = self.quantile(1e-9), self.quantile(1.0 - 1e-9)
            grid = np.linspace(lo, hi, 1001)
        vals = np.asarray(self.density(np.asarray(grid, dtype=float)))
        with open(path, "w") as fh:
            fh.write("x,density\n")
            for x, d in zip(grid, vals):
                fh.write(f"{x:.17g},{d:.17g}\n")


# ---------------------------------------------------------------------------
# Constructors


def _measure_from_segments(segments, total_mass=None, breakpoints=None):
    lo, hi = float(segments.edges[0]), float(segments.edges[-1])
    if total_mass is None:
        total_mass = segments.moments(-math.inf, math.inf)[0]
    if breakpoints is None:
        breakpoints = tuple(
            float(e) for e in segments.edges if math.isfinite(e)
        )
    return DensityMeasure(
        density=segments.density,
        support=(lo, hi),
        total_mass=float(total_mass),
        breakpoints=breakpoints,
        segments=segments,
    )


def gaussian(variance=1.0, total_mass=1.0):
    """Centered Gaussian N(0, variance), optionally scaled."""
    if variance <= 0.0:
        raise PreconditionError("variance must be positive")
    seg = _Segments(
        [_Piece(-math.inf, math.inf, (0.0, 0.0), ((total_mass, variance),))]
    )
    return _measure_from_segments(seg, total_mass=total_mass, breakpoints=())


def uniform(lo, hi):
    """Uniform probability measure on [lo, hi]."""
    if not lo < hi:
        raise PreconditionError("empty interval")
    seg = _Segments([_Piece(lo, hi, (1.0 / (hi - lo), 0.0), ())])
    return _measure_from_segments(seg, total_mass=1.0)


def triangle(center=0.0, halfwidth=1e-3):
    """Unit-mass triangular bump; narrow widths approximate a point mass."""
    if halfwidth <= 0.0:
        raise PreconditionError("halfwidth must be positive")
    h = 1.0 / halfwidth  # peak height, d(x) = h * (1 - |x - center| / halfwidth)
    slope = h / halfwidth
    left = _Piece(center - halfwidth, center, (h - slope * center, slope), ())
    right = _Piece(center, center + halfwidth, (h + slope * center, -slope), ())
    seg = _Segments([left, right])
    return _measure_from_segments(seg, total_mass=1.0)


def from_pieces(pieces, total_mass=None):
    """Measure from (lo, hi, affine, gauss_terms) pieces with exact moments."""
    segs = _Segments(
        [_Piece(float(lo), float(hi), tuple(aff), tuple(gauss))
         for lo, hi, aff, gauss in pieces]
    )
    return _measure_from_segments(segs, total_mass=total_mass)


def from_density(density, support, breakpoints=(), quadrature=None,
                 total_mass=1.0):
    """Generic numerically integrated measure on a bounded support."""
    lo, hi = support
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise PreconditionError("from_density requires a bounded support")
    return DensityMeasure(
        density=density,
        support=(float(lo), float(hi)),
        total_mass=float(total_mass),
        breakpoints=tuple(float(b) for b in breakpoints),
        quadrature=quadrature or Quadrature(),
    )


# ---------------------------------------------------------------------------
# Cost function


class CostFunction:
    """Pointwise transport cost between equal-mean measures.

    The value at x is phi(target) - phi(source); nonnegativity everywhere
    is necessary for a Brownian transport from source to target to exist.
    """

    def __init__(self, source, target, mean_tol=MEAN_TOL):
        m0, _ = source.mean_var()
        m1, _ = target.mean_var()
        if abs(m0 - m1) > mean_tol:
            raise PreconditionError(
                f"means differ by {m0 - m1:.3e} (tolerance {mean_tol:g})"
            )
        self.source = source
        self.target = target

    def __call__(self, x):
        return self.target.phi(x) - self.source.phi(x)


def cost(mu0, mu1, x):
    """Transport cost phi(mu1) - phi(mu0) at x; requires equal means."""
    return CostFunction(mu0, mu1)(x)


# ---------------------------------------------------------------------------
# Centering and truncation


def gamma_center(m):
    """Reweight the two sides of the origin to a centered probability measure.

    Returns (measure, c, d) where c and d scale the restriction to the
    negative and positive half-lines.
    """
    n0, n1, _ = m.moments(-math.inf, 0.0)
    p0, p1, _ = m.moments(0.0, math.inf)
    if n0 <= 1e-14 or p0 <= 1e-14:
        raise PreconditionError(
            "gamma centering needs mass on both sides of the origin"
        )
    det = n0 * p1 - p0 * n1
    if abs(det) < 1e-14:
        raise NumericToleranceError("singular centering system")
    c = p1 / det
    d = -n1 / det
    if m.segments is not None:
        seg = m.segments.reweighted_sides(c, d)
        out = _measure_from_segments(seg, total_mass=1.0)
    else:
        base = m.density
        lo, hi = m.support

        def density(x, _b=base, _c=c, _d=d):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0.0, _c, _d) * _b(x)

        out = DensityMeasure(
            density=density,
            support=(lo, hi),
            total_mass=1.0,
            breakpoints=tuple(sorted(set(m.breakpoints) | {0.0})),
            quadrature=m.quadrature,
        )
    return out, c, d


def truncate_normalize(m, R):
    """Restrict to [-R, R] and renormalize to a probability measure."""
    mass = m.moments(-R, R)[0]
    if mass <= 1e-300:
        raise PreconditionError(f"no mass in [-{R}, {R}]")
    if m.segments is not None:
        seg = m.segments.clipped_scaled(-R, R, 1.0 / mass)
        return _measure_from_segments(seg, total_mass=1.0)
    base = m.density
    lo, hi = max(m.support[0], -R), min(m.support[1], R)

    def density(x, _b=base, _m=mass, _lo=lo, _hi=hi):
        x = np.asarray(x, dtype=float)
        inside = (x >= _lo) & (x <= _hi)
        return np.where(inside, _b(x) / _m, 0.0)

    return DensityMeasure(
        density=density,
        support=(lo, hi),
        total_mass=1.0,
        breakpoints=tuple(b for b in m.breakpoints if -R < b < R),
        quadrature=m.quadrature,
    )


# ---------------------------------------------------------------------------
# Feasibility report


@dataclass(frozen=True)
class FeasibilityReport:
    means_equal: bool
    mean_gap: float
    variance_ok: bool
    variance_gap: float
    min_cost: float
    argmin: float
    feasible: bool


def feasibility_check(mu0, mu1, grid=None):
    """Necessary-condition report for a Brownian transport mu0 -> mu1.

    Checks equal means, nondecreasing variance, and the sign of the cost
    on a grid.  Report-only: never raises for infeasible inputs.
    """
    mean0, var0 = mu0.mean_var()
    mean1, var1 = mu1.mean_var()
    if grid is None:
        los, his = [], []
        for m in (mu0, mu1):
            lo, hi = m.support
            if not (math.isfinite(lo) and math.isfinite(hi)):
                lo, hi = m.quantile(1e-10), m.quantile(1.0 - 1e-10)
            los.append(lo)
            his.append(hi)
        grid = np.linspace(min(los), max(his), 513)
        extra = [b for m in (mu0, mu1) for b in m.breakpoints
                 if min(los) < b < max(his)]
        grid = np.sort(np.concatenate([grid, np.asarray(extra)]))
    grid = np.asarray(grid, dtype=float)
    vals = mu1.phi(grid) - mu0.phi(grid)
    k = int(np.argmin(vals))
    mean_gap = mean1 - mean0
    var_gap = var1 - var0
    means_equal = abs(mean_gap) <= MEAN_TOL
    variance_ok = var_gap >= -MEAN_TOL
    min_cost = float(vals[k])
    feasible = means_equal and variance_ok and min_cost >= -1e-9
    return FeasibilityReport(
        means_equal=means_equal,
        mean_gap=float(mean_gap),
        variance_ok=variance_ok,
        variance_gap=float(var_gap),
        min_cost=min_cost,
        argmin=float(grid[k]),
        feasible=feasible,
    )


# ---------------------------------------------------------------------------
# Cantor sets


@dataclass(frozen=True)
class CantorSet:
    """Closed intervals remaining after middle removals, exact endpoints."""

    ambient: tuple[Fraction, Fraction]
    depth: int
    intervals: tuple[tuple[Fraction, Fraction], ...]

    def total_length(self):
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def float_intervals(self):
        return np.array([[float(a), float(b)] for a, b in self.intervals])

    def contains(self, x):
        """Vectorized membership test in float precision."""
        flat = self.float_intervals().reshape(-1)
        idx = np.searchsorted(flat, np.asarray(x, dtype=float), side="right")
        inside = idx % 2 == 1
        # closed right endpoints
        on_edge = np.isin(np.asarray(x, dtype=float), flat[1::2])
        out = inside | on_edge
        return bool(out) if np.ndim(x) == 0 else out

    def complement_within(self, a, b):
        """Exact Lebesgue measure of [a, b] minus the set (Fractions)."""
        a, b = Fraction(a), Fraction(b)
        if b <= a:
            return Fraction(0)
        covered = Fraction(0)
        for lo, hi in self.intervals:
            p, q = max(lo, a), min(hi, b)
            if q > p:
                covered += q - p
        return (b - a) - covered


def build_cantor(ambient, depth):
    """Cantor set removing a 1/(n+1)^2 middle part at step n.

    The total remaining length after each step follows the telescoping
    product and converges to half the ambient length.
    """
    lo, hi = Fraction(ambient[0]), Fraction(ambient[1])
    if not lo < hi:
        raise PreconditionError("empty ambient interval")
    if depth < 0:
        raise PreconditionError("depth must be nonnegative")
    intervals = [(lo, hi)]
    for n in range(1, depth + 1):
        keep = (1 - Fraction(1, (n + 1) ** 2)) / 2
        nxt = []
        for a, b in intervals:
            h = (b - a) * keep
            nxt.append((a, a + h))
            nxt.append((b - h, b))
        intervals = nxt
    return CantorSet(ambient=(lo, hi), depth=depth, intervals=tuple(intervals))


@dataclass(frozen=True)
class GapConstants:
    alpha_quadratic: float
    alpha_exp: float
    n_samples: int
    min_length: float
    quadratic_ok: bool


def cantor_gap_constants(K, samples, seed=0, min_length=None):
    """Empirical gap constants over random subintervals of the ambient.

    Samples interval lengths log-uniformly down to a resolution floor
    (finite construction depth leaves solid intervals below the finest
    scale, where the limiting set's gap estimates are not yet visible).
    Returns the largest quadratic constant and the smallest exponential
    constant consistent with the sampled intervals.
    """
    if not K.intervals:
        raise PreconditionError("empty Cantor set")
    lo, hi = float(K.ambient[0]), float(K.ambient[1])
    span = hi - lo
    finest = float(min(b - a for a, b in K.intervals))
    if min_length is None:
        min_length = min(2.0 * finest, 0.5 * span)
    rng = np.random.default_rng(seed)
    lengths = np.exp(
        rng.uniform(math.log(min_length), math.log(span), size=samples)
    )
    starts = lo + rng.uniform(0.0, 1.0, size=samples) * (span - lengths)
    alpha_q = math.inf
    alpha_e = 0.0
    for a, L in zip(starts, lengths):
        gap = float(K.complement_within(Fraction(float(a)),
                                        Fraction(float(a + L))))
        alpha_q = min(alpha_q, gap / (L * L))
        if gap <= 0.0:
            alpha_e = math.inf
        else:
            alpha_e = max(alpha_e, -L * math.log(gap))
    return GapConstants(
        alpha_quadratic=float(alpha_q),
        alpha_exp=float(alpha_e),
        n_samples=int(samples),
        min_length=float(min_length),
        quadratic_ok=alpha_q > 0.0,
    )
