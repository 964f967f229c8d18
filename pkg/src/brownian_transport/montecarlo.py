"""Stochastic and analytic verification of transport solutions.

Path simulations run against solved stopping rules (random walk mode
reproduces the engine's law exactly; Euler mode first-crosses the graph
of a continuous stopping function), empirical measures carry the
statistical distances, and the Hermite expansion check provides an
independent necessary condition on the assembled counter-example.

Randomness comes from a counter-based generator keyed by the seed; every
step consumes one full row of variates per path index, so path i's
trajectory is a pure function of (seed, i) regardless of scheduling.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import NonTerminationError, NumericToleranceError, PreconditionError
from .lattice import LatticeMeasure
from .measures import DensityMeasure
from .solver import TransportSolution

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Sorted Monte-Carlo samples with CDF evaluation."""

    samples: np.ndarray
    seed: int

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def count(self):
        return self.samples.size

    def cdf(self, x):
        out = np.searchsorted(self.samples, np.asarray(x), side="right") / (
            self.count
        )
        return float(out) if np.ndim(x) == 0 else out

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("sample\n")
            for v in self.samples:
                fh.write(f"{v:.17g}\n")


@dataclass(frozen=True)
class PathSimConfig:
    num_paths: int = 100_000
    time_step: float = 1e-4
    max_time: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.num_paths < 1:
            raise PreconditionError("num_paths must be >= 1")
        if self.max_time <= 0.0:
            raise PreconditionError("max_time must be positive")


def _rng(seed):
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _start_positions(start, num_paths, rng):
    if isinstance(start, np.ndarray):
        if start.size != num_paths:
            raise PreconditionError("start array size must match num_paths")
        return start.astype(float, copy=True)
    if isinstance(start, (int, float)):
        return np.full(num_paths, float(start))
    if isinstance(start, LatticeMeasure):
        cum = np.cumsum(start.masses)
        cum = cum / cum[-1]
        cells = np.searchsorted(cum, rng.random(num_paths), side="right")
        return (start.offset + cells) / start.mesh_n
    if isinstance(start, DensityMeasure):
        return start.quantile(rng.random(num_paths))
    raise PreconditionError(f"cannot sample start positions from {start!r}")


@dataclass(frozen=True)
class FirstIntersectionResult:
    """Stopped positions and times of simulated paths."""

    empirical: EmpiricalMeasure
    positions: np.ndarray  # path order
    times: np.ndarray  # path order
    exceeded: int
    seed: int


def _check_exceeded(alive, num_paths):
    exceeded = int(alive.sum())
    if exceeded > 0.001 * num_paths:
        raise NonTerminationError(
            f"{exceeded} of {num_paths} paths exceeded max_time"
        )
    return exceeded


def simulate_first_intersection(start, stopping, cfg: PathSimConfig):
    """Sample (X_T, T) for paths stopped by a transport rule.

    ``stopping`` is either a TransportSolution (random-walk mode, the
    discrete rule with survival probabilities at freshly frozen cells) or
    a continuous nonnegative function (Euler mode, first crossing of the
    graph t = f(x) with linear-in-time detection).  Paths still running
    at max_time are counted; more than 0.1 percent of them fails the run.
    """
    if isinstance(stopping, TransportSolution):
        return _simulate_lattice(start, stopping, cfg)
    return _simulate_continuum(start, stopping, cfg)


def _simulate_lattice(start, sol: TransportSolution, cfg):
    rng = _rng(cfg.seed)
    n = sol.mesh_n
    num = cfg.num_paths
    if start is None:
        raise PreconditionError("lattice mode needs a start measure")
    x0 = _start_positions(start, num, rng)
    pos = np.rint(x0 * n).astype(np.int64) - sol.offset
    if np.any(pos < 0) or np.any(pos >= sol.freeze_step.size):
        raise PreconditionError("start mass outside the solved window")
    g = sol.freeze_step
    q = sol.survival
    max_steps = int(math.ceil(cfg.max_time * n * n))
    alive = np.ones(num, dtype=bool)
    T = np.zeros(num, dtype=np.int64)
    for t in range(max_steps + 1):
        if not alive.any():
            break
        gx = g[pos]
        u = rng.random(num)
        stop = alive & ((t > gx) | ((t == gx) & (u >= q[pos])))
        T[stop] = t
        alive &= ~stop
        coin = rng.random(num) < 0.5
        stepv = np.where(coin, 1, -1)
        pos = np.where(alive, pos + stepv, pos)
    exceeded = _check_exceeded(alive, num)
    x = (pos + sol.offset) / n
    times = T / float(n * n)
    return FirstIntersectionResult(
        empirical=EmpiricalMeasure(x[~alive] if exceeded else x, cfg.seed),
        positions=x,
        times=times,
        exceeded=exceeded,
        seed=cfg.seed,
    )


def _simulate_continuum(start, f, cfg):
    rng = _rng(cfg.seed)
    num = cfg.num_paths
    dt = cfg.time_step
    x = _start_positions(start, num, rng)
    xT = x.copy()
    T = np.zeros(num)
    h = 0.0 - np.asarray(f(x), dtype=float)
    alive = h < 0.0  # paths starting on or above the graph stop at once
    sqdt = math.sqrt(dt)
    t = 0.0
    while t < cfg.max_time and alive.any():
        xi = rng.standard_normal(num)
        x_new = np.where(alive, x + sqdt * xi, x)
        h_new = (t + dt) - np.asarray(f(x_new), dtype=float)
        cross = alive & (h_new >= 0.0)
        if cross.any():
            # root of s -> t + s dt - f(x + s dx) on the linear-in-time
            # path; bisection handles the kinks of a piecewise-linear f
            x0 = x[cross]
            dx = x_new[cross] - x0
            lo = np.zeros(x0.size)
            hi = np.ones(x0.size)
            for _ in range(30):
                mid = 0.5 * (lo + hi)
                hm = (t + mid * dt) - np.asarray(f(x0 + mid * dx),
                                                 dtype=float)
                below = hm < 0.0
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            T[cross] = t + hi * dt
            xT[cross] = x0 + hi * dx
        x = x_new
        h = h_new
        alive &= ~cross
        t += dt
    exceeded = _check_exceeded(alive, num)
    return FirstIntersectionResult(
        empirical=EmpiricalMeasure(xT[~alive] if exceeded else xT, cfg.seed),
        positions=xT,
        times=T,
        exceeded=exceeded,
        seed=cfg.seed,
    )


@dataclass(frozen=True)
class CounterexampleSample:
    """Samples of Z = X + phi(X) * Y with the matching Gaussian target."""

    empirical: EmpiricalMeasure
    variance: float  # variance of the target Gaussian
    seed: int

    def target_cdf(self, z):
        return ndtr(np.asarray(z) / math.sqrt(self.variance))


def simulate_counterexample(result, cfg: PathSimConfig):
    """Draw Z = X + phi(X) * Y for independent standard Gaussians X, Y.

    ``result`` provides the function phi and the horizon C; the matching
    claim is Z ~ N(0, C).
    """
    rng = _rng(cfg.seed)
    X = rng.standard_normal(cfg.num_paths)
    Y = rng.standard_normal(cfg.num_paths)
    Z = X + np.asarray(result.phi(X)) * Y
    return CounterexampleSample(
        empirical=EmpiricalMeasure(Z, cfg.seed),
        variance=float(result.C),
        seed=cfg.seed,
    )


def simulate_counterexample_paths(result, cfg: PathSimConfig):
    """Path-level run of the full stopping rule behind the counter-example.

    At time t0 each path lands at sqrt(t0) times a standard Gaussian; on
    the Cantor set it stops there with probability equal to the ratio of
    the unit-variance to the variance-t0 density.  Survivors continue as
    Euler paths until first crossing t = t0 + f1(x).  The law of the
    stopped position is standard Gaussian.
    """
    rng = _rng(cfg.seed)
    t0 = result.config.t0
    x = math.sqrt(t0) * rng.standard_normal(cfg.num_paths)
    u = rng.random(cfg.num_paths)
    ratio = np.exp(-0.5 * x * x * (1.0 - 1.0 / t0)) * math.sqrt(t0)
    killed = result.f.on_set(x) & (u < ratio)
    survivors = np.nonzero(~killed)[0]
    sub = PathSimConfig(
        num_paths=survivors.size,
        time_step=cfg.time_step,
        max_time=cfg.max_time,
        seed=cfg.seed + 1,
    )
    cont = simulate_first_intersection(x[survivors], result.f1, sub)
    positions = x.copy()
    times = np.full(cfg.num_paths, t0)
    positions[survivors] = cont.positions
    times[survivors] = t0 + cont.times
    return FirstIntersectionResult(
        empirical=EmpiricalMeasure(positions, cfg.seed),
        positions=positions,
        times=times,
        exceeded=cont.exceeded,
        seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# Statistical distances


def ks_distance(e: EmpiricalMeasure, cdf):
    """One-sample Kolmogorov-Smirnov statistic against an evaluable CDF."""
    if e.count < 1:
        raise PreconditionError("empty sample")
    m = e.count
    F = np.asarray(cdf(e.samples), dtype=float)
    hi = np.arange(1, m + 1) / m
    lo = np.arange(0, m) / m
    return float(np.maximum(np.abs(hi - F), np.abs(lo - F)).max())


def lattice_cdf(m: LatticeMeasure):
    """Right-continuous CDF of a lattice measure as a callable."""
    cum = np.concatenate([[0.0], np.cumsum(m.masses)])
    pos = m.positions

    def F(x):
        idx = np.searchsorted(pos, np.asarray(x) + 0.5 / m.mesh_n, side="left")
        out = cum[idx]
        return float(out) if np.ndim(x) == 0 else out

    return F


def ks_distance_lattice(e: EmpiricalMeasure, m: LatticeMeasure):
    """KS statistic against an atomic lattice law, exact at the jumps.

    Both CDFs are flat between cells, so the sup runs over cell values and
    their left limits.
    """
    pos = m.positions
    cum = np.cumsum(m.masses) / m.total_mass
    cum_left = np.concatenate([[0.0], cum[:-1]])
    emp_right = np.searchsorted(e.samples, pos, side="right") / e.count
    emp_left = np.searchsorted(e.samples, pos, side="left") / e.count
    return float(
        np.maximum(np.abs(emp_right - cum), np.abs(emp_left - cum_left)).max()
    )


def levy_distance(F, G, grid, tol=1e-9):
    """Levy distance surrogate on a grid, by bisection over the offset.

    Smallest delta with F(x - delta) - delta <= G(x) <= F(x + delta) + delta
    at every grid point; metrizes weak-star convergence on the line.
    """
    grid = np.asarray(grid, dtype=float)

    def ok(d):
        Fl = np.asarray(F(grid - d), dtype=float)
        Fr = np.asarray(F(grid + d), dtype=float)
        G_ = np.asarray(G(grid), dtype=float)
        return bool(np.all(Fl - d <= G_ + 1e-12) and np.all(G_ <= Fr + d + 1e-12))

    lo, hi = 0.0, 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e6:
            raise NumericToleranceError("Levy bisection failed to bracket")
    if ok(lo):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


# ---------------------------------------------------------------------------
# Hermite expansion check


@dataclass(frozen=True)
class HermiteReport:
    """Projection of a bounded function on normalized Hermite polynomials.

    ``coeffs[n]`` is the coefficient against He_n / sqrt(n!), so the
    classical coefficients are coeffs[n] * sqrt(n!).  The necessary
    conditions checked: the first coefficient vanishes, twice the second
    classical coefficient balances the quadratic tail sum, and the
    function stays below its mean plus one.
    """

    coeffs: np.ndarray
    phi1_abs: float
    identity_residual: float
    tail_estimate: float
    sup_excess: float

    @property
    def mean_level(self):
        return float(self.coeffs[0])


def _normalized_hermite(x, max_n):
    H = np.empty((max_n + 1,) + x.shape)
    H[0] = 1.0
    if max_n >= 1:
        H[1] = x
    for n in range(1, max_n):
        H[n + 1] = (x * H[n] - math.sqrt(n) * H[n - 1]) / math.sqrt(n + 1)
    return H


def _gauss_weight(x):
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def hermite_check(phi, max_n=40, quad_tol=1e-9, breakpoints=(), window=8.5,
                  nodes_per_piece=12):
    """Expand phi in the Gaussian-weighted Hermite basis and test the
    necessary conditions for X + phi(X) * Y to be Gaussian.

    Quadrature is piecewise Gauss-Legendre on the breakpoints refined to a
    maximum piece width; the node count is doubled once and the change in
    the identity residual must stay below quad_tol.
    """
    if max_n < 8:
        raise PreconditionError("max_n must be at least 8")
    cuts = sorted({-window, window, *(float(b) for b in breakpoints
                                      if -window < b < window)})
    edges = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        k = max(int(math.ceil((b - a) / 0.25)), 1)
        edges.append(np.linspace(a, b, k + 1)[:-1])
    edges.append(np.array([window]))
    edges = np.concatenate(edges)

    def coefficients(n_nodes):
        gl_x, gl_w = np.polynomial.legendre.leggauss(n_nodes)
        a, b = edges[:-1], edges[1:]
        mid = 0.5 * (a + b)[:, None]
        half = 0.5 * (b - a)[:, None]
        xs = (mid + half * gl_x[None, :]).ravel()
        ws = (half * gl_w[None, :]).ravel()
        vals = np.asarray(phi(xs), dtype=float) * _gauss_weight(xs) * ws
        H = _normalized_hermite(xs, max_n)
        return H @ vals, xs

    coeffs, xs = coefficients(nodes_per_piece)
    coeffs2, _ = coefficients(nodes_per_piece * 2)
    drift = float(np.abs(coeffs - coeffs2).max())
    if drift > quad_tol:
        raise NumericToleranceError(
            f"Hermite quadrature unstable: refinement moved coefficients "
            f"by {drift:.3e}"
        )
    coeffs = coeffs2

    phi2_classical = coeffs[2] * math.sqrt(2.0)
    tail_sum = float(np.sum(coeffs[2:] ** 2))
    residual = abs(-2.0 * phi2_classical - tail_sum)
    tail_estimate = float(np.sum(coeffs[-4:] ** 2))
    vals = np.asarray(phi(xs), dtype=float)
    sup_excess = float(np.max(vals - (coeffs[0] + 1.0)))
    return HermiteReport(
        coeffs=coeffs,
        phi1_abs=float(abs(coeffs[1])),
        identity_residual=float(residual),
        tail_estimate=tail_estimate,
        sup_excess=sup_excess,
    )


# ---------------------------------------------------------------------------
# Expected-time identity


@dataclass(frozen=True)
class ExpectedTimeReport:
    expected_time: float
    variance_gap: float
    residual: float
    passed: bool


def expected_time_check(sol: TransportSolution, mu0n: LatticeMeasure,
                        mu1n: LatticeMeasure, tol=1e-8):
    """Martingale identity: E T equals the variance gap of the measures."""
    gap = mu1n.variance() - mu0n.variance()
    residual = abs(sol.expected_time - gap)
    return ExpectedTimeReport(
        expected_time=sol.expected_time,
        variance_gap=gap,
        residual=float(residual),
        passed=bool(residual <= tol),
    )
