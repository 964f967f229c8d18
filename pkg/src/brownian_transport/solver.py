"""Deterministic freeze/diffuse engine for discrete Brownian transport.

State at integer step t holds the live mass vector (particles still
walking), the frozen mass accumulated so far, and the cost-to-target
profile in integer lattice units.  One step applies, simultaneously from
the time-t snapshot:

  cost(x) = 0            cell is (or becomes) absorbing, live mass stops
  0 < cost(x) < live/2   partial freeze: exactly 2*cost(x) diffuses on,
                         the rest stops; the cell absorbs afterwards
  cost(x) >= live/2      full diffusion (equality also stamps the freeze
                         step, with survival 1)

then live mass splits in halves onto the two neighbours and the cost
profile decreases by min(live/2, cost).  Mass reaching an absorbing cell
stops there at its arrival step.  The procedure terminates with the
frozen mass equal to the target measure.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConsistencyError, NonTerminationError, PreconditionError
from .lattice import LatticeMeasure, phi_cells

PHI_CLAMP = -1e-12  # round-off absorbed silently
PHI_ABORT = -1e-9  # beyond this the run is inconsistent
LIVE_TOL = 1e-12


@dataclass(frozen=True)
class SolverState:
    """Immutable snapshot of the transport iteration at step t."""

    mesh_n: int
    offset: int  # absolute cell index of the window's left edge
    t: int
    live: np.ndarray  # not-yet-stopped mass, zero at frozen cells
    stopped: np.ndarray  # accumulated frozen mass
    phi: np.ndarray  # integer-unit cost to the target, >= 0
    freeze_step: np.ndarray  # int, -1 while a cell has not frozen
    survival: np.ndarray  # fraction diffusing at the freeze step, NaN before
    target: np.ndarray  # target masses on the window

    def total_mass(self):
        return float(self.live.sum() + self.stopped.sum())

    def frozen_mask(self):
        return self.freeze_step >= 0


def init_state(mu0n: LatticeMeasure, mu1n: LatticeMeasure) -> SolverState:
    """Validate the transport hypotheses and set up the step-0 state.

    Requirements checked cell by cell: equal meshes, equal means, a
    nonnegative cost profile, and a target that is positive everywhere
    between the first and last cell of the start measure.
    """
    if mu0n.mesh_n != mu1n.mesh_n:
        raise PreconditionError(
            f"mesh mismatch: {mu0n.mesh_n} vs {mu1n.mesh_n}"
        )
    gap = mu0n.mean() - mu1n.mean()
    if abs(gap) > 1e-9:
        raise PreconditionError(f"means differ by {gap:.3e} (tolerance 1e-9)")
    if abs(mu0n.total_mass - mu1n.total_mass) > 1e-9:
        raise PreconditionError("total masses differ")

    lo0, hi0 = mu0n.support_cells()
    lo1, hi1 = mu1n.support_cells()
    if lo0 < lo1 or hi0 > hi1:
        raise PreconditionError(
            "start measure support must lie inside the target support hull"
        )
    if hi0 - lo0 >= 2:
        tgt = mu1n.masses[lo0 + 1 - mu1n.offset : hi0 - mu1n.offset]
        zero = np.nonzero(tgt <= 0.0)[0]
        if zero.size:
            cell = lo0 + 1 + int(zero[0])
            raise PreconditionError(
                f"target mass vanishes at cell {cell} strictly inside the "
                "start support"
            )

    lo, hi = min(lo0, lo1), max(hi0, hi1)
    cells, phi = phi_cells(mu0n.trimmed(), mu1n.trimmed())
    full = np.zeros(hi - lo + 1)
    full[cells - lo] = phi
    # both window edges carry cost n * (mean gap), zero for exactly matched
    # inputs; values inside the mean tolerance are forced to zero so the
    # edges absorb, larger residues mean the window cannot hold the transport
    edge_tol = 1.01e-9 * mu0n.mesh_n + 1e-12
    for k in (0, full.size - 1):
        if abs(full[k]) > edge_tol:
            raise PreconditionError(
                f"cost at window edge cell {lo + k} is {full[k]:.3e}; "
                "center the measures more precisely"
            )
        full[k] = 0.0
    neg = np.nonzero(full < PHI_CLAMP)[0]
    if neg.size:
        cell = lo + int(neg[0])
        raise PreconditionError(
            f"cost profile is negative at cell {cell}: {full[cell - lo]:.3e}"
        )
    full = np.maximum(full, 0.0)

    live = mu0n.trimmed().with_window(lo, hi).masses.copy()
    target = mu1n.trimmed().with_window(lo, hi).masses.copy()
    w = hi - lo + 1
    return SolverState(
        mesh_n=mu0n.mesh_n,
        offset=lo,
        t=0,
        live=live,
        stopped=np.zeros(w),
        phi=full,
        freeze_step=np.full(w, -1, dtype=np.int64),
        survival=np.full(w, np.nan),
        target=target,
    )


def _advance(state: SolverState):
    """One freeze/diffuse update.

    Returns (new_state, diffused mass, mass stopped at t, mass landing on
    absorbing cells, which stops at t + 1).
    """
    live, phi = state.live, state.phi
    t = state.t
    frozen = state.freeze_step >= 0

    two_phi = 2.0 * phi
    zero = phi <= 0.0
    partial = (phi > 0.0) & (two_phi < live)
    tie = (phi > 0.0) & (two_phi == live)

    diffused = np.where(zero, 0.0, np.where(partial, two_phi, live))

    freeze_step = state.freeze_step
    survival = state.survival
    newly = ~frozen & (partial | tie | (zero & (live > 0.0)))
    if np.any(newly):
        freeze_step = freeze_step.copy()
        survival = survival.copy()
        freeze_step[newly] = t
        q = np.where(
            partial, np.divide(two_phi, live, out=np.zeros_like(live),
                               where=live > 0.0),
            np.where(tie, 1.0, 0.0),
        )
        survival[newly] = q[newly]

    stops_here = live - diffused
    stopped = state.stopped + stops_here

    if diffused[0] != 0.0 or diffused[-1] != 0.0:
        raise ConsistencyError(
            f"mass diffusing out of the window at step {t}"
        )
    arrivals = np.zeros_like(live)
    arrivals[:-1] += 0.5 * diffused[1:]
    arrivals[1:] += 0.5 * diffused[:-1]

    phi_next = phi - np.minimum(0.5 * live, phi)
    bad = phi_next < PHI_ABORT
    if np.any(bad):
        k = int(np.argmin(phi_next))
        raise ConsistencyError(
            f"cost went negative ({phi_next[k]:.3e}) at cell "
            f"{state.offset + k}, step {t}"
        )
    phi_next = np.maximum(phi_next, 0.0)

    # arrivals onto already-absorbing cells stop at their arrival step t+1
    absorbing = (freeze_step >= 0) & (freeze_step <= t)
    landing_stops = np.where(absorbing, arrivals, 0.0)
    stopped = stopped + landing_stops
    live_next = np.where(absorbing, 0.0, arrivals)

    new = replace(
        state,
        t=t + 1,
        live=live_next,
        stopped=stopped,
        phi=phi_next,
        freeze_step=freeze_step,
        survival=survival,
    )
    stopped_now = float(stops_here.sum())  # mass with stopping time t
    return new, float(diffused.sum()), stopped_now, float(landing_stops.sum())


def step(state: SolverState) -> SolverState:
    """Pure one-step update (freeze decisions from the time-t snapshot,
    then diffusion)."""
    new, _, _, _ = _advance(state)
    total = new.total_mass()
    if abs(total - state.total_mass()) > LIVE_TOL:
        raise ConsistencyError("mass not conserved across a step")
    return new


def _coincidence_violation(state: SolverState, tol=1e-10):
    """Discrete coincidence check between zero-cost cells.

    For zero cells x < y, with A the occupation (live + stopped) and M the
    target, the interval masses must interlace:
    M[x,y] >= A[x,y] >= A[x+1,y-1] >= M[x+1,y-1].
    """
    z = np.nonzero(state.phi <= 0.0)[0]
    if z.size < 2:
        return None
    occ = state.live + state.stopped
    # D[j] = sum over cells i < j of (target - occupation)
    D = np.concatenate([[0.0], np.cumsum(state.target - occ)])
    at_x = D[z]  # D[x] per zero cell
    past_y = D[z + 1]  # D[y+1] per zero cell
    # M[x,y] >= A[x,y]  <=>  D[y+1] >= D[x] for all zero pairs x < y
    run_max = np.maximum.accumulate(at_x)
    if np.any(past_y[1:] < run_max[:-1] - tol):
        return "outer interval mass order violated"
    # A[x+1,y-1] >= M[x+1,y-1]  <=>  D[y] <= D[x+1]
    run_min = np.minimum.accumulate(past_y)
    if np.any(at_x[1:] > run_min[:-1] + tol):
        return "inner interval mass order violated"
    return None


@dataclass(frozen=True)
class TransportSolution:
    """Outcome of a terminated freeze/diffuse run (physical units)."""

    mesh_n: int
    offset: int
    freeze_step: np.ndarray  # per-cell freeze step (integer time units)
    survival: np.ndarray  # per-cell diffusing fraction at the freeze step
    stopped: LatticeMeasure  # final frozen mass, equals the target measure
    expected_time: float
    max_time: float
    steps: int
    step_log: tuple | None = None
    live_history: tuple | None = None

    @property
    def cells(self):
        return self.offset + np.arange(self.freeze_step.size)

    @property
    def positions(self):
        return self.cells / self.mesh_n

    @property
    def freeze_time(self):
        """Per-cell freeze time in physical units (step / n^2)."""
        return self.freeze_step / float(self.mesh_n**2)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("position,g_physical,q\n")
            for x, g, q in zip(self.positions, self.freeze_time,
                               self.survival):
                fh.write(f"{x:.17g},{g:.17g},{q:.17g}\n")


def solve(
    mu0n: LatticeMeasure,
    mu1n: LatticeMeasure,
    max_steps: int | None = None,
    check_invariants: bool = False,
    keep_live_history: bool = False,
    keep_step_log: bool = False,
) -> TransportSolution:
    """Run the freeze/diffuse iteration until all mass has stopped.

    Stops when the cost profile has vanished and the live mass is below
    1e-12; the frozen measure then equals the target cellwise.  Raises
    NonTerminationError with residual diagnostics if the step budget runs
    out first.
    """
    state = init_state(mu0n, mu1n)
    if max_steps is None:
        width = (state.live.size - 1) / state.mesh_n
        max_steps = int(50 * state.mesh_n**2 * max(width, 1.0) ** 2)

    total0 = state.total_mass()
    moves = []
    log = [] if keep_step_log else None
    live_history = [] if keep_live_history else None
    last_stop = 0
    prev_phi = state.phi

    while state.t <= max_steps:
        if keep_live_history:
            live_history.append(state.live.copy())
        live_total = float(state.live.sum())
        phi_max = float(state.phi.max())
        if live_total <= LIVE_TOL:
            if phi_max <= 1e-9:
                break
            raise ConsistencyError(
                f"live mass exhausted at step {state.t} with residual cost "
                f"{phi_max:.3e}"
            )
        if check_invariants:
            msg = _coincidence_violation(state)
            if msg is not None:
                raise ConsistencyError(
                    f"coincidence invariant failed at step {state.t}: {msg}"
                )
            if np.any(state.phi > prev_phi + 1e-15):
                raise ConsistencyError("cost increased across a step")
            prev_phi = state.phi
        new, diffused_sum, stopped_now, landed = _advance(state)
        if abs(new.total_mass() - total0) > 1e-12 * max(1.0, total0):
            raise ConsistencyError(
                f"mass drift beyond 1e-12 at step {state.t}"
            )
        moves.append(diffused_sum)
        if stopped_now > 0.0:
            last_stop = max(last_stop, state.t)
        if landed > 0.0:
            last_stop = max(last_stop, state.t + 1)
        if keep_step_log:
            # decided stops carry time t, landings on absorbing cells t + 1
            log.append((state.t, live_total, phi_max, stopped_now, landed))
        state = new
    else:
        raise NonTerminationError(
            f"no termination in {max_steps} steps; live mass "
            f"{float(state.live.sum()):.3e}, max cost "
            f"{float(state.phi.max()):.3e}"
        )

    residual = state.stopped - state.target
    worst = float(np.abs(residual).max())
    if worst > 1e-9:
        raise ConsistencyError(
            f"frozen mass differs from the target by {worst:.3e}"
        )

    n2 = float(state.mesh_n**2)
    freeze_step = state.freeze_step.copy()
    survival = state.survival.copy()
    never = freeze_step < 0  # cells no mass ever visited
    freeze_step[never] = 0
    survival[never] = 0.0

    return TransportSolution(
        mesh_n=state.mesh_n,
        offset=state.offset,
        freeze_step=freeze_step,
        survival=survival,
        stopped=LatticeMeasure(state.mesh_n, state.offset,
                               state.stopped.copy()),
        expected_time=math.fsum(moves) / n2,
        max_time=last_stop / n2,
        steps=state.t,
        step_log=tuple(log) if keep_step_log else None,
        live_history=tuple(live_history) if keep_live_history else None,
    )


def component_collapse_diagnostic(mu0n: LatticeMeasure, mu1n: LatticeMeasure,
                                  max_steps=100_000):
    """Empirical collapse ratios of the not-yet-frozen intervals.

    For every maximal run of positive-cost cells present at a step, the
    physical time until the whole run freezes is divided by the run's
    physical width.  The maximum ratio is a diagnostic constant; theory
    bounds it but assigns it no value.
    """
    state = init_state(mu0n, mu1n)
    masks = []
    while float(state.live.sum()) > LIVE_TOL and state.t <= max_steps:
        masks.append(state.phi > 0.0)
        state = step(state)
    masks.append(state.phi > 0.0)
    if not masks:
        return []
    alive = np.vstack(masks)
    # first step at which each cell's cost has vanished for good
    zero_from = np.where(
        alive.any(axis=0), alive.shape[0] - np.argmax(alive[::-1], axis=0),
        0,
    )
    n2 = float(mu0n.mesh_n**2)
    ratios = []
    for t, mask in enumerate(masks):
        runs = np.nonzero(np.diff(np.concatenate([[0], mask.view(np.int8),
                                                  [0]])))[0].reshape(-1, 2)
        for a, b in runs:
            width = (b - a) / mu0n.mesh_n
            vanish = int(zero_from[a:b].max())
            ratios.append(((vanish - t) / n2) / width)
    return ratios


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear function on a node grid with constant extensions."""

    xs: np.ndarray
    ys: np.ndarray
    left: float
    right: float

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=float), self.xs, self.ys,
                        left=self.left, right=self.right)
        return float(out) if np.ndim(x) == 0 else out


def extend_f(sol: TransportSolution, left=None, right=None) -> PiecewiseLinear:
    """Extend the per-cell freeze times to a piecewise-linear function.

    Node values are the physical freeze times g(k)/n^2; between nodes the
    function interpolates linearly, and outside the window it continues
    with the given constants (edge values by default).
    """
    ys = sol.freeze_time
    if np.any(sol.freeze_step < 0):
        raise ConsistencyError("freeze time undefined on part of the window")
    xs = sol.positions
    return PiecewiseLinear(
        xs=xs,
        ys=ys,
        left=float(ys[0]) if left is None else float(left),
        right=float(ys[-1]) if right is None else float(right),
    )
