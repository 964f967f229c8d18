"""Discretization of measures onto the grid (1/n)Z.

Masses are projected with the normalized hat kernel (1 - n|x - k/n|)+,
a partition of unity on the support, so total mass and mean carry over
from the continuous measure.  The discrete CDF primitive matches the
continuous one at the nodes.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

MASS_TOL = 1e-12


@dataclass(frozen=True)
class LatticeMeasure:
    """Nonnegative masses on cells offset, offset+1, ... of (1/mesh_n)Z."""

    mesh_n: int
    offset: int
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise PreconditionError("masses must be a nonempty 1-d array")
        if np.any(m < -MASS_TOL):
            raise PreconditionError("negative mass")
        m = np.maximum(m, 0.0)
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        if self.mesh_n < 1:
            raise PreconditionError("mesh_n must be >= 1")

    @property
    def cells(self):
        return self.offset + np.arange(self.masses.size)

    @property
    def positions(self):
        return self.cells / self.mesh_n

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def mean(self):
        return float(self.positions @ self.masses) / self.total_mass

    def variance(self):
        mu = self.mean()
        d = self.positions - mu
        return float((d * d) @ self.masses) / self.total_mass

    def support_cells(self):
        """(first, last) absolute cell index carrying positive mass."""
        nz = np.nonzero(self.masses)[0]
        if nz.size == 0:
            raise PreconditionError("measure has no mass")
        return self.offset + int(nz[0]), self.offset + int(nz[-1])

    def trimmed(self):
        """Drop zero-mass cells at both ends of the window."""
        lo, hi = self.support_cells()
        i, j = lo - self.offset, hi - self.offset
        return LatticeMeasure(self.mesh_n, lo, self.masses[i : j + 1].copy())

    def with_window(self, lo_cell, hi_cell):
        """Re-window onto [lo_cell, hi_cell], padding with zeros."""
        if lo_cell > self.offset or hi_cell < self.offset + self.masses.size - 1:
            raise PreconditionError("window does not cover the support")
        out = np.zeros(hi_cell - lo_cell + 1)
        i = self.offset - lo_cell
        out[i : i + self.masses.size] = self.masses
        return LatticeMeasure(self.mesh_n, lo_cell, out)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("cell_index,position,mass\n")
            for k, x, m in zip(self.cells, self.positions, self.masses):
                fh.write(f"{k},{x:.17g},{m:.17g}\n")

    @classmethod
    def from_csv(cls, path, mesh_n=None):
        cells, masses, mesh = [], [], mesh_n
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if header[:3] != ["cell_index", "position", "mass"]:
                raise PreconditionError(f"unexpected lattice CSV header {header}")
            for line in fh:
                if not line.strip():
                    continue
                k, x, m = line.strip().split(",")
                cells.append(int(k))
                masses.append(float(m))
                if mesh is None:
                    x = float(x)
                    if x != 0.0:
                        mesh = round(int(k) / x)
        if mesh is None:
            mesh = 1
        cells = np.asarray(cells)
        if np.any(np.diff(cells) != 1):
            raise PreconditionError("lattice CSV cells must be consecutive")
        return cls(int(mesh), int(cells[0]), np.asarray(masses, dtype=float))


def discretize(m, n):
    """Project a bounded-support measure onto (1/n)Z with hat weights.

    The mass at node k/n is the integral of (1 - n|x - k/n|)+ against the
    measure.  Hats form a partition of unity over the support, so the
    total mass is preserved, and they reproduce affine functions, so the
    mean is preserved as well.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    lo, hi = m.support
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise PreconditionError("unbounded support; truncate first")
    k_min = math.floor(lo * n)
    k_max = math.ceil(hi * n)
    # sub-segments: node grid refined by the measure's breakpoints
    nodes = np.arange(k_min, k_max + 1) / n
    cuts = np.unique(
        np.concatenate(
            [
                nodes,
                [b for b in m.breakpoints if lo < b < hi],
                [lo, hi],
            ]
        )
    )
    cuts = cuts[(cuts >= lo - 1e-15) & (cuts <= hi + 1e-15)]
    p, q = cuts[:-1], cuts[1:]
    keep = q > p
    p, q = p[keep], q[keep]
    m0, m1 = m.moments_batch(p, q)
    # each sub-segment lies in one inter-node span [j/n, (j+1)/n]
    j = np.floor(0.5 * (p + q) * n).astype(int)
    masses = np.zeros(k_max - k_min + 2)
    # node j takes weight 1 + j - n x, node j+1 takes weight 1 - j - ... + n x
    np.add.at(masses, j - k_min, (1.0 + j) * m0 - n * m1)
    np.add.at(masses, j + 1 - k_min, (-j) * m0 + n * m1)
    masses = masses[: k_max - k_min + 1]
    if np.any(masses < -1e-12):
        raise PreconditionError("hat projection produced negative mass")
    masses = np.maximum(masses, 0.0)
    return LatticeMeasure(n, k_min, masses).trimmed()


def phi_lattice(m, k):
    """Discrete CDF primitive at cell k, in physical units.

    Equals sum over cells j < k of ((k - j)/n) * mass_j, which is the
    continuous CDF primitive of the lattice measure evaluated at k/n.
    """
    k = np.asarray(k)
    cum0 = np.concatenate([[0.0], np.cumsum(m.masses)])
    cum1 = np.concatenate([[0.0], np.cumsum(m.cells * m.masses)])
    idx = np.clip(k - m.offset, 0, m.masses.size)
    below = cum0[idx]
    below_first = cum1[idx]
    out = (k * below - below_first) / m.mesh_n
    # cells above the window contribute linearly through total mass and mean
    return out if out.ndim else float(out)


def phi_cells(mu0n, mu1n):
    """Integer-unit cost profile of mu0n -> mu1n over the joint window."""
    if mu0n.mesh_n != mu1n.mesh_n:
        raise PreconditionError("mesh mismatch")
    lo = min(mu0n.offset, mu1n.offset)
    hi = max(
        mu0n.offset + mu0n.masses.size - 1, mu1n.offset + mu1n.masses.size - 1
    )
    cells = np.arange(lo, hi + 1)
    n = mu0n.mesh_n
    return cells, n * (phi_lattice(mu1n, cells) - phi_lattice(mu0n, cells))
