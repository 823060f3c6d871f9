"""Scan grids and the uniform-magnitude linear-phase (STD) excitation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import ArrayGeometry, ExcitationSet, direction_vector


@dataclass(frozen=True, eq=False)
class ScanGrid:
    """Ordered scan directions with a neighbour relation.

    ``directions`` is ``(Q, 2)`` in degrees as (theta, phi). ``neighbors[q]``
    lists the grid-adjacent indices of ``q``. ``scan_axis`` names the angle
    that varies along a 1-D cut ("theta" or "phi"); lattices use "theta".
    """

    directions: np.ndarray
    boresight: int
    neighbors: tuple
    kind: str = "cut"
    scan_axis: str = "phi"

    def __post_init__(self):
        d = np.array(self.directions, dtype=float).reshape(-1, 2)
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)
        q = d.shape[0]
        if q < 1:
            raise ValueError("scan grid must contain at least one direction")
        if not 0 <= self.boresight < q:
            raise ValueError(f"boresight index {self.boresight} outside [0, {q})")
        if len(self.neighbors) != q:
            raise ValueError("neighbour table does not match the number of directions")
        for a, nbrs in enumerate(self.neighbors):
            for b in nbrs:
                if a not in self.neighbors[b]:
                    raise ValueError(f"neighbour relation is not symmetric at ({a}, {b})")

    def __len__(self):
        return self.directions.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    def scan_values(self):
        """The varying scan coordinate per direction (degrees)."""
        col = 0 if self.scan_axis == "theta" else 1
        return self.directions[:, col]

    @classmethod
    def cut(cls, start, stop, step, axis="phi", fixed=90.0, boresight=0.0):
        """1-D cut: ``axis`` sweeps ``start..stop`` while the other angle is ``fixed``.

        ``boresight`` is the swept-angle value nearest the broadside direction.
        """
        n = int(round((stop - start) / step)) + 1
        values = start + step * np.arange(n)
        if axis == "phi":
            dirs = np.column_stack([np.full(n, fixed), values])
        elif axis == "theta":
            dirs = np.column_stack([values, np.full(n, fixed)])
        else:
            raise ValueError(f"unknown scan axis {axis!r}")
        nbrs = tuple(tuple(j for j in (i - 1, i + 1) if 0 <= j < n) for i in range(n))
        q0 = int(np.argmin(np.abs(values - boresight)))
        return cls(dirs, q0, nbrs, kind="cut", scan_axis=axis)

    @classmethod
    def lattice(cls, thetas, phis, boresight=(0.0, 0.0)):
        """2-D (theta, phi) lattice with 4-neighbour connectivity.

        Nodes pointing in the same physical direction (e.g. every node on a
        theta = 0 row) are also joined, and phi wraps when it spans 360 degrees.
        """
        thetas = np.asarray(thetas, dtype=float)
        phis = np.asarray(phis, dtype=float)
        nt, npf = thetas.size, phis.size
        tt, pp = np.meshgrid(thetas, phis, indexing="ij")
        dirs = np.column_stack([tt.ravel(), pp.ravel()])
        wrap = npf > 2 and abs((phis[-1] - phis[0]) + (phis[1] - phis[0]) - 360.0) < 1e-9

        def idx(i, k):
            return i * npf + k

        nbrs = [set() for _ in range(nt * npf)]
        for i in range(nt):
            for k in range(npf):
                a = idx(i, k)
                if i + 1 < nt:
                    nbrs[a].add(idx(i + 1, k))
                    nbrs[idx(i + 1, k)].add(a)
                if k + 1 < npf or wrap:
                    b = idx(i, (k + 1) % npf)
                    if b != a:
                        nbrs[a].add(b)
                        nbrs[b].add(a)
        vec = direction_vector(dirs[:, 0], dirs[:, 1])
        rounded = {}
        for a, v in enumerate(np.round(vec, 9)):
            rounded.setdefault(tuple(v + 0.0), []).append(a)
        for same in rounded.values():
            for a in same:
                nbrs[a].update(b for b in same if b != a)
        target = direction_vector(*boresight)
        q0 = int(np.argmax(vec @ target))
        return cls(dirs, q0, tuple(tuple(sorted(s)) for s in nbrs), kind="lattice", scan_axis="theta")


def std_weights(geometry: ArrayGeometry, scan_direction, scan_index=None) -> ExcitationSet:
    """Unit-magnitude excitations with phase ``+k0 r_n . r_hat_q``.

    The phases cancel the far-field propagation kernel along the scan
    direction so every element adds in phase there (coupling ignored).
    """
    theta, phi = scan_direction
    r_hat = direction_vector(theta, phi)
    phase = geometry.k0 * (geometry.positions @ r_hat)
    return ExcitationSet(
        np.exp(1j * phase),
        scan_index=scan_index,
        scan_direction=(float(theta), float(phi)),
        phase_only=True,
    )
