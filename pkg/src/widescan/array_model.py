"""Finite-array physics: port waves, active reflection, far field and power bookkeeping.

Conventions
-----------
* Angles are degrees at every public boundary and radians internally.
* Incident waves ``w_plus`` are in square-root-watt units, so ``sum(|w_plus|**2)``
  is the input power in watts.
* The far-field kernel is ``exp(-j k0 r_n . r_hat)``; the linear-phase baseline
  uses the matching ``+k0 r_n . r_hat_q`` excitation phase.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CoverageError,
    DimensionError,
    SingularExcitationError,
    ZeroInputPowerError,
)

SPEED_OF_LIGHT = 299_792_458.0
FREE_SPACE_IMPEDANCE = 376.730


@dataclass(frozen=True)
class PhysicsConstants:
    free_space_impedance: float = FREE_SPACE_IMPEDANCE  # ohms
    speed_of_light: float = SPEED_OF_LIGHT  # m/s

    def __post_init__(self):
        if not (self.free_space_impedance > 0 and self.speed_of_light > 0):
            raise ValueError("physical constants must be strictly positive")


def direction_vector(theta_deg, phi_deg):
    """Unit vector(s) for spherical angles in degrees, shape ``(..., 3)``."""
    th = np.deg2rad(np.asarray(theta_deg, dtype=float))
    ph = np.deg2rad(np.asarray(phi_deg, dtype=float))
    st = np.sin(th)
    return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions (meters) and the single carrier frequency (hertz)."""

    positions: np.ndarray
    frequency: float
    constants: PhysicsConstants = field(default_factory=PhysicsConstants)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim == 1 and pos.size == 3:
            pos = pos[None, :]
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError(f"positions must be an (N, 3) array with N >= 1, got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("element positions must be finite")
        if not self.frequency > 0:
            raise ValueError("carrier frequency must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n_elements(self) -> int:
        return self.positions.shape[0]

    @property
    def wavelength(self) -> float:
        return self.constants.speed_of_light / self.frequency

    @property
    def k0(self) -> float:
        return 2 * np.pi * self.frequency / self.constants.speed_of_light

    @classmethod
    def linear(cls, n, spacing_wl, frequency, axis="y", constants=None):
        """Uniform linear array centred on the origin along ``axis``."""
        constants = constants or PhysicsConstants()
        lam = constants.speed_of_light / frequency
        pos = np.zeros((n, 3))
        pos[:, "xyz".index(axis)] = (np.arange(n) - (n - 1) / 2) * spacing_wl * lam
        return cls(pos, frequency, constants)

    @classmethod
    def planar(cls, nx, ny, dx_wl, dy_wl, frequency, constants=None):
        """Rectangular lattice in the xy-plane, x index varying fastest."""
        constants = constants or PhysicsConstants()
        lam = constants.speed_of_light / frequency
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
        pos = np.zeros((nx * ny, 3))
        pos[:, 0] = (ix.ravel() - (nx - 1) / 2) * dx_wl * lam
        pos[:, 1] = (iy.ravel() - (ny - 1) / 2) * dy_wl * lam
        return cls(pos, frequency, constants)


def _regular_axis(values, name):
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError(f"{name} grid needs at least two nodes")
    step = (values[-1] - values[0]) / (values.size - 1)
    if step <= 0 or not np.allclose(np.diff(values), step, rtol=0, atol=1e-9 * max(1.0, abs(step))):
        raise ValueError(f"{name} grid must be regular and increasing")
    return values, step


def canonical_angles(theta_deg, phi_deg):
    """Fold arbitrary (theta, phi) onto theta in [0, 180], phi in [0, 360).

    Negative or >180 polar angles (as used for signed scan cuts) are mapped to
    the equivalent direction on the other side of the pole.
    """
    th = np.mod(np.asarray(theta_deg, dtype=float), 360.0)
    ph = np.asarray(phi_deg, dtype=float)
    flip = th > 180.0
    th = np.where(flip, 360.0 - th, th)
    ph = np.mod(np.where(flip, ph + 180.0, ph), 360.0)
    return th, ph


class ElementPatternSet:
    """Tabulated embedded element patterns on a regular (theta, phi) grid.

    ``values`` has shape ``(N, n_theta, n_phi, 2)``; the last axis holds the
    theta-hat and phi-hat field components. Lookup is bilinear; the phi axis
    wraps around when the grid spans the full circle.
    """

    def __init__(self, thetas, phis, values):
        self.thetas, self.theta_step = _regular_axis(thetas, "theta")
        self.phis, self.phi_step = _regular_axis(phis, "phi")
        values = np.array(values, dtype=complex)
        if values.ndim != 4 or values.shape[1:] != (self.thetas.size, self.phis.size, 2):
            raise ValueError(
                f"pattern values must have shape (N, {self.thetas.size}, {self.phis.size}, 2), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("pattern values must be finite")
        if self.thetas[0] < -1e-9 or self.thetas[-1] > 180 + 1e-9:
            raise ValueError("theta grid must lie within [0, 180] degrees")
        span = self.phis[-1] + self.phi_step - self.phis[0]
        if span > 360 + 1e-9:
            raise ValueError("phi grid must not exceed one full turn")
        self.phi_periodic = abs(span - 360.0) < 1e-9
        self.values = values
        self.values.setflags(write=False)
        if self.phi_periodic:
            self._table = np.concatenate([values, values[:, :, :1, :]], axis=2)
        else:
            self._table = values

    @property
    def n_elements(self) -> int:
        return self.values.shape[0]

    def _axis_position(self, x, start, step, n_intervals):
        f = (x - start) / step
        near = np.rint(f)
        f = np.where(np.abs(f - near) < 1e-9, near, f)
        i = np.clip(np.floor(f).astype(int), 0, n_intervals - 1)
        return i, f - i

    def __call__(self, theta_deg, phi_deg):
        """Complex pattern values at the given directions, shape ``(..., N, 2)``."""
        th, ph = canonical_angles(theta_deg, phi_deg)
        tol = 1e-9
        if np.any(th < self.thetas[0] - tol) or np.any(th > self.thetas[-1] + tol):
            raise CoverageError(
                f"theta outside pattern coverage [{self.thetas[0]}, {self.thetas[-1]}] deg"
            )
        # phi relative to the first grid node, in [0, 360)
        rel = np.mod(ph - self.phis[0], 360.0)
        rel = np.where(rel > 360.0 - tol, 0.0, rel)
        if self.phi_periodic:
            n_phi_int = self.phis.size
        else:
            n_phi_int = self.phis.size - 1
            hi = self.phis[-1] - self.phis[0]
            if np.any(rel > hi + tol):
                raise CoverageError(
                    f"phi outside pattern coverage [{self.phis[0]}, {self.phis[-1]}] deg"
                )
        i, t = self._axis_position(th, self.thetas[0], self.theta_step, self.thetas.size - 1)
        k, u = self._axis_position(rel, 0.0, self.phi_step, n_phi_int)
        tab = self._table
        t = t[..., None, None]
        u = u[..., None, None]
        # tab[:, i, k] has shape (N, ..., 2); move the element axis next to components
        v00 = np.moveaxis(tab[:, i, k], 0, -2)
        v10 = np.moveaxis(tab[:, i + 1, k], 0, -2)
        v01 = np.moveaxis(tab[:, i, k + 1], 0, -2)
        v11 = np.moveaxis(tab[:, i + 1, k + 1], 0, -2)
        return (1 - t) * ((1 - u) * v00 + u * v01) + t * ((1 - u) * v10 + u * v11)


def check_scattering_matrix(S, n=None):
    """Validate a scattering matrix and return it as a complex array.

    Non-passive input (largest singular value above one) only triggers a
    warning: full-wave exports are routinely a hair over unity.
    """
    S = np.array(S, dtype=complex)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"scattering matrix must be square, got shape {S.shape}")
    if n is not None and S.shape[0] != n:
        raise DimensionError(f"scattering matrix is {S.shape[0]}-port but the array has {n} elements")
    if not np.all(np.isfinite(S)):
        raise ValueError("scattering matrix has non-finite entries")
    smax = np.linalg.norm(S, 2) if S.size else 0.0
    if smax > 1 + 1e-9:
        warnings.warn(f"scattering matrix is not passive (largest singular value {smax:.6g})", stacklevel=2)
    return S


@dataclass(frozen=True)
class ExcitationSet:
    """Incident waves for one scan direction."""

    w_plus: np.ndarray
    scan_index: int | None = None
    scan_direction: tuple[float, float] | None = None  # (theta, phi) degrees
    phase_only: bool = False

    def __post_init__(self):
        w = np.array(self.w_plus, dtype=complex).ravel()
        if self.phase_only and not np.allclose(np.abs(w), 1.0, rtol=0, atol=1e-12):
            raise ValueError("phase-only excitations must have unit magnitude")
        w.setflags(write=False)
        object.__setattr__(self, "w_plus", w)

    @property
    def magnitudes(self):
        return np.abs(self.w_plus)

    @property
    def phases_deg(self):
        return np.rad2deg(np.angle(self.w_plus))


def _weights(w_plus):
    if isinstance(w_plus, ExcitationSet):
        return w_plus.w_plus
    return np.asarray(w_plus, dtype=complex).ravel()


def _checked(S, w_plus):
    S = np.asarray(S, dtype=complex)
    w = _weights(w_plus)
    if S.ndim != 2 or S.shape != (w.size, w.size):
        raise DimensionError(f"scattering matrix {S.shape} does not match {w.size} excitations")
    return S, w


def reflected_excitations(S, w_plus):
    """Reflected waves ``w_minus = S @ w_plus``; defined even for zero incident entries."""
    S, w = _checked(S, w_plus)
    return S @ w


def active_reflection(S, w_plus, n=None):
    """Active reflection coefficient of element ``n`` (or all elements when ``n`` is None)."""
    S, w = _checked(S, w_plus)
    w_minus = S @ w
    if n is None:
        if np.any(w == 0):
            bad = int(np.flatnonzero(w == 0)[0])
            raise SingularExcitationError(f"element {bad} has zero incident wave")
        return w_minus / w
    if w[n] == 0:
        raise SingularExcitationError(f"element {n} has zero incident wave")
    return w_minus[n] / w[n]


def arl(S, w_plus):
    """Active return loss ``|Gamma_n|**2`` per element (linear scale)."""
    return np.abs(active_reflection(S, w_plus)) ** 2


def total_excitations(S, w_plus):
    """Total port excitation ``w_plus + S @ w_plus``."""
    S, w = _checked(S, w_plus)
    return w + S @ w


def input_power(w_plus):
    return float(np.sum(np.abs(_weights(w_plus)) ** 2))


def reflected_power(S, w_plus):
    return float(np.sum(np.abs(reflected_excitations(S, w_plus)) ** 2))


def reflected_power_fraction(S, w_plus):
    """Total reflected over total input power (``zeta``)."""
    p_in = input_power(w_plus)
    if p_in == 0:
        raise ZeroInputPowerError("input power is zero")
    return reflected_power(S, w_plus) / p_in


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10 * np.log10(x)


@dataclass(frozen=True)
class IsolationReport:
    self_reflection: np.ndarray  # |S_nn|^2, linear
    max_coupling: np.ndarray  # max_m!=n |S_nm|
    threshold_db: float

    @property
    def self_reflection_db(self):
        return to_db(self.self_reflection)

    @property
    def passes(self):
        return self.self_reflection_db <= self.threshold_db


def isolation_diagnostic(S, arl_threshold_db=-10.0):
    """Report ``|S_nn|^2`` against a return-loss threshold plus the strongest coupling per row.

    This mirrors the classic "isolate the elements" design rule and is
    purely informative; synthesis does not use it.
    """
    S = np.asarray(S, dtype=complex)
    off = np.abs(S).copy()
    np.fill_diagonal(off, 0.0)
    max_c = off.max(axis=1) if S.shape[0] > 1 else np.zeros(S.shape[0])
    return IsolationReport(np.abs(np.diag(S)) ** 2, max_c, float(arl_threshold_db))


@dataclass(frozen=True, eq=False)
class ArrayModel:
    """Immutable physics context: geometry, coupling and embedded patterns."""

    geometry: ArrayGeometry
    S: np.ndarray
    patterns: ElementPatternSet

    def __post_init__(self):
        S = check_scattering_matrix(self.S, self.geometry.n_elements)
        S.setflags(write=False)
        object.__setattr__(self, "S", S)
        if self.patterns.n_elements != self.geometry.n_elements:
            raise DimensionError(
                f"{self.patterns.n_elements} element patterns for {self.geometry.n_elements} elements"
            )

    @property
    def n_elements(self) -> int:
        return self.geometry.n_elements

    @property
    def density_constant(self) -> float:
        """``k0**2 / (8 pi**2 nu)``, the far-field to power-density factor."""
        k0 = self.geometry.k0
        return k0**2 / (8 * np.pi**2 * self.geometry.constants.free_space_impedance)

    def element_terms(self, theta_deg, phi_deg):
        """``exp(-j k0 r_n . r_hat) E_n`` for each direction, shape ``(..., N, 2)``."""
        r_hat = direction_vector(theta_deg, phi_deg)
        phase = np.exp(-1j * self.geometry.k0 * (r_hat @ self.geometry.positions.T))
        return phase[..., None] * self.patterns(theta_deg, phi_deg)

    def power_density(self, w_plus, theta_deg, phi_deg):
        return power_density(self, w_plus, theta_deg, phi_deg)


def power_density(model, w_plus, theta_deg, phi_deg):
    """Radiated power density (W/sr) towards (theta, phi); accepts array-valued angles.

    Coupling enters through the total excitations, and both polarisation
    components contribute to the squared modulus.
    """
    w = total_excitations(model.S, w_plus)
    terms = model.element_terms(theta_deg, phi_deg)
    field_sum = np.einsum("...nc,n->...c", terms, w)
    psi = model.density_constant * np.sum(np.abs(field_sum) ** 2, axis=-1)
    return psi if np.ndim(psi) else float(psi)


def sphere_quadrature(resolution_deg=1.0):
    """Nodes and weights for a trapezoidal (theta, phi) rule with sin(theta) weighting.

    Returns ``(thetas, phis, weights)`` with ``weights`` shaped ``(n_theta, n_phi)``
    and summing to ``4 pi`` up to the rule's truncation error.
    """
    if not 0 < resolution_deg <= 1.0:
        raise ValueError("quadrature resolution must be in (0, 1] degrees")
    n_theta = int(round(180.0 / resolution_deg)) + 1
    n_phi = int(round(360.0 / resolution_deg))
    thetas = np.linspace(0.0, 180.0, n_theta)
    phis = np.arange(n_phi) * (360.0 / n_phi)
    dth = np.pi / (n_theta - 1)
    dph = 2 * np.pi / n_phi
    wt = np.sin(np.deg2rad(thetas)) * dth
    wt[[0, -1]] *= 0.5
    return thetas, phis, np.outer(wt, np.full(n_phi, dph))


def total_radiated_power(model, w_plus, resolution_deg=1.0):
    """Total radiated power (W): trapezoidal integral of the power density over the sphere."""
    thetas, phis, weights = sphere_quadrature(resolution_deg)
    total = 0.0
    for i, th in enumerate(thetas):
        psi_row = power_density(model, w_plus, np.full(phis.size, th), phis)
        total += float(np.dot(psi_row, weights[i]))
    return total
