"""Per-scan-angle excitation synthesis, trade-off selection and field-of-view analysis.

For each scan direction the two minimised objectives are the reflected
power fraction and the inverse of the on-scan power density. The linear
phase (STD) solution is always evaluated first, injected into the MOEA as
a seed, and used to normalise the radiation objective for epsilon boxing.
"""

from __future__ import annotations

import concurrent.futures
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import moea
from .array_model import (
    ArrayModel,
    ExcitationSet,
    direction_vector,
    power_density,
    reflected_power_fraction,
    to_db,
)
from .baseline import ScanGrid, std_weights
from .errors import (
    ConfigError,
    EmptyArchiveError,
    SweepError,
    ZeroInputPowerError,
    ZeroPowerDensityError,
)

PHASE_ONLY = "phase-only"
MAGNITUDE_PHASE = "magnitude-phase"


@dataclass(frozen=True)
class FeasibilitySpec:
    """Admissible excitations: phase-only (unit magnitude) or magnitude-and-phase."""

    mode: str = PHASE_ONLY
    magnitude_bounds: tuple = (0.0, 1.0)
    phase_step_deg: float | None = None

    def __post_init__(self):
        if self.mode not in (PHASE_ONLY, MAGNITUDE_PHASE):
            raise ConfigError(f"unknown feasibility mode {self.mode!r}")
        lo, hi = self.magnitude_bounds
        if not 0 <= lo < hi:
            raise ConfigError("magnitude bounds must satisfy 0 <= lo < hi")
        if self.phase_step_deg is not None:
            step = float(self.phase_step_deg)
            levels = 360.0 / step if step > 0 else 0
            if step <= 0 or abs(levels - round(levels)) > 1e-9:
                raise ConfigError("phase quantisation step must divide 360 degrees")

    @property
    def phase_only(self) -> bool:
        return self.mode == PHASE_ONLY


def phi_refl(model: ArrayModel, w_plus) -> float:
    return reflected_power_fraction(model.S, w_plus)


def phi_rad(model: ArrayModel, w_plus, scan_direction) -> float:
    psi = power_density(model, w_plus, *scan_direction)
    if not psi > 0:
        raise ZeroPowerDensityError(f"no power radiated towards {tuple(scan_direction)}")
    return 1.0 / psi


class ExcitationProblem:
    """The two-objective excitation problem for one scan direction.

    The on-scan field is linear in the incident waves, so it is folded into
    one ``(N, 2)`` coefficient table at construction; each evaluation then
    costs two small matrix-vector products.
    """

    def __init__(self, model: ArrayModel, scan_direction, feasibility: FeasibilitySpec):
        self.model = model
        self.scan_direction = (float(scan_direction[0]), float(scan_direction[1]))
        self.feasibility = feasibility
        n = model.n_elements
        self.n_elements = n
        terms = model.element_terms(*self.scan_direction)  # (N, 2)
        coupling = np.eye(n) + model.S
        self._coeff = coupling.T @ terms
        self._K = model.density_constant
        self._S = model.S
        if feasibility.phase_only:
            self.lower = np.full(n, -np.pi)
            self.upper = np.full(n, np.pi)
            self.circular = np.ones(n, dtype=bool)
        else:
            lo, hi = feasibility.magnitude_bounds
            self.lower = np.concatenate([np.full(n, lo), np.full(n, -np.pi)])
            self.upper = np.concatenate([np.full(n, hi), np.full(n, np.pi)])
            self.circular = np.concatenate([np.zeros(n, bool), np.ones(n, bool)])
        step = feasibility.phase_step_deg
        self._phase_step = None if step is None else np.deg2rad(float(step))

    def decode(self, x):
        x = np.asarray(x, dtype=float)
        if self.feasibility.phase_only:
            return np.exp(1j * x)
        n = self.n_elements
        return x[:n] * np.exp(1j * x[n:])

    def encode(self, w_plus):
        w = np.asarray(getattr(w_plus, "w_plus", w_plus), dtype=complex)
        phases = moea.wrap_angle(np.angle(w))
        if self.feasibility.phase_only:
            x = phases
        else:
            lo, hi = self.feasibility.magnitude_bounds
            x = np.concatenate([np.clip(np.abs(w), lo, hi), phases])
        return self.repair(x)

    def repair(self, x):
        if self._phase_step is None:
            return x
        x = np.array(x, dtype=float)
        sl = slice(None) if self.feasibility.phase_only else slice(self.n_elements, None)
        x[sl] = moea.wrap_angle(np.round(x[sl] / self._phase_step) * self._phase_step)
        return x

    def excitation(self, x, scan_index=None):
        return ExcitationSet(
            self.decode(x),
            scan_index=scan_index,
            scan_direction=self.scan_direction,
            phase_only=self.feasibility.phase_only,
        )

    def objectives_of(self, w):
        p_in = float(np.sum(np.abs(w) ** 2))
        if p_in == 0:
            raise ZeroInputPowerError("candidate excitation has zero input power")
        refl = float(np.sum(np.abs(self._S @ w) ** 2)) / p_in
        fld = w @ self._coeff
        psi = self._K * float(np.sum(np.abs(fld) ** 2))
        if not psi > 0:
            raise ZeroPowerDensityError(f"no power radiated towards {self.scan_direction}")
        return refl, 1.0 / psi

    def evaluate(self, x):
        return self.objectives_of(self.decode(x))


@dataclass(eq=False)
class ScanSynthesis:
    archive: moea.ParetoArchive
    std: ExcitationSet
    std_objectives: tuple
    problem: ExcitationProblem


def synthesize_scan_angle(
    model,
    scan_direction,
    feasibility=FeasibilitySpec(),
    moea_config=None,
    eps=(5e-3, 2.5e-2),
    rng=None,
    extra_seeds=(),
    scan_index=None,
    tau=1e-3,
) -> ScanSynthesis:
    """Run the MOEA for one scan direction with the STD solution as a seed.

    The radiation objective is boxed relative to ``(1 + tau)`` times its STD
    value: ``eps[1]`` becomes a fractional tolerance independent of array
    size, and the upper edge of the box column holding the STD solution
    coincides with the match-std selection budget.
    """
    moea_config = moea_config or moea.MoeaConfig()
    problem = ExcitationProblem(model, scan_direction, feasibility)
    std = std_weights(model.geometry, scan_direction, scan_index=scan_index)
    std_f = (phi_refl(model, std), phi_rad(model, std, scan_direction))
    spec = moea.EpsilonSpec(tuple(eps), (1.0, std_f[1] * (1 + tau)))
    seeds = [problem.encode(std)] + [problem.repair(np.asarray(s, float)) for s in extra_seeds]
    archive = moea.run(problem, moea_config, spec, seeds, rng=rng)
    return ScanSynthesis(archive, std, std_f, problem)


@dataclass(frozen=True)
class Selection:
    index: int | None  # position in archive.members; None when falling back to STD
    objectives: tuple
    fallback: bool


def select_tradeoff(archive, std_objectives, criterion="match-std", tau=1e-3) -> Selection:
    """Pick one archive member.

    ``match-std``: lowest reflected fraction among members whose radiation
    objective is within ``(1 + tau)`` of the STD value; falls back to STD if
    no member qualifies or none improves on the STD reflected fraction.
    ``min-refl``: global minimum reflected fraction.
    ``knee``: largest distance to the chord joining the front's extremes,
    in min-max normalised objective space.
    """
    members = list(archive)
    if not members:
        raise EmptyArchiveError("cannot select from an empty archive")
    F = np.array([m.f for m in members], dtype=float)
    if criterion == "match-std":
        budget = std_objectives[1] * (1 + tau)
        ok = np.flatnonzero(F[:, 1] <= budget)
        if ok.size == 0:
            return Selection(None, tuple(std_objectives), True)
        order = np.lexsort((F[ok, 1], F[ok, 0]))
        best = int(ok[order[0]])
        if F[best, 0] > std_objectives[0]:
            return Selection(None, tuple(std_objectives), True)
        return Selection(best, tuple(F[best]), False)
    if criterion == "min-refl":
        best = int(np.lexsort((F[:, 1], F[:, 0]))[0])
        return Selection(best, tuple(F[best]), False)
    if criterion == "knee":
        lo, hi = F.min(axis=0), F.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        G = (F - lo) / span
        a, b = G[np.argmin(F[:, 0])], G[np.argmin(F[:, 1])]
        chord = b - a
        length = np.hypot(*chord)
        if length == 0:
            best = int(np.argmin(F[:, 0]))
        else:
            dist = np.abs(chord[0] * (G[:, 1] - a[1]) - chord[1] * (G[:, 0] - a[0])) / length
            best = int(np.argmax(dist))
        return Selection(best, tuple(F[best]), False)
    raise ConfigError(f"unknown selection criterion {criterion!r}")


# ---------------------------------------------------------------- field of view


@dataclass(frozen=True)
class FovSpec:
    zeta_th: float = 0.10
    psi_rule: str = "scan-loss"  # or "absolute"
    scan_loss_db: float = -6.0
    psi_th: float | None = None  # W/sr, used by the absolute rule

    def __post_init__(self):
        if not 0 < self.zeta_th <= 1:
            raise ConfigError("zeta threshold must lie in (0, 1]")
        if self.psi_rule not in ("scan-loss", "absolute"):
            raise ConfigError(f"unknown psi threshold rule {self.psi_rule!r}")
        if self.psi_rule == "scan-loss" and self.scan_loss_db > 0:
            raise ConfigError("scan loss must be <= 0 dB")
        if self.psi_rule == "absolute" and (self.psi_th is None or self.psi_th < 0):
            raise ConfigError("absolute rule needs a non-negative psi threshold")

    def psi_threshold(self, psi_boresight: float) -> float:
        if self.psi_rule == "absolute":
            return float(self.psi_th)
        return float(psi_boresight) * 10 ** (self.scan_loss_db / 10)


def feasibility_mask(psi, zeta, psi_th, zeta_th):
    return (np.asarray(psi) >= psi_th) & (np.asarray(zeta) <= zeta_th)


@dataclass(frozen=True, eq=False)
class FovRegion:
    mask: np.ndarray
    members: tuple  # sorted indices of the connected feasible region
    q_fov: int
    alpha: float
    boresight_feasible: bool


def fov_region(grid: ScanGrid, mask) -> FovRegion:
    """Connected component of feasible grid nodes that contains the boresight."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (grid.size,):
        raise ValueError(f"mask has shape {mask.shape}, grid has {grid.size} directions")
    q0 = grid.boresight
    if not mask[q0]:
        return FovRegion(mask, (), 0, 0.0, False)
    seen = {q0}
    todo = deque([q0])
    while todo:
        a = todo.popleft()
        for b in grid.neighbors[a]:
            if mask[b] and b not in seen:
                seen.add(b)
                todo.append(b)
    return FovRegion(mask, tuple(sorted(seen)), len(seen), len(seen) / grid.size, True)


def fov(grid: ScanGrid, psi, zeta, spec: FovSpec, psi_boresight=None) -> FovRegion:
    """Field of view of one method. ``psi_boresight`` defaults to ``psi`` at the boresight."""
    psi = np.asarray(psi, dtype=float)
    ref = psi[grid.boresight] if psi_boresight is None else psi_boresight
    return fov_region(grid, feasibility_mask(psi, zeta, spec.psi_threshold(ref), spec.zeta_th))


@dataclass(frozen=True, eq=False)
class FovReport:
    psi_th: float
    zeta_th: float
    std: FovRegion
    po: FovRegion
    delta_zeta: np.ndarray  # zeta_std - zeta_po per q
    delta_zeta_max: float  # over the PO field of view; nan if it is empty

    @property
    def delta_alpha(self) -> float:
        return self.po.alpha - self.std.alpha


def fov_report(grid, psi_std, zeta_std, psi_po, zeta_po, spec: FovSpec) -> FovReport:
    """Compare STD and synthesised excitations; both use the STD boresight threshold."""
    psi_std = np.asarray(psi_std, float)
    psi_th = spec.psi_threshold(psi_std[grid.boresight])
    std = fov_region(grid, feasibility_mask(psi_std, zeta_std, psi_th, spec.zeta_th))
    po = fov_region(grid, feasibility_mask(psi_po, zeta_po, psi_th, spec.zeta_th))
    dz = np.asarray(zeta_std, float) - np.asarray(zeta_po, float)
    dz_max = float(np.max(dz[list(po.members)])) if po.members else float("nan")
    return FovReport(psi_th, spec.zeta_th, std, po, dz, dz_max)


# ---------------------------------------------------------------- beam metrics


@dataclass(frozen=True, eq=False)
class EvalGrid:
    """Regular (theta, phi) evaluation grid for pattern metrics."""

    thetas: np.ndarray
    phis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "thetas", np.atleast_1d(np.asarray(self.thetas, float)))
        object.__setattr__(self, "phis", np.atleast_1d(np.asarray(self.phis, float)))

    @property
    def phi_periodic(self) -> bool:
        p = self.phis
        return p.size > 2 and abs(p[-1] - p[0] + (p[1] - p[0]) - 360.0) < 1e-9

    @classmethod
    def sphere(cls, resolution_deg=1.0):
        nt = int(round(180 / resolution_deg)) + 1
        npf = int(round(360 / resolution_deg))
        return cls(np.linspace(0, 180, nt), np.arange(npf) * (360.0 / npf))

    @classmethod
    def phi_cut(cls, theta=90.0, start=-90.0, stop=90.0, step=0.1):
        n = int(round((stop - start) / step)) + 1
        return cls([theta], start + step * np.arange(n))

    @classmethod
    def theta_cut(cls, phi=0.0, start=0.0, stop=90.0, step=0.1):
        n = int(round((stop - start) / step)) + 1
        return cls(start + step * np.arange(n), [phi])


@dataclass(frozen=True)
class BeamMetrics:
    sll_db: float  # -inf when no sidelobe exists on the grid
    gain_db: float
    scan_error_deg: float
    peak_direction: tuple
    psi_max: float


def main_lobe_mask(psi, phi_periodic=False, pole_rows=()):
    """Grid nodes reachable from the global peak along non-increasing paths.

    On a 1-D cut this stops at the first local minimum on either side of
    the peak; on a 2-D grid it does the same along every grid direction.
    """
    psi = np.asarray(psi, float)
    if psi.ndim == 1:
        psi = psi[None, :]
    slack = 1e-9 * psi.max()
    ml = np.zeros(psi.shape, bool)
    ml[np.unravel_index(np.argmax(psi), psi.shape)] = True
    while True:
        grown = ml.copy()
        # along theta (rows)
        grown[1:] |= ml[:-1] & (psi[1:] <= psi[:-1] + slack)
        grown[:-1] |= ml[1:] & (psi[:-1] <= psi[1:] + slack)
        # along phi (columns)
        if phi_periodic:
            for shift in (1, -1):
                src = np.roll(ml, shift, axis=1)
                val = np.roll(psi, shift, axis=1)
                grown |= src & (psi <= val + slack)
        else:
            grown[:, 1:] |= ml[:, :-1] & (psi[:, 1:] <= psi[:, :-1] + slack)
            grown[:, :-1] |= ml[:, 1:] & (psi[:, :-1] <= psi[:, 1:] + slack)
        for r in pole_rows:
            if grown[r].any():
                grown[r] = True
        if np.array_equal(grown, ml):
            return ml
        ml = grown


def _signed_scan_angle(r_hat, scan_direction, scan_axis):
    theta_q, phi_q = scan_direction
    if scan_axis == "phi":
        return float(np.rad2deg(np.arctan2(r_hat[1], r_hat[0])))
    ph = np.deg2rad(phi_q)
    horiz = r_hat[0] * np.cos(ph) + r_hat[1] * np.sin(ph)
    return float(np.rad2deg(np.arctan2(horiz, r_hat[2])))


def beam_metrics(model, w_plus, scan_direction, grid: EvalGrid | None = None, scan_axis="theta") -> BeamMetrics:
    """Sidelobe level, array gain and pointing error on an evaluation grid.

    ``scan_axis`` selects the coordinate in which the pointing error is
    measured: "phi" for azimuth cuts at fixed theta, "theta" for signed
    elevation in the plane of the commanded phi.
    """
    grid = grid or EvalGrid.sphere(1.0)
    tt, pp = np.meshgrid(grid.thetas, grid.phis, indexing="ij")
    psi = power_density(model, w_plus, tt, pp)
    w = np.asarray(getattr(w_plus, "w_plus", w_plus))
    p_in = float(np.sum(np.abs(w) ** 2))
    if p_in == 0:
        raise ZeroInputPowerError("input power is zero")
    pmax = float(psi.max())
    poles = [i for i, t in enumerate(grid.thetas) if abs(t) < 1e-9 or abs(t - 180) < 1e-9]
    ml = main_lobe_mask(psi, grid.phi_periodic, poles if grid.phis.size > 1 else ())
    side = psi[~ml]
    if side.size == 0 or pmax == 0:
        sll = float("-inf")
    else:
        sll = float(to_db(side.max() / pmax))
    i, k = np.unravel_index(np.argmax(psi), psi.shape)
    peak = (float(grid.thetas[i]), float(grid.phis[k]))
    if pmax == 0 or psi.min() >= pmax * (1 - 1e-12):
        err = 0.0  # flat pattern: no defined beam direction
    else:
        realised = _signed_scan_angle(direction_vector(*peak), scan_direction, scan_axis)
        commanded = scan_direction[1] if scan_axis == "phi" else scan_direction[0]
        err = float((commanded - realised + 180.0) % 360.0 - 180.0)
    gain = float(to_db(4 * np.pi * pmax / p_in))
    return BeamMetrics(sll, gain, err, peak, pmax)


# ---------------------------------------------------------------- sweep


@dataclass(eq=False)
class ScanResult:
    q: int
    direction: tuple
    std: ExcitationSet
    std_objectives: tuple
    selected: ExcitationSet
    selected_objectives: tuple
    fallback: bool
    archive: moea.ParetoArchive
    psi_std: float
    zeta_std: float
    psi_po: float
    zeta_po: float
    arl_std: np.ndarray
    arl_po: np.ndarray
    archive_excitations: np.ndarray  # (M, N) decoded w_plus, in archive.members order


@dataclass(eq=False)
class SweepResult:
    grid: ScanGrid
    scans: list  # ScanResult or None on failure, indexed by q
    fov: FovReport
    failures: dict = field(default_factory=dict)

    def raise_for_failures(self):
        if self.failures:
            raise SweepError(self.failures)
        return self

    def series(self, name):
        return np.array([getattr(s, name) if s is not None else np.nan for s in self.scans])


def _arl_or_nan(S, w):
    w = np.asarray(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        gam = (S @ w) / w
    return np.where(w == 0, np.nan, np.abs(gam) ** 2)


def std_point(model, direction):
    """(psi, zeta) of the STD excitation; NaN where the model cannot evaluate it."""
    w = std_weights(model.geometry, direction)
    try:
        return power_density(model, w, *direction), reflected_power_fraction(model.S, w)
    except (ArithmeticError, ValueError):
        return np.nan, np.nan


def scan_seed(master_seed, q):
    """Independent RNG stream for scan index ``q``; identical for any worker count."""
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(q),)))


def _run_one(args):
    model, grid_dirs, q, feasibility, cfg, eps, criterion, tau, extra = args
    direction = tuple(grid_dirs[q])
    syn = synthesize_scan_angle(
        model, direction, feasibility, cfg, eps, rng=scan_seed(cfg.seed, q), extra_seeds=extra, scan_index=q, tau=tau
    )
    sel = select_tradeoff(syn.archive, syn.std_objectives, criterion, tau)
    if sel.fallback:
        chosen = ExcitationSet(syn.std.w_plus, q, direction, phase_only=True)
    else:
        chosen = syn.problem.excitation(syn.archive.members[sel.index].x, scan_index=q)
    return ScanResult(
        q=q,
        direction=direction,
        std=syn.std,
        std_objectives=syn.std_objectives,
        selected=chosen,
        selected_objectives=sel.objectives,
        fallback=sel.fallback,
        archive=syn.archive,
        psi_std=power_density(model, syn.std, *direction),
        zeta_std=reflected_power_fraction(model.S, syn.std),
        psi_po=power_density(model, chosen, *direction),
        zeta_po=reflected_power_fraction(model.S, chosen),
        arl_std=_arl_or_nan(model.S, syn.std.w_plus),
        arl_po=_arl_or_nan(model.S, chosen.w_plus),
        archive_excitations=np.array([syn.problem.decode(m.x) for m in syn.archive.members]),
    )


def sweep(
    model,
    grid: ScanGrid,
    feasibility=FeasibilitySpec(),
    moea_config=None,
    eps=(5e-3, 2.5e-2),
    fov_spec=FovSpec(),
    criterion="match-std",
    tau=1e-3,
    workers=1,
    warm_start=False,
) -> SweepResult:
    """Synthesise every scan direction of ``grid`` and compare FoV against STD.

    Failed scan angles are recorded in ``failures`` and treated as
    infeasible for the synthesised method.
    """
    cfg = moea_config or moea.MoeaConfig()
    cfg.validate()
    dirs = grid.directions
    scans = [None] * grid.size
    failures = {}

    def job(q, extra=()):
        return (model, dirs, q, feasibility, cfg, tuple(eps), criterion, tau, extra)

    if warm_start:
        # sequential by construction: each scan angle is seeded with its predecessor's pick
        prev = None
        for q in range(grid.size):
            extra = ()
            if prev is not None and not prev.fallback:
                extra = (ExcitationProblem(model, dirs[q], feasibility).encode(prev.selected),)
            try:
                scans[q] = prev = _run_one(job(q, extra))
            except Exception as exc:  # noqa: BLE001 - aggregated and re-raised by the caller
                failures[q] = exc
                prev = None
    elif workers <= 1:
        for q in range(grid.size):
            try:
                scans[q] = _run_one(job(q))
            except Exception as exc:  # noqa: BLE001
                failures[q] = exc
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_one, job(q)): q for q in range(grid.size)}
            for fut in concurrent.futures.as_completed(futures):
                q = futures[fut]
                try:
                    scans[q] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    failures[q] = exc

    psi_std = np.empty(grid.size)
    zeta_std = np.empty(grid.size)
    for q in range(grid.size):
        if scans[q] is not None:
            psi_std[q], zeta_std[q] = scans[q].psi_std, scans[q].zeta_std
        else:
            psi_std[q], zeta_std[q] = std_point(model, dirs[q])
    psi_po = np.array([s.psi_po if s is not None else 0.0 for s in scans])
    zeta_po = np.array([s.zeta_po if s is not None else np.inf for s in scans])
    report = fov_report(grid, psi_std, zeta_std, psi_po, zeta_po, fov_spec)
    return SweepResult(grid, scans, report, failures)
