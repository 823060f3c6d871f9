import numpy as np
import pytest
from hypothesis import given, strategies as st

from widescan.array_model import ElementPatternSet, ArrayModel, power_density
from widescan.baseline import ScanGrid, std_weights
from widescan.errors import ConfigError, EmptyArchiveError, SweepError, ZeroPowerDensityError
from widescan.moea import EpsilonSpec, Individual, MoeaConfig, ParetoArchive
from widescan.synthesis import (
    EvalGrid,
    ExcitationProblem,
    FeasibilitySpec,
    FovSpec,
    beam_metrics,
    fov,
    fov_region,
    main_lobe_mask,
    phi_rad,
    phi_refl,
    select_tradeoff,
    sweep,
    synthesize_scan_angle,
)

from conftest import FIXTURE_COUPLING, make_model, random_unitary

S_SWAP = np.array([[0, 0.5], [0.5, 0]], complex)


# ---------------------------------------------------------------- objectives


def test_phi_refl_examples():
    rng = np.random.default_rng(5)
    m = make_model(3, coupling=random_unitary(3, rng))
    assert phi_refl(m, [1, 1j, -1]) == pytest.approx(1.0, abs=1e-12)
    assert phi_refl(make_model(3), [1, 1, 1]) == 0.0
    assert phi_refl(make_model(2, coupling=S_SWAP), [1, 1]) == pytest.approx(0.25)


def test_phi_rad_at_reported_density():
    # scale an excitation so that the on-scan density is 34.6 dBW/sr
    m = make_model(5, coupling=FIXTURE_COUPLING)
    w = std_weights(m.geometry, (90, 20)).w_plus
    psi0 = power_density(m, w, 90, 20)
    w = w * np.sqrt(10 ** 3.46 / psi0)
    value = phi_rad(m, w, (90, 20))
    assert value == pytest.approx(3.4674e-4, rel=1e-4)
    assert value == pytest.approx(3.43e-4, rel=1.2e-2)  # the published figure is rounded
    assert phi_rad(m, 2 * w, (90, 20)) == pytest.approx(value / 4, rel=1e-12)


def test_phi_rad_null_raises():
    m = make_model(2, 0.5)
    with pytest.raises(ZeroPowerDensityError):
        phi_rad(m, [1, -1], (90, 0))


def test_problem_objectives_match_reference_path():
    m = make_model(5, coupling=FIXTURE_COUPLING, kind="cosine")
    prob = ExcitationProblem(m, (90, 35), FeasibilitySpec())
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.uniform(-np.pi, np.pi, 5)
        w = prob.decode(x)
        f = prob.evaluate(x)
        assert f[0] == pytest.approx(phi_refl(m, w), rel=1e-12)
        assert f[1] == pytest.approx(phi_rad(m, w, (90, 35)), rel=1e-10)


def test_feasibility_spec():
    with pytest.raises(ConfigError):
        FeasibilitySpec(mode="amplitude")
    with pytest.raises(ConfigError):
        FeasibilitySpec(phase_step_deg=7.0)
    FeasibilitySpec(phase_step_deg=45.0)
    with pytest.raises(ConfigError):
        FeasibilitySpec(mode="magnitude-phase", magnitude_bounds=(1.0, 0.5))


def test_encode_decode_modes():
    m = make_model(3)
    po = ExcitationProblem(m, (90, 0), FeasibilitySpec())
    w = np.exp(1j * np.array([0.3, -2.0, 3.0]))
    assert np.allclose(po.decode(po.encode(w)), w)
    mp = ExcitationProblem(m, (90, 0), FeasibilitySpec("magnitude-phase", (0.0, 2.0)))
    w2 = np.array([0.5, 1.5j, -1.0])
    assert mp.lower.size == 6 and mp.circular.sum() == 3
    assert np.allclose(mp.decode(mp.encode(w2)), w2)
    q = ExcitationProblem(m, (90, 0), FeasibilitySpec(phase_step_deg=90.0))
    x = q.repair(np.array([0.1, 1.4, -3.0]))
    assert np.allclose(x, [0, np.pi / 2, -np.pi])


# ---------------------------------------------------------------- single-angle synthesis


def test_decoupled_po_selects_std():
    m = make_model(5)
    syn = synthesize_scan_angle(m, (90, 30), FeasibilitySpec(), MoeaConfig(20, 200, seed=1), rng=np.random.default_rng(1))
    sel = select_tradeoff(syn.archive, syn.std_objectives)
    assert sel.objectives[0] == 0.0
    assert sel.objectives[1] <= syn.std_objectives[1] * (1 + 1e-3)


def test_coupled_wide_angle_improves_reflection():
    m = make_model(5, coupling=FIXTURE_COUPLING)
    syn = synthesize_scan_angle(m, (90, 30), FeasibilitySpec(), MoeaConfig(50, 1000, seed=3), rng=np.random.default_rng(3))
    eps = syn.archive.eps
    std_box = eps.box(syn.std_objectives)
    F = syn.archive.objectives()
    better = [f for f in F if f[0] < syn.std_objectives[0] and eps.box(f)[1] <= std_box[1]]
    assert better
    sel = select_tradeoff(syn.archive, syn.std_objectives)
    assert not sel.fallback and sel.objectives[0] < syn.std_objectives[0]


# ---------------------------------------------------------------- selection


def _archive(points, eps=(0.005, 0.025), scale=(1.0, 3.43e-4)):
    a = ParetoArchive(EpsilonSpec(eps, scale))
    for i, f in enumerate(points):
        a.offer(Individual([i], f))
    return a


def test_match_std_example():
    pts = [(0.089, 3.43e-4), (0.30, 2.9e-4), (0.05, 6e-4)]
    a = _archive(pts)
    std = (0.246, 3.43e-4)
    sel = select_tradeoff(a, std, "match-std")
    assert sel.objectives == pytest.approx((0.089, 3.43e-4))
    assert select_tradeoff(a, std, "min-refl").objectives == pytest.approx((0.05, 6e-4))


def test_singleton_archive_any_criterion():
    a = _archive([(0.1, 3e-4)])
    for crit in ("match-std", "min-refl", "knee"):
        sel = select_tradeoff(a, (0.2, 3.43e-4), crit)
        assert sel.objectives == pytest.approx((0.1, 3e-4)) and not sel.fallback


def test_match_std_fallback_and_errors():
    a = _archive([(0.05, 6e-4)])
    sel = select_tradeoff(a, (0.2, 3.43e-4))
    assert sel.fallback and sel.index is None and sel.objectives == (0.2, 3.43e-4)
    with pytest.raises(EmptyArchiveError):
        select_tradeoff(ParetoArchive(EpsilonSpec()), (0.1, 1.0))
    with pytest.raises(ConfigError):
        select_tradeoff(a, (0.2, 3.43e-4), "best")


def test_knee_picks_the_bend():
    pts = [(0.0, 1.0), (0.1, 0.1), (1.0, 0.0), (0.5, 0.05)]
    a = _archive(pts, eps=(0.01, 0.01), scale=(1, 1))
    sel = select_tradeoff(a, (1, 1), "knee")
    assert sel.objectives == pytest.approx((0.1, 0.1))


# ---------------------------------------------------------------- field of view


def test_fov_all_true():
    g = ScanGrid.cut(-10, 10, 5)
    r = fov_region(g, np.ones(5, bool))
    assert r.alpha == 1.0


def test_fov_connected_component():
    g = ScanGrid(np.column_stack([np.full(5, 90.0), np.arange(5.0)]), 2, ((1,), (0, 2), (1, 3), (2, 4), (3,)))
    r = fov_region(g, [True, False, True, True, False])
    assert r.members == (2, 3) and r.alpha == pytest.approx(0.4)


def test_fov_symmetric_42_degree_interval():
    g = ScanGrid.cut(-90, 90, 2)
    phi = g.directions[:, 1]
    r = fov_region(g, np.abs(phi) <= 42)
    assert r.q_fov == 43
    assert r.alpha == pytest.approx(0.4725, abs=1e-4)


def test_fov_infeasible_boresight():
    g = ScanGrid.cut(-10, 10, 5)
    r = fov_region(g, [True, True, False, True, True])
    assert r.q_fov == 0 and r.alpha == 0 and not r.boresight_feasible


def test_fov_thresholds():
    g = ScanGrid.cut(-20, 20, 10)
    psi = np.array([0.2, 0.6, 1.0, 0.6, 0.2])
    zeta = np.array([0.01, 0.05, 0.01, 0.2, 0.01])
    r = fov(g, psi, zeta, FovSpec(zeta_th=0.1, scan_loss_db=-3.0))
    assert r.members == (1, 2)
    vac = fov(g, psi, zeta, FovSpec(zeta_th=1.0, psi_rule="absolute", psi_th=0.0))
    assert vac.alpha == 1.0
    with pytest.raises(ConfigError):
        FovSpec(zeta_th=0.0)
    with pytest.raises(ConfigError):
        FovSpec(scan_loss_db=3.0)


masks = st.lists(st.booleans(), min_size=3, max_size=25)


@given(masks, st.data())
def test_fov_monotone_under_flips(mask, data):
    g = ScanGrid.cut(0, len(mask) - 1, 1, boresight=len(mask) // 2)
    before = fov_region(g, mask)
    i = data.draw(st.integers(0, len(mask) - 1))
    flipped = list(mask)
    flipped[i] = True
    after = fov_region(g, flipped)
    assert set(before.members) <= set(after.members)


@given(masks)
def test_fov_depends_only_on_mask(mask):
    n = len(mask)
    g1 = ScanGrid.cut(0, n - 1, 1, boresight=n // 2)
    g2 = ScanGrid(g1.directions[:, ::-1] * 0.5, g1.boresight, g1.neighbors)
    assert fov_region(g1, mask).members == fov_region(g2, mask).members


@given(masks, st.integers(0, 10))
def test_tightening_zeta_never_grows_fov(mask, k):
    n = len(mask)
    g = ScanGrid.cut(0, n - 1, 1, boresight=n // 2)
    rng = np.random.default_rng(k)
    zeta = rng.uniform(0, 0.3, n)
    psi = np.ones(n)
    loose = fov(g, psi, zeta, FovSpec(zeta_th=0.2))
    tight = fov(g, psi, zeta, FovSpec(zeta_th=0.1))
    assert tight.q_fov <= loose.q_fov


# ---------------------------------------------------------------- beam metrics


def test_single_isotropic_metrics():
    m = make_model(1)
    bm = beam_metrics(m, [1.0], (90, 0), EvalGrid.sphere(5.0))
    assert bm.sll_db == float("-inf")
    assert bm.scan_error_deg == 0.0
    expected = 10 * np.log10(4 * np.pi * m.density_constant / 1.0)
    assert bm.gain_db == pytest.approx(expected, abs=1e-12)


def test_uniform_eight_element_sidelobe():
    m = make_model(8, 0.5)
    w = std_weights(m.geometry, (90, 0))
    bm = beam_metrics(m, w, (90, 0), EvalGrid.phi_cut(90, -90, 90, 0.1), scan_axis="phi")
    assert bm.sll_db == pytest.approx(-12.797515987506012, abs=5e-3)
    assert bm.scan_error_deg == pytest.approx(0.0, abs=1e-9)
    assert bm.sll_db <= 0


def test_scan_error_sign():
    m = make_model(8, 0.5)
    w = std_weights(m.geometry, (90, 30))
    bm = beam_metrics(m, w, (90, 31), EvalGrid.phi_cut(90, -90, 90, 0.1), scan_axis="phi")
    assert bm.scan_error_deg == pytest.approx(1.0, abs=0.11)


def test_main_lobe_covers_monotone_pattern():
    psi = np.array([0.1, 0.3, 0.7, 1.0, 0.8, 0.4, 0.2])
    assert main_lobe_mask(psi).all()
    psi2 = np.array([0.5, 0.1, 0.7, 1.0, 0.8, 0.4, 0.6])
    assert main_lobe_mask(psi2)[0].tolist() == [False, True, True, True, True, True, False]


# ---------------------------------------------------------------- sweep


def test_sweep_decoupled_matches_std():
    m = make_model(5)
    g = ScanGrid.cut(-60, 60, 20)
    res = sweep(m, g, moea_config=MoeaConfig(12, 150, seed=0)).raise_for_failures()
    assert res.fov.delta_alpha == 0
    assert np.allclose(res.fov.delta_zeta, 0)


def test_sweep_coupled_non_regression_and_worker_independence():
    m = make_model(5, coupling=FIXTURE_COUPLING)
    g = ScanGrid.cut(-60, 60, 15)
    cfg = MoeaConfig(20, 300, seed=5)
    a = sweep(m, g, moea_config=cfg, workers=1).raise_for_failures()
    b = sweep(m, g, moea_config=cfg, workers=2).raise_for_failures()
    assert a.fov.po.alpha >= a.fov.std.alpha
    tau = 1e-3
    for s in a.scans:
        assert s.zeta_po <= s.zeta_std * (1 + tau)
        assert s.psi_po >= s.psi_std * (1 - tau)
    for q in a.fov.po.members:
        assert a.fov.delta_zeta[q] >= -tau
    assert np.array_equal(a.series("zeta_po"), b.series("zeta_po"))
    assert np.array_equal(a.series("psi_po"), b.series("psi_po"))


def test_sweep_records_failures():
    base = make_model(3)
    th = np.linspace(0, 90, 19)
    ph = np.arange(72) * 5.0
    partial = ElementPatternSet(th, ph, np.ones((3, th.size, ph.size, 2)))
    m = ArrayModel(base.geometry, base.S, partial)
    g = ScanGrid.cut(60, 120, 30, axis="theta", fixed=0.0, boresight=60)
    res = sweep(m, g, moea_config=MoeaConfig(6, 10, seed=0))
    assert set(res.failures) == {2}  # theta = 120 lies outside the tabulated hemisphere
    with pytest.raises(SweepError, match="q=2"):
        res.raise_for_failures()
    assert res.scans[1] is not None and res.scans[2] is None
    assert not res.fov.std.mask[2] and not res.fov.po.mask[2]


def test_warm_start_runs_sequentially():
    m = make_model(5, coupling=FIXTURE_COUPLING)
    g = ScanGrid.cut(0, 40, 20)
    res = sweep(m, g, moea_config=MoeaConfig(10, 50, seed=1), warm_start=True).raise_for_failures()
    assert all(s is not None for s in res.scans)
