import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from widescan.array_model import ArrayGeometry
from widescan.errors import ConfigError, DimensionError, IngestError
from widescan.fixtures import (
    SyntheticCouplingSpec,
    TouchstoneDocument,
    analytic_patterns,
    emit_pattern_grid,
    emit_touchstone,
    parse_pattern_grid,
    parse_touchstone,
    parse_touchstone_document,
    read_touchstone,
    synthetic_coupling,
)

from conftest import FREQ

TWO_PORT_MA = """! hand-written two-port
# GHZ S MA R 50
2.0 0.1 0 0.5 90 0.5 90 0.1 0
"""


# ---------------------------------------------------------------- Touchstone


def test_ma_entry_is_exact():
    S = parse_touchstone(TWO_PORT_MA, 2)
    assert S[0, 1] == 0.5j
    assert S[1, 0] == 0.5j
    assert S[0, 0] == 0.1


def test_db_angle_entry():
    S = parse_touchstone("# HZ S DB R 50\n1e9 -6.0206 0\n", 1)
    assert S[0, 0] == pytest.approx(0.4999999950079739, rel=1e-12)
    assert S[0, 0].imag == 0


def test_two_port_uses_column_major_order():
    # legacy 2-port order is S11 S21 S12 S22
    S = parse_touchstone("# HZ S RI R 50\n1 1 0 2 0 3 0 4 0\n", 2)
    assert S.tolist() == [[1, 3], [2, 4]]


def test_missing_column_reports_line():
    with pytest.raises(IngestError, match="line 3"):
        parse_touchstone("! c\n# GHZ S RI R 50\n2.0 0.1 0 0.2\n", 1)


def test_bad_option_line_and_port_mismatch():
    with pytest.raises(IngestError):
        parse_touchstone("# GHZ Y RI R 50\n2 1 0\n", 1)
    with pytest.raises(DimensionError):
        parse_touchstone(TWO_PORT_MA, 2, expected_ports=5)


def test_nearest_frequency_warns():
    text = "# GHZ S RI R 50\n1.0 0.1 0\n2.0 0.2 0\n"
    assert parse_touchstone(text, 1, 2.0e9)[0, 0] == 0.2
    with pytest.warns(UserWarning):
        assert parse_touchstone(text, 1, 1.9e9)[0, 0] == 0.2


def test_read_touchstone_takes_ports_from_suffix(tmp_path):
    p = tmp_path / "pair.s2p"
    p.write_text(TWO_PORT_MA)
    assert read_touchstone(p).shape == (2, 2)
    q = tmp_path / "pair.txt"
    q.write_text(TWO_PORT_MA)
    with pytest.raises(IngestError):
        read_touchstone(q)


entries = st.floats(-1, 1, allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40)
@given(
    st.integers(1, 5),
    st.sampled_from(["RI", "MA", "DB"]),
    st.integers(1, 3),
    st.data(),
)
def test_touchstone_round_trip(n, fmt, nf, data):
    pairs = data.draw(arrays(float, (nf, n, n, 2), elements=entries))
    if fmt == "MA":
        pairs[..., 0] = np.abs(pairs[..., 0])
    freqs = np.arange(1, nf + 1) * 1.5
    doc = TouchstoneDocument(n, freqs, pairs, fmt, "GHZ", 50.0, ["synthetic"])
    text = emit_touchstone(doc)
    back = parse_touchstone_document(text, n)
    assert np.array_equal(back.data, doc.data)
    assert emit_touchstone(back) == text


def test_three_port_layout_is_row_major():
    S = np.arange(9).reshape(3, 3) + 0j
    doc = TouchstoneDocument.from_matrices(S, 1e9, "RI", "HZ")
    assert np.array_equal(parse_touchstone(emit_touchstone(doc), 3), S)


# ---------------------------------------------------------------- pattern grids


def _grid_text(rows, n=1, theta="0:90:180", phi="0:180:180"):
    return f"N={n}\nTHETA={theta}\nPHI={phi}\n" + "\n".join(rows) + "\n"


def _isotropic_rows(n=1):
    return [f"{e},{t},{p},1,0,0,0" for e in range(1, n + 1) for t in (0, 90, 180) for p in (0, 180)]


def test_isotropic_pattern_file():
    p = parse_pattern_grid(_grid_text(_isotropic_rows()))
    vals = p(np.array([10.0, 77.0, 170.0]), np.array([5.0, 100.0, 300.0]))
    assert np.allclose(vals[..., 0], 1) and np.allclose(vals[..., 1], 0)


def test_duplicate_node_rejected():
    rows = _isotropic_rows() + ["1,90,0,1,0,0,0"]
    with pytest.raises(IngestError, match="duplicate"):
        parse_pattern_grid(_grid_text(rows))


def test_grid_hole_reports_first_missing_node():
    rows = [r for r in _isotropic_rows() if r != "1,90,180,1,0,0,0"]
    with pytest.raises(IngestError, match=r"elem=1, theta=90, phi=180"):
        parse_pattern_grid(_grid_text(rows))


def test_off_grid_and_bad_rows():
    with pytest.raises(IngestError):
        parse_pattern_grid(_grid_text(_isotropic_rows() + ["1,45,0,1,0,0,0"]))
    with pytest.raises(IngestError, match="line 4"):
        parse_pattern_grid(_grid_text(["1,0,0,1,0,0"]))
    with pytest.raises(IngestError):
        parse_pattern_grid("THETA=0:90:180\nPHI=0:180:180\n")


def test_distinct_element_patterns_survive():
    rows = [f"1,{t},{p},1,0,0,0" for t in (0, 90, 180) for p in (0, 180)]
    rows += [f"2,{t},{p},0,0,0,2" for t in (0, 90, 180) for p in (0, 180)]
    p = parse_pattern_grid(_grid_text(rows, n=2))
    v = p(45.0, 90.0)
    assert v[0, 0] == 1 and v[1, 1] == 2j
    assert not np.allclose(v[0], v[1])


def test_pattern_round_trip_is_byte_stable():
    g = ArrayGeometry.linear(2, 0.5, FREQ)
    pats = analytic_patterns("cosine", g, 15.0, 1.5, (1, 0, 0))
    text = emit_pattern_grid(pats)
    back = parse_pattern_grid(text)
    assert np.array_equal(back.values, pats.values)
    assert emit_pattern_grid(back) == text


# ---------------------------------------------------------------- synthetic fixtures


def test_zero_coupling_is_diagonal():
    g = ArrayGeometry.linear(4, 0.5, FREQ)
    S = synthetic_coupling(g, SyntheticCouplingSpec(gamma=0.2 - 0.1j, c0=0.0))
    assert np.array_equal(S, (0.2 - 0.1j) * np.eye(4))


def test_coupling_at_decay_length():
    rho = 0.05
    g = ArrayGeometry(np.array([[0, 0, 0], [0, rho, 0]]), FREQ)
    S = synthetic_coupling(g, SyntheticCouplingSpec(gamma=0, c0=0.4, rho=rho))
    assert abs(S[0, 1]) == pytest.approx(0.147151776468576928, rel=1e-12)


def test_non_passive_rejected():
    g = ArrayGeometry.linear(5, 0.5, FREQ)
    with pytest.raises(ConfigError, match="1.5855"):
        synthetic_coupling(g, SyntheticCouplingSpec(gamma=0.9, c0=0.9, rho=0.07))


@given(
    st.integers(2, 8),
    st.floats(0, 0.3),
    st.floats(0.02, 0.3),
    st.floats(0.5, 3),
)
def test_coupling_symmetric_and_norm_checked(n, c0, rho, v):
    g = ArrayGeometry.linear(n, 0.5, FREQ)
    S = synthetic_coupling(g, SyntheticCouplingSpec(gamma=0.1, c0=c0, rho=rho, phase_factor=v))
    assert np.array_equal(S, S.T)
    sv = np.linalg.svd(S, compute_uv=False)
    assert sv.max() < 1
    # independent route: eigenvalues of S^H S
    assert np.sqrt(np.linalg.eigvalsh(S.conj().T @ S).max()) == pytest.approx(sv.max(), abs=1e-10)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SyntheticCouplingSpec(c0=1.0)
    with pytest.raises(ConfigError):
        SyntheticCouplingSpec(rho=0.0)


def test_analytic_pattern_values():
    g = ArrayGeometry.linear(3, 0.5, FREQ)
    iso = analytic_patterns("isotropic", g, 5.0)
    assert np.allclose(np.abs(iso.values[..., 0]), 1) and np.allclose(iso.values[..., 1], 0)
    cos1 = analytic_patterns("cosine", g, 5.0, 1.0, (0, 0, 1))
    assert cos1(0.0, 0.0)[0, 0] == pytest.approx(1.0)
    assert cos1(60.0, 0.0)[0, 0] == pytest.approx(0.5)
    assert cos1(120.0, 0.0)[0, 0] == 0
    cos2 = analytic_patterns("cosine", g, 5.0, 2.0, (0, 0, 1))
    assert cos2(45.0, 30.0)[0, 0] == pytest.approx(0.5)
    assert np.array_equal(cos2.values[0], cos2.values[2])
    with pytest.raises(ConfigError):
        analytic_patterns("cosine", g, 5.0, -1.0)
    with pytest.raises(ConfigError):
        analytic_patterns("dipole", g, 5.0)
