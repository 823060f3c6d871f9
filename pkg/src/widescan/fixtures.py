"""File formats and synthetic fixtures.

* Touchstone version 1 (``.sNp``), S-parameters only, RI/MA/DB number formats.
* A line-oriented pattern grid: ``N=``, ``THETA=start:step:stop`` and
  ``PHI=start:step:stop`` headers followed by CSV rows
  ``elem,theta,phi,reEt,imEt,reEp,imEp`` (elements numbered from 1).
* Exponential-decay coupling matrices and analytic element patterns for
  desk-scale experiments.

Documents keep the numbers exactly as written, so parse followed by emit
reproduces a canonical file byte for byte.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .array_model import ArrayGeometry, ElementPatternSet
from .errors import ConfigError, DimensionError, IngestError

FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
FORMATS = ("RI", "MA", "DB")


def _num(x) -> str:
    """Shortest repr that round-trips a float exactly."""
    x = float(x)
    if x == 0:
        x = 0.0  # drop the sign of negative zero
    return repr(x)


def _polar(mag, deg):
    """Polar to rectangular; exact on multiples of 90 degrees."""
    quarter = deg / 90.0
    if quarter == int(quarter):
        k = int(quarter) % 4
        return complex(*[(mag, 0.0), (0.0, mag), (-mag, 0.0), (0.0, -mag)][k])
    rad = math.radians(deg)
    return complex(mag * math.cos(rad), mag * math.sin(rad))


def _rect_to_pairs(S, fmt):
    S = np.asarray(S, dtype=complex)
    if fmt == "RI":
        return np.stack([S.real, S.imag], axis=-1)
    mag = np.abs(S)
    ang = np.degrees(np.angle(S))
    if fmt == "MA":
        return np.stack([mag, ang], axis=-1)
    with np.errstate(divide="ignore"):
        return np.stack([20 * np.log10(mag), ang], axis=-1)


def _pairs_to_rect(a, b, fmt):
    if fmt == "RI":
        return complex(a, b)
    mag = a if fmt == "MA" else 10 ** (a / 20)
    return _polar(mag, b)


@dataclass(eq=False)
class TouchstoneDocument:
    """Version-1 Touchstone S-parameter data with values stored as written.

    ``data`` has shape ``(F, N, N, 2)`` holding the two numbers of each entry
    in the document's own format; ``frequencies`` are in ``freq_unit``.
    """

    n_ports: int
    frequencies: np.ndarray
    data: np.ndarray
    fmt: str = "RI"
    freq_unit: str = "GHZ"
    z0: float = 50.0
    comments: list = field(default_factory=list)

    def __post_init__(self):
        self.fmt = self.fmt.upper()
        self.freq_unit = self.freq_unit.upper()
        if self.fmt not in FORMATS:
            raise IngestError(f"unsupported number format {self.fmt!r}")
        if self.freq_unit not in FREQ_UNITS:
            raise IngestError(f"unsupported frequency unit {self.freq_unit!r}")
        self.frequencies = np.asarray(self.frequencies, dtype=float).ravel()
        self.data = np.asarray(self.data, dtype=float)
        n = self.n_ports
        if self.frequencies.size < 1:
            raise IngestError("Touchstone document has no frequency points")
        if self.data.shape != (self.frequencies.size, n, n, 2):
            raise IngestError(f"data shape {self.data.shape} does not match {n} ports")

    @classmethod
    def from_matrices(cls, matrices, frequencies_hz, fmt="RI", freq_unit="GHZ", z0=50.0, comments=()):
        S = np.asarray(matrices, dtype=complex)
        if S.ndim == 2:
            S = S[None]
        f = np.atleast_1d(np.asarray(frequencies_hz, dtype=float)) / FREQ_UNITS[freq_unit.upper()]
        return cls(S.shape[1], f, _rect_to_pairs(S, fmt.upper()), fmt, freq_unit, z0, list(comments))

    @property
    def frequencies_hz(self):
        return self.frequencies * FREQ_UNITS[self.freq_unit]

    def matrices(self):
        """Complex S matrices, shape ``(F, N, N)``, in real/imaginary form."""
        F, n = self.frequencies.size, self.n_ports
        out = np.empty((F, n, n), dtype=complex)
        for f in range(F):
            for i in range(n):
                for j in range(n):
                    a, b = self.data[f, i, j]
                    out[f, i, j] = _pairs_to_rect(a, b, self.fmt)
        return out

    def matrix_at(self, frequency_hz=None):
        """S matrix at the point nearest ``frequency_hz`` (the only point if None)."""
        mats = self.matrices()
        if frequency_hz is None:
            if mats.shape[0] > 1:
                warnings.warn("multi-frequency file: using the first frequency point", stacklevel=2)
            return mats[0]
        fh = self.frequencies_hz
        k = int(np.argmin(np.abs(fh - frequency_hz)))
        if abs(fh[k] - frequency_hz) > 1e-3 * frequency_hz:
            warnings.warn(
                f"requested {frequency_hz:g} Hz, nearest Touchstone point is {fh[k]:g} Hz", stacklevel=2
            )
        return mats[k]


def _entry_order(n):
    """(row, col) order of entries in a data record; 2-ports use the legacy column order."""
    if n == 2:
        return [(0, 0), (1, 0), (0, 1), (1, 1)]
    return [(i, j) for i in range(n) for j in range(n)]


def _record_layout(n):
    """Number of value pairs on each physical line of one frequency record."""
    if n <= 2:
        return [n * n]
    layout = []
    for _ in range(n):
        remaining = n
        while remaining > 0:
            layout.append(min(4, remaining))
            remaining -= 4
    return layout


def parse_touchstone_document(text: str, n_ports: int) -> TouchstoneDocument:
    """Parse version-1 Touchstone text for an ``n_ports`` network."""
    fmt, unit, z0 = "MA", "GHZ", 50.0
    seen_option = False
    comments = []
    layout = _record_layout(n_ports)
    order = _entry_order(n_ports)
    freqs, records = [], []
    current, line_in_record = None, 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, _, comment = raw.partition("!")
        if comment and not body.strip():
            comments.append(comment.strip())
        body = body.strip()
        if not body:
            continue
        if body.startswith("#"):
            if seen_option:
                raise IngestError("second option line", lineno)
            seen_option = True
            toks = body[1:].upper().split()
            it = iter(range(len(toks)))
            for i in it:
                t = toks[i]
                if t in FREQ_UNITS:
                    unit = t
                elif t in FORMATS:
                    fmt = t
                elif t == "R":
                    try:
                        z0 = float(toks[i + 1])
                    except (IndexError, ValueError):
                        raise IngestError("option line: R needs a numeric impedance", lineno) from None
                    next(it, None)
                elif t != "S":
                    raise IngestError(f"option line: unsupported token {t!r}", lineno)
            continue
        if body.startswith("["):
            raise IngestError("Touchstone version 2 keywords are not supported", lineno)
        try:
            vals = [float(t) for t in body.split()]
        except ValueError:
            raise IngestError(f"non-numeric data: {body!r}", lineno) from None
        if current is None:
            freqs.append(vals[0])
            vals = vals[1:]
            current, line_in_record = [], 0
        expected = 2 * layout[line_in_record]
        if len(vals) != expected:
            raise IngestError(f"expected {expected} data values, found {len(vals)}", lineno)
        current.extend(vals)
        line_in_record += 1
        if line_in_record == len(layout):
            records.append(current)
            current = None
    if current is not None:
        raise IngestError("incomplete final frequency record", lineno)
    if not records:
        raise IngestError("no data records")
    data = np.empty((len(records), n_ports, n_ports, 2))
    for f, rec in enumerate(records):
        for k, (i, j) in enumerate(order):
            data[f, i, j] = rec[2 * k], rec[2 * k + 1]
    return TouchstoneDocument(n_ports, np.array(freqs), data, fmt, unit, z0, comments)


def parse_touchstone(text: str, n_ports: int, frequency_hz=None, expected_ports=None):
    """Scattering matrix (complex, N x N) at the requested frequency."""
    if expected_ports is not None and expected_ports != n_ports:
        raise DimensionError(f"Touchstone file has {n_ports} ports, geometry has {expected_ports} elements")
    return parse_touchstone_document(text, n_ports).matrix_at(frequency_hz)


def emit_touchstone(doc: TouchstoneDocument) -> str:
    lines = [f"! {c}" for c in doc.comments]
    lines.append(f"# {doc.freq_unit} S {doc.fmt} R {_num(doc.z0)}")
    order = _entry_order(doc.n_ports)
    layout = _record_layout(doc.n_ports)
    for f, freq in enumerate(doc.frequencies):
        nums = [_num(v) for (i, j) in order for v in doc.data[f, i, j]]
        pos = 0
        for k, count in enumerate(layout):
            chunk = nums[pos : pos + 2 * count]
            pos += 2 * count
            head = _num(freq) if k == 0 else ""
            lines.append(" ".join([head] + chunk) if k == 0 else "  " + " ".join(chunk))
    return "\n".join(lines) + "\n"


def read_touchstone(path, frequency_hz=None, expected_ports=None):
    """Load an ``.sNp`` file, taking the port count from the suffix."""
    from pathlib import Path

    path = Path(path)
    suffix = path.suffix.lower()
    if not (suffix.startswith(".s") and suffix.endswith("p") and suffix[2:-1].isdigit()):
        raise IngestError(f"cannot infer port count from file name {path.name!r}")
    return parse_touchstone(path.read_text(), int(suffix[2:-1]), frequency_hz, expected_ports)


# ---------------------------------------------------------------- pattern grids


def _axis_spec(value, lineno):
    try:
        start, step, stop = (float(v) for v in value.split(":"))
    except ValueError:
        raise IngestError(f"grid spec must be start:step:stop, got {value!r}", lineno) from None
    if step <= 0 or stop < start:
        raise IngestError(f"invalid grid spec {value!r}", lineno)
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def parse_pattern_grid(text: str) -> ElementPatternSet:
    header = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and "," not in line:
            key, _, value = line.partition("=")
            header[key.strip().upper()] = (value.strip(), lineno)
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise IngestError(f"expected 7 comma-separated fields, found {len(parts)}", lineno)
        try:
            rows.append((int(parts[0]), *(float(p) for p in parts[1:]), lineno))
        except ValueError:
            raise IngestError(f"non-numeric field in {line!r}", lineno) from None
    for key in ("N", "THETA", "PHI"):
        if key not in header:
            raise IngestError(f"missing header {key}=")
    try:
        n = int(header["N"][0])
    except ValueError:
        raise IngestError("N must be an integer", header["N"][1]) from None
    thetas = _axis_spec(*header["THETA"])
    phis = _axis_spec(*header["PHI"])
    tstep = thetas[1] - thetas[0] if thetas.size > 1 else 1.0
    pstep = phis[1] - phis[0] if phis.size > 1 else 1.0
    values = np.zeros((n, thetas.size, phis.size, 2), dtype=complex)
    filled = np.zeros((n, thetas.size, phis.size), dtype=bool)
    for elem, th, ph, ret, imt, rep, imp, lineno in rows:
        i = int(round((th - thetas[0]) / tstep))
        k = int(round((ph - phis[0]) / pstep))
        if not (1 <= elem <= n and 0 <= i < thetas.size and 0 <= k < phis.size) or (
            abs(thetas[i] - th) > 1e-6 or abs(phis[k] - ph) > 1e-6
        ):
            raise IngestError(f"node (elem={elem}, theta={th}, phi={ph}) is not on the declared grid", lineno)
        if filled[elem - 1, i, k]:
            raise IngestError(f"duplicate node (elem={elem}, theta={th}, phi={ph})", lineno)
        filled[elem - 1, i, k] = True
        values[elem - 1, i, k] = (complex(ret, imt), complex(rep, imp))
    if not filled.all():
        e, i, k = np.argwhere(~filled)[0]
        raise IngestError(f"grid hole: missing node (elem={e + 1}, theta={thetas[i]:g}, phi={phis[k]:g})")
    return ElementPatternSet(thetas, phis, values)


def _spec_line(name, axis, step):
    return f"{name}={_num(axis[0])}:{_num(step)}:{_num(axis[-1])}"


def emit_pattern_grid(patterns: ElementPatternSet) -> str:
    lines = [
        f"N={patterns.n_elements}",
        _spec_line("THETA", patterns.thetas, patterns.theta_step),
        _spec_line("PHI", patterns.phis, patterns.phi_step),
        "# elem,theta,phi,reEt,imEt,reEp,imEp",
    ]
    v = patterns.values
    for e in range(patterns.n_elements):
        for i, th in enumerate(patterns.thetas):
            for k, ph in enumerate(patterns.phis):
                et, ep = v[e, i, k]
                lines.append(
                    ",".join([str(e + 1), _num(th), _num(ph), _num(et.real), _num(et.imag), _num(ep.real), _num(ep.imag)])
                )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- synthetic fixtures


@dataclass(frozen=True)
class SyntheticCouplingSpec:
    """``S_nn = gamma``; ``S_nm = c0 exp(-d/rho) exp(-j v k0 d)`` with ``d = |r_n - r_m|``.

    ``phase_factor`` (``v``) is the ratio of the coupling wave's wavenumber to
    ``k0``; values above one model a slow (surface) wave.
    """

    gamma: complex = 0.1
    c0: float = 0.4
    rho: float = 0.07  # meters
    phase_factor: float = 1.0

    def __post_init__(self):
        if not 0 <= self.c0 < 1:
            raise ConfigError("coupling amplitude c0 must lie in [0, 1)")
        if not self.rho > 0:
            raise ConfigError("decay length rho must be positive")
        if not self.phase_factor > 0:
            raise ConfigError("phase velocity factor must be positive")


def synthetic_coupling(geometry: ArrayGeometry, spec: SyntheticCouplingSpec):
    pos = geometry.positions
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    S = spec.c0 * np.exp(-d / spec.rho) * np.exp(-1j * spec.phase_factor * geometry.k0 * d)
    np.fill_diagonal(S, complex(spec.gamma))
    norm = float(np.linalg.norm(S, 2))
    if not norm < 1:
        raise ConfigError(f"synthetic coupling is not passive: spectral norm {norm:.6g} >= 1")
    return S


def analytic_patterns(
    kind,
    geometry: ArrayGeometry,
    resolution_deg=1.0,
    exponent=1.0,
    broadside=(0.0, 0.0, 1.0),
):
    """Identical analytic patterns for every element on a full-sphere grid.

    ``isotropic``: ``E_theta = 1``. ``cosine``: ``E_theta = cos(a)**exponent``
    where ``a`` is the angle from the ``broadside`` unit vector, zero behind
    the element.
    """
    if exponent < 0:
        raise ConfigError("cosine exponent must be non-negative")
    nt = int(round(180 / resolution_deg)) + 1
    npf = int(round(360 / resolution_deg))
    thetas = np.linspace(0.0, 180.0, nt)
    phis = np.arange(npf) * (360.0 / npf)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    if kind == "isotropic":
        et = np.ones(tt.shape)
    elif kind == "cosine":
        from .array_model import direction_vector

        axis = np.asarray(broadside, dtype=float)
        axis = axis / np.linalg.norm(axis)
        c = np.clip(direction_vector(tt, pp) @ axis, 0.0, 1.0)
        et = c**exponent
        et[c <= 0] = 0.0
    else:
        raise ConfigError(f"unknown analytic pattern kind {kind!r}")
    values = np.zeros((geometry.n_elements, nt, npf, 2), dtype=complex)
    values[..., 0] = et
    return ElementPatternSet(thetas, phis, values)
