"""Touchstone v1 two-port files, plot CSV, and JSON matrix/report documents."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import __version__
from .errors import FormatError
from .matrix import SYMMETRY_TOL, CouplingMatrix, TopologyMask, default_labels
from .response import FrequencyPlan, SParamSweep, group_delay

UNIT_SCALE = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
UNIT_NAME = {"HZ": "Hz", "KHZ": "kHz", "MHZ": "MHz", "GHZ": "GHz"}
FORMATS = ("RI", "MA", "DB")
CSV_HEADER = ["freq_hz", "s11_db", "s21_db", "s11_deg", "s21_deg", "gd_s21_ns"]


@dataclass(frozen=True)
class TouchstoneOptions:
    freq_unit: str = "GHz"
    param: str = "S"
    format: str = "MA"
    z_ref: float = 50.0

    def __post_init__(self):
        unit = self.freq_unit.upper()
        if unit not in UNIT_SCALE:
            raise ValueError(f"unknown frequency unit {self.freq_unit!r}")
        if self.param.upper() != "S":
            raise ValueError(f"only S-parameters are supported, got {self.param!r}")
        if self.format.upper() not in FORMATS:
            raise ValueError(f"unknown data format {self.format!r}")
        object.__setattr__(self, "freq_unit", UNIT_NAME[unit])
        object.__setattr__(self, "param", "S")
        object.__setattr__(self, "format", self.format.upper())

    def option_line(self) -> str:
        return f"# {self.freq_unit} S {self.format} R {_num(self.z_ref)}"


def _num(x: float) -> str:
    return format(float(x), ".9g")


def _parse_options(tokens: list[str], line_no: int) -> TouchstoneOptions:
    unit, fmt, z = "GHZ", "MA", 50.0
    it = iter(range(len(tokens)))
    for i in it:
        t = tokens[i].upper()
        if t in UNIT_SCALE:
            unit = t
        elif t in FORMATS:
            fmt = t
        elif t == "S":
            pass
        elif t in ("Y", "Z", "H", "G"):
            raise FormatError(f"parameter type {tokens[i]!r} not supported (S only)", line_no)
        elif t == "R":
            if i + 1 >= len(tokens):
                raise FormatError("option 'R' needs a reference impedance", line_no)
            try:
                z = float(tokens[i + 1])
            except ValueError:
                raise FormatError(f"bad reference impedance {tokens[i + 1]!r}", line_no) from None
            if not z > 0:
                raise FormatError(f"reference impedance must be positive, got {z}", line_no)
            next(it, None)
        else:
            raise FormatError(f"unrecognized option token {tokens[i]!r}", line_no)
    return TouchstoneOptions(UNIT_NAME[unit], "S", fmt, z)


def _to_complex(a: np.ndarray, b: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
    return mag * np.exp(1j * np.deg2rad(b))


def _from_complex(s: np.ndarray, fmt: str) -> tuple[np.ndarray, np.ndarray]:
    if fmt == "RI":
        return s.real, s.imag
    ang = np.rad2deg(np.angle(s))
    mag = np.abs(s)
    if fmt == "MA":
        return mag, ang
    return 20.0 * np.log10(np.maximum(mag, 1e-300)), ang


def parse_touchstone(text: str) -> SParamSweep:
    """Parse a Touchstone v1 two-port file into a sweep (frequencies in Hz)."""
    opts: TouchstoneOptions | None = None
    freqs: list[float] = []
    rows: list[list[float]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            raise FormatError("Touchstone v2 keywords are not supported (v1 only)", line_no)
        if line.startswith("#"):
            if opts is not None:
                raise FormatError("more than one option line", line_no)
            if rows:
                raise FormatError("option line must precede the data", line_no)
            opts = _parse_options(line[1:].split(), line_no)
            continue
        fields = line.split()
        if len(fields) != 9:
            if len(fields) == 5 and rows:
                raise FormatError("noise parameter data is not supported", line_no)
            raise FormatError(f"expected 9 values for a two-port record, got {len(fields)}", line_no)
        try:
            vals = [float(x) for x in fields]
        except ValueError as exc:
            raise FormatError(f"non-numeric value: {exc}", line_no) from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError("non-finite value", line_no)
        scale = UNIT_SCALE[(opts or TouchstoneOptions("GHz")).freq_unit.upper()]
        f = vals[0] * scale
        if f <= 0:
            raise FormatError(f"frequency must be positive, got {vals[0]}", line_no)
        if freqs and f <= freqs[-1]:
            what = "duplicate" if f == freqs[-1] else "decreasing"
            raise FormatError(f"{what} frequency {vals[0]}", line_no)
        freqs.append(f)
        rows.append(vals[1:])
    opts = opts or TouchstoneOptions()
    d = np.array(rows, dtype=float).reshape(-1, 8)
    s = np.empty((d.shape[0], 2, 2), dtype=complex)
    s[:, 0, 0] = _to_complex(d[:, 0], d[:, 1], opts.format)
    s[:, 1, 0] = _to_complex(d[:, 2], d[:, 3], opts.format)
    s[:, 0, 1] = _to_complex(d[:, 4], d[:, 5], opts.format)
    s[:, 1, 1] = _to_complex(d[:, 6], d[:, 7], opts.format)
    return SParamSweep(np.array(freqs, dtype=float), s, opts.z_ref)


def write_touchstone(sweep: SParamSweep, opts: TouchstoneOptions | None = None) -> str:
    """Touchstone v1 text with 9 significant digits; pairs ordered S11, S21, S12, S22."""
    opts = opts or TouchstoneOptions()
    if opts.z_ref != sweep.z_ref:
        opts = TouchstoneOptions(opts.freq_unit, "S", opts.format, sweep.z_ref)
    scale = UNIT_SCALE[opts.freq_unit.upper()]
    lines = [f"! xcoupler {__version__}", opts.option_line()]
    cols = [sweep.freqs_hz / scale]
    for i, j in ((0, 0), (1, 0), (0, 1), (1, 1)):
        a, b = _from_complex(sweep.s[:, i, j], opts.format)
        cols += [a, b]
    for row in zip(*cols):
        lines.append(" ".join(_num(x) for x in row))
    return "\n".join(lines) + "\n"


# --- CSV -----------------------------------------------------------------------

def _dec(x: float) -> str:
    if not math.isfinite(x):
        return ""
    s = np.format_float_positional(x, precision=9, unique=False, fractional=False, trim="-")
    return "0" if s in ("-0", "0") else s


def write_csv(sweep: SParamSweep) -> str:
    """Plot data: dB magnitudes, phases in degrees, S21 group delay in ns."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    gd = group_delay(sweep, "S21") * 1e9 if len(sweep) >= 3 else np.full(len(sweep), np.nan)
    s11db, s11deg = _from_complex(sweep.s11, "DB")
    s21db, s21deg = _from_complex(sweep.s21, "DB")
    for row in zip(sweep.freqs_hz, s11db, s21db, s11deg, s21deg, gd):
        w.writerow([_dec(x) for x in row])
    return buf.getvalue()


def parse_csv(text: str) -> SParamSweep:
    """Read plot CSV back into a sweep; S12 = S21 and S22 = S11 are assumed."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty CSV document", 1) from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise FormatError(f"unexpected CSV header {header}", 1)
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise FormatError(f"expected {len(CSV_HEADER)} columns, got {len(row)}", line_no)
        try:
            rows.append([float(x) for x in row[:5]])
        except ValueError as exc:
            raise FormatError(f"non-numeric value: {exc}", line_no) from None
    d = np.array(rows, dtype=float).reshape(-1, 5)
    if d.shape[0] > 1 and np.any(np.diff(d[:, 0]) <= 0):
        raise FormatError("frequencies must be strictly increasing")
    s11 = _to_complex(d[:, 1], d[:, 3], "DB")
    s21 = _to_complex(d[:, 2], d[:, 4], "DB")
    return SParamSweep.from_params(d[:, 0], s11, s21)


# --- JSON documents -------------------------------------------------------------

def _plan_dict(plan: FrequencyPlan) -> dict:
    return {"f0_hz": plan.f0, "bw_hz": plan.bw}


def matrix_document(m: CouplingMatrix, plan: FrequencyPlan | None = None, **extra: Any) -> dict:
    v = 0.5 * (m.values + m.values.T)
    doc: dict[str, Any] = {
        "order": m.order,
        "labels": list(m.labels),
        "matrix": [[float(x) for x in row] for row in v],
    }
    if plan is not None:
        doc["plan"] = _plan_dict(plan)
    doc.update({k: val for k, val in extra.items() if val is not None})
    return doc


def write_matrix_json(m: CouplingMatrix, plan: FrequencyPlan | None = None, **extra: Any) -> str:
    return json.dumps(matrix_document(m, plan, **extra), indent=2) + "\n"


def _load_json(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(doc, dict):
        raise FormatError("expected a JSON object")
    return doc


def _read_plan(doc: dict) -> FrequencyPlan | None:
    plan = doc.get("plan")
    if plan is None:
        return None
    try:
        return FrequencyPlan(float(plan["f0_hz"]), float(plan["bw_hz"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid plan: {exc}") from None


def _square(doc: dict, key: str) -> tuple[list[list], int, tuple[str, ...]]:
    if key not in doc:
        raise FormatError(f"missing {key!r}")
    rows = doc[key]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise FormatError(f"{key!r} must be a list of rows")
    size = len(rows)
    if size < 3 or any(len(r) != size for r in rows):
        raise FormatError(f"{key!r} must be square with at least 3 rows")
    order = doc.get("order", size - 2)
    if order != size - 2:
        raise FormatError(f"order {order} does not match a {size}x{size} matrix")
    labels = doc.get("labels")
    if labels is None:
        labels = default_labels(order)
    if not isinstance(labels, (list, tuple)):
        raise FormatError("'labels' must be a list")
    if len(labels) != size:
        raise FormatError(f"{len(labels)} labels do not match matrix order {order}")
    return rows, order, tuple(str(x) for x in labels)


def read_matrix_json(text: str) -> tuple[CouplingMatrix, FrequencyPlan | None]:
    doc = _load_json(text)
    rows, order, labels = _square(doc, "matrix")
    try:
        v = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise FormatError("matrix entries must be numbers") from None
    if not np.all(np.isfinite(v)):
        raise FormatError("matrix entries must be finite")
    asym = np.abs(v - v.T)
    if asym.max() > SYMMETRY_TOL:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise FormatError(
            f"matrix is not symmetric at M[{labels[i]},{labels[j]}]={v[i, j]!r} "
            f"vs M[{labels[j]},{labels[i]}]={v[j, i]!r}"
        )
    try:
        m = CouplingMatrix(v, labels)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    return m, _read_plan(doc)


def read_mask_json(text: str) -> TopologyMask:
    """Mask document: ``{"order", "labels", "mask": [[bool]]}``.

    A coupling-matrix document is also accepted; its nonzero pattern is used.
    """
    doc = _load_json(text)
    if "mask" not in doc:
        m, _ = read_matrix_json(text)
        return TopologyMask.from_matrix(m)
    rows, _, _ = _square(doc, "mask")
    a = np.array(rows)
    if a.dtype != bool and not np.all(np.isin(a, (0, 1))):
        raise FormatError("mask entries must be booleans or 0/1")
    try:
        return TopologyMask(a.astype(bool))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def write_mask_json(mask: TopologyMask) -> str:
    doc = {
        "order": mask.order,
        "labels": list(default_labels(mask.order)),
        "mask": mask.allowed.tolist(),
    }
    return json.dumps(doc, indent=2) + "\n"


def report_json(report: Any) -> str:
    """JSON for a BandMetrics / ExtractionReport (absent fields omitted)."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def fit_document(result, plan: FrequencyPlan | None = None) -> dict:
    return matrix_document(result.matrix, plan, fit={
        "cost": result.cost,
        "iterations": result.iterations,
        "converged": result.converged,
        "seed": result.seed,
    })


def write_fit_json(result, plan: FrequencyPlan | None = None) -> str:
    return json.dumps(fit_document(result, plan), indent=2) + "\n"
