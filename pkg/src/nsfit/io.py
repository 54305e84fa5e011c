"""Spectrum files, JSON fit reports and plot-data export.

Spectrum files are UTF-8 text: ``# key: value`` header lines followed by
``wavelength_nm,value`` rows in ascending wavelength order::

    # sample_id: Cas-40
    # thickness: 300 um
    # quantity: transmission_percent
    # epr_ppm: 3.2
    200.0,12.5
    201.0,13.1
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ConcentrationEstimate
from .errors import BadNumeric, MalformedHeader, NonMonotonicWavelength
from .fitter import FitResult
from .model import ReferenceSpectrum, components
from .spectrum import Quantity, SampleMeta, Spectrum, crop

THICKNESS_UNITS_CM = {"um": 1e-4, "µm": 1e-4, "μm": 1e-4, "mm": 0.1, "cm": 1.0}

_THICKNESS_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Zµμ]+)\s*$")

PLOT_COLUMNS = (
    "wavelength_nm", "data", "total_fit", "g270", "g360", "g520",
    "ramp", "offset", "residual",
)


def parse_thickness(text: str) -> float:
    """``"300 um"`` -> 0.03 (cm). A unit suffix is mandatory."""
    m = _THICKNESS_RE.match(text)
    if not m:
        raise MalformedHeader(f"thickness needs a number and a unit (um, mm, cm), got {text!r}")
    number, unit = m.groups()
    if unit not in THICKNESS_UNITS_CM:
        raise MalformedHeader(f"unknown thickness unit {unit!r}; use um, mm or cm")
    try:
        value = float(number)
    except ValueError:
        raise MalformedHeader(f"bad thickness number {number!r}") from None
    if not value > 0 or not math.isfinite(value):
        raise MalformedHeader(f"thickness must be positive, got {text!r}")
    return value * THICKNESS_UNITS_CM[unit]


def format_thickness(thickness_cm: float) -> str:
    return f"{thickness_cm * 1e4!r} um"


def parse_spectrum_file(path) -> tuple[Spectrum, SampleMeta]:
    path = Path(path)
    header: dict[str, tuple[str, int]] = {}
    wavelengths: list[float] = []
    values: list[float] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if not body:
                    continue
                if wavelengths:
                    raise MalformedHeader("header line after data rows", lineno)
                key, sep, value = body.partition(":")
                if not sep:
                    raise MalformedHeader(f"expected 'key: value', got {body!r}", lineno)
                key = key.strip().lower()
                if key in header:
                    raise MalformedHeader(f"duplicate header key {key!r}", lineno)
                header[key] = (value.strip(), lineno)
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise BadNumeric(lineno, line)
            try:
                wl, val = float(parts[0]), float(parts[1])
            except ValueError:
                raise BadNumeric(lineno, line) from None
            if not (math.isfinite(wl) and math.isfinite(val)):
                raise BadNumeric(lineno, line)
            if wavelengths and wl <= wavelengths[-1]:
                raise NonMonotonicWavelength(lineno, wl, wavelengths[-1])
            wavelengths.append(wl)
            values.append(val)

    if "quantity" not in header:
        raise MalformedHeader(f"{path}: missing 'quantity' header")
    qtext, qline = header["quantity"]
    try:
        quantity = Quantity(qtext.lower())
    except ValueError:
        allowed = ", ".join(q.value for q in Quantity)
        raise MalformedHeader(f"unknown quantity {qtext!r}; expected one of {allowed}", qline) from None

    thickness = None
    if "thickness" in header:
        text, lineno = header["thickness"]
        try:
            thickness = parse_thickness(text)
        except MalformedHeader as exc:
            raise MalformedHeader(str(exc), lineno) from None
    epr = None
    if "epr_ppm" in header:
        text, lineno = header["epr_ppm"]
        try:
            epr = float(text)
        except ValueError:
            raise MalformedHeader(f"bad epr_ppm {text!r}", lineno) from None
    sample_id = header.get("sample_id", (path.stem, 0))[0]
    meta = SampleMeta(sample_id=sample_id, thickness_cm=thickness, epr_ppm=epr)
    if len(wavelengths) < 2:
        raise MalformedHeader(f"{path}: fewer than two data rows")
    return Spectrum(wavelengths, values, quantity), meta


def write_spectrum_file(path, spec: Spectrum, meta: SampleMeta | None = None) -> Path:
    """Write ``spec`` in the two-column format; floats round-trip exactly."""
    path = Path(path)
    lines = []
    if meta is not None:
        lines.append(f"# sample_id: {meta.sample_id}")
        if meta.thickness_cm is not None:
            lines.append(f"# thickness: {meta.thickness_cm!r} cm")
        if meta.epr_ppm is not None:
            lines.append(f"# epr_ppm: {meta.epr_ppm!r}")
    lines.append(f"# quantity: {spec.quantity.value}")
    for wl, val in zip(spec.wavelengths_nm.tolist(), spec.values.tolist()):
        lines.append(f"{wl!r},{val!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_report(
    meta: SampleMeta,
    result: FitResult,
    estimate: ConcentrationEstimate,
    source_path=None,
    reference_origin: str | None = None,
) -> dict:
    """Assemble the report as a plain dict in a fixed key order."""
    params = {}
    for name, value in result.params.as_dict().items():
        lo, hi = result.bounds[name]
        hit = next((side for n, side in result.boundary_hits if n == name), None)
        params[name] = {
            "value": value,
            "lower": lo if math.isfinite(lo) else None,
            "upper": hi if math.isfinite(hi) else None,
            "boundary_hit": hit,
        }
    cs = estimate.cross_section_used
    return {
        "tool": "nsfit",
        "tool_version": __version__,
        "input_file": str(source_path) if source_path is not None else None,
        "input_sha256": file_sha256(source_path) if source_path is not None else None,
        "sample": {
            "sample_id": meta.sample_id,
            "thickness_cm": meta.thickness_cm,
            "epr_ppm": meta.epr_ppm,
            "epr_rel_err": meta.epr_rel_err,
        },
        "fit": {
            "mode": "five" if result.params.five_component else "four",
            "window_nm": list(result.window),
            "n_points": result.n_points,
            "converged": result.converged,
            "iterations": result.iterations,
            "rss": result.rss,
            "rmse": result.rmse,
            "reliable": result.reliable,
            "boundary_hits": [list(h) for h in result.boundary_hits],
            "reference_origin": reference_origin,
            "parameters": params,
        },
        "mu270": result.mu270,
        "convention": result.convention.value,
        "cross_section": {
            "value": cs.value,
            "uncertainty": cs.uncertainty,
            "convention": cs.convention.value,
        },
        "concentration": {
            "ppm": estimate.ppm,
            "ppm_uncertainty": estimate.ppm_uncertainty,
        },
    }


def dump_report(report: dict, path=None) -> str:
    text = json.dumps(report, indent=2, allow_nan=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def plot_table(spec: Spectrum, result: FitResult, ref: ReferenceSpectrum) -> dict[str, np.ndarray]:
    windowed = crop(spec, *result.window)
    grid = windowed.wavelengths_nm
    parts = components(result.params, grid, ref)
    total = parts["g270"] + parts["g360"] + parts["g520"] + parts["ramp"] + parts["offset"]
    return {
        "wavelength_nm": grid,
        "data": windowed.values,
        "total_fit": total,
        **parts,
        "residual": windowed.values - total,
    }


def emit_plot_data(spec: Spectrum, result: FitResult, ref: ReferenceSpectrum, path_prefix) -> tuple[Path, Path]:
    """Write ``<prefix>.csv`` with every series and ``<prefix>.svg`` rendering them."""
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    table = plot_table(spec, result, ref)
    csv_path = prefix.with_name(prefix.name + ".csv")
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLOT_COLUMNS)
        for row in zip(*(table[c].tolist() for c in PLOT_COLUMNS)):
            writer.writerow([repr(v) for v in row])
    svg_path = prefix.with_name(prefix.name + ".svg")
    _render_svg(table, svg_path, result)
    return csv_path, svg_path


def _render_svg(table, path: Path, result: FitResult) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "nsfit", "svg.fonttype": "none"}):
        fig, (ax, axr) = plt.subplots(
            2, 1, sharex=True, figsize=(6.4, 5.6), gridspec_kw={"height_ratios": [3, 1]}
        )
        x = table["wavelength_nm"]
        ax.plot(x, table["data"], color="black", lw=1.2, label="data")
        ax.plot(x, table["total_fit"], color="tab:blue", lw=1.2, ls="--", label="fit")
        styles = {
            "g270": "tab:red", "g360": "tab:orange", "g520": "tab:green",
            "ramp": "tab:purple", "offset": "tab:gray",
        }
        for name, color in styles.items():
            if name == "g520" and not result.params.five_component:
                continue
            ax.plot(x, table[name], color=color, lw=1.0, label=name)
        ax.set_ylabel(f"absorption coefficient ({result.convention.value}, cm$^{{-1}}$)")
        ax.legend(fontsize=8)
        axr.plot(x, table["residual"], color="black", lw=0.8)
        axr.axhline(0.0, color="tab:gray", lw=0.6)
        axr.set_xlabel("wavelength (nm)")
        axr.set_ylabel("residual")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
