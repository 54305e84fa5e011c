"""File-to-concentration pipeline shared by the ``fit`` and ``batch`` commands."""

from __future__ import annotations

import csv
import io as _io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .analysis import DEFAULT_MU270_REL_ERR, ConcentrationEstimate, concentration, default_cross_section
from .errors import NsfitError
from .fitter import FitConfig, FitResult, fit
from .io import build_report, dump_report, emit_plot_data, parse_spectrum_file
from .model import ReferenceSpectrum, builtin_reference
from .spectrum import Convention, SampleMeta, Spectrum, to_absorption


@dataclass(frozen=True)
class Analysis:
    spectrum: Spectrum
    meta: SampleMeta
    reference: ReferenceSpectrum
    result: FitResult
    estimate: ConcentrationEstimate
    report: dict


def load_reference(path) -> ReferenceSpectrum:
    spec, _ = parse_spectrum_file(path)
    return ReferenceSpectrum(spec)


def prepare_absorption(
    spec: Spectrum, meta: SampleMeta, convention: Convention = Convention.DECADIC
) -> Spectrum:
    """Transmission is converted with ``convention``; absorption passes through."""
    if spec.quantity.is_transmission:
        return to_absorption(spec, meta, convention)
    return spec


def analyze(
    spec: Spectrum,
    meta: SampleMeta,
    reference: ReferenceSpectrum | None = None,
    config: FitConfig | None = None,
    convention: Convention = Convention.DECADIC,
    mu270_rel_err: float = DEFAULT_MU270_REL_ERR,
    source_path=None,
) -> Analysis:
    absorption = prepare_absorption(spec, meta, convention)
    if reference is None:
        reference = builtin_reference(convention=absorption.convention)
    result = fit(absorption, reference, config)
    estimate = concentration(
        result.mu270, mu270_rel_err, default_cross_section(result.convention), result.convention
    )
    report = build_report(meta, result, estimate, source_path, reference.origin.value)
    return Analysis(absorption, meta, reference, result, estimate, report)


def analyze_file(path, thickness_cm: float | None = None, **kwargs) -> Analysis:
    spec, meta = parse_spectrum_file(path)
    if thickness_cm is not None:
        meta = replace(meta, thickness_cm=thickness_cm)
    return analyze(spec, meta, source_path=path, **kwargs)


SUMMARY_COLUMNS = (
    "sample_id", "file", "status", "reliable", "mu270", "ppm", "ppm_uncertainty",
    "epr_ppm", "error",
)


@dataclass(frozen=True)
class BatchOutcome:
    path: Path
    analysis: Analysis | None
    error: str | None

    @property
    def sample_id(self) -> str:
        if self.analysis is not None:
            return self.analysis.meta.sample_id
        return self.path.stem

    def summary_row(self) -> dict:
        row = dict.fromkeys(SUMMARY_COLUMNS, "")
        row.update(sample_id=self.sample_id, file=self.path.name)
        if self.analysis is None:
            row.update(status="error", error=self.error)
            return row
        a = self.analysis
        row.update(
            status="ok" if a.result.converged else "not_converged",
            reliable=str(a.result.reliable).lower(),
            mu270=repr(a.result.mu270),
            ppm=repr(a.estimate.ppm),
            ppm_uncertainty=repr(a.estimate.ppm_uncertainty),
            epr_ppm="" if a.meta.epr_ppm is None else repr(a.meta.epr_ppm),
        )
        return row


def run_batch(
    paths,
    out_dir,
    jobs: int = 1,
    plot: bool = False,
    **kwargs,
) -> list[BatchOutcome]:
    """Analyse each file independently; failures are captured per file.

    Reports go to ``<out_dir>/<stem>.json``; outcomes are sorted by sample id
    so the summary does not depend on input order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = sorted(Path(p) for p in paths)

    def work(path: Path) -> BatchOutcome:
        try:
            a = analyze_file(path, **kwargs)
        except (NsfitError, OSError, ValueError) as exc:
            return BatchOutcome(path, None, f"{type(exc).__name__}: {exc}")
        dump_report(a.report, out_dir / f"{path.stem}.json")
        if plot:
            emit_plot_data(a.spectrum, a.result, a.reference, out_dir / f"{path.stem}_plot")
        return BatchOutcome(path, a, None)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, paths))
    else:
        outcomes = [work(p) for p in paths]
    outcomes.sort(key=lambda o: (o.sample_id, o.path.name))
    return outcomes


def summary_csv(outcomes) -> str:
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for o in outcomes:
        writer.writerow(o.summary_row())
    return buf.getvalue()
