"""Command-line interface: ``nsfit <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 unreliable fit under
``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_MAX_ABSORBANCE,
    DEFAULT_MIN_ABSORBANCE,
    DEFAULT_MU270_REL_ERR,
    CalibrationModel,
    CrossSection,
    calibrate,
    concentration,
    default_cross_section,
    detectable_range,
)
from .errors import NsfitError
from .fitter import FitConfig, FitMode
from .io import dump_report, emit_plot_data, parse_spectrum_file, parse_thickness, write_spectrum_file
from .model import GaussianBand, ModelParams, builtin_reference
from .pipeline import analyze_file, load_reference, run_batch, summary_csv
from .spectrum import Convention, Quantity, SampleMeta, to_absorption, to_transmission
from .synth import SynthSpec, generate_absorption

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_UNRELIABLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi in nm, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"window needs lo < hi, got {text!r}")
    return lo, hi


def _thickness(text: str) -> float:
    try:
        return parse_thickness(text)
    except NsfitError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _band(text: str) -> GaussianBand:
    try:
        a, b, c = (float(x) for x in text.split(","))
        return GaussianBand(a, b, c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected amplitude,center,width, got {text!r}") from None


def _add_fit_options(p: argparse.ArgumentParser) -> None:
    ref = p.add_mutually_exclusive_group()
    ref.add_argument("--reference", type=Path, help="electronic-grade reference absorption file")
    ref.add_argument("--builtin-ref", action="store_true",
                     help="use the parametric reference edge (default)")
    p.add_argument("--convention", choices=[c.value for c in Convention], default="decadic",
                   help="logarithm used when converting transmission input")
    p.add_argument("--thickness", type=_thickness, help="override header thickness, e.g. '300 um'")
    p.add_argument("--four-component", action="store_true", help="drop the 520 nm band")
    p.add_argument("--cutoff-650", action="store_true", help="fit only up to 650 nm")
    p.add_argument("--window", type=_window, default=(200.0, 800.0), metavar="LO:HI")
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--mu270-rel-err", type=float, default=DEFAULT_MU270_REL_ERR)
    p.add_argument("--strict", action="store_true", help="exit 3 when a fit is unreliable")


def _fit_kwargs(args) -> dict:
    config = FitConfig(
        mode=FitMode.FOUR_COMPONENT if args.four_component else FitMode.FIVE_COMPONENT,
        fit_window_nm=args.window,
        cutoff_650=args.cutoff_650,
        max_iterations=args.max_iterations,
    )
    reference = load_reference(args.reference) if args.reference else None
    return dict(
        reference=reference,
        config=config,
        convention=Convention(args.convention),
        mu270_rel_err=args.mu270_rel_err,
        thickness_cm=args.thickness,
    )


def _print_estimate(label: str, est, out) -> None:
    cs = est.cross_section_used
    print(
        f"{label}mu270 = {est.mu270:.4g} cm^-1 ({cs.convention.value}) -> "
        f"[N_s0] = {est.ppm:.3g} ± {est.ppm_uncertainty:.2g} ppm "
        f"(sigma = {cs.value} ± {cs.uncertainty} cm^-1/ppm)",
        file=out,
    )


def cmd_convert(args, out) -> int:
    spec, meta = parse_spectrum_file(args.input)
    if args.thickness is not None:
        meta = replace(meta, thickness_cm=args.thickness)
    absorption = to_absorption(spec, meta, Convention(args.convention))
    target = args.output or args.input.with_name(args.input.stem + "_absorption.csv")
    write_spectrum_file(target, absorption, meta)
    print(f"wrote {target}", file=out)
    return EXIT_OK


def cmd_fit(args, out) -> int:
    a = analyze_file(args.input, **_fit_kwargs(args))
    r = a.result
    print(f"sample {a.meta.sample_id}: converged={r.converged} reliable={r.reliable} "
          f"rmse={r.rmse:.3g} iterations={r.iterations}", file=out)
    for name, side in r.boundary_hits:
        print(f"  boundary hit: {name} at {side} bound", file=out)
    _print_estimate("  ", a.estimate, out)
    if args.report:
        dump_report(a.report, args.report)
        print(f"  report: {args.report}", file=out)
    if args.plot:
        csv_path, svg_path = emit_plot_data(a.spectrum, r, a.reference, args.plot)
        print(f"  plot data: {csv_path}, {svg_path}", file=out)
    if args.strict and not r.reliable:
        return EXIT_UNRELIABLE
    return EXIT_OK


def cmd_conc(args, out) -> int:
    convention = Convention(args.convention)
    cs = default_cross_section(convention)
    if args.sigma is not None:
        cs = CrossSection(args.sigma, args.sigma_err if args.sigma_err is not None else 0.0, convention)
    est = concentration(args.mu270, args.rel_err, cs, convention)
    if args.json:
        json.dump({"mu270": est.mu270, "ppm": est.ppm, "ppm_uncertainty": est.ppm_uncertainty,
                   "convention": convention.value, "sigma": cs.value,
                   "sigma_uncertainty": cs.uncertainty}, out, indent=2)
        print(file=out)
    else:
        _print_estimate("", est, out)
    return EXIT_OK


def read_pairs(path) -> list[tuple[float, float]]:
    """Rows of ``ppm,mu270``; a non-numeric first row is taken as a header."""
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [c.strip() for c in row]
            if not row or not any(row) or row[0].startswith("#"):
                continue
            try:
                values = [float(c) for c in row if c]
            except ValueError:
                if lineno == 1 or not pairs:
                    continue
                raise NsfitError(f"line {lineno}: bad numeric row {row!r}") from None
            if len(values) < 2:
                raise NsfitError(f"line {lineno}: expected ppm,mu270, got {row!r}")
            pairs.append((values[-2], values[-1]))
    return pairs


def cmd_calibrate(args, out) -> int:
    model = CalibrationModel.WITH_INTERCEPT if args.with_intercept else CalibrationModel.THROUGH_ORIGIN
    res = calibrate(read_pairs(args.input), model)
    if args.json:
        json.dump({
            "model": res.model.value, "n_points": res.n_points, "slope": res.slope,
            "slope_ci95_half_width": res.slope_ci95_half_width if res.ci_defined else None,
            "intercept": res.intercept, "residuals": list(res.residuals),
        }, out, indent=2)
        print(file=out)
        return EXIT_OK
    ci = f"{res.slope_ci95_half_width:.3f}" if res.ci_defined else "undefined (no residual dof)"
    print(f"model: {res.model.value}, n = {res.n_points}", file=out)
    print(f"slope = {res.slope:.4f} ± {ci} cm^-1/ppm (95% CI)", file=out)
    if res.intercept is not None:
        print(f"intercept = {res.intercept:.4f} cm^-1", file=out)
    return EXIT_OK


_SYNTH_DEFAULTS = {
    "a270": 10.0, "b270": 270.0, "c270": 20.0,
    "a360": 3.0, "b360": 360.0, "c360": 40.0,
    "a520": 1.0, "b520": 520.0, "c520": 45.0,
    "R": 1.6e7, "ref_weight": 1.0,
}


def cmd_synth(args, out) -> int:
    values = dict(_SYNTH_DEFAULTS)
    extra = list(args.extra_band or [])
    if args.config:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        values.update({k: float(v) for k, v in cfg.get("truth", cfg).items() if k in values})
        extra += [GaussianBand(*b) for b in cfg.get("extra_bands", [])]
    for name in values:
        flag = getattr(args, f"p_{name}")
        if flag is not None:
            values[name] = flag
    truth = ModelParams.from_dict(values, five_component=not args.four_component)
    lo, hi, step = args.grid
    grid = np.arange(lo, hi + step / 2, step)
    quantity = Quantity(args.quantity)
    convention = Convention(args.convention)
    if quantity.convention is not None:
        convention = quantity.convention
    s = SynthSpec(truth, builtin_reference(convention=convention), grid, args.noise, args.seed, tuple(extra))
    spec = generate_absorption(s)
    meta = SampleMeta(args.sample_id, thickness_cm=args.thickness, epr_ppm=args.epr_ppm)
    if quantity.is_transmission:
        if args.thickness is None:
            raise UsageError("--thickness is required for transmission output")
        if spec.values.min() < 0:
            # noise is added to the absorption, so a weakly absorbing region
            # can go negative and would map to T > 1
            raise UsageError(
                "noisy absorption dips below zero, which gives T > 1; "
                "write an absorption quantity or lower --noise"
            )
        spec = to_transmission(spec, args.thickness)
        if quantity is Quantity.TRANSMISSION_PERCENT:
            spec = spec.with_values(spec.values * 100.0, quantity)
    write_spectrum_file(args.output, spec, meta)
    print(f"wrote {args.output}", file=out)
    return EXIT_OK


def cmd_range(args, out) -> int:
    convention = Convention(args.convention)
    lo, hi = detectable_range(args.thickness, args.a_noise, args.a_max, default_cross_section(convention))
    print(f"detectable range for {args.thickness * 1e4:g} um: {lo:.3g} ppm to {hi:.3g} ppm", file=out)
    return EXIT_OK


def cmd_batch(args, out) -> int:
    files = sorted(p for p in Path(args.directory).glob(args.pattern) if p.is_file())
    if not files:
        raise UsageError(f"no files matching {args.pattern!r} in {args.directory}")
    out_dir = args.out_dir or Path(args.directory) / "nsfit_reports"
    outcomes = run_batch(files, out_dir, jobs=args.jobs, plot=args.plot, **_fit_kwargs(args))
    table = summary_csv(outcomes)
    (Path(out_dir) / "summary.csv").write_text(table, encoding="utf-8")
    out.write(table)
    failed = [o for o in outcomes if o.analysis is None]
    for o in failed:
        print(f"{o.path}: {o.error}", file=sys.stderr)
    if len(failed) == len(outcomes):
        return EXIT_DATA
    if args.strict and any(not o.analysis.result.reliable for o in outcomes if o.analysis):
        return EXIT_UNRELIABLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nsfit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nsfit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="transmission file -> absorption file")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--convention", choices=[c.value for c in Convention], default="decadic")
    p.add_argument("--thickness", type=_thickness)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("fit", help="decompose one spectrum and report N_s0")
    p.add_argument("input", type=Path)
    _add_fit_options(p)
    p.add_argument("--report", type=Path, help="write the JSON report here")
    p.add_argument("--plot", type=Path, metavar="PREFIX", help="write PREFIX.csv and PREFIX.svg")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("conc", help="concentration from a band height")
    p.add_argument("--mu270", type=float, required=True)
    p.add_argument("--convention", choices=[c.value for c in Convention], default="decadic")
    p.add_argument("--rel-err", type=float, default=DEFAULT_MU270_REL_ERR)
    p.add_argument("--sigma", type=float, help="override the cross-section (cm^-1/ppm)")
    p.add_argument("--sigma-err", type=float)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_conc)

    p = sub.add_parser("calibrate", help="regress band height on EPR concentration")
    p.add_argument("input", type=Path, help="CSV with ppm,mu270 rows")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--through-origin", action="store_true", help="default")
    g.add_argument("--with-intercept", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("synth", help="write a synthetic spectrum fixture")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--config", type=Path, help="JSON with parameter values and extra_bands")
    for name in _SYNTH_DEFAULTS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=f"p_{name}", type=float)
    p.add_argument("--four-component", action="store_true")
    p.add_argument("--extra-band", type=_band, action="append", metavar="A,B,C")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=lambda t: tuple(float(x) for x in t.split(":")),
                   default=(200.0, 800.0, 1.0), metavar="LO:HI:STEP")
    p.add_argument("--quantity", choices=[q.value for q in Quantity], default="transmission_percent")
    p.add_argument("--convention", choices=[c.value for c in Convention], default="decadic")
    p.add_argument("--thickness", type=_thickness, default=0.03)
    p.add_argument("--sample-id", default="synthetic")
    p.add_argument("--epr-ppm", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("range", help="detectable concentration range for a plate")
    p.add_argument("--thickness", type=_thickness, required=True)
    p.add_argument("--a-noise", type=float, default=DEFAULT_MIN_ABSORBANCE)
    p.add_argument("--a-max", type=float, default=DEFAULT_MAX_ABSORBANCE)
    p.add_argument("--convention", choices=[c.value for c in Convention], default="decadic")
    p.set_defaults(func=cmd_range)

    p = sub.add_parser("batch", help="fit every spectrum file in a directory")
    p.add_argument("directory", type=Path)
    _add_fit_options(p)
    p.add_argument("--pattern", default="*.csv")
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"nsfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NsfitError, OSError, ValueError) as exc:
        print(f"nsfit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
