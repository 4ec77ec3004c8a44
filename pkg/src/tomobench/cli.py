"""Command-line entry point: simulate, diagnose, analyze, report-merge.

Exit status: 0 on success, 2 for unusable input, 3 when the fidelity bound
falls below the threshold, 4 when no mirror pairs are available.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from . import __version__
from .functionals import DEFAULT_CUTOFF, DEFAULT_R_MAX, DEFAULT_R_STEP
from .histogram import DEFAULT_BIN_WIDTH, BinSpec, build_histogram, histogram_table
from .inequalities import DEFAULT_BINNING_CORRECTION, DEFAULT_RENYI_GRID, moment_pair
from .io import DatasetFormatError, fingerprint, read_dataset, write_curve_csv, write_dataset
from .report import AnalysisConfig, analyze, diagnostics_document, dumps, merge_reports, validate
from .sampler import (
    DEFAULT_PHASE_COUNT,
    DEFAULT_SAMPLES_PER_PHASE,
    NoiseModel,
    SimulationPlan,
    equispaced_phases,
    simulate_dataset,
)
from .states import DEFAULT_HBAR, StateKind, StateSpec

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_LOW_FIDELITY = 3
EXIT_NO_MIRRORS = 4
DEFAULT_THRESHOLD = 0.95


class InputError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _target(text: str) -> dict:
    """``KIND:ALPHA[:ETA]`` as a state record."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("target must look like KIND:ALPHA[:ETA]")
    try:
        kind = StateKind(parts[0])
        alpha = _complex(parts[1])
        eta = float(parts[2]) if len(parts) == 3 else 1.0
        spec = StateSpec(kind, alpha, eta)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    record = spec.to_record()
    record.pop("hbar")
    return record


def _load(path):
    try:
        return read_dataset(path)
    except DatasetFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_simulate(args) -> int:
    try:
        state = StateSpec(StateKind(args.state), args.alpha, args.eta, args.hbar)
        phases = args.phase_list if args.phase_list else equispaced_phases(args.phases)
        noise = NoiseModel(args.noise_imbalance, tuple(args.phase_errors or ()), args.drift)
        plan = SimulationPlan(state, tuple(phases), args.n, args.seed, noise)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    dataset = simulate_dataset(plan)
    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        csv_path, meta_path = write_dataset(dataset, out)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None
    print(f"wrote {dataset.total} samples over {len(plan.phases)} phases to {csv_path} (+ {meta_path.name})")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    dataset = _load(args.dataset)
    spec = BinSpec(args.bin_width)
    out = Path(args.out)
    hist_dir = out / "histograms"
    hist_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for j, block in enumerate(dataset.blocks):
        table = histogram_table(build_histogram(block.samples, spec, block.theta))
        path = write_curve_csv(hist_dir / f"phase_{j:03d}.csv", list(table), list(table.values()))
        written.append(str(path.relative_to(out)))
    doc = diagnostics_document(dataset, fingerprint(args.dataset), spec, args.threshold, args.tolerance, written)
    validate(doc, "diagnostics")
    (out / "diagnostics.json").write_text(dumps(doc))
    bound = doc["diagnostics"]["fidelity_bound"]
    if bound is None:
        print("mirror pairs unavailable", file=sys.stderr)
        return EXIT_NO_MIRRORS
    print(f"fidelity bound {bound:.4f} (threshold {args.threshold})")
    return EXIT_OK if doc["passed"] else EXIT_LOW_FIDELITY


def cmd_analyze(args) -> int:
    dataset = _load(args.dataset)
    targets = list(args.target or [])
    if not targets and dataset.state is not None:
        record = dataset.state.to_record()
        record.pop("hbar")
        targets = [record]
    config = AnalysisConfig(
        bin_width=args.bin_width,
        r_max=args.r_max,
        r_step=args.r_step,
        cutoff=args.cutoff,
        correction=args.correction,
        theta_base=args.theta_base,
        renyi_r=tuple(args.renyi_r),
        targets=targets,
        tolerance=args.tolerance,
    )
    partner = None
    if args.partner:
        other = _load(args.partner)
        try:
            partner = (fingerprint(args.partner), moment_pair(other, args.theta_base, BinSpec(args.bin_width)))
        except (KeyError, LookupError) as exc:
            raise InputError(f"{args.partner}: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = analyze(dataset, fingerprint(args.dataset), config, partner, out if args.emit_curves else None)
    validate(doc, "analysis")
    (out / "report.json").write_text(dumps(doc))
    purity_doc = doc["purity"]
    if "mu" in purity_doc:
        print(f"purity {purity_doc['mu']:.4f} +- {purity_doc['total_error']:.4f}")
    else:
        print(f"purity omitted: {purity_doc['omitted']}")
    for check in doc["checks"]:
        print(f"{check['name']}: {check['lhs']:.4f} +- {check['lhs_err']:.4f} vs {check['rhs']:.4f} "
              f"-> {check['verdict']}")
    return EXIT_OK


def cmd_report_merge(args) -> int:
    docs = []
    for path in args.reports:
        try:
            doc = json.loads(Path(path).read_text())
            validate(doc, "analysis")
        except jsonschema.ValidationError as exc:
            raise InputError(f"{path}: not an analysis report ({exc.message})") from None
        except (OSError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from None
        docs.append(doc)
    try:
        merged = merge_reports(docs)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    validate(merged, "merged")
    Path(args.out).write_text(dumps(merged))
    for pair in merged["state_extended"]:
        c = pair["check"]
        print(f"state_extended[{pair['first']},{pair['second']}]: {c['lhs']:.4f} +- {c['lhs_err']:.4f} "
              f"-> {c['verdict']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tomobench", description="Homodyne tomography workbench.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic quadrature dataset")
    p.add_argument("--state", choices=[k.value for k in StateKind], default="coherent")
    p.add_argument("--alpha", type=_complex, default=0j, help="complex amplitude, e.g. 0.83 or 0.5+0.2j")
    p.add_argument("--eta", type=float, default=1.0, help="detection efficiency (detected-* states)")
    p.add_argument("--phases", type=int, default=DEFAULT_PHASE_COUNT, help="number of equispaced phases")
    p.add_argument("--phase-list", type=_floats, help="explicit comma-separated phases in radians")
    p.add_argument("--n", type=int, default=DEFAULT_SAMPLES_PER_PHASE, help="samples per phase")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-imbalance", type=float, default=0.0)
    p.add_argument("--phase-errors", type=_floats, help="comma-separated LO phase errors, one per phase")
    p.add_argument("--drift", type=float, default=0.0, help="peak amplitude of the linear drift")
    p.add_argument("--hbar", type=float, default=DEFAULT_HBAR)
    p.add_argument("--out", required=True, help="CSV path; metadata goes next to it")
    p.set_defaults(func=cmd_simulate)

    def common(p):
        p.add_argument("dataset")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--bin-width", type=float, default=DEFAULT_BIN_WIDTH)
        p.add_argument("--tolerance", type=float, help="phase matching tolerance (rad)")

    p = sub.add_parser("diagnose", help="mirror-symmetry diagnostics and per-phase histograms")
    common(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="minimum fidelity bound")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("analyze", help="purity, fidelity and uncertainty-relation checks")
    common(p)
    p.add_argument("--r-max", type=float, default=DEFAULT_R_MAX)
    p.add_argument("--r-step", type=float, default=DEFAULT_R_STEP)
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF, help="|X| window of the purity kernel")
    p.add_argument("--correction", type=float, default=DEFAULT_BINNING_CORRECTION,
                   help="bin-width allowance subtracted from entropic bounds")
    p.add_argument("--theta-base", type=float, default=0.0)
    p.add_argument("--renyi-r", type=_floats, default=list(DEFAULT_RENYI_GRID))
    p.add_argument("--target", type=_target, action="append", help="fidelity target KIND:ALPHA[:ETA]")
    p.add_argument("--partner", help="second dataset for the state-extended relation")
    p.add_argument("--emit-curves", action="store_true", help="write radial.csv and renyi.csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report-merge", help="combine analysis reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report_merge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
