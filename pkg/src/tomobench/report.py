"""Assemble diagnostics, functionals and checks into JSON reports."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .diagnostics import MirrorUnavailable, diagnose
from .functionals import (
    DEFAULT_CUTOFF,
    DEFAULT_R_MAX,
    DEFAULT_R_STEP,
    InsufficientPhases,
    fidelity_to_target,
    dataset_histograms,
    purity,
)
from .histogram import DEFAULT_BIN_WIDTH, BinSpec
from .inequalities import (
    DEFAULT_BINNING_CORRECTION,
    DEFAULT_RENYI_GRID,
    MomentPair,
    heisenberg_check,
    moment_pair,
    purity_heisenberg_check,
    renyi_check,
    renyi_summary_check,
    shannon_pair_check,
    shannon_phase_averaged,
    state_extended_check,
)
from .io import write_curve_csv
from .sampler import QuadratureDataset
from .states import StateSpec


@dataclass
class AnalysisConfig:
    """Parameters of one ``analyze`` run; serialised into the report."""

    bin_width: float = DEFAULT_BIN_WIDTH
    r_max: float = DEFAULT_R_MAX
    r_step: float = DEFAULT_R_STEP
    cutoff: float | None = DEFAULT_CUTOFF
    correction: float = DEFAULT_BINNING_CORRECTION
    theta_base: float = 0.0
    renyi_r: tuple = DEFAULT_RENYI_GRID
    targets: list = field(default_factory=list)  # StateSpec records
    tolerance: float | None = None

    def to_record(self) -> dict:
        record = asdict(self)
        record["renyi_r"] = [float(r) for r in self.renyi_r]
        return record


@lru_cache(maxsize=1)
def report_schema() -> dict:
    text = resources.files("tomobench").joinpath("report.schema.json").read_text()
    return json.loads(text)


def validate(document: dict, kind: str) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``document`` is a valid ``kind`` report."""
    schema = report_schema()
    wrapper = {"$schema": schema["$schema"], "$defs": schema["$defs"], "$ref": f"#/$defs/{kind}_report"}
    jsonschema.Draft202012Validator(wrapper).validate(document)


def vacuum_moments(hbar: float) -> MomentPair:
    return MomentPair(hbar / 2, 0.0, hbar / 2, 0.0)


def diagnostics_document(dataset: QuadratureDataset, fingerprint: str, spec: BinSpec, threshold: float,
                         tolerance: float | None = None, histograms=()) -> dict:
    report = diagnose(dataset, spec, tolerance)
    passed = None if report.fidelity_bound is None else bool(report.fidelity_bound >= threshold)
    return normalized({
        "kind": "diagnostics",
        "version": __version__,
        "fingerprint": fingerprint,
        "diagnostics": report.to_json(),
        "threshold": threshold,
        "passed": passed,
        "histograms": list(histograms),
    })


def analyze(dataset: QuadratureDataset, fingerprint: str, config: AnalysisConfig | None = None,
            partner: tuple[str, MomentPair] | None = None, curve_dir: Path | None = None) -> dict:
    """Full analysis of one dataset.

    ``partner`` supplies the second state of the state-extended relation; the
    ideal vacuum is used when absent.  With ``curve_dir`` the radial integrand
    and Renyi curve are written there as CSV.
    """
    config = config or AnalysisConfig()
    hbar = dataset.hbar
    spec = BinSpec(config.bin_width)
    notes = []
    curves = {}
    diag = diagnose(dataset, spec, config.tolerance)

    slices = dataset_histograms(dataset, spec)
    pr = None
    try:
        pr = purity(slices, hbar, config.r_max, config.r_step, config.cutoff)
        purity_doc = pr.to_json()
        if not pr.saturated:
            notes.append("purity integral not saturated at r_max")
        if curve_dir is not None:
            rad = pr.radial
            curves["radial"] = str(write_curve_csv(Path(curve_dir) / "radial.csv",
                                                   ["r", "J", "rJ", "err_kernel", "err_grid"],
                                                   [rad.r, rad.J, rad.rJ, rad.err_kernel, rad.err_grid]))
    except InsufficientPhases as exc:
        purity_doc = {"omitted": f"phases do not cover [0, pi): {exc}"}

    fidelity = []
    for record in config.targets:
        target = StateSpec.from_record(record, hbar=hbar)
        try:
            f = fidelity_to_target(slices, target, hbar, config.r_max, config.r_step, config.cutoff)
        except InsufficientPhases as exc:
            notes.append(f"fidelity omitted: {exc}")
            continue
        doc = f.to_json()
        doc["target"] = target.to_record()
        fidelity.append(doc)

    checks = []
    moments = None
    try:
        moments = moment_pair(dataset, config.theta_base, spec, config.tolerance)
    except (KeyError, MirrorUnavailable) as exc:
        notes.append(f"moment checks omitted: {exc}")
    label, partner_moments = partner or ("vacuum", vacuum_moments(hbar))
    if moments is not None:
        checks.append(heisenberg_check(moments, hbar))
        if pr is not None:
            checks.append(purity_heisenberg_check(moments, pr, hbar))
        checks.append(state_extended_check(partner_moments, moments, hbar))
    try:
        checks.append(shannon_pair_check(dataset, config.theta_base, hbar, config.correction, spec, config.tolerance))
    except (KeyError, MirrorUnavailable) as exc:
        notes.append(f"shannon pair check omitted: {exc}")
    try:
        checks.append(shannon_phase_averaged(dataset, hbar, config.correction, spec, config.tolerance))
    except ValueError as exc:
        notes.append(f"phase-averaged entropy omitted: {exc}")
    renyi_doc = None
    try:
        curve = renyi_check(dataset, config.theta_base, config.renyi_r, hbar, spec, config.tolerance,
                            config.correction)
        renyi_doc = curve.to_json()
        checks.append(renyi_summary_check(curve))
        if curve_dir is not None:
            curves["renyi"] = str(write_curve_csv(Path(curve_dir) / "renyi.csv", ["r", "lhs", "rhs", "err"],
                                                  curve.columns()))
    except KeyError as exc:
        notes.append(f"renyi curve omitted: {exc}")

    return normalized({
        "kind": "analysis",
        "version": __version__,
        "fingerprint": fingerprint,
        "config": config.to_record(),
        "hbar": hbar,
        "phases": [float(t) for t in dataset.phases],
        "samples": dataset.total,
        "diagnostics": diag.to_json(),
        "purity": purity_doc,
        "fidelity": fidelity,
        "moments": None if moments is None else moments.to_json(),
        "partner": {"label": label, "moments": partner_moments.to_json()},
        "checks": [c.to_json() for c in checks],
        "renyi": renyi_doc,
        "curves": curves,
        "notes": notes,
    })


def moments_from_report(document: dict) -> MomentPair | None:
    m = document.get("moments")
    return None if m is None else MomentPair(**m)


def merge_reports(documents: list[dict]) -> dict:
    """Collect analysis reports and evaluate the state-extended relation for every pair."""
    entries, pairs = [], []
    for doc in documents:
        purity_doc = doc.get("purity", {})
        entries.append({
            "fingerprint": doc["fingerprint"],
            "moments": doc.get("moments"),
            "purity": purity_doc.get("mu") if isinstance(purity_doc, dict) else None,
        })
    hbars = {doc["hbar"] for doc in documents}
    if len(hbars) > 1:
        raise ValueError(f"reports use different hbar values: {sorted(hbars)}")
    hbar = hbars.pop() if hbars else 0.5
    for i, j in itertools.combinations(range(len(documents)), 2):
        m1, m2 = moments_from_report(documents[i]), moments_from_report(documents[j])
        if m1 is None or m2 is None:
            continue
        pairs.append({"first": i, "second": j, "check": state_extended_check(m1, m2, hbar).to_json()})
    return {"kind": "merged", "version": __version__, "reports": entries, "state_extended": pairs}


def normalized(document: dict) -> dict:
    """Plain-Python copy of a document (numpy scalars become builtins)."""
    return json.loads(dumps(document))


def dumps(document: dict) -> str:
    """Deterministic JSON text."""
    return json.dumps(document, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialise {type(value).__name__}")
