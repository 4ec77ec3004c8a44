"""Dataset and curve file formats."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .sampler import Calibration, NoiseModel, PhaseBlock, QuadratureDataset
from .states import DEFAULT_HBAR, StateSpec

CSV_HEADER = "theta_rad,x"


class DatasetFormatError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def metadata_path(csv_path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def _fmt(v: float) -> str:
    return repr(float(v))  # shortest round-trip representation, up to 17 digits


def dataset_csv_bytes(dataset: QuadratureDataset) -> bytes:
    lines = [CSV_HEADER]
    for block in dataset.blocks:
        t = _fmt(block.theta)
        lines.extend(f"{t},{_fmt(v)}" for v in block.samples)
    return ("\n".join(lines) + "\n").encode("ascii")


def dataset_metadata(dataset: QuadratureDataset) -> dict:
    meta = {
        "hbar": dataset.hbar,
        "seed": dataset.seed,
        "samples_per_phase": dataset.samples_per_phase,
        "noise": dataset.noise.to_record(),
        "calibration": dataset.calibration.to_record(),
    }
    if dataset.state is not None:
        record = dataset.state.to_record()
        record.pop("hbar")
        meta["state"] = record
    return meta


def write_dataset(dataset: QuadratureDataset, csv_path) -> tuple[Path, Path]:
    csv_path = Path(csv_path)
    csv_path.write_bytes(dataset_csv_bytes(dataset))
    meta_path = metadata_path(csv_path)
    meta_path.write_text(json.dumps(dataset_metadata(dataset), indent=2) + "\n")
    return csv_path, meta_path


def parse_dataset_csv(data: bytes) -> list[PhaseBlock]:
    text = data.decode("ascii")
    lines = text.split("\n")
    if not lines or lines[0].strip() != CSV_HEADER:
        raise DatasetFormatError(f"expected header '{CSV_HEADER}'", line=1)
    groups: dict[float, list[float]] = {}
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DatasetFormatError(f"expected 2 fields, got {len(parts)}", line=number)
        try:
            theta, x = float(parts[0]), float(parts[1])
        except ValueError:
            raise DatasetFormatError(f"not a number: {line!r}", line=number) from None
        if not (np.isfinite(theta) and np.isfinite(x)):
            raise DatasetFormatError("non-finite value", line=number)
        groups.setdefault(theta, []).append(x)
    if not groups:
        raise DatasetFormatError("no samples")
    return [PhaseBlock(theta, np.array(xs)) for theta, xs in groups.items()]


def read_dataset(csv_path, meta_path=None) -> QuadratureDataset:
    """Load a dataset; the metadata sidecar is optional (real data may lack it)."""
    csv_path = Path(csv_path)
    blocks = parse_dataset_csv(csv_path.read_bytes())
    meta_path = Path(meta_path) if meta_path else metadata_path(csv_path)
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    hbar = meta.get("hbar", DEFAULT_HBAR)
    state = StateSpec.from_record(meta["state"], hbar=hbar) if meta.get("state") else None
    cal = meta.get("calibration") or {}
    return QuadratureDataset(
        blocks,
        hbar=hbar,
        state=state,
        seed=meta.get("seed"),
        noise=NoiseModel.from_record(meta.get("noise")),
        calibration=Calibration(cal.get("offset", 0.0), cal.get("scale", 1.0)),
        samples_per_phase=meta.get("samples_per_phase"),
    )


def fingerprint(csv_path) -> str:
    return "sha256:" + hashlib.sha256(Path(csv_path).read_bytes()).hexdigest()


def write_curve_csv(path, header: list[str], columns) -> Path:
    """Write equally long numeric columns as CSV with a header row."""
    path = Path(path)
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path
