"""File ingestion (dense/edge-list weights, CSV datasets) and report emission."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict

import numpy as np

from .errors import DataFormatError
from .focus import FocusSpec
from .simulate import CriterionSpec, RunReport, SimConfig
from .slm import Dataset
from .weights import SpatialWeights


def load_weights(path: str, row_normalize: bool = False) -> SpatialWeights:
    """Load spatial weights from a dense n x n CSV or an `i,j,w` edge list.

    Edge lists are recognized by their header row; indices are zero-based.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise DataFormatError(f"{path}: empty weights file")
    header = [c.strip().lower() for c in rows[0]]
    if header[:3] == ["i", "j", "w"]:
        A = _parse_edge_list(path, rows[1:])
    else:
        A = _parse_dense(path, rows)
    if np.any(np.diag(A) != 0):
        bad = int(np.flatnonzero(np.diag(A))[0])
        raise DataFormatError(
            f"{path}: nonzero diagonal at unit {bad}; self-neighbors are not allowed"
        )
    return SpatialWeights.from_adjacency(A, row_normalize=row_normalize)


def _parse_dense(path, rows):
    n = len(rows)
    A = np.empty((n, n))
    for i, r in enumerate(rows):
        if len(r) != n:
            raise DataFormatError(f"{path}: row {i} has {len(r)} columns, expected {n}")
        try:
            A[i] = [float(c) for c in r]
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {i}: {exc}") from exc
    return A


def _parse_edge_list(path, rows):
    edges = []
    max_idx = -1
    for line_no, r in enumerate(rows, start=2):
        if len(r) < 3:
            raise DataFormatError(f"{path}: line {line_no}: expected i,j,w")
        try:
            i, j, w = int(r[0]), int(r[1]), float(r[2])
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {line_no}: {exc}") from exc
        if i < 0 or j < 0:
            raise DataFormatError(f"{path}: line {line_no}: negative index")
        edges.append((i, j, w))
        max_idx = max(max_idx, i, j)
    n = max_idx + 1
    A = np.zeros((n, n))
    for i, j, w in edges:
        A[i, j] = w
    return A


def load_dataset(
    data_path: str,
    weights_path: str,
    response: str,
    columns: list[str] | None = None,
    row_normalize: bool = False,
) -> Dataset:
    """Assemble a Dataset from a CSV data table and a weights file.

    The response column is named; the remaining numeric columns (or an
    explicit list) become the design matrix.
    """
    with open(data_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{data_path}: empty file") from None
        header = [h.strip() for h in header]
        table = list(reader)
    if response not in header:
        raise DataFormatError(f"{data_path}: no column named {response!r}")
    if columns is None:
        columns = [h for h in header if h != response]
    missing = [c for c in columns if c not in header]
    if missing:
        raise DataFormatError(f"{data_path}: missing columns {missing}")
    col_idx = {h: k for k, h in enumerate(header)}

    def parse(row_no, row, name):
        try:
            return float(row[col_idx[name]])
        except (ValueError, IndexError) as exc:
            raise DataFormatError(
                f"{data_path}: row {row_no}, column {name!r}: {exc}"
            ) from exc

    Y = np.array([parse(r + 2, row, response) for r, row in enumerate(table)])
    X = np.array(
        [[parse(r + 2, row, c) for c in columns] for r, row in enumerate(table)]
    )
    W = load_weights(weights_path, row_normalize=row_normalize)
    if len(Y) != W.n:
        raise DataFormatError(
            f"{data_path} has {len(Y)} rows but weights are {W.n} x {W.n}"
        )
    return Dataset(Y=Y, X=X, W=W, names=tuple(columns))


# ---------------------------------------------------------------------------
# report emission

_REPORT_COLUMNS = ("rank", "label", "mask", "variables", "bias2", "variance", "score")


def report_rows_to_dicts(rows) -> list[dict]:
    out = []
    for r in sorted(rows, key=lambda r: r.rank):
        d = {
            "rank": r.rank,
            "label": r.submodel.label(),
            "mask": r.submodel.mask,
            "variables": list(r.labels),
            "bias2": r.bias2,
            "variance": r.variance,
            "score": r.score,
        }
        if hasattr(r, "scheme"):
            d["scheme"] = r.scheme
        out.append(d)
    return out


def write_report(rows, out_path: str | None, fmt: str = "json") -> str:
    """Serialize a ranked FIC/sAFIC table; returns the text written."""
    dicts = report_rows_to_dicts(rows)
    if fmt == "json":
        text = json.dumps(dicts, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        cols = list(_REPORT_COLUMNS) + (["scheme"] if dicts and "scheme" in dicts[0] else [])
        lines = [",".join(cols)]
        for d in dicts:
            row = dict(d, variables="+".join(d["variables"]))
            lines.append(",".join(str(row[c]) for c in cols))
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    return text


def run_report_to_json(report: RunReport, top_k: int = 5) -> str:
    """Deterministic JSON rendering of a Monte-Carlo run."""
    cfg = report.config
    payload = {
        "config": _config_to_dict(cfg),
        "reps_completed": report.reps_completed,
        "failures": [{"rep": r, "error": m} for r, m in report.failures],
        "criteria": {
            name: {
                "top_models": [
                    {
                        "label": f"S{mask + 1}",
                        "mask": mask,
                        "count": count,
                    }
                    for mask, count in report.top_models(name, top_k)
                ],
                "top1_counts": {str(k): v for k, v in sorted(counts.items())},
            }
            for name, counts in report.top1_counts.items()
        },
        "per_rep_top1": [
            {name: masks[0] for name, masks in rankings.items()}
            for rankings in report.per_rep_rankings
        ],
    }
    if report.realized_mse is not None:
        payload["realized_focus_mse"] = {str(k): v for k, v in report.realized_mse.items()}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _config_to_dict(cfg: SimConfig) -> dict:
    d = asdict(cfg)
    d["criteria"] = [
        {k: v for k, v in asdict(c).items() if v is not None} for c in cfg.criteria
    ]
    return d


def config_from_json(path: str) -> SimConfig:
    """Parse a SimConfig (with nested criteria) from a JSON file."""
    with open(path) as fh:
        raw = json.load(fh)
    criteria = raw.pop("criteria", None)
    if criteria is not None:
        specs = []
        for c in criteria:
            focus = c.pop("focus", None)
            if focus is not None:
                focus = FocusSpec(
                    kind=focus["kind"],
                    location=focus.get("location"),
                    coeff_subset=tuple(focus["coeff_subset"])
                    if focus.get("coeff_subset")
                    else None,
                )
            if "z0" in c and c["z0"] is not None:
                c["z0"] = tuple(c["z0"])
            specs.append(CriterionSpec(focus=focus, **c))
        raw["criteria"] = tuple(specs)
    if "beta_true" in raw:
        raw["beta_true"] = tuple(raw["beta_true"])
    return SimConfig(**raw)
