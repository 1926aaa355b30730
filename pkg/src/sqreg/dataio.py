"""CSV ingestion, result serialization, and flat config files."""

import csv
import json

import numpy as np

from .core import Dataset

__all__ = ["DataError", "read_csv", "write_csv", "read_config",
           "fit_result_payload", "dump_json"]


class DataError(Exception):
    """Malformed input data or files."""


def read_csv(path, response):
    """Load a rectangular numeric CSV with a header row into a Dataset.

    ``response`` names the response column; the rest become covariates in
    header order.  Ragged rows and non-numeric or non-finite cells are
    rejected with their line numbers.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        if response not in header:
            raise DataError(f"{path}: no column named {response!r}")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names")
        rows = []
        problems = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                problems.append(f"line {lineno}: {len(row)} cells, expected {len(header)}")
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                problems.append(f"line {lineno}: non-numeric cell")
                continue
            if not all(np.isfinite(values)):
                problems.append(f"line {lineno}: non-finite value")
                continue
            rows.append(values)
        if problems:
            shown = "; ".join(problems[:10])
            raise DataError(f"{path}: rejected rows ({shown})")
        if not rows:
            raise DataError(f"{path}: no data rows")
    table = np.asarray(rows, dtype=float)
    ridx = header.index(response)
    keep = [j for j in range(len(header)) if j != ridx]
    names = tuple(header[j] for j in keep)
    if not keep:
        raise DataError(f"{path}: no covariate columns besides the response")
    return Dataset(table[:, keep], table[:, ridx], names)


def write_csv(data, path, response="y"):
    """Round-trippable CSV dump of a Dataset (full float precision)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*data.names, response])
        for i in range(data.n):
            writer.writerow([repr(float(v)) for v in data.X[i]]
                            + [repr(float(data.y[i]))])


def read_config(path):
    """Parse a flat key=value config file; '#' starts a comment."""
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def fit_result_payload(fit, names=None):
    """JSON-ready view of a FitResult (volatile timing kept separate)."""
    payload = {
        "coefficients": [float(v) for v in fit.theta],
        "support": list(fit.support),
        "objective": {
            "unpenalized": fit.obj_unpenalized,
            "penalized": fit.obj_penalized,
        },
        "diagnostics": {
            "iterations": fit.iterations,
            "converged": fit.converged,
            "gap": fit.gap,
        },
        "timing": {"wall_seconds": fit.wall_seconds},
    }
    if names is not None:
        payload["selected_names"] = [names[j] for j in fit.support]
    return payload


def dump_json(payload, path=None):
    """Deterministically ordered JSON text, optionally written to a file."""
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
