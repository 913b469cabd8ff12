"""Bundled classic datasets and delimited-file loading.

Six small corpora from the robustness literature ship with the package as
CSV files; each is gated by validation checks (full-data ML or least-squares
statistics against their published values) so silent transcription drift
cannot reach an analysis.  External files are validated for shape and
finiteness only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .estimation import Sample
from .regression import RegressionProblem, ols_fit


class DatasetError(RuntimeError):
    """Unknown name, parse failure, or a failed validation check."""


@dataclass(frozen=True)
class ValidationCheck:
    statistic: str
    expected: float
    rel_tol: float = 0.005


@dataclass
class DatasetRecord:
    name: str
    kind: str  # "univariate" | "regression"
    values: Sample | RegressionProblem
    source_citation: str = ""
    validation_checks: tuple[ValidationCheck, ...] = ()
    validation_status: dict = field(default_factory=dict)


_CITATIONS = {
    "telephone-fault": "Welch (1987), Biometrika 74, 609-614",
    "newcomb": "Stigler (1977), Ann. Statist. 5, Table 5",
    "darwin": "Darwin (1876) via Spiegelhalter (1985)",
    "insulating-fluid": "Nelson (1972), IEEE Trans. Reliability R-21, 34 kV group",
    "star-cluster": "Rousseeuw & Leroy (1987), Chapter 2 Table 3",
    "belgian-calls": "Rousseeuw & Leroy (1987), Chapter 2 Table 2",
}

_CHECKS = {
    "telephone-fault": (ValidationCheck("mle_mean", 40.3571),
                        ValidationCheck("mle_sd", 311.332)),
    "newcomb": (ValidationCheck("mle_mean", 26.2121),
                ValidationCheck("mle_sd", 10.6636)),
    "darwin": (ValidationCheck("mle_mean", 20.9333),
               ValidationCheck("mle_sd", 36.4645)),
    "insulating-fluid": (ValidationCheck("mle_mean", 14.3589),),
    "star-cluster": (ValidationCheck("ols_intercept", 6.7935),
                     ValidationCheck("ols_slope", -0.4133),
                     ValidationCheck("ols_sigma2", 0.3188)),
    "belgian-calls": (ValidationCheck("ols_intercept", -26.006),
                      ValidationCheck("ols_slope", 0.5041),
                      ValidationCheck("ols_sigma2", 31.6107)),
}

BUNDLED = tuple(sorted(_CHECKS))


def _parse_csv(path_like, label: str):
    """Read a delimited file into a header list and a float matrix.

    Parse failures report the 1-based line and column of the offender.
    """
    rows = []
    with path_like.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{label}: file is empty") from None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{label}: line {lineno} has {len(row)} fields, "
                    f"expected {len(header)}")
            vals = []
            for colno, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DatasetError(
                        f"{label}: line {lineno}, column {colno}: "
                        f"cannot parse {cell!r} as a number") from None
            rows.append(vals)
    if not rows:
        raise DatasetError(f"{label}: no data rows")
    return header, np.asarray(rows, dtype=float)


def _statistic(name: str, record: DatasetRecord) -> float:
    v = record.values
    if name == "mle_mean":
        return float(np.mean(v.observations))
    if name == "mle_sd":
        return float(np.std(v.observations))  # n-denominator
    eta, sigma2 = ols_fit(v)
    if name == "ols_intercept":
        return float(eta[0])
    if name == "ols_slope":
        return float(eta[1])
    if name == "ols_sigma2":
        return sigma2
    raise DatasetError(f"unknown validation statistic {name!r}")


def validate(record: DatasetRecord) -> DatasetRecord:
    """Run the record's checks; raise on the first failure."""
    status = {}
    for check in record.validation_checks:
        got = _statistic(check.statistic, record)
        ok = math.isclose(got, check.expected,
                          rel_tol=check.rel_tol, abs_tol=0.0)
        status[check.statistic] = {"expected": check.expected, "got": got,
                                   "passed": ok}
        if not ok:
            record.validation_status = status
            raise DatasetError(
                f"dataset {record.name!r} failed validation: "
                f"{check.statistic} expected {check.expected} got {got!r}")
    record.validation_status = status
    return record


def _record_from_matrix(name, header, mat, citation="", checks=(),
                        with_intercept=False):
    if mat.shape[1] == 1:
        values = Sample(mat[:, 0], name=name, provenance=citation)
        kind = "univariate"
    else:
        design = mat[:, :-1]
        if with_intercept:
            design = np.column_stack([np.ones(mat.shape[0]), design])
        values = RegressionProblem(design, mat[:, -1], name=name)
        kind = "regression"
    return DatasetRecord(name=name, kind=kind, values=values,
                         source_citation=citation,
                         validation_checks=tuple(checks))


def load_dataset(name_or_path: str) -> DatasetRecord:
    """Load a bundled dataset by name, or any delimited file by path.

    Bundled records are validated against their published reference
    statistics; a failure aborts the load.  External files only need a
    header line and finite numeric rows: one column is a univariate
    sample, several columns are a regression with the response last.
    """
    key = str(name_or_path)
    if key in _CHECKS:
        path = resources.files("epdfit.data").joinpath(key + ".csv")
        header, mat = _parse_csv(path, key)
        record = _record_from_matrix(key, header, mat,
                                     citation=_CITATIONS[key],
                                     checks=_CHECKS[key],
                                     with_intercept=True)
        return validate(record)
    path = Path(name_or_path)
    if not path.exists():
        raise DatasetError(
            f"unknown dataset {name_or_path!r}; bundled names: "
            f"{', '.join(BUNDLED)}")
    header, mat = _parse_csv(path, str(path))
    return _record_from_matrix(path.stem, header, mat)
