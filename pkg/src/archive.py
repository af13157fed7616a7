import os
from typing import Iterable, List

import fastavro

from equiv import CheckReport, Divergence
from interp import CcdfgState
from logger import logger

# Sweep records; states travel as their JSON documents
REPORT_SCHEMA = fastavro.parse_schema({
    "type": "record",
    "name": "CheckReport",
    "namespace": "ccdfg",
    "fields": [
        {"name": "k", "type": "int"},
        {"name": "seed", "type": "long"},
        {"name": "mode", "type": "string"},
        {"name": "passed", "type": "boolean"},
        {"name": "location", "type": ["null", "string"], "default": None},
        {"name": "lhs", "type": ["null", "string"], "default": None},
        {"name": "rhs", "type": ["null", "string"], "default": None},
        {"name": "diagnostic", "type": ["null", "string"], "default": None},
        {"name": "lhs_state", "type": ["null", "string"], "default": None},
        {"name": "rhs_state", "type": ["null", "string"], "default": None},
    ],
})


def _optional_str(value):
    return None if value is None else str(value)


def _to_record(report: CheckReport) -> dict:
    d = report.first_divergence
    return {
        "k": report.k,
        "seed": report.seed,
        "mode": report.mode,
        "passed": report.passed,
        "location": d.location if d else None,
        "lhs": _optional_str(d.lhs) if d else None,
        "rhs": _optional_str(d.rhs) if d else None,
        "diagnostic": report.diagnostic,
        "lhs_state": report.lhs_state.model_dump_json() if report.lhs_state else None,
        "rhs_state": report.rhs_state.model_dump_json() if report.rhs_state else None,
    }


def _from_record(record: dict) -> CheckReport:
    divergence = None
    if record["location"] is not None:
        # Values were written as strings so that any value width survives
        divergence = Divergence(
            location=record["location"],
            lhs=None if record["lhs"] is None else int(record["lhs"]),
            rhs=None if record["rhs"] is None else int(record["rhs"]),
        )
    state = lambda doc: None if doc is None else CcdfgState.model_validate_json(doc)  # noqa: E731
    return CheckReport(
        k=record["k"], seed=record["seed"], mode=record["mode"], passed=record["passed"],
        first_divergence=divergence, diagnostic=record["diagnostic"],
        lhs_state=state(record["lhs_state"]), rhs_state=state(record["rhs_state"]),
    )


def backup_reports(reports: Iterable[CheckReport], path: str) -> dict:
    """Writes a sweep to an AVRO file."""
    records = [_to_record(report) for report in reports]
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as out_file:
        fastavro.writer(out_file, REPORT_SCHEMA, records)
    logger.info(f"Backup of {len(records)} reports saved in {path}")
    return {"message": f"Backup of {len(records)} reports saved in {path}"}


def restore_reports(path: str) -> List[CheckReport]:
    """Reads a sweep back from an AVRO file written by backup_reports."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"No report archive at {path}")
    with open(path, "rb") as in_file:
        records = list(fastavro.reader(in_file))
    logger.info(f"Restored {len(records)} reports from {path}")
    return [_from_record(record) for record in records]
