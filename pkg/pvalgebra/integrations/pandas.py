import re

import pandas as pd

from ..algebra.brackets import CheckReport
from .printing import to_text

COLUMNS = ["check", "identity", "label", "zero", "reduced", "raw", "sign"]

_FAMILY = re.compile(r"^([^\[]+)")


def identity_family(label: str) -> str:
    """Strip the sample index: ``leibniz.left[3]`` belongs to ``leibniz.left``."""
    match = _FAMILY.match(label)
    return match.group(1) if match else label


def reports_to_frame(reports) -> pd.DataFrame:
    """One row per residual, across any number of check reports."""
    if isinstance(reports, CheckReport):
        reports = [reports]
    rows = []
    for report in reports:
        for label, reduced in report.reduced.items():
            rows.append({
                "check": report.name,
                "identity": identity_family(label),
                "label": label,
                "zero": reduced == 0,
                "reduced": to_text(reduced),
                "raw": to_text(report.residuals[label]),
                "sign": report.sign,
            })
    return pd.DataFrame(rows, columns=COLUMNS)


def summarize_reports(reports) -> pd.DataFrame:
    """Counts of checked and failed residuals per check and identity family."""
    frame = reports if isinstance(reports, pd.DataFrame) else reports_to_frame(reports)
    if frame.empty:
        return pd.DataFrame(columns=["check", "identity", "checked", "failed"])
    summary = (
        frame.assign(failed=~frame["zero"].astype(bool))
        .groupby(["check", "identity"], sort=True)
        .agg(checked=("label", "count"), failed=("failed", "sum"))
        .reset_index()
    )
    summary["failed"] = summary["failed"].astype(int)
    return summary
