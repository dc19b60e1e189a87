"""Tests for pandas integration functions."""

import pandas as pd

from pvalgebra.algebra.brackets import CheckReport
from pvalgebra.algebra.diffpoly import jet
from pvalgebra.integrations.pandas import COLUMNS, identity_family, reports_to_frame, summarize_reports


def _reports():
    first = CheckReport("pva_axioms")
    first.add("skew[0]", 0)
    first.add("skew[1]", jet("p1"))
    first.add("leibniz.left[0]", 0)
    second = CheckReport("as_correspondence", sign=-1)
    second.add("product1", 0)
    return [first, second]


class TestIdentityFamily:
    """Sample indices are stripped from residual labels."""

    def test_indexed_label(self):
        assert identity_family("leibniz.left[3]") == "leibniz.left"

    def test_plain_label(self):
        assert identity_family("product1") == "product1"


class TestReportsToFrame:
    """One row per residual."""

    def test_columns_and_rows(self):
        frame = reports_to_frame(_reports())
        assert list(frame.columns) == COLUMNS
        assert len(frame) == 4

    def test_values_are_text(self):
        frame = reports_to_frame(_reports())
        row = frame[frame["label"] == "skew[1]"].iloc[0]
        assert row["reduced"] == "p1"
        assert not row["zero"]

    def test_single_report(self):
        frame = reports_to_frame(_reports()[1])
        assert frame["sign"].tolist() == [-1]


class TestSummarizeReports:
    """Checked and failed counts per identity family."""

    def test_counts(self):
        summary = summarize_reports(_reports())
        skew = summary[(summary["check"] == "pva_axioms") & (summary["identity"] == "skew")].iloc[0]
        assert skew["checked"] == 2
        assert skew["failed"] == 1
        assert summary["failed"].sum() == 1

    def test_accepts_a_frame(self):
        frame = reports_to_frame(_reports())
        pd.testing.assert_frame_equal(summarize_reports(frame), summarize_reports(_reports()))

    def test_empty(self):
        summary = summarize_reports([])
        assert summary.empty
        assert list(summary.columns) == ["check", "identity", "checked", "failed"]
