"""
Report Service: renders command results as text, JSON or CSV from one shared table
"""

import csv
import io
import json
import logging
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from models import (
    BoundMatrix,
    BoundResult,
    Histogram,
    OutputFormat,
    RegionCount,
    TauSearchResult,
    VerificationLedger,
)

logger = logging.getLogger(__name__)


class Report(BaseModel):
    """Everything a renderer needs; text, csv and json all read the same cells"""
    title: str
    meta: Dict[str, str] = Field(default_factory=dict)
    headers: List[str] = Field(default_factory=list)
    rows: List[List[str]] = Field(default_factory=list)
    payload: Dict[str, Any] = Field(default_factory=dict)


class ReportService:
    """Service for building and rendering reports"""

    def render(self, report: Report, fmt: OutputFormat) -> str:
        logger.debug(f"Rendering '{report.title}' as {fmt.value}")
        if fmt is OutputFormat.JSON:
            return json.dumps(report.payload, indent=2)
        if fmt is OutputFormat.CSV:
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            for key, value in report.meta.items():
                writer.writerow([key, value])
            if report.rows:
                if report.meta:
                    writer.writerow([])
                writer.writerow(report.headers)
                writer.writerows(report.rows)
            return buffer.getvalue().rstrip("\n")
        return self._text(report)

    @staticmethod
    def _text(report: Report) -> str:
        lines = [report.title]
        lines += [f"{key}: {value}" for key, value in report.meta.items()]
        if report.rows:
            widths = [
                max(len(str(cell)) for cell in column)
                for column in zip(report.headers, *report.rows)
            ]
            lines.append("")
            lines.append("  ".join(h.ljust(w) for h, w in zip(report.headers, widths)).rstrip())
            for row in report.rows:
                lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        return "\n".join(lines)

    def bound_report(self, result: BoundResult, status: str, growth: Optional[int]) -> Report:
        meta = {
            "architecture": result.architecture,
            "family": result.family,
            "status": status,
            "conjectured": str(result.conjectured).lower(),
            "bound": str(result.bound),
        }
        if growth is not None:
            meta["growth"] = f"O({growth}^L)"
        payload = result.model_dump(mode="json")
        payload["status"] = status
        payload["growth_rate"] = None if growth is None else str(growth)
        return Report(
            title=f"Region bound ({result.family}{', conjectured' if result.conjectured else ''})",
            meta=meta,
            headers=["layer", "histogram", "norm"],
            rows=[
                [str(layer), str(h), str(h.norm())]
                for layer, h in enumerate(result.per_layer_histograms, start=1)
            ],
            payload=payload,
        )

    def compare_report(
        self,
        architecture: str,
        rows: List[Dict[str, Any]],
        prior_bound: int,
        naive: int,
    ) -> Report:
        headers = ["family", "status", "conjectured", "bound", "growth", "ratio_to_bar"]
        table = [[str(row[h]) if row[h] is not None else "-" for h in headers] for row in rows]
        return Report(
            title=f"Bound comparison for {architecture}",
            meta={"architecture": architecture, "prior_product_bound": str(prior_bound), "naive_bound": str(naive)},
            headers=headers,
            rows=table,
            payload={
                "architecture": architecture,
                "prior_product_bound": str(prior_bound),
                "naive_bound": str(naive),
                "families": [
                    {h: (str(row[h]) if row[h] is not None and h != "conjectured" else row[h]) for h in headers}
                    for row in rows
                ],
            },
        )

    def tau_report(self, entries: List[Dict[str, Any]]) -> Report:
        headers = ["p0", "p1", "status", "histogram"]
        return Report(
            title="Known activation histogram joins",
            headers=headers,
            rows=[[str(e["p0"]), str(e["p1"]), e["status"], str(e["histogram"])] for e in entries],
            payload={"entries": [
                {"p0": e["p0"], "p1": e["p1"], "status": e["status"],
                 "histogram": e["histogram"].model_dump(mode="json")}
                for e in entries
            ]},
        )

    def matrix_report(self, matrix: BoundMatrix, status: str, growth: int) -> Report:
        return Report(
            title=f"Bound matrix {matrix.family} p1={matrix.p1}",
            meta={
                "family": matrix.family,
                "status": status,
                "conjectured": str(status == "conjectured").lower(),
                "upper_triangular": str(matrix.is_upper_triangular()).lower(),
                "growth_rate": str(growth),
            },
            headers=[f"p0={j}" for j in range(matrix.dim)],
            rows=[[str(cell) for cell in row] for row in matrix.cells],
            payload={
                **matrix.model_dump(mode="json"),
                "status": status,
                "conjectured": status == "conjectured",
                "growth_rate": str(growth),
            },
        )

    def ledger_report(self, ledger: VerificationLedger) -> Report:
        failed = len(ledger.failed)
        return Report(
            title=f"Verification suite {ledger.suite}",
            meta={
                "passed": str(len(ledger.checks) - failed),
                "failed": str(failed),
                **({"artifacts": ";".join(ledger.artifacts)} if ledger.artifacts else {}),
            },
            headers=["check", "result", "detail"],
            rows=[[c.name, "PASS" if c.passed else "FAIL", c.detail] for c in ledger.checks],
            payload=ledger.model_dump(mode="json"),
        )

    def histogram_report(self, title: str, meta: Dict[str, str], histogram: Histogram) -> Report:
        return Report(
            title=title,
            meta={**meta, "histogram": str(histogram), "norm": str(histogram.norm())},
            headers=["index", "count"],
            rows=[[str(i), str(count)] for i, count in enumerate(histogram.entries)],
            payload={**meta, "histogram": histogram.model_dump(mode="json"), "norm": str(histogram.norm())},
        )

    def search_report(self, result: TauSearchResult, conjecture: Histogram) -> Report:
        report = self.histogram_report(
            f"Two-dimensional search p1={result.p1}",
            {"seed": str(result.seed), "trials": str(result.trials), "conjecture": str(conjecture),
             "counterexample": "none" if result.counterexample is None else f"trial {result.counterexample.trial}"},
            result.join,
        )
        report.payload = result.model_dump(mode="json")
        return report

    def region_report(self, count: RegionCount) -> Report:
        return Report(
            title="Attained activation patterns",
            meta={"count": str(count.count)},
            headers=["layer", "histogram"],
            rows=[[str(layer), str(h)] for layer, h in enumerate(count.layer_histograms, start=1)],
            payload={
                "count": count.count,
                "layer_histograms": [h.model_dump(mode="json") for h in count.layer_histograms],
            },
        )
