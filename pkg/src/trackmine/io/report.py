"""Metrics report JSON."""

import logging
from pathlib import Path

from pydantic import ValidationError

from trackmine.errors import FormatError
from trackmine.io.atomic import atomic_write_text
from trackmine.metrics.models import MetricsReport

logger = logging.getLogger(__name__)


def report_json(report: MetricsReport) -> str:
    return report.model_dump_json(indent=2) + "\n"


def write_report(report: MetricsReport, path: Path) -> None:
    atomic_write_text(Path(path), report_json(report))
    logger.info(f"Wrote {report.mode} report to {path}")


def load_report(path: Path) -> MetricsReport:
    path = Path(path)
    try:
        return MetricsReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise FormatError(f"Invalid report: {e.errors()[0]['msg']}", path) from None
