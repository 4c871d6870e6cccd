import csv
import io
import json
from pathlib import Path
from sqlalchemy import create_engine, select
from sqlalchemy.orm import Session
from chainscale.controllers.BaseController import BaseController
from chainscale.errors import ConfigurationError
from chainscale.models import RunRecord

COLUMNS = (
    "id", "scenario", "algorithm", "seed", "cost_ratio", "pmr", "horizon", "operational",
    "deployment", "total", "lower_bound", "static_cost", "competitive_ratio", "cost_saving",
    "digest", "completed", "violations", "created"
)


def report(in_dir: str | Path, emit: str = "json", database: str = "runs.db") -> str:
    """Summary of every run recorded under ``in_dir``, as CSV or JSON text."""

    path = Path(in_dir) / database

    if emit not in ("csv", "json"):
        raise ValueError(f"Cannot emit {emit!r}; choose csv or json.")

    if not path.is_file():
        raise ConfigurationError(f"No run ledger at {path}.")

    engine = create_engine(f"sqlite:///{path}")

    with Session(bind=engine) as session:
        rows = [record.serialize() for record in session.scalars(select(RunRecord).order_by(RunRecord.id))]

    engine.dispose()

    if emit == "json":
        return json.dumps(rows, indent=2)

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)

    return buffer.getvalue()


class ReportController(BaseController):
    """Report Controller

    Methods
    -------
    report(in_dir, emit="json")
        Summary of the run ledger of an output directory
    """

    def report(self, in_dir: str | Path, emit: str = "json") -> str:
        return report(in_dir, emit, self._settings.get("simulation", "database"))
