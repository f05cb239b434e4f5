"""
Result tables: comma-delimited sweep rows and key/value bound listings.
"""
import csv
import io
from typing import Dict, Iterable, List, Optional, TextIO, Tuple

from models import BoundReport, PointSummary, RateReport, SweepResult

CONFIG_COLUMNS = (
    "n", "n_cp", "nu", "n_a", "n_b", "n_e", "n_s", "gamma_bob_db", "gamma_eve_db",
    "var_ab", "var_ae", "theta", "alpha", "exact_cp_power",
)


def _rate_columns() -> List[str]:
    cols: List[str] = []
    for name in RateReport.RATE_FIELDS:
        cols += [f"mean_{name}", f"mean_{name}_shz", f"stderr_{name}", f"stderr_{name}_shz"]
    return cols


def _bound_columns() -> List[str]:
    return [f"bound_{name}" for name in BoundReport.__dataclass_fields__]


def sweep_columns() -> List[str]:
    return ["series", "sweep_param", "value", *CONFIG_COLUMNS, *_rate_columns(), *_bound_columns(),
            "n_trials", "master_seed"]


def summary_row(row: PointSummary, sweep_param: Optional[str], series: str = "") -> Dict[str, object]:
    out: Dict[str, object] = {"series": series, "sweep_param": sweep_param or "", "value": "" if row.value is None else row.value}
    out.update(row.config.to_dict())
    for name in RateReport.RATE_FIELDS:
        out[f"mean_{name}"] = row.means[name]
        out[f"mean_{name}_shz"] = row.mean_shz(name)
        out[f"stderr_{name}"] = row.stderrs[name]
        out[f"stderr_{name}_shz"] = row.stderr_shz(name)
    if row.bounds is not None:
        for name, value in row.bounds.to_dict().items():
            out[f"bound_{name}"] = value
    out["n_trials"] = row.n_trials
    out["master_seed"] = row.master_seed
    return out


def write_sweeps(stream: TextIO, results: Iterable[Tuple[str, SweepResult]]) -> int:
    """
    Write one CSV row per sweep point.

    Args:
        stream: Text stream opened with newline=""
        results: (series label, SweepResult) pairs in output order

    Returns:
        Number of data rows written
    """
    writer = csv.DictWriter(stream, fieldnames=sweep_columns(), lineterminator="\n")
    writer.writeheader()
    count = 0
    for series, result in results:
        for row in result.rows:
            writer.writerow(summary_row(row, result.sweep_param, series))
            count += 1
    return count


def write_bounds(stream: TextIO, report: BoundReport, config_row: Dict[str, object]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in config_row.items():
        writer.writerow([key, value])
    for key, value in report.to_dict().items():
        writer.writerow([key, value])


def sweeps_to_text(results: Iterable[Tuple[str, SweepResult]]) -> str:
    buf = io.StringIO()
    write_sweeps(buf, results)
    return buf.getvalue()
