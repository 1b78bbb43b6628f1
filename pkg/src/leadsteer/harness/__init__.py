"""Study configuration, experiment runner, result emission and the CLI."""

from .config import StudyConfig, load_config, parse_config
from .emit import emit, parse_rows_csv, result_from_json, result_to_json, rows_csv
from .study import StudyResult, StudyRow, quartile_summary, run_study, summarize

__all__ = [
    "StudyConfig", "StudyResult", "StudyRow", "emit", "load_config", "parse_config",
    "parse_rows_csv", "quartile_summary", "result_from_json", "result_to_json", "rows_csv",
    "run_study", "summarize",
]
