"""
Result files: CSV tables (pandas) and JSON run summaries.

CSV bodies contain no timestamps, so identical runs give identical bytes.
File names follow <experiment>-<UTC timestamp>-<seed>.csv.
"""

import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Union

import pandas as pd

from config import OUTPUT_DIR

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.12g"
TIMESTAMP_FORMAT = "%Y%m%dT%H%M%SZ"


def output_dir(override: Optional[Union[str, Path]] = None) -> Path:
    """Directory for results: explicit override, else PAIRVERIFY_OUTPUT_DIR, created if needed."""
    path = Path(override) if override else Path(OUTPUT_DIR or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def experiment_filename(experiment: str, seed: int, when: Optional[datetime] = None, suffix: str = ".csv") -> str:
    when = when or datetime.now(timezone.utc)
    return f"{experiment}-{when.strftime(TIMESTAMP_FORMAT)}-{seed}{suffix}"


def write_csv(frame: pd.DataFrame, path: Union[str, Path], columns: Optional[Sequence[str]] = None) -> Path:
    """
    Write a table with a header row and deterministic float formatting.

    Raises:
        OSError: If the file cannot be written
    """
    path = Path(path)
    if columns is not None:
        frame = frame.reindex(columns=list(columns))
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def load_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(Path(path))


def write_rows(rows: Iterable[Dict[str, Any]], path: Union[str, Path], columns: Sequence[str]) -> Path:
    """Write dict rows (e.g. an event trace) with a fixed column order."""
    return write_csv(pd.DataFrame(list(rows), columns=list(columns)), path)


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if hasattr(value, "item"):
        return _json_safe(value.item())
    return value


def write_summary(
    path: Union[str, Path],
    experiment: str,
    config_echo: Dict[str, Any],
    results: Optional[Dict[str, Any]] = None,
    files: Optional[Sequence[Union[str, Path]]] = None,
) -> Path:
    """JSON summary with the config echo and a generation timestamp."""
    path = Path(path)
    summary = {
        "experiment": experiment,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "config": config_echo,
        "results": results or {},
        "files": [Path(f).name for f in files or []],
    }
    path.write_text(json.dumps(_json_safe(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote summary to {path}")
    return path


def load_summary(path: Union[str, Path]) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
