"""Run-directory plumbing: atomic output directories, manifests, per-design artifacts."""
import json
import logging
import os
import shutil
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Tuple, Union

from ..exceptions import MissingArtifactError
from ..geometry import dump_layout, load_layout
from ..schemas import AntennaLayout, BandSummary
from .keyvalue import format_dotted


MANIFEST = "manifest.txt"
SUMMARY = "summary.json"
LAYOUT = "layout.txt"
S1P = "s11.s1p"
SWEEP = "sweep.csv"
GAIN = "gain.csv"
# excluded from golden comparisons
TIMESTAMP_KEY = "run.created_at"


def partial_path(target: Union[str, Path]) -> Path:
    target = Path(target)
    return target.with_name(target.name + ".partial")


@contextmanager
def atomic_directory(target: Union[str, Path], keep_partial: bool = False) -> Iterator[Path]:
    """
    Yields <target>.partial and renames it onto target on success.
    - On failure the partial directory is removed unless keep_partial is set
    - An existing target is replaced
    """
    target = Path(target)
    work = partial_path(target)
    work.mkdir(parents=True, exist_ok=True)
    try:
        yield work
    except BaseException:
        if not keep_partial:
            shutil.rmtree(work, ignore_errors=True)
        else:
            logging.warning(f"保留未完成的輸出目錄 {work}")
        raise
    if target.exists():
        shutil.rmtree(target)
    os.replace(work, target)
    logging.info(f"輸出已寫入 {target}")


def write_manifest(folder: Union[str, Path], items: Iterable[Tuple[str, Any]], timestamp: bool = True) -> Path:
    items = list(items)
    if timestamp:
        items.append((TIMESTAMP_KEY, datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")))
    path = Path(folder) / MANIFEST
    path.write_text(format_dotted(items, header="fractenna run manifest"), encoding="utf-8")
    return path


def write_text(path: Union[str, Path], text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def write_summary(folder: Union[str, Path], summary: BandSummary) -> None:
    write_text(Path(folder) / SUMMARY, summary.model_dump_json(indent=2) + "\n")


def write_design(folder: Union[str, Path], result, comments: Optional[Iterable[str]] = None) -> Path:
    """Writes layout, .s1p, sweep CSV, gain CSV and summary of one SimulationResult."""
    from ..touchstone import write_gain_csv, write_s1p, write_sweep_csv

    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    write_text(folder / LAYOUT, dump_layout(result.layout))
    write_s1p(folder / S1P, result.response, comments)
    write_sweep_csv(folder / SWEEP, result.response)
    write_gain_csv(folder / GAIN, result.pattern)
    write_summary(folder, result.summary)
    return folder


def _require(path: Path) -> Path:
    if not path.is_file():
        raise MissingArtifactError(f"missing artifact: {path}")
    return path


def read_summary(folder: Union[str, Path]) -> BandSummary:
    path = _require(Path(folder) / SUMMARY)
    try:
        return BandSummary.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except ValueError as e:
        raise MissingArtifactError(f"unreadable artifact {path}: {e}") from e


def read_layout(folder: Union[str, Path]) -> AntennaLayout:
    path = _require(Path(folder) / LAYOUT)
    try:
        return load_layout(path)
    except ValueError as e:
        raise MissingArtifactError(f"unreadable artifact {path}: {e}") from e


def sweep_path(folder: Union[str, Path]) -> Path:
    return _require(Path(folder) / SWEEP)
