import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from pydantic import ValidationError

from ..exceptions import ConfigError
from ..schemas import RunConfig
from .keyvalue import flatten, format_dotted, nest, parse_dotted


def _assign(tree: Dict[str, Any], dotted: str, value: Any) -> None:
    node = tree
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _line_for(key: str, entries: Dict[str, Tuple[str, int]]) -> int:
    if key in entries:
        return entries[key][1]
    # model-level errors point at the section; report its first line
    lines = [line for k, (_, line) in entries.items() if k.startswith(key + ".") or key.startswith(k + ".")]
    return min(lines) if lines else 0


def _message(error: dict) -> str:
    msg = error.get("msg", "invalid value")
    return msg[len("Value error, "):] if msg.startswith("Value error, ") else msg


def load_run_config(path: Union[str, Path, None] = None,
                    overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Read a dotted-key run config and apply command-line overrides on top.
    Errors come back as ConfigError '<file>:<line>: <dotted.key>: <message>';
    errors caused by an override name the flag value instead of a file line.
    """
    entries: Dict[str, Tuple[str, int]] = {}
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        source = str(path)
        if not path.is_file():
            raise ConfigError(f"{path}: config file not found")
        try:
            entries = parse_dotted(path.read_text(encoding="utf-8"))
        except ValueError as e:
            raise ConfigError(f"{path}: {e}") from e
    try:
        tree = nest(entries)
    except ValueError as e:
        raise ConfigError(f"{source}: {e}") from e

    flagged = set()
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        _assign(tree, key, value)
        flagged.add(key)

    try:
        cfg = RunConfig.model_validate(tree)
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(p) for p in error.get("loc", ()))
        if key in flagged or any(key.startswith(f + ".") or f.startswith(key + ".") for f in flagged):
            where = "<command line>"
        else:
            line = _line_for(key, entries)
            where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: {key}: {_message(error)}") from e
    logging.debug(f"設定載入完成: {source}")
    return cfg


def dump_run_config(cfg: RunConfig) -> str:
    """Dotted-key text that load_run_config reads back to the same RunConfig."""
    data = cfg.model_dump(mode="json", exclude_none=True)
    items = [(k, str(v).lower() if isinstance(v, bool) else v) for k, v in flatten(data)]
    return format_dotted(items, header="fractenna run config")
