import re
from typing import Any, Dict, Iterable, List, Tuple


_LINE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")


def _strip_comment(line: str) -> str:
    # Comments start with '#' or '!' at the start of the line or after whitespace
    for marker in ("#", "!"):
        pos = line.find(marker)
        while pos != -1:
            if pos == 0 or line[pos - 1].isspace():
                return line[:pos]
            pos = line.find(marker, pos + 1)
    return line


def parse_dotted(text: str) -> Dict[str, Tuple[str, int]]:
    """
    Parse `dotted.key = value` lines into {key: (raw value, line number)}.
    - Blank lines and comments are skipped
    - A repeated key keeps the last value (like a later override)
    - Malformed lines raise ValueError with the line number
    """
    if not text:
        return {}

    text = text.replace("\r\n", "\n").replace("\r", "\n")
    entries: Dict[str, Tuple[str, int]] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        match = _LINE.match(line)
        if not match:
            raise ValueError(f"line {lineno}: expected 'dotted.key = value', got {raw.strip()!r}")
        entries[match.group(1)] = (match.group(2), lineno)
    return entries


def _coerce(value: str) -> Any:
    # Comma separated values become lists; everything else stays text for pydantic to coerce
    if "," in value:
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


def nest(entries: Dict[str, Tuple[str, int]]) -> Dict[str, Any]:
    """Turn {'a.b': ('1', 3)} into {'a': {'b': '1'}}."""
    tree: Dict[str, Any] = {}
    for key, (value, lineno) in entries.items():
        node = tree
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValueError(f"line {lineno}: '{key}' conflicts with a scalar key")
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ValueError(f"line {lineno}: '{key}' conflicts with a section")
        node[parts[-1]] = _coerce(value)
    return tree


def flatten(tree: Dict[str, Any], prefix: str = "") -> List[Tuple[str, Any]]:
    items: List[Tuple[str, Any]] = []
    for key in tree:
        value = tree[key]
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            items.extend(flatten(value, dotted + "."))
        else:
            items.append((dotted, value))
    return items


def format_dotted(items: Iterable[Tuple[str, Any]], header: str = "") -> str:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    for key, value in items:
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
