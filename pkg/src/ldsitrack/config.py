"""Shared plain-text key/value configuration.

Schema: one `dotted.key = value` per line, `#` comments, blank lines
ignored. Values are parsed as int, float, bool, or kept as strings;
comma-separated values become lists. Dotted keys build nested dicts, so

    scene.trajectory.kind = circle
    ldsi.TCE = 8

yields {"scene": {"trajectory": {"kind": "circle"}}, "ldsi": {"TCE": 8}}.
"""

from __future__ import annotations

from typing import Any


class ConfigError(ValueError):
    pass


def _parse_scalar(text: str) -> Any:
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def parse_value(text: str) -> Any:
    if "," in text:
        return [_parse_scalar(v) for v in text.split(",")]
    return _parse_scalar(text)


def loads(text: str) -> dict:
    """Parse config text into a nested dict."""
    root: dict = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        node = root
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"line {lineno}: {key!r} conflicts with scalar key")
        node[parts[-1]] = parse_value(value)
    return root


def load(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(tree: dict) -> str:
    """Serialize a nested dict back to the key/value schema (sorted keys)."""
    lines: list[str] = []

    def walk(prefix: str, node: Any):
        if isinstance(node, dict):
            for k in sorted(node):
                walk(f"{prefix}.{k}" if prefix else str(k), node[k])
        else:
            if isinstance(node, (list, tuple)):
                val = ",".join(str(v) for v in node)
            else:
                val = str(node)
            lines.append(f"{prefix} = {val}")

    walk("", tree)
    return "\n".join(lines) + "\n"


def apply_override(tree: dict, assignment: str) -> None:
    """Apply a single 'dotted.key=value' override in place."""
    if "=" not in assignment:
        raise ConfigError(f"override must be key=value, got {assignment!r}")
    key, _, value = assignment.partition("=")
    node = tree
    parts = key.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = parse_value(value)
