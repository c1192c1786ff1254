"""Shared ``key = value`` config-file format.

One assignment per line, ``#`` starts a comment, blank lines are ignored.
Keys are the CLI flag names (hyphens and underscores are interchangeable).
The same format carries both pipeline options and simulation specs.
"""

from __future__ import annotations

from .errors import InputError


def parse_config_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().lower().replace("-", "_")
            if not key:
                raise InputError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out


def parse_float_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad numeric list {text!r}: {exc}") from None


def parse_name_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())
