"""Typed key-value configuration files for the experiment commands.

Grammar (one key per line)::

    file    := { blank | comment | section | entry }
    comment := ("#" | ";") text      (also after whitespace at the end of a line)
    section := "[" name "]"
    entry   := key "=" value
    value   := list | scalar
    list    := scalar { "," scalar }
    scalar  := int | float | bool | none | string

Booleans are ``true``/``false``/``yes``/``no``/``on``/``off``; ``none`` maps to
``None``. A value containing a comma is always a list; a single-element list
is written with a trailing comma (``seeds = 3,``). Keys are case-insensitive
and may use ``-`` or ``_`` interchangeably. Entries before the first section
header are rejected.

Recognised sections are ``matrix``, ``regularizer``, ``solver`` and
``experiment``; see the README for the keys each command reads.
"""

import re

SECTIONS = ("matrix", "regularizer", "solver", "experiment")
_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_][\w-]*)\s*\]$")
_KEY_RE = re.compile(r"^[A-Za-z_][\w-]*$")
_INLINE_COMMENT = re.compile(r"\s[#;].*$")
_BOOLS = {"true": True, "yes": True, "on": True, "false": False, "no": False, "off": False}


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_scalar(token):
    token = token.strip()
    low = token.lower()
    if low in _BOOLS:
        return _BOOLS[low]
    if low in ("none", "null"):
        return None
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return token[1:-1]
    return token


def parse_value(raw):
    raw = raw.strip()
    if "," in raw:
        parts = raw.split(",")
        if parts[-1].strip() == "":
            parts = parts[:-1]
        return [parse_scalar(p) for p in parts]
    return parse_scalar(raw)


def _norm_key(key):
    return key.strip().lower().replace("-", "_")


def parse_config(text):
    """Parse config text into ``{section: {key: value}}``."""
    out = {}
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = _INLINE_COMMENT.sub("", line).strip()
        if not stripped or stripped[0] in "#;":
            continue
        match = _SECTION_RE.match(stripped)
        if match:
            current = _norm_key(match.group(1))
            if current not in SECTIONS:
                raise ConfigError(f"unknown section [{match.group(1)}]", number)
            if current in out:
                raise ConfigError(f"section [{current}] appears twice", number)
            out[current] = {}
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", number)
        if current is None:
            raise ConfigError("entry outside of any section", number)
        key, raw = stripped.split("=", 1)
        if not _KEY_RE.match(key.strip()):
            raise ConfigError(f"invalid key {key.strip()!r}", number)
        key = _norm_key(key)
        if key in out[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", number)
        if not raw.strip():
            raise ConfigError(f"empty value for {key!r}", number)
        out[current][key] = parse_value(raw)
    return out


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def as_list(value):
    """Wrap a scalar so that single values and lists read the same way."""
    if value is None:
        return None
    return list(value) if isinstance(value, (list, tuple)) else [value]
