#!/usr/bin/env python3
"""
Parameter Files
Flat configuration format with dotted keys.

    # comment
    [Application.Discretization]
    Resolution = 128
    LatticeRelaxationTime = 0.8

Keys become ``Application.Discretization.Resolution``. Typed getters
follow read-or-warn semantics: a missing key returns the default and
records a warning.
"""

import configparser
import re
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Union

from app.core.errors import ConfigError
from app.core.ostream import get_logger

logger = get_logger("ConfigTree")

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


class ConfigTree:
    """Map from dotted key to raw string value."""

    def __init__(self, values: Optional[Dict[str, str]] = None, source: str = "<memory>"):
        self._values: Dict[str, str] = {}
        self.source = source
        self.warnings: List[str] = []
        for key, value in (values or {}).items():
            self.set(key, value)

    # ---- mapping ------------------------------------------------------------

    def set(self, key: str, value) -> None:
        if not key or any(not part for part in key.split(".")):
            raise ConfigError(f"Invalid key {key!r}")
        self._values[key] = str(value)

    def __contains__(self, key: str) -> bool:
        return key in self._values

    def __getitem__(self, key: str) -> str:
        return self._values[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def items(self):
        return self._values.items()

    def as_dict(self) -> Dict[str, str]:
        return dict(self._values)

    def subtree(self, prefix: str) -> Dict[str, str]:
        prefix = prefix.rstrip(".") + "."
        return {k[len(prefix):]: v for k, v in self._values.items() if k.startswith(prefix)}

    def overlay(self, other: "ConfigTree") -> "ConfigTree":
        """New tree with ``other``'s keys winning over this tree's."""
        merged = ConfigTree(self._values, source=other.source)
        for key, value in other.items():
            merged.set(key, value)
        return merged

    # ---- read or warn -------------------------------------------------------

    def _warn(self, key: str, default) -> None:
        message = f"Parameter {key} not found, using default {default!r}"
        self.warnings.append(message)
        logger.warning(message)

    def get_str(self, key: str, default: Optional[str] = None) -> Optional[str]:
        if key not in self._values:
            self._warn(key, default)
            return default
        return self._values[key]

    def get_float(self, key: str, default: Optional[float] = None) -> Optional[float]:
        if key not in self._values:
            self._warn(key, default)
            return default
        try:
            return float(self._values[key])
        except ValueError:
            raise ConfigError(f"{key} = {self._values[key]!r} is not a number") from None

    def get_int(self, key: str, default: Optional[int] = None) -> Optional[int]:
        value = self.get_float(key, default)
        if value is None:
            return None
        if int(value) != value:
            raise ConfigError(f"{key} = {self._values[key]!r} is not an integer")
        return int(value)

    def get_bool(self, key: str, default: Optional[bool] = None) -> Optional[bool]:
        if key not in self._values:
            self._warn(key, default)
            return default
        raw = self._values[key].strip().lower()
        if raw in _TRUE:
            return True
        if raw in _FALSE:
            return False
        raise ConfigError(f"{key} = {self._values[key]!r} is not a boolean")

    def get_list(self, key: str, default: Optional[Sequence] = None,
                 item_type=float) -> Optional[List]:
        """Comma or whitespace separated list."""
        if key not in self._values:
            self._warn(key, default)
            return None if default is None else list(default)
        parts = [p for p in re.split(r"[,\s]+", self._values[key].strip()) if p]
        try:
            return [item_type(p) for p in parts]
        except ValueError:
            raise ConfigError(f"{key} = {self._values[key]!r} is not a list of "
                              f"{item_type.__name__}") from None

    # ---- text ---------------------------------------------------------------

    def serialize(self) -> str:
        """Render back to the flat format, one section per key prefix."""
        sections: Dict[str, List[str]] = {}
        for key, value in self._values.items():
            section, _, name = key.rpartition(".")
            sections.setdefault(section, []).append(f"{name} = {value}")
        blocks = []
        # root keys must precede every header
        for section, lines in sorted(sections.items(), key=lambda item: item[0] != ""):
            header = [f"[{section}]"] if section else []
            blocks.append("\n".join(header + lines))
        return "\n\n".join(blocks) + "\n"


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        strict=True,
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=None,
        interpolation=None,
        default_section="\x00",
    )
    parser.optionxform = str
    return parser


def parse_config_string(text: str, source: str = "<string>") -> ConfigTree:
    # keys before the first header belong to the root
    text = "[\x01]\n" + text
    parser = _parser()
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"Duplicate key {exc.section}.{exc.option}", _line(exc)) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"Duplicate section [{exc.section}]", _line(exc)) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - 1 if exc.errors else None
        raise ConfigError(f"Malformed line in {source}", lineno) from None
    except configparser.Error as exc:
        raise ConfigError(f"Cannot parse {source}: {exc}") from None

    tree = ConfigTree(source=source)
    for section in parser.sections():
        for name, value in parser.items(section, raw=True):
            if section == "\x01":
                key = name
            else:
                if not section.strip() or " " in section:
                    raise ConfigError(f"Invalid section name [{section}]")
                key = f"{section}.{name}"
            # [A] B.c and [A.B] c both spell A.B.c
            if key in tree:
                raise ConfigError(f"Duplicate key {key}", _key_line(text, section, name))
            tree.set(key, value)
    return tree


def _key_line(text: str, section: str, name: str) -> Optional[int]:
    """User line number of the last definition of name inside section."""
    found, current = None, None
    # text carries the root header, so index equals the user line
    for number, line in enumerate(text.splitlines()):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
        elif current == section and "=" in stripped \
                and stripped.split("=", 1)[0].strip() == name:
            found = number
    return found


def _line(exc) -> Optional[int]:
    lineno = getattr(exc, "lineno", None)
    return lineno - 1 if lineno is not None else None


def parse_config(path: Union[str, Path]) -> ConfigTree:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read config {path}: {exc.strerror}") from None
    tree = parse_config_string(text, source=str(path))
    logger.info(f"Read {len(tree)} parameters from {path}")
    return tree
