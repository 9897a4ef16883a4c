"""Key-value config file support with flag > env > file > default precedence."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Callable, Mapping, TypeVar

from .errors import MalformedInput

ENV_PORT = "VIZPICK_PORT"
ENV_DATA_DIR = "VIZPICK_DATA_DIR"

T = TypeVar("T")


def read_config_file(path) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedInput(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def setting(
    flag_value: T | None,
    file_cfg: Mapping[str, str],
    key: str,
    default: T,
    cast: Callable[[str], T] = str,
    env_var: str | None = None,
) -> T:
    """Resolve one setting: explicit flag wins, then environment, then config file."""
    if flag_value is not None:
        return flag_value
    if env_var and os.environ.get(env_var):
        return cast(os.environ[env_var])
    if key in file_cfg:
        return cast(file_cfg[key])
    return default
