"""Run manifests and the key=value config file.

Every CLI run that writes an artifact also writes ``<artifact>.manifest.json``
recording the subcommand, its arguments (seeds included), the package
version and the SHA-256 of every input, so a result can be traced back to
exactly what produced it.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import sys
from pathlib import Path

from nlifoundry import __version__
from nlifoundry.errors import ConfigError


def read_config(path) -> dict:
    """Parse a key=value config file; ``#`` starts a comment line.

    Values are coerced to bool/int/float when they look like one; keys use
    the option name with dashes or underscores (``neutral-rate`` and
    ``neutral_rate`` both map to the ``neutral_rate`` option).
    """
    config: dict = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            config[key.strip().replace("-", "_")] = _coerce(value.strip())
    return config


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for converter in (int, float):
        try:
            return converter(value)
        except ValueError:
            continue
    return value


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(output_path, subcommand: str, args: dict, inputs) -> Path:
    manifest_path = Path(str(output_path) + ".manifest.json")
    record = {
        "tool": "nlifoundry",
        "version": __version__,
        "subcommand": subcommand,
        "argv": sys.argv[1:],
        "args": {k: v for k, v in sorted(args.items()) if _is_plain(v)},
        "inputs": {
            str(p): sha256_of(p) for p in inputs if p and Path(p).is_file()
        },
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    manifest_path.write_text(
        json.dumps(record, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return manifest_path


def _is_plain(value) -> bool:
    return isinstance(value, (str, int, float, bool, type(None), list, tuple))
