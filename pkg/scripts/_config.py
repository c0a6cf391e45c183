"""Dataclass-driven command lines shared by the experiment scripts."""

import argparse
import dataclasses
import json
import sys
from typing import TypeVar

T = TypeVar("T")


def parse_config(cls: type[T], argv=None) -> T:
    """Expose every dataclass field as ``--field-name``; ``--config file.json`` seeds the defaults."""
    ap = argparse.ArgumentParser(description=cls.__doc__)
    ap.add_argument("--config", help="JSON file with field values")
    for f in dataclasses.fields(cls):
        ap.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None, help=f"default: {f.default!r}")
    args = ap.parse_args(argv)
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    for f in dataclasses.fields(cls):
        raw = getattr(args, f.name)
        if raw is not None:
            values[f.name] = _coerce(raw)
    return cls(**values)


def _coerce(raw: str):
    # numbers and lists arrive as JSON; anything else stays a plain string
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def emit(config, payload: dict, output: str | None) -> None:
    doc = {"config": dataclasses.asdict(config), **payload}
    text = json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
