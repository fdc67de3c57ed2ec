"""Dataclass configs overridable from the command line (--field value)."""

import argparse
from dataclasses import fields


def parse_config(cls, argv=None, description=""):
    parser = argparse.ArgumentParser(description=description)
    for f in fields(cls):
        parser.add_argument(f"--{f.name.replace('_', '-')}", type=type(f.default), default=f.default)
    args = parser.parse_args(argv)
    return cls(**{f.name: getattr(args, f.name) for f in fields(cls)})
