#!/usr/bin/env python3

from importlib import metadata

try:
    __version__ = metadata.version(__package__)
except metadata.PackageNotFoundError:
    # Running from a source checkout.
    __version__ = "0.0.0-unknown"


from .trainer import train
