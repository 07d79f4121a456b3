"""Bundled data files: object vocabulary, embedding table, zone priors, demo scenes."""

from importlib import resources
from pathlib import Path


def path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    return Path(resources.files(__package__) / name)
