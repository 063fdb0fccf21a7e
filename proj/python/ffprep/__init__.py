"""Frustration-free adiabatic state preparation on small lattices."""

import json
import os

from ._ffprep import *  # noqa: F401,F403
from ._ffprep import _run_command

__all__ = [name for name in dir() if not name.startswith("_")] + ["run"]


def run(command, config, out_dir=None, seed=None, threads=1):
    """Run a CLI subcommand in-process and return its summary as a dict.

    Files land in ``out_dir``, falling back to ``$FFPREP_OUT`` and then to a
    ``out`` directory next to the working directory.
    """
    if out_dir is None:
        out_dir = os.environ.get("FFPREP_OUT", "out")
    return json.loads(_run_command(command, os.fspath(config), os.fspath(out_dir), seed, threads))
