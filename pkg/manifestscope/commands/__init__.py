# Command modules for the manifestscope CLI; app.py attaches these to the root group.

from .analyze import analyze
from .fingerprints import fingerprints
from .inspect_manifest import inspect
from .report import report

commands = [analyze, report, fingerprints, inspect]
