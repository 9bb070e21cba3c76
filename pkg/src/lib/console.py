import os

from rich.console import Console

# Library diagnostics go to stderr so CSV on stdout stays clean.
console = Console(stderr=True, quiet=os.environ.get("RECTIFY_QUIET") == "1")
