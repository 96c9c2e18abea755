"""Small shared helpers (private)."""

from __future__ import annotations

from contextlib import contextmanager


@contextmanager
def open_write(path_or_file):
    """Yield a writable handle for a path or pass a file-like through."""
    if hasattr(path_or_file, "write"):
        yield path_or_file
    else:
        with open(path_or_file, "w") as fh:
            yield fh
