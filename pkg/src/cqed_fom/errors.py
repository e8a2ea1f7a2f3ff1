"""Exception types shared by the library and the command-line front end.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numerical non-convergence with 3, file-format and I/O problems
with 4. Everything else is a plain ValueError from input validation.
"""


class ConfigError(ValueError):
    """Invalid run configuration (unknown key, missing unit, bad value)."""


class NonConvergedError(RuntimeError):
    """An integration or root-finding step failed to reach its tolerance."""


class GridFormatError(OSError):
    """A field-grid file is malformed (bad magic, truncated payload, ...)."""


__all__ = ["ConfigError", "NonConvergedError", "GridFormatError"]
