"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CoalmapError(Exception):
    exit_code = 1
    code = "E_INTERNAL"


class ConfigError(CoalmapError, ValueError):
    exit_code = 2
    code = "E_CONFIG"


class RasterIOError(CoalmapError, OSError):
    exit_code = 3
    code = "E_IO"


class DataError(CoalmapError, ValueError):
    exit_code = 4
    code = "E_DATA"
