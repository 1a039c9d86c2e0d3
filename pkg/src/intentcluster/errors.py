"""Exception types shared across the package."""


class ParseError(ValueError):
    """A corpus file row could not be parsed."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class EmptyCorpusError(ValueError):
    """A corpus file contained no samples."""


class ConfigError(ValueError):
    """Inconsistent or incomplete run configuration."""


class TrainingError(RuntimeError):
    """Optimization produced a non-finite loss or gradient."""
