"""Exception types raised on bad user input."""


class InputError(ValueError):
    """Invalid argument or data supplied by the caller."""


class ParseError(InputError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)


class SnapshotError(InputError):
    """A model snapshot is missing, truncated or of the wrong version."""
