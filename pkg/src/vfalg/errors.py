"""Exception hierarchy shared by every layer of the package."""


class VFError(Exception):
    """Base class for all errors raised by vfalg."""


class UsageError(VFError):
    """Arguments are individually valid but do not fit together."""


class DomainError(VFError):
    """The requested value does not exist in the target ring."""


class ResourceError(VFError):
    """A configured degree cap would be exceeded."""


class ParseError(VFError):
    """Malformed expression or model file.

    ``line`` and ``column`` are 1-based; either may be ``None`` when the
    position is not meaningful (for example a semantic check on a whole matrix).
    """

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
