"""Exception types shared by the package and mapped to CLI exit codes."""


class ArgumentError(ValueError):
    """An argument lies outside the documented domain of an operation."""


class DimensionError(ArgumentError):
    """Sequences that must share a length do not."""


class ConstellationError(ArgumentError):
    """A complex symbol is not a point of the requested QAM constellation."""

    def __init__(self, index: int, value: complex, n: int):
        self.index = index
        self.value = value
        self.n = n
        super().__init__(
            f"symbol {index} ({value.real:+.12g}{value.imag:+.12g}j) is not a "
            f"{4 ** n}-QAM constellation point"
        )


class EnumerationLimitError(RuntimeError):
    """Exhaustive enumeration was requested above the configured size guard."""


class FormatError(ValueError):
    """An input file does not follow the expected JSON/CSV/config layout."""
