"""Exception hierarchy shared by the library and the CLI."""


class AinftyError(ValueError):
    """Base class for all domain errors raised by ainfty."""


class InvalidFamily(AinftyError):
    pass


class InvalidExponent(AinftyError):
    pass


class InvalidWeight(AinftyError):
    """Raised for non-positive, non-finite or mis-shaped weight data."""


class InvalidSpec(AinftyError):
    pass


class NotComputable(AinftyError):
    """No admissible cube exists for a constant that needs one (e.g. doubling)."""


class DegenerateInput(AinftyError):
    pass


class OracleRefused(AinftyError):
    """The brute-force oracle was asked for a grid above its size cap."""
