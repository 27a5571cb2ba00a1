"""Exception types shared across the package."""


class PrecisionError(ArithmeticError):
    """A result could not be certified at the available series precision.

    Raised instead of silently returning a value that depends on unknown
    coefficients, e.g. the norm of a series that is zero down to its
    precision floor, or a lattice minimum whose leading term may be an
    artifact of truncation.
    """


class SingularLatticeError(ValueError):
    """A basis matrix was singular where a nonsingular one is required."""


class ConfigError(ValueError):
    """Bad experiment configuration (unknown key, malformed value, ...)."""
