"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when user-supplied data or configuration is invalid.

    The command line maps this to exit code 2; unexpected exceptions map
    to exit code 1.
    """
