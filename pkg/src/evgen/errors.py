"""Exceptions shared across the package."""


class InputError(Exception):
    """Input data is missing, unreadable, or malformed (CLI exit code 2)."""
