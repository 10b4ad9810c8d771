"""Shared exception types."""


class PararankError(Exception):
    """Base class for all validation and processing failures in this package."""


class AudioError(PararankError):
    pass


class LexiconError(PararankError):
    pass


class DatasetError(PararankError):
    pass
