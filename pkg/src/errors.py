# src/errors.py
from typing import Optional


class Sig2dError(Exception):
    """
    Root of every error raised by the signature / texture pipeline.
    The entry point catches this class and reports it without a traceback.
    """


class WindowError(Sig2dError, IndexError):
    """A window does not address pixels of the image it is applied to."""


class MarginError(Sig2dError):
    """A central-difference evaluation reaches past the image border."""


class ParameterError(Sig2dError, ValueError):
    """Invalid counts, ranges, labels or non-finite inputs."""


class FeatureMismatchError(Sig2dError):
    """Feature columns of a table do not match the ones a model was trained on."""


class ConfigError(Sig2dError):
    """An environment variable or configuration value could not be parsed."""


class DatasetIOError(Sig2dError, OSError):
    """
    An image, manifest or table could not be read or written.
    The offending path is kept so messages always say which file failed.
    """

    def __init__(self, path, message: str, cause: Optional[BaseException] = None):
        self.path = str(path)
        self.cause = cause
        super().__init__(f"{self.path}: {message}")
