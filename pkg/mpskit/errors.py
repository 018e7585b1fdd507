"""Exceptions raised by mpskit.

All errors derive from MpsError so callers (the CLI in particular) can catch
the whole family at once.
"""


class MpsError(Exception):
  """Base class of every mpskit error."""
  pass


class ShapeError(MpsError, ValueError):
  """Dimensions of tensors, inputs or feature maps do not line up."""
  pass


class NumericError(MpsError, ArithmeticError):
  """Non-finite inputs or values."""
  pass


class InvalidFeatureMapError(MpsError, ValueError):
  pass


class ParseError(MpsError, ValueError):
  """Syntax error in a boolean expression.

  Parameters
  ----------
  message: str
    Human readable description.
  offset: int
    Byte offset (into the UTF-8 encoding of the text) of the offending token.
  """

  def __init__(self, message: str, offset: int):
    super(ParseError, self).__init__("%s (at byte %d)" % (message, offset))
    self.offset = offset


class SizeError(MpsError, ValueError):
  """An exponential object would exceed its guard."""

  def __init__(self, message: str, size: int, limit: int):
    super(SizeError, self).__init__("%s: size %d exceeds limit %d" %
                                    (message, size, limit))
    self.size = size
    self.limit = limit


class IncompatibleActivationError(MpsError, ValueError):
  pass


class UnsupportedReparameterizationError(MpsError, ValueError):
  pass


class PreconditionError(MpsError, ValueError):
  pass


class UnsupportedNamingError(MpsError, ValueError):
  pass


class ConfigError(MpsError, ValueError):
  pass


class BatchItemError(MpsError):
  """Wraps the first failing item of a batch evaluation."""

  def __init__(self, index: int, cause: Exception):
    super(BatchItemError, self).__init__("batch item %d: %s" % (index, cause))
    self.index = index
    self.cause = cause
