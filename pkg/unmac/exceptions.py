class UnmacError(Exception):
	"""Base class for every error raised by the unmac package."""


class InvalidParameterError(UnmacError, ValueError):
	"""A numeric argument is outside the domain of the formula it feeds."""


class DegenerateGeometryError(UnmacError, ValueError):
	"""Two agents share a position, so no relative direction exists."""


class MalformedMessageError(UnmacError):
	"""A Remote ID message or payload does not match its declared format."""


class EncodeOverflowError(UnmacError):
	"""A message field does not fit the width of its wire field."""


class ReportWriteError(UnmacError):
	"""An output table or report could not be written."""


class ConfigError(UnmacError):
	"""
	Invalid configuration document.

	Args:
		message (str): Human readable reason.
		field (str, optional): Offending configuration key.
		line (int, optional): 1-based line of the key in the source document.
	"""

	def __init__(self, message, field=None, line=None):
		self.field = field
		self.line = line
		super().__init__(message)

	def __str__(self):
		message = super().__str__()
		location = []
		if self.line is not None:
			location.append(f"line {self.line}")
		if self.field:
			location.append(f"field '{self.field}'")
		if location:
			return f"{', '.join(location)}: {message}"
		return message
