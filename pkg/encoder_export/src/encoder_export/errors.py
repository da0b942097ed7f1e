"""Exception types raised by the exporter."""


class ExportError(Exception):
    """Invalid corpus input or export configuration."""


class AlignmentError(ExportError):
    """A corpus token could not be mapped onto subword pieces."""
