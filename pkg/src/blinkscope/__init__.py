"""Eye-blink based detection of synthesized face videos."""

__version__ = "0.1.0"
