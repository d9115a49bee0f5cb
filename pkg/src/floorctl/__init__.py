"""Floor-control moderation toolkit for mixed local/remote meetings."""

__version__ = "0.1.0"
