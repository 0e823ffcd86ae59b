"""Static privacy-risk analyzer for Android application packages."""

__version__ = '0.1.0'
