"""Reference speaker-embedding adapter for the benchmark harness."""

__version__ = "0.1.0"
