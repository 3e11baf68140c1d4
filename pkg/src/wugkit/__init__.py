"""wugkit: use-pair semantic proximity annotation, word usage graphs,
correlation clustering, agreement statistics, REST service and CLI."""

__version__ = "0.1.0"
