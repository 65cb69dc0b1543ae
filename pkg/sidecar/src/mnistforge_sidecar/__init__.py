"""Reference embedding-provider sidecar for the mnistforge wire protocol."""

__version__ = "0.1.0"
