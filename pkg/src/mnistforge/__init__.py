"""mnistforge: hierarchical-config-driven MNIST-format dataset curation."""

__version__ = "0.1.0"
