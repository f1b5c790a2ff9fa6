"""charmesh: single-drawing character modeling and texturing toolkit."""

__version__ = "0.1.0"
