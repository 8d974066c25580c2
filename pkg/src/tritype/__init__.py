"""Three-type preferential attachment: simulation and mean-field analysis."""

__version__ = "0.1.0"
