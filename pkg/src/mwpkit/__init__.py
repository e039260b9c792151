"""Math word problem solving toolkit with structural contrastive learning."""

__version__ = "0.1.0"
