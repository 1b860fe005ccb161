"""Interactive task learning over finite first-order domains at desk scale."""

__version__ = "0.1.0"
