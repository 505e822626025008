"""
Fire-Sale Contagion Engine
Liquidation cascades of capital-constrained banks under price-mediated contagion
"""

__version__ = "1.0.0"
