"""
Fire-Sale Engine Utilities
"""

from .csv_output_formatter import CSVOutputFormatter

__all__ = ['CSVOutputFormatter']
