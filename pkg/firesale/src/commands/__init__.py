"""
Fire-Sale Engine Commands
"""

from .firesale_commands import FireSaleCommands

__all__ = ['FireSaleCommands']
