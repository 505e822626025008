"""
Fire-Sale Engine Sources
"""
