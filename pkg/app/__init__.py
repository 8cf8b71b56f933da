"""
DRC Hotspot Predictor
"""

__version__ = "0.1.0"
