"""
Time-domain simulator for near-field (Talbot) diffraction of charged matter waves.
"""

__version__ = "0.4.0"
