"""nfdoa

Near-field direction-of-arrival estimation for uniform linear arrays.

"""
from .__about__ import __version__
