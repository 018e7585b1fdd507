"""
Matrix product states as boolean circuits, sums of sigmoids and wide random
models.
"""

__version__ = '0.1'
