"""Wild-data candidates for the 2D compressible Euler system.

Glimm-partition data surgery, exact Riemann fans, pasting with a
numerically evolved smooth solution, and a weak-form admissibility verifier.
"""
__version__ = "0.1.0"
