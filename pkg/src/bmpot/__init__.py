"""Second-order extreme-value machinery for block maxima and peaks-over-threshold.

Archimax copulas and exact sampling, the madogram and empirical-stdf
estimators of the Pickands function, closed-form second-order limits with
the BM/POT conversion, and a Monte Carlo harness comparing the two methods.
"""

__version__ = "0.1.0"
