"""
banditbias : conditional bias of sample means, empirical CDFs and monotone
functionals in multi-armed bandit experiments.
"""

__version__ = '0.1.0'
