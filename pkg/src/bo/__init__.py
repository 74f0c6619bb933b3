"""
Bayesian-optimisation loop and synthetic benchmark tasks
"""
