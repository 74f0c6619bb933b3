"""
Gaussian-process surrogate: dense linear algebra, Matern kernel and GP model
"""
