"""
Batch Monte-Carlo acquisition functions and their gradients
"""
