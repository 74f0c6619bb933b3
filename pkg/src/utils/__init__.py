"""
Utility modules: constants, helpers and error types
"""
