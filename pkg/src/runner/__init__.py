"""
Experiment sweeps, result files and summaries
"""
