"""
Acquisition maximisers: zero-, first-, compositional and second-order
"""
