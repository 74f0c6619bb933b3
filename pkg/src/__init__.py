"""
compobo source package
"""
