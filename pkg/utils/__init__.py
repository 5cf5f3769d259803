"""
Config loading, report and operator persistence, and suite assertions.
"""
