"""Comparison algorithms: the exact window, row sampling and LM-FD.
"""
